"""Error-bounded lossy compression with a learned cross-field enhancer."""

from ._nlz import (
    Error,
    baseline_compress,
    baseline_decompress,
    compress,
    compression_ratio,
    gen_synthetic,
    max_abs_error,
    mse,
    psnr,
    reconstruct,
)

__all__ = [
    "Error",
    "baseline_compress",
    "baseline_decompress",
    "compress",
    "compression_ratio",
    "gen_synthetic",
    "max_abs_error",
    "mse",
    "psnr",
    "reconstruct",
]
__version__ = "0.1.0"
