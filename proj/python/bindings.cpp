// Python bindings: numpy arrays in, numpy arrays and bytes out.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlz/codec.hpp"
#include "nlz/container.hpp"
#include "nlz/error.hpp"
#include "nlz/metrics.hpp"
#include "nlz/pipeline.hpp"

namespace py = pybind11;
using namespace nlz;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// float32 arrays keep single precision; anything else is widened to double.
ScalarField to_field(const std::string& name, const py::array& a) {
    if (a.ndim() != 3) throw Error(ErrorKind::ShapeMismatch, "field '" + name + "' must be a 3D array");
    const Dims d{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                 static_cast<std::size_t>(a.shape(2))};
    if (a.dtype().is(py::dtype::of<float>())) {
        auto f = F32Array::ensure(a);
        return {name, d, Precision::F32, std::vector<double>(f.data(), f.data() + f.size())};
    }
    auto f = F64Array::ensure(a);
    return {name, d, Precision::F64, std::vector<double>(f.data(), f.data() + f.size())};
}

py::array to_array(const ScalarField& f) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(f.dims[0]), static_cast<py::ssize_t>(f.dims[1]),
                                         static_cast<py::ssize_t>(f.dims[2])};
    if (f.precision == Precision::F32) {
        py::array_t<float> out(shape);
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
    }
    py::array_t<double> out(shape);
    std::copy(f.values.begin(), f.values.end(), out.mutable_data());
    return out;
}

FieldSet to_fieldset(const py::dict& fields) {
    FieldSet fs;
    for (const auto& [k, v] : fields) fs.add(to_field(py::cast<std::string>(k), py::cast<py::array>(v)));
    return fs;
}

py::dict to_dict(const FieldSet& fs) {
    py::dict d;
    for (const auto& f : fs.fields()) d[py::str(f.name)] = to_array(f);
    return d;
}

std::vector<double> values_of(const py::array& a) {
    auto f = F64Array::ensure(a);
    return {f.data(), f.data() + f.size()};
}

py::bytes to_bytes(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

Bytes from_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

py::dict report_dict(const FieldReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["aux"] = r.aux;
    d["abs"] = r.abs;
    d["enhanced"] = r.enhanced;
    d["diverged"] = r.diverged;
    d["fallback"] = r.fallback;
    d["psnr_decompressed"] = r.psnr_decompressed.value();
    d["psnr_initial"] = r.psnr_initial.value();
    d["psnr_final"] = r.psnr_final.value();
    d["max_error_decompressed"] = r.max_error_decompressed;
    d["max_error_final"] = r.max_error_final;
    d["outliers"] = r.outliers;
    d["olr_percent"] = r.olr_percent;
    d["payload_bits"] = r.payload_bits;
    d["model_bits"] = r.model_bits;
    d["coords_bits"] = r.coords_bits;
    d["baseline_bit_rate"] = r.baseline_bit_rate;
    d["bit_rate"] = r.bit_rate;
    return d;
}

} // namespace

PYBIND11_MODULE(_nlz, m) {
    m.doc() = "Error-bounded lossy compression with a learned cross-field enhancer";

    static py::exception<Error> exc(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(exc, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.def(
        "gen_synthetic",
        [](std::array<std::size_t, 3> dims, std::uint64_t seed, int num_aux, double alpha, double beta, double gamma,
           bool f64) {
            SynthSpec s;
            s.dims = dims;
            s.num_aux = num_aux;
            s.alpha = alpha;
            s.beta = beta;
            s.gamma = gamma;
            s.precision = f64 ? Precision::F64 : Precision::F32;
            return to_dict(gen_synthetic(s, seed));
        },
        py::arg("dims") = std::array<std::size_t, 3>{64, 64, 64}, py::arg("seed") = 1, py::arg("num_aux") = 2,
        py::arg("alpha") = 1.0, py::arg("beta") = 0.5, py::arg("gamma") = 0.3, py::arg("f64") = false,
        "Coupled synthetic fields aux0.., target as a dict of arrays.");

    m.def(
        "baseline_compress",
        [](const py::array& a, double rel, std::uint32_t radius) {
            auto f = to_field("field", a);
            const auto b = abs_bound(rel, f);
            auto r = compress_block(f, b, radius);
            return py::make_tuple(to_bytes(r.payload.serialize()), to_array(r.decompressed), b.abs);
        },
        py::arg("array"), py::arg("rel") = 1e-2, py::arg("radius") = kDefaultRadius,
        "Prediction + quantization + Huffman. Returns (payload, decompressed, abs).");

    m.def(
        "baseline_decompress", [](const py::bytes& payload) { return to_array(decompress_block(from_bytes(payload))); },
        py::arg("payload"));

    m.def(
        "compress",
        [](const py::dict& fields, double rel, const std::string& mode, int epochs, std::uint64_t seed,
           const std::vector<std::string>& targets, const std::map<std::string, std::vector<std::string>>& aux,
           bool single_field, bool no_skip, bool direct_targets, bool enhance, std::size_t block_extent) {
            PipelineConfig c;
            c.rel = rel;
            c.mode = parse_bound_mode(mode);
            c.train.epochs = epochs;
            c.seed = seed;
            c.targets = targets;
            c.aux_map = aux;
            c.ablation = {single_field, no_skip, direct_targets};
            c.enhance = enhance;
            c.block_extent = block_extent;
            const auto fs = to_fieldset(fields);
            CompressOutcome out;
            {
                py::gil_scoped_release release;
                out = neurlz_compress(fs, c);
            }
            py::list reports;
            for (const auto& r : out.reports) reports.append(report_dict(r));
            return py::make_tuple(to_bytes(write_container(out.container)), reports);
        },
        py::arg("fields"), py::arg("rel") = 1e-2, py::arg("mode") = "strict", py::arg("epochs") = 100,
        py::arg("seed") = 0, py::arg("targets") = std::vector<std::string>{},
        py::arg("aux") = std::map<std::string, std::vector<std::string>>{}, py::arg("single_field") = false,
        py::arg("no_skip") = false, py::arg("direct_targets") = false, py::arg("enhance") = true,
        py::arg("block_extent") = 0, "Compress a dict of same-shape arrays. Returns (container bytes, reports).");

    m.def(
        "reconstruct",
        [](const py::bytes& container) {
            const auto c = read_container(from_bytes(container));
            ReconstructOutcome out;
            {
                py::gil_scoped_release release;
                out = neurlz_reconstruct(c);
            }
            return py::make_tuple(to_dict(out.final_fields), to_dict(out.decompressed));
        },
        py::arg("container"), "Decode a container. Returns (final fields, decompressed fields).");

    m.def("psnr", [](const py::array& a, const py::array& b) { return psnr(values_of(a), values_of(b)).value(); });
    m.def("mse", [](const py::array& a, const py::array& b) { return mse(values_of(a), values_of(b)); });
    m.def("max_abs_error",
          [](const py::array& a, const py::array& b) { return max_abs_error(values_of(a), values_of(b)); });
    m.def(
        "compression_ratio",
        [](double original_bits, double container_bits) { return compression_ratio(original_bits, container_bits); });
}
