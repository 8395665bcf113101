#pragma once

#include <string>

#include "nlz/bytes.hpp"
#include "nlz/codec.hpp"
#include "nlz/field.hpp"

namespace nlz {

// Environment variable holding a default command template.
inline constexpr const char* kExternalCmdEnv = "NLZ_EXTERNAL_CMD";

struct ExternalResult {
    Bytes payload;             // contents of {cmp}, empty if the template has no {cmp}
    ScalarField decompressed;  // read back from {out}
};

// Runs an external compressor through a shell command template.
//
// Placeholders: {in} raw input, {out} raw decompressed output, {cmp} optional
// compressed file, {d0} {d1} {d2} dims (slowest first), {abs} absolute bound.
// The tool must leave a raw array of the field's precision at {out}. The
// returned field is checked against the bound; violations raise BoundViolated.
ExternalResult external_compress(const std::string& cmd_template, const ScalarField& field, const ErrorBound& bound);

std::string substitute_placeholders(std::string tmpl, const std::string& key, const std::string& value);

} // namespace nlz
