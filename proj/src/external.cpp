#include "nlz/external.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "nlz/error.hpp"

namespace nlz {

namespace fs = std::filesystem;

std::string substitute_placeholders(std::string tmpl, const std::string& key, const std::string& value) {
    const std::string token = "{" + key + "}";
    for (std::size_t pos = tmpl.find(token); pos != std::string::npos; pos = tmpl.find(token, pos + value.size()))
        tmpl.replace(pos, token.size(), value);
    return tmpl;
}

namespace {

bool executable_exists(const std::string& program) {
    if (program.find('/') != std::string::npos) return ::access(program.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (dir.empty()) continue;
        if (::access((fs::path(dir) / program).c_str(), X_OK) == 0) return true;
    }
    return false;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

struct ScratchDir {
    fs::path path;
    ScratchDir() {
        std::string tmpl = (fs::temp_directory_path() / "nlz-ext-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw Error(ErrorKind::IoError, "cannot create scratch directory");
        path = tmpl;
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
};

} // namespace

ExternalResult external_compress(const std::string& cmd_template, const ScalarField& field, const ErrorBound& bound) {
    std::istringstream words(cmd_template);
    std::string program;
    words >> program;
    if (program.empty() || !executable_exists(program))
        throw Error(ErrorKind::ToolMissing, "external compressor '" + program + "' not found");

    ScratchDir scratch;
    const fs::path in = scratch.path / "input.raw";
    const fs::path out = scratch.path / "output.raw";
    const fs::path cmp = scratch.path / "compressed.bin";
    store_raw(in, field);

    char abs_text[64];
    std::snprintf(abs_text, sizeof abs_text, "%.17g", bound.abs);
    std::string cmd = cmd_template;
    cmd = substitute_placeholders(cmd, "in", shell_quote(in.string()));
    cmd = substitute_placeholders(cmd, "out", shell_quote(out.string()));
    cmd = substitute_placeholders(cmd, "cmp", shell_quote(cmp.string()));
    cmd = substitute_placeholders(cmd, "d0", std::to_string(field.dims[0]));
    cmd = substitute_placeholders(cmd, "d1", std::to_string(field.dims[1]));
    cmd = substitute_placeholders(cmd, "d2", std::to_string(field.dims[2]));
    cmd = substitute_placeholders(cmd, "abs", abs_text);
    cmd += " > /dev/null 2>&1";

    int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw Error(ErrorKind::ToolFailed, "external command failed: " + cmd_template);
    if (!fs::exists(out)) throw Error(ErrorKind::ToolFailed, "external command produced no output file");

    ExternalResult result;
    result.decompressed = load_raw(out, field.dims, field.precision, RawOrder::Row, field.name);
    if (fs::exists(cmp)) {
        std::ifstream f(cmp, std::ios::binary);
        result.payload.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    for (std::size_t i = 0; i < field.size(); ++i)
        if (!(std::fabs(field.values[i] - result.decompressed.values[i]) <= bound.abs))
            throw Error(ErrorKind::BoundViolated, "external output violates the bound at index " + std::to_string(i));
    return result;
}

} // namespace nlz
