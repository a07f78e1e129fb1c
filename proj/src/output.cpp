#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "nldiff/error.hpp"

namespace nldiff::output {

std::string number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_atomic(const std::filesystem::path& file, const std::string& content) {
    namespace fs = std::filesystem;
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    auto tag = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path tmp = file;
    tmp += ".tmp." + std::to_string(tag);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::ConfigError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorKind::ConfigError, "cannot move output into " + file.string() + ": " + ec.message());
    }
}

}
