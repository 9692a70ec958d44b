#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kernclass/errors.hpp"

namespace kernclass::detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("read failed for " + path.string());
    return out.str();
}

// Write-to-temp-then-rename so readers never see a partial artifact.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out.good()) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

}  // namespace kernclass::detail
