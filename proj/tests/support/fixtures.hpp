#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace exmem::testing {

#ifndef EXMEM_REPO_DIR
#error "EXMEM_REPO_DIR must be defined by the build"
#endif

inline std::filesystem::path repo_dir() { return std::filesystem::path(EXMEM_REPO_DIR); }

inline std::filesystem::path fixture_path(const std::string& relative) {
    return repo_dir() / "fixtures" / relative;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open fixture " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace exmem::testing
