#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mrgen/mulang.hpp"

namespace testhelpers {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fixture_path(const std::string& name) {
    return std::string(MRGEN_FIXTURE_DIR) + "/" + name + ".mu";
}

inline mrgen::SubjectProgram load_fixture(const std::string& name) {
    return mrgen::parse_program(read_file(fixture_path(name)));
}

} // namespace testhelpers
