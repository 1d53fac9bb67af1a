#pragma once

#include "taskdenoise/rng.hpp"
#include "taskdenoise/signal.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace tdn::testing {

inline Mat random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double amp = 1.0) {
    Engine eng = make_engine(RngSeed{seed});
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = amp * normal(eng);
    return m;
}

inline double rel_frobenius(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

// Frozen reference values written by tests/oracles/gen_fixtures.py.
inline nlohmann::json fixture(const std::string& name) {
    std::ifstream in(std::string(TDN_FIXTURE_DIR) + "/" + name);
    return nlohmann::json::parse(in);
}

// Fresh scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tdn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

}  // namespace tdn::testing
