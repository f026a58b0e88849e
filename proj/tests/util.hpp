#ifndef PROPERUQ_TESTS_UTIL_HPP
#define PROPERUQ_TESTS_UTIL_HPP

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "properuq/types.hpp"

namespace testutil {

// Scratch directory that cleans itself up. Each fixture gets a fresh name.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        dir_ = std::filesystem::temp_directory_path() /
               ("properuq-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// Random interior simplex point; mt19937 keeps fixtures reproducible without
// touching the library's own generator.
inline properuq::SimplexVector random_simplex(std::mt19937_64& eng, int dim,
                                              double floor = 1e-3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd v(dim);
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
        v(i) = floor + u(eng);
        total += v(i);
    }
    v /= total;
    return properuq::SimplexVector(v);
}

inline bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace testutil

#endif
