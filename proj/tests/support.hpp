#pragma once

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("nigam_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testing

#include "nigam/model.hpp"
#include "nigam/synth.hpp"

namespace testing {

// Small synthetic dataset from the default truth.
inline nigam::ingest::Dataset small_dataset(int n_sites = 3, int n_per_site = 20, std::uint64_t seed = 1) {
    return nigam::synth::generate(nigam::synth::default_truth(n_sites, seed), n_per_site);
}

inline nigam::model::ModelSpec default_spec(const nigam::ingest::Dataset& data,
                                            nigam::model::KnotSettings knots = {},
                                            nigam::model::McmcConfig mcmc = {}) {
    return nigam::model::resolve_spec(knots, nigam::model::PriorSettings{}, mcmc, data);
}

} // namespace testing
