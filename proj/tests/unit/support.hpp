#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "msnlac/grid.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("msnlac_unit_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline msnlac::grid::Image random_image(int w, int h, std::uint64_t seed, double lo = 0.5, double hi = 4.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (double& x : v)
        x = u(rng);
    return msnlac::grid::Image(w, h, std::move(v));
}

inline msnlac::grid::BinaryMask random_mask(int w, int h, std::mt19937_64& rng, double p = 0.5)
{
    std::bernoulli_distribution b(p);
    msnlac::grid::BinaryMask m(w, h);
    for (auto& v : m.data())
        v = b(rng) ? 1 : 0;
    return m;
}

// Left half of the image (x < w/2) at `left`, the rest at `right`.
inline msnlac::grid::Image two_region(int w, int h, double left, double right)
{
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            v[static_cast<std::size_t>(y) * w + x] = x < w / 2 ? left : right;
    return msnlac::grid::Image(w, h, std::move(v));
}

} // namespace testsupport
