#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "msnlac/eval.hpp"
#include "msnlac/grid.hpp"
#include "msnlac/levelset.hpp"
#include "msnlac/stats.hpp"

namespace msnlac::multiscale {

struct MsConfig {
    int levels = 3;
    levelset::NlacParams nlac;
    double sigma0 = 0.8; // pyramid anti-alias scale
    int tau = 7;         // patch half size
    int nl_radius = 30;  // non-local window half size
    double nl_sigma = 0.0; // <= 0 selects nl_radius / 2
    stats::Model model = stats::Model::Gamma;
    int bins = 64;
    int looks = 1;
    std::uint64_t seed = 0;
    // Independent random starts on the coarsest level; the run with the lowest
    // final energy is propagated. 1 reproduces the plain coarse-to-fine scheme.
    int restarts = 1;
};

// Seed of the k-th coarse start (k = 0 is `seed` itself).
std::uint64_t restart_seed(std::uint64_t seed, int k);

void validate(const MsConfig& cfg, int width, int height);

struct MsResult {
    grid::BinaryMask mask;
    levelset::LevelSet phi;
    std::vector<eval::RunTrace> traces; // traces[l] belongs to pyramid level l (0 = full size)
    std::vector<levelset::RunResult> levels;
    int chosen_restart = 0;
    // Sum over levels (and coarse restarts) of pixel count times updates applied.
    std::uint64_t pixel_iterations = 0;
};

// Observer called with (level, phi) after each level finishes.
using LevelCallback = std::function<void(int, const levelset::LevelSet&)>;
// Observer called with (level, restart, iteration, phi) during every level run;
// restart is 0 except on the coarsest level.
using IterationCallback = std::function<void(int, int, int, const levelset::LevelSet&)>;

// Coarse-to-fine: NLAC on the coarsest level from random_init(seed), then each
// finer level starts from the bilinearly upsampled level set of the previous one.
MsResult msnlac_run(const grid::Image& img, const MsConfig& cfg, const grid::BinaryMask* gt = nullptr,
                    const LevelCallback& on_level = nullptr, const IterationCallback& on_iter = nullptr);

} // namespace msnlac::multiscale
