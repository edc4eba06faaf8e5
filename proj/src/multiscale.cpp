#include "msnlac/multiscale.hpp"

#include "msnlac/error.hpp"
#include "msnlac/similarity.hpp"

namespace msnlac::multiscale {

void validate(const MsConfig& cfg, int width, int height)
{
    levelset::validate(cfg.nlac);
    require(cfg.levels >= 1, "number of scales must be at least 1");
    const int bound = grid::max_pyramid_levels(width, height);
    require(cfg.levels <= bound, "number of scales " + std::to_string(cfg.levels) + " exceeds the pyramid bound " +
                                     std::to_string(bound) + " for a " + std::to_string(width) + "x" +
                                     std::to_string(height) + " image");
    require(cfg.tau >= 1, "patch half size must be at least 1");
    require(cfg.nl_radius >= 1, "non-local radius must be at least 1");
    require(cfg.bins >= 2, "bin count must be at least 2");
    require(cfg.looks >= 1, "looks must be at least 1");
    require(cfg.sigma0 > 0.0, "pyramid sigma must be positive");
    require(cfg.restarts >= 1, "restarts must be at least 1");
    const int coarse = std::min(width, height) >> (cfg.levels - 1);
    require(coarse >= 8, "coarsest level is smaller than 8 pixels");
    require(2 * cfg.tau + 1 <= coarse, "patch of half size " + std::to_string(cfg.tau) +
                                           " does not fit the coarsest level (" + std::to_string(coarse) + " pixels)");
}

std::uint64_t restart_seed(std::uint64_t seed, int k)
{
    return seed + static_cast<std::uint64_t>(k) * 0x9E3779B97F4A7C15ULL;
}

MsResult msnlac_run(const grid::Image& img, const MsConfig& cfg, const grid::BinaryMask* gt,
                    const LevelCallback& on_level, const IterationCallback& on_iter)
{
    validate(cfg, img.width(), img.height());
    if (gt && !gt->same_shape(img.pixels()))
        throw DimensionMismatch("ground truth is " + std::to_string(gt->width()) + "x" +
                                std::to_string(gt->height()) + " but image is " + std::to_string(img.width()) +
                                "x" + std::to_string(img.height()));

    const grid::Pyramid pyr = grid::build_pyramid(img, cfg.levels, cfg.sigma0);
    std::vector<grid::BinaryMask> gts;
    if (gt) {
        gts.push_back(*gt);
        for (int l = 1; l < cfg.levels; ++l)
            gts.push_back(grid::downsample2(gts.back()));
    }
    const similarity::NlWindow window =
        cfg.nl_sigma > 0.0 ? similarity::make_window(cfg.nl_radius, cfg.nl_sigma) : similarity::make_window(cfg.nl_radius);

    MsResult out;
    out.traces.resize(cfg.levels);
    out.levels.resize(cfg.levels);
    levelset::LevelSet phi;
    for (int l = cfg.levels - 1; l >= 0; --l) {
        const grid::Image& level = pyr.levels[l];
        const auto edges = similarity::default_edges(level, cfg.bins);
        const auto field = similarity::fit_field(level, cfg.tau, cfg.model, edges, cfg.looks);
        const grid::BinaryMask* level_gt = gt ? &gts[l] : nullptr;
        const auto observer = [&](int restart) -> levelset::IterationCallback {
            if (!on_iter)
                return nullptr;
            return [&on_iter, l, restart](int iter, const levelset::LevelSet& ls) { on_iter(l, restart, iter, ls); };
        };
        levelset::RunResult run;
        if (l == cfg.levels - 1) {
            for (int k = 0; k < cfg.restarts; ++k) {
                const levelset::LevelSet init = levelset::random_init(
                    level.width(), level.height(), restart_seed(cfg.seed, k), cfg.nlac.epsilon, cfg.nlac.phi_clamp);
                levelset::RunResult candidate = levelset::nlac_run(level, init, field, window, cfg.nlac, level_gt, observer(k));
                out.pixel_iterations +=
                    static_cast<std::uint64_t>(level.size()) * static_cast<std::uint64_t>(candidate.updates);
                if (k == 0 || candidate.trace.records.back().energy < run.trace.records.back().energy) {
                    run = std::move(candidate);
                    out.chosen_restart = k;
                }
            }
        } else {
            phi.phi = grid::upsample2_field(phi.phi, level.width(), level.height());
            run = levelset::nlac_run(level, phi, field, window, cfg.nlac, level_gt, observer(0));
            out.pixel_iterations += static_cast<std::uint64_t>(level.size()) * static_cast<std::uint64_t>(run.updates);
        }
        phi = run.phi;
        out.traces[l] = run.trace;
        out.levels[l] = std::move(run);
        if (on_level)
            on_level(l, phi);
    }
    out.mask = levelset::to_mask(phi);
    out.phi = std::move(phi);
    return out;
}

} // namespace msnlac::multiscale
