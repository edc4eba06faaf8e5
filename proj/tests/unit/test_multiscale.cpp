#include "doctest.h"
#include "msnlac/error.hpp"
#include "msnlac/multiscale.hpp"
#include "msnlac/similarity.hpp"
#include "msnlac/speckle.hpp"

using namespace msnlac;
using namespace msnlac::multiscale;

namespace {

MsConfig small_config(int levels)
{
    MsConfig cfg;
    cfg.levels = levels;
    cfg.tau = 1;
    cfg.nl_radius = 4;
    cfg.seed = 5;
    cfg.nlac.max_iters = 6;
    return cfg;
}

grid::Image phantom(int n, std::uint64_t seed, grid::BinaryMask* gt = nullptr)
{
    const speckle::Phantom ph = speckle::make_shapes(n, n, 3.0, 1.0, 0.0);
    if (gt)
        *gt = ph.gt_mask;
    return speckle::simulate(ph.clean, 4.0, seed);
}

} // namespace

TEST_CASE("one level is a plain single-scale run from random_init")
{
    const grid::Image img = phantom(64, 1);
    const MsConfig cfg = small_config(1);
    const MsResult ms = msnlac_run(img, cfg);

    const auto field = similarity::fit_field(img, cfg.tau, cfg.model, similarity::default_edges(img, cfg.bins));
    const auto win = similarity::make_window(cfg.nl_radius);
    const levelset::RunResult ss =
        levelset::nlac_run(img, levelset::random_init(64, 64, cfg.seed), field, win, cfg.nlac);
    CHECK(ms.phi.phi == ss.phi.phi);
    CHECK(ms.mask == levelset::to_mask(ss.phi));
    CHECK(ms.traces.size() == 1);
    CHECK(ms.pixel_iterations == 64u * 64u * static_cast<unsigned>(ss.updates));
}

TEST_CASE("levels run coarse to fine with one trace each")
{
    grid::BinaryMask gt;
    const grid::Image img = phantom(64, 2, &gt);
    const MsConfig cfg = small_config(3);
    std::vector<int> order;
    std::vector<int> widths;
    const MsResult ms = msnlac_run(img, cfg, &gt, [&](int level, const levelset::LevelSet& ls) {
        order.push_back(level);
        widths.push_back(ls.phi.width());
    });
    CHECK(order == std::vector<int>{2, 1, 0});
    CHECK(widths == std::vector<int>{16, 32, 64});
    REQUIRE(ms.traces.size() == 3);
    for (const auto& t : ms.traces) {
        REQUIRE_FALSE(t.records.empty());
        CHECK(t.records.back().rfe.has_value());
    }
    CHECK(ms.levels[2].phi.phi.width() == 16);
    CHECK(ms.levels[1].phi.phi.width() == 32);
    CHECK(ms.mask.width() == 64);
}

TEST_CASE("iteration observer sees every accepted update")
{
    const grid::Image img = phantom(64, 3);
    const MsConfig cfg = small_config(2);
    std::vector<std::vector<int>> seen(2);
    const MsResult ms = msnlac_run(img, cfg, nullptr, nullptr,
                                   [&](int level, int restart, int iter, const levelset::LevelSet&) {
                                       CHECK(restart == 0);
                                       seen[level].push_back(iter);
                                   });
    for (int l = 0; l < 2; ++l) {
        std::vector<int> expect;
        for (const auto& r : ms.traces[l].records)
            expect.push_back(r.iter);
        CHECK(seen[l] == expect);
    }
}

TEST_CASE("fixed seed gives identical masks; threads do not change the result")
{
    const grid::Image img = phantom(64, 4);
    MsConfig cfg = small_config(2);
    const MsResult a = msnlac_run(img, cfg);
    const MsResult b = msnlac_run(img, cfg);
    CHECK(a.mask == b.mask);
    CHECK(a.phi.phi == b.phi.phi);
    cfg.nlac.threads = 3;
    const MsResult c = msnlac_run(img, cfg);
    CHECK(a.phi.phi == c.phi.phi);
}

TEST_CASE("restarts keep the lowest-energy coarse run")
{
    const grid::Image img = phantom(64, 5);
    MsConfig cfg = small_config(2);
    cfg.restarts = 3;
    std::vector<double> finals(3, 0.0);
    const MsResult ms = msnlac_run(img, cfg, nullptr, nullptr,
                                   [&](int level, int restart, int, const levelset::LevelSet& ls) {
                                       if (level != 1)
                                           return;
                                       (void)ls;
                                       finals[restart] += 1.0;
                                   });
    for (double n : finals)
        CHECK(n > 0.0);
    double best = INFINITY;
    int arg = -1;
    for (int k = 0; k < 3; ++k) {
        MsConfig one = cfg;
        one.levels = 1;
        one.restarts = 1;
        one.seed = restart_seed(cfg.seed, k);
        const MsResult r = msnlac_run(grid::build_pyramid(img, 2).levels[1], one);
        const double e = r.traces[0].records.back().energy;
        if (e < best) {
            best = e;
            arg = k;
        }
    }
    CHECK(ms.chosen_restart == arg);
    CHECK(ms.traces[1].records.back().energy == best);
    CHECK(restart_seed(9, 0) == 9);
}

TEST_CASE("configuration validation")
{
    const grid::Image img = phantom(64, 6);
    MsConfig cfg = small_config(7);
    CHECK_THROWS_AS(msnlac_run(img, cfg), InputError);
    cfg = small_config(4); // 8 px coarse level
    CHECK_NOTHROW(validate(cfg, 64, 64));
    cfg.levels = 0;
    CHECK_THROWS_AS(validate(cfg, 64, 64), InputError);
    cfg = small_config(2);
    cfg.restarts = 0;
    CHECK_THROWS_AS(validate(cfg, 64, 64), InputError);
    cfg = small_config(2);
    cfg.tau = 20;
    CHECK_THROWS_AS(validate(cfg, 64, 64), InputError);

    grid::BinaryMask wrong(32, 32);
    CHECK_THROWS_AS(msnlac_run(img, small_config(2), &wrong), DimensionMismatch);
}
