#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "msnlac/error.hpp"
#include "msnlac/speckle.hpp"
#include "msnlac/stats.hpp"

using namespace msnlac;
using namespace msnlac::speckle;

namespace {

// Independent rasteriser for the default layout: pixel centres at integer
// coordinates, shapes closed.
bool in_shapes(double x, double y, double w, double h)
{
    const double s = std::min(w, h);
    const double r1 = std::hypot(x - 0.27 * w, y - 0.27 * h);
    if (r1 >= 0.07 * s && r1 <= 0.23 * s)
        return true;

    const double ax = 0.78 * w, ay = 0.05 * h, bx = 0.97 * w, by = 0.44 * h, cx = 0.59 * w, cy = 0.44 * h;
    // Barycentric coordinates.
    const double det = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy);
    const double l1 = ((by - cy) * (x - cx) + (cx - bx) * (y - cy)) / det;
    const double l2 = ((cy - ay) * (x - cx) + (ax - cx) * (y - cy)) / det;
    const double l3 = 1.0 - l1 - l2;
    const double tol = 1e-12;
    if (l1 >= -tol && l2 >= -tol && l3 >= -tol)
        return true;

    const double dx = x - 0.50 * w, dy = y - 0.74 * h;
    const double r2 = std::hypot(dx, dy);
    if (r2 >= 0.09 * s && r2 <= 0.25 * s) {
        // Opening of 100 degrees centred straight down (+y).
        const double off = std::acos(std::clamp(dy / r2, -1.0, 1.0)) * 180.0 / std::numbers::pi;
        if (off >= 50.0)
            return true;
    }
    return false;
}

} // namespace

TEST_CASE("phantom without gradient has two values")
{
    const Phantom ph = make_shapes(96, 96, 3.0, 1.0, 0.0);
    std::set<double> values(ph.clean.data().begin(), ph.clean.data().end());
    CHECK(values == std::set<double>{1.0, 3.0});
    for (std::size_t i = 0; i < ph.clean.size(); ++i)
        CHECK((ph.gt_mask[i] != 0) == (ph.clean[i] == 3.0));
}

TEST_CASE("phantom area matches an independent rasteriser")
{
    for (int n : {64, 128, 200}) {
        const Phantom ph = make_shapes(n, n, 2.0, 1.0, 0.5);
        std::size_t ours = 0, ref = 0, agree = 0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const bool a = ph.gt_mask(x, y) != 0;
                const bool b = in_shapes(x, y, n, n);
                ours += a;
                ref += b;
                agree += a == b;
            }
        CAPTURE(n);
        CHECK(ours == ref);
        CHECK(agree == static_cast<std::size_t>(n) * n);
    }
}

TEST_CASE("horseshoe ramp spans the requested range")
{
    const Phantom ph = make_shapes(128, 128, 2.0, 1.0, 1.5);
    double lo = INFINITY, hi = 0;
    for (std::size_t i = 0; i < ph.clean.size(); ++i)
        if (ph.gt_mask[i]) {
            lo = std::min(lo, ph.clean[i]);
            hi = std::max(hi, ph.clean[i]);
        }
    CHECK(lo == 2.0);
    CHECK(hi > 3.45);
    CHECK(hi <= 3.5);
}

TEST_CASE("phantom preconditions")
{
    CHECK_NOTHROW(make_shapes(512, 512, 3.0, 1.0, 0.0));
    CHECK_THROWS_AS(make_shapes(63, 64, 3.0, 1.0, 0.0), InputError);
    CHECK_THROWS_AS(make_shapes(64, 64, 1.0, 1.0, 0.0), InputError);
    CHECK_THROWS_AS(make_shapes(64, 64, 3.0, 0.0, 0.0), InputError);
    CHECK_THROWS_AS(make_shapes(64, 64, 3.0, 1.0, -1.0), InputError);
    CHECK_THROWS_AS(make_shapes(64, 300, 3.0, 1.0, 0.0), InputError);
}

TEST_CASE("speckle statistics")
{
    const int n = 1000;
    const grid::Image clean(n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 4.0));
    const grid::Image f = simulate(clean, 4.0, 7);
    double s = 0, s2 = 0;
    for (double v : f.data()) {
        CHECK(v > 0.0);
        const double u = v / 4.0;
        s += u;
        s2 += u * u;
    }
    const double mean = s / f.size();
    const double var = s2 / f.size() - mean * mean;
    CHECK(4.0 * mean == doctest::Approx(4.0).epsilon(0.01));
    CHECK(var == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("gamma fit of a constant scene recovers its level")
{
    const grid::Image clean(512, 512, std::vector<double>(512 * 512, 2.5));
    const grid::Image f = simulate(clean, 4.0, 11);
    const stats::DistParams p = stats::estimate(stats::Model::Gamma, stats::moments(f.data()));
    const auto& g = std::get<stats::GammaParams>(p.params);
    CHECK(g.alpha / g.beta == doctest::Approx(2.5).epsilon(0.02));
    CHECK(g.alpha == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("simulate is deterministic per seed")
{
    const Phantom ph = make_shapes(64, 64, 3.0, 1.0, 0.0);
    CHECK(simulate(ph.clean, 4.0, 5) == simulate(ph.clean, 4.0, 5));
    CHECK_FALSE(simulate(ph.clean, 4.0, 5) == simulate(ph.clean, 4.0, 6));
    CHECK_THROWS_AS(simulate(ph.clean, 0.0, 5), InputError);
    CHECK_THROWS_AS(simulate(grid::Image(2, 1, {1.0, 0.0}), 4.0, 5), InputError);
}
