#include <cmath>
#include <numbers>

#include "doctest.h"
#include "msnlac/error.hpp"
#include "msnlac/similarity.hpp"
#include "msnlac/speckle.hpp"
#include "support.hpp"

using namespace msnlac;
using namespace msnlac::similarity;

namespace {

grid::Image rotate90(const grid::Image& img)
{
    // (x, y) -> (h - 1 - y, x)
    const int w = img.width(), h = img.height();
    std::vector<double> v(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            v[static_cast<std::size_t>(x) * h + (h - 1 - y)] = img(x, y);
    return grid::Image(h, w, std::move(v));
}

} // namespace

TEST_CASE("window weights")
{
    const NlWindow w = make_window(4, 1.5);
    CHECK(w.side() == 9);
    CHECK(w.weights.size() == 81);
    CHECK(w.weight(0, 0) == 1.0);
    CHECK(w.weight(4, 0) == doctest::Approx(std::exp(-16.0 / (2 * 1.5 * 1.5))).epsilon(1e-15));
    for (int dy = -4; dy <= 4; ++dy)
        for (int dx = -4; dx <= 4; ++dx) {
            CHECK(w.weight(dx, dy) <= 1.0);
            CHECK(w.weight(dx, dy) == w.weight(-dx, dy));
            CHECK(w.weight(dx, dy) == w.weight(dy, dx));
        }
    const NlWindow big = make_window(30);
    CHECK(big.weights.size() == 61u * 61u);
    CHECK(big.sigma == 15.0);
    CHECK_THROWS_AS(make_window(0, 1.0), InputError);
    CHECK_THROWS_AS(make_window(3, 0.0), InputError);
}

TEST_CASE("sliding-window moments equal per-patch recomputation")
{
    for (int tau : {1, 2, 3}) {
        const grid::Image img = testsupport::random_image(16, 13, 20 + tau);
        const auto m = patch_moments(img, tau);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                double s = 0, s2 = 0, sh = 0;
                const int n = (2 * tau + 1) * (2 * tau + 1);
                for (int j = -tau; j <= tau; ++j)
                    for (int i = -tau; i <= tau; ++i) {
                        const double z = img(grid::mirror_index(x + i, img.width()), grid::mirror_index(y + j, img.height()));
                        s += z;
                        s2 += z * z;
                        sh += std::sqrt(z);
                    }
                const double mean = s / n;
                const stats::Moments& got = m[static_cast<std::size_t>(y) * img.width() + x];
                CHECK(std::abs(got.mean - mean) < 1e-10);
                CHECK(std::abs(got.var - (s2 / n - mean * mean)) < 1e-10);
                CHECK(std::abs(got.m_half - sh / n) < 1e-10);
                CHECK(got.count == static_cast<std::size_t>(n));
            }
    }
}

TEST_CASE("constant image yields identical degenerate pmfs")
{
    const grid::Image img(12, 12, std::vector<double>(144, 2.0));
    const auto edges = stats::uniform_edges(0.0, 4.0, 16);
    const PatchPmfField f = fit_field(img, 2, stats::Model::Gamma, edges);
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
        CHECK(f.degenerate(i));
        CHECK(std::equal(f.mass(i).begin(), f.mass(i).end(), f.mass(0).begin()));
    }
    CHECK(pair_distance(f, {0, 0}, {11, 11}, divergence::Kind::KL) == 0.0);
}

TEST_CASE("fit_field preconditions")
{
    const grid::Image img = testsupport::random_image(6, 6, 1);
    const auto edges = default_edges(img);
    CHECK(edges.size() == 65);
    CHECK_THROWS_AS(fit_field(img, 3, stats::Model::Gamma, edges), InputError);
    CHECK_THROWS_AS(fit_field(img, 0, stats::Model::Gamma, edges), InputError);
}

TEST_CASE("pair distance basics")
{
    const grid::Image img = testsupport::random_image(16, 16, 7);
    const PatchPmfField f = fit_field(img, 2, stats::Model::Gamma, default_edges(img));
    CHECK(pair_distance(f, {3, 4}, {3, 4}, divergence::Kind::KL) == 0.0);
    CHECK(pair_distance(f, {3, 4}, {3, 4}, divergence::Kind::JS, divergence::JsMode::Verbatim) ==
          doctest::Approx(-2 * std::numbers::ln2).epsilon(1e-12));
    for (auto kind : {divergence::Kind::KL, divergence::Kind::Hellinger, divergence::Kind::TV, divergence::Kind::JS,
                      divergence::Kind::EM}) {
        const PairDistance d(f, kind, divergence::JsMode::Standard);
        for (int k = 0; k < 40; ++k) {
            const Pixel s{(k * 7) % 16, (k * 3) % 16};
            const Pixel t{(k * 5 + 1) % 16, (k * 11 + 2) % 16};
            const double a = pair_distance(f, s, t, kind);
            CHECK(a == doctest::Approx(pair_distance(f, t, s, kind)).epsilon(1e-12));
            const std::size_t si = static_cast<std::size_t>(s.y) * 16 + s.x;
            const std::size_t ti = static_cast<std::size_t>(t.y) * 16 + t.x;
            CHECK(std::abs(d(si, ti) - a) <= 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
    CHECK_THROWS_AS(pair_distance(f, {16, 0}, {0, 0}, divergence::Kind::KL), InputError);
}

TEST_CASE("cross-region pairs are farther than any same-region pair")
{
    const grid::Image img = testsupport::two_region(32, 32, 1.0, 4.0);
    const PatchPmfField f = fit_field(img, 2, stats::Model::Gamma, default_edges(img));
    const double cross = pair_distance(f, {6, 16}, {25, 16}, divergence::Kind::KL);
    CHECK(cross > 0.0);
    double same_max = 0.0;
    for (std::size_t s = 0; s < f.pixel_count(); ++s)
        for (std::size_t t = s + 1; t < f.pixel_count(); ++t) {
            const int sx = static_cast<int>(s % 32), tx = static_cast<int>(t % 32);
            if ((sx < 16) != (tx < 16))
                continue;
            same_max = std::max(same_max, pair_distance(f, {sx, static_cast<int>(s / 32)},
                                                        {tx, static_cast<int>(t / 32)}, divergence::Kind::KL));
        }
    CHECK(cross > same_max);
}

TEST_CASE("fit_field commutes with a 90 degree rotation")
{
    const grid::Image img = testsupport::random_image(14, 10, 3);
    const grid::Image rot = rotate90(img);
    const auto edges = default_edges(img);
    const PatchPmfField a = fit_field(img, 2, stats::Model::Gamma, edges);
    const PatchPmfField b = fit_field(rot, 2, stats::Model::Gamma, edges);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto ma = a.mass(static_cast<std::size_t>(y) * img.width() + x);
            const auto mb = b.mass(static_cast<std::size_t>(x) * rot.width() + (img.height() - 1 - y));
            for (std::size_t j = 0; j < ma.size(); ++j)
                CHECK(std::abs(ma[j] - mb[j]) < 1e-9);
        }
}

TEST_CASE("changing tau keeps cross-region pairs farther on average")
{
    const grid::Image clean = testsupport::two_region(40, 40, 1.0, 4.0);
    const grid::Image img = speckle::simulate(clean, 4.0, 12);
    for (int tau : {2, 3}) {
        CAPTURE(tau);
        const PatchPmfField f = fit_field(img, tau, stats::Model::Gamma, default_edges(img));
        double same = 0, cross = 0;
        int ns = 0, nc = 0;
        for (int k = 0; k < 400; ++k) {
            const Pixel s{k % 20, (k * 7) % 40};
            const Pixel t_same{(k * 3 + 1) % 20, (k * 13) % 40};
            const Pixel t_cross{20 + (k * 3 + 1) % 20, (k * 13) % 40};
            same += pair_distance(f, s, t_same, divergence::Kind::KL);
            cross += pair_distance(f, s, t_cross, divergence::Kind::KL);
            ++ns;
            ++nc;
        }
        CHECK(cross / nc > same / ns);
    }
}

TEST_CASE("fit pass at tau 7 on 400x400")
{
    const grid::Image img = speckle::simulate(grid::Image(400, 400, std::vector<double>(160000, 2.0)), 4.0, 1);
    const PatchPmfField f = fit_field(img, 7, stats::Model::Gamma, default_edges(img));
    CHECK(f.pixel_count() == 160000);
    double s = 0;
    for (double m : f.mass(12345))
        s += m;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}
