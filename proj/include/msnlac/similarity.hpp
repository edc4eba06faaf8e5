#pragma once

#include <cstddef>
#include <vector>

#include "msnlac/divergence.hpp"
#include "msnlac/grid.hpp"
#include "msnlac/stats.hpp"

namespace msnlac::similarity {

struct Pixel {
    int x = 0;
    int y = 0;
};

// Per-pixel PMFs of the (2*tau+1)^2 patch (mirror-reflected at borders), all
// over the same bin edges. Immutable once built.
class PatchPmfField {
public:
    PatchPmfField(int width, int height, int tau, stats::Model model, std::vector<double> edges,
                  std::vector<double> mass, std::vector<unsigned char> degenerate, std::size_t saturated);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    int tau() const { return tau_; }
    stats::Model model() const { return model_; }
    std::size_t bins() const { return edges_.size() - 1; }
    const std::vector<double>& edges() const { return edges_; }

    std::span<const double> mass(std::size_t index) const
    {
        return {mass_.data() + index * bins(), bins()};
    }
    stats::PmfView pmf(std::size_t index) const { return {edges_, mass(index)}; }
    stats::PmfView pmf(Pixel p) const { return pmf(static_cast<std::size_t>(p.y) * width_ + p.x); }
    bool degenerate(std::size_t index) const { return degenerate_[index] != 0; }
    // Pixels whose root finder was pinned to a bracket end.
    std::size_t saturated_count() const { return saturated_; }

private:
    int width_;
    int height_;
    int tau_;
    stats::Model model_;
    std::vector<double> edges_;
    std::vector<double> mass_;
    std::vector<unsigned char> degenerate_;
    std::size_t saturated_;
};

// Gaussian weights exp(-|d|^2 / (2 sigma^2)) on the square |d|_inf <= radius.
// Not normalised: the centre weight is 1.
struct NlWindow {
    int radius = 0;
    double sigma = 0.0;
    std::vector<double> weights; // (2r+1)^2, row-major over (dy, dx)

    int side() const { return 2 * radius + 1; }
    double weight(int dx, int dy) const { return weights[(dy + radius) * side() + (dx + radius)]; }
};

NlWindow make_window(int radius, double sigma);
// sigma defaults to radius / 2.
NlWindow make_window(int radius);

// Sliding-window patch moments, O(w*h) per channel.
std::vector<stats::Moments> patch_moments(const grid::Image& img, int tau);

// 64 uniform bins on [0, mean + 6 * stddev] of the whole image by default.
std::vector<double> default_edges(const grid::Image& img, int bins = 64);

// Moment fit per pixel followed by discretisation. Weibull and G_A^0 fits whose
// root is not bracketed are pinned to the nearer bracket end.
PatchPmfField fit_field(const grid::Image& img, int tau, stats::Model model, const std::vector<double>& edges,
                        int looks = 1);

double pair_distance(const PatchPmfField& field, Pixel s, Pixel t, divergence::Kind kind,
                     divergence::JsMode js_mode = divergence::JsMode::Standard);

// Distance evaluator with per-pixel precomputation (logs, square roots or
// cumulative sums depending on the kind). Agrees with divergence::divergence
// up to rounding.
class PairDistance {
public:
    PairDistance(const PatchPmfField& field, divergence::Kind kind, divergence::JsMode js_mode);

    double operator()(std::size_t s, std::size_t t) const;
    const PatchPmfField& field() const { return field_; }

private:
    const PatchPmfField& field_;
    divergence::Kind kind_;
    divergence::JsMode js_mode_;
    std::size_t bins_;
    std::vector<double> aux_;     // per pixel, bins_ values
    std::vector<double> entropy_; // per pixel sum p ln p (JS)
};

} // namespace msnlac::similarity
