#include "msnlac/similarity.hpp"

#include <cmath>
#include <numbers>

#include "msnlac/error.hpp"
#include "msnlac/special.hpp"

namespace msnlac::similarity {

using grid::mirror_index;

PatchPmfField::PatchPmfField(int width, int height, int tau, stats::Model model, std::vector<double> edges,
                             std::vector<double> mass, std::vector<unsigned char> degenerate,
                             std::size_t saturated)
    : width_(width), height_(height), tau_(tau), model_(model), edges_(std::move(edges)),
      mass_(std::move(mass)), degenerate_(std::move(degenerate)), saturated_(saturated)
{
    require(edges_.size() >= 2, "PMF field needs at least one bin");
    require(mass_.size() == pixel_count() * bins(), "PMF field mass buffer has the wrong size");
    require(degenerate_.size() == pixel_count(), "PMF field flag buffer has the wrong size");
}

NlWindow make_window(int radius, double sigma)
{
    require(radius >= 1, "non-local window radius must be >= 1");
    require(sigma > 0.0, "non-local window sigma must be positive");
    NlWindow win{radius, sigma, {}};
    const int side = win.side();
    win.weights.resize(static_cast<std::size_t>(side) * side);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            win.weights[(dy + radius) * side + (dx + radius)] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    return win;
}

NlWindow make_window(int radius)
{
    return make_window(radius, 0.5 * radius);
}

std::vector<stats::Moments> patch_moments(const grid::Image& img, int tau)
{
    const int w = img.width();
    const int h = img.height();
    require(tau >= 1, "half patch size must be >= 1");
    require(2 * tau + 1 <= std::min(w, h), "patch larger than image");

    constexpr int kChannels = 3; // z, z^2, sqrt z
    auto value = [&](int x, int y, int c) {
        const double z = img(x, y);
        return c == 0 ? z : (c == 1 ? z * z : std::sqrt(z));
    };

    // Horizontal box sums, then vertical box sums of those.
    std::vector<double> row_sums(static_cast<std::size_t>(w) * h * kChannels);
    for (int y = 0; y < h; ++y)
        for (int c = 0; c < kChannels; ++c) {
            double acc = 0.0;
            for (int i = -tau; i <= tau; ++i)
                acc += value(mirror_index(i, w), y, c);
            for (int x = 0; x < w; ++x) {
                row_sums[(static_cast<std::size_t>(y) * w + x) * kChannels + c] = acc;
                acc += value(mirror_index(x + tau + 1, w), y, c) - value(mirror_index(x - tau, w), y, c);
            }
        }

    const double n = static_cast<double>((2 * tau + 1) * (2 * tau + 1));
    std::vector<stats::Moments> out(static_cast<std::size_t>(w) * h);
    auto row = [&](int x, int y, int c) {
        return row_sums[(static_cast<std::size_t>(mirror_index(y, h)) * w + x) * kChannels + c];
    };
    for (int x = 0; x < w; ++x) {
        double acc[kChannels] = {0, 0, 0};
        for (int c = 0; c < kChannels; ++c)
            for (int i = -tau; i <= tau; ++i)
                acc[c] += row(x, i, c);
        for (int y = 0; y < h; ++y) {
            stats::Moments& m = out[static_cast<std::size_t>(y) * w + x];
            m.mean = acc[0] / n;
            m.var = std::max(acc[1] / n - m.mean * m.mean, 0.0);
            m.m_half = acc[2] / n;
            m.count = static_cast<std::size_t>(n);
            for (int c = 0; c < kChannels; ++c)
                acc[c] += row(x, y + tau + 1, c) - row(x, y - tau, c);
        }
    }
    return out;
}

std::vector<double> default_edges(const grid::Image& img, int bins)
{
    const stats::Moments m = stats::moments(img.data());
    double hi = m.mean + 6.0 * std::sqrt(m.var);
    if (!(hi > 0.0))
        hi = 1.0;
    return stats::uniform_edges(0.0, hi, bins);
}

namespace {

// Pins failed Weibull / G_A^0 roots to the bracket end the target lies beyond.
stats::DistParams estimate_pinned(stats::Model model, const stats::Moments& m, int looks, bool& pinned)
{
    try {
        stats::DistParams p = stats::estimate(model, m, looks);
        if (model == stats::Model::Weibull && !p.degenerate)
            pinned = std::get<stats::WeibullParams>(p.params).beta >= stats::kWeibullHi;
        return p;
    } catch (const NumericalError&) {
        pinned = true;
        stats::DistParams p;
        p.center = m.mean;
        if (model == stats::Model::Weibull) {
            const double beta = stats::kWeibullLo;
            p.params = stats::WeibullParams{beta, m.mean / special::tgamma(1.0 + 1.0 / beta)};
        } else {
            const double r_lo = std::abs(stats::ga0_alpha_residual(stats::kGA0Lo, m.m_half, m.mean, looks));
            const double r_hi = std::abs(stats::ga0_alpha_residual(stats::kGA0Hi, m.m_half, m.mean, looks));
            const double alpha = r_lo <= r_hi ? stats::kGA0Lo : stats::kGA0Hi;
            p.params = stats::GA0Params{alpha, stats::ga0_gamma(alpha, m.mean, looks), looks};
        }
        return p;
    }
}

} // namespace

PatchPmfField fit_field(const grid::Image& img, int tau, stats::Model model, const std::vector<double>& edges,
                        int looks)
{
    require(edges.size() >= 2, "fit_field needs at least one bin");
    const std::vector<stats::Moments> mom = patch_moments(img, tau);
    const std::size_t bins = edges.size() - 1;
    std::vector<double> mass(mom.size() * bins);
    std::vector<unsigned char> degenerate(mom.size());
    std::size_t saturated = 0;
    for (std::size_t i = 0; i < mom.size(); ++i) {
        bool pinned = false;
        const stats::DistParams p = estimate_pinned(model, mom[i], looks, pinned);
        saturated += pinned ? 1 : 0;
        degenerate[i] = p.degenerate ? 1 : 0;
        stats::discretize_into(p, edges, std::span<double>(mass.data() + i * bins, bins));
    }
    return PatchPmfField(img.width(), img.height(), tau, model, edges, std::move(mass), std::move(degenerate),
                         saturated);
}

double pair_distance(const PatchPmfField& field, Pixel s, Pixel t, divergence::Kind kind,
                     divergence::JsMode js_mode)
{
    auto inside = [&](Pixel p) { return p.x >= 0 && p.y >= 0 && p.x < field.width() && p.y < field.height(); };
    require(inside(s) && inside(t), "pair_distance: pixel outside the image");
    return divergence::divergence(kind, field.pmf(s), field.pmf(t), js_mode);
}

PairDistance::PairDistance(const PatchPmfField& field, divergence::Kind kind, divergence::JsMode js_mode)
    : field_(field), kind_(kind), js_mode_(js_mode), bins_(field.bins())
{
    using divergence::Kind;
    const std::size_t n = field.pixel_count();
    if (kind == Kind::TV)
        return;
    if (kind == Kind::JS) {
        entropy_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double ent = 0.0;
            for (double p : field.mass(i))
                ent += p * std::log(p);
            entropy_[i] = ent;
        }
        return;
    }
    aux_.resize(n * bins_);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = field.mass(i);
        double* a = aux_.data() + i * bins_;
        double cum = 0.0;
        for (std::size_t j = 0; j < bins_; ++j) {
            if (kind == Kind::KL) {
                a[j] = std::log(p[j]);
            } else if (kind == Kind::Hellinger) {
                a[j] = std::sqrt(p[j]);
            } else {
                cum += p[j];
                a[j] = cum;
            }
        }
    }
}

double PairDistance::operator()(std::size_t s, std::size_t t) const
{
    using divergence::Kind;
    if (s == t)
        return kind_ == Kind::JS && js_mode_ == divergence::JsMode::Verbatim ? -2.0 * std::numbers::ln2 : 0.0;

    const double* p = field_.mass(s).data();
    const double* q = field_.mass(t).data();
    const double* a = aux_.empty() ? nullptr : aux_.data() + s * bins_;
    const double* b = aux_.empty() ? nullptr : aux_.data() + t * bins_;
    double acc = 0.0;
    switch (kind_) {
    case Kind::KL:
        for (std::size_t j = 0; j < bins_; ++j)
            acc += (p[j] - q[j]) * (a[j] - b[j]);
        return acc;
    case Kind::Hellinger:
        for (std::size_t j = 0; j < bins_; ++j)
            acc += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(acc) / std::numbers::sqrt2;
    case Kind::TV:
        for (std::size_t j = 0; j < bins_; ++j)
            acc += std::abs(p[j] - q[j]);
        return 0.5 * acc;
    case Kind::EM:
        for (std::size_t j = 0; j < bins_; ++j)
            acc += std::abs(a[j] - b[j]);
        return acc;
    case Kind::JS: {
        for (std::size_t j = 0; j < bins_; ++j) {
            const double m = p[j] + q[j];
            acc += m * std::log(m);
        }
        const double verbatim = entropy_[s] + entropy_[t] - acc;
        if (js_mode_ == divergence::JsMode::Verbatim)
            return verbatim;
        return std::max(0.5 * verbatim + std::numbers::ln2, 0.0);
    }
    }
    return 0.0;
}

} // namespace msnlac::similarity
