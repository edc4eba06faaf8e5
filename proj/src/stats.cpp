#include "msnlac/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "msnlac/error.hpp"
#include "msnlac/special.hpp"

namespace msnlac::stats {

namespace {

using special::lgamma;

constexpr double kDegenerateRelVar = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Plain bisection down to the resolution of double. f must change sign on [lo, hi].
template <class F>
double bisect(F&& f, double lo, double hi)
{
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double fmid = f(mid);
        if (fmid == 0.0)
            return mid;
        if ((fmid < 0) == (flo < 0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double log_ga0_ratio(double x)
{
    // log[ Gamma(x - 1/4)^2 / (Gamma(x) Gamma(x - 1/2)) ], x = -alpha
    return 2.0 * lgamma(x - 0.25) - lgamma(x) - lgamma(x - 0.5);
}

DistParams degenerate_params(Model model, double mean, int looks)
{
    DistParams p;
    p.degenerate = true;
    p.center = mean;
    const double m = std::max(mean, 1e-300);
    switch (model) {
    case Model::LogNormal:
        p.params = LogNormalParams{std::log(m), 1e-3};
        break;
    case Model::Rayleigh:
        p.params = RayleighParams{m * std::sqrt(2.0 / std::numbers::pi)};
        break;
    case Model::Gamma:
        p.params = GammaParams{kGammaShapeCap, kGammaShapeCap / m};
        break;
    case Model::Weibull:
        p.params = WeibullParams{kWeibullHi, m / std::exp(lgamma(1.0 + 1.0 / kWeibullHi))};
        break;
    case Model::GA0:
        p.params = GA0Params{kGA0Lo, ga0_gamma(kGA0Lo, m, looks), looks};
        break;
    }
    return p;
}

} // namespace

std::string_view model_name(Model m)
{
    switch (m) {
    case Model::LogNormal: return "lognormal";
    case Model::Rayleigh: return "rayleigh";
    case Model::Gamma: return "gamma";
    case Model::Weibull: return "weibull";
    case Model::GA0: return "ga0";
    }
    return "?";
}

Model parse_model(std::string_view name)
{
    for (Model m : {Model::LogNormal, Model::Rayleigh, Model::Gamma, Model::Weibull, Model::GA0})
        if (model_name(m) == name)
            return m;
    throw InputError("unknown model '" + std::string(name) + "' (expected lognormal|rayleigh|gamma|weibull|ga0)");
}

Moments moments(std::span<const double> samples)
{
    require(samples.size() >= 2, "moments need at least two samples");
    double sum = 0.0;
    double sum_half = 0.0;
    for (double z : samples) {
        require(z >= 0.0, "moments: negative sample");
        sum += z;
        sum_half += std::sqrt(z);
    }
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double z : samples)
        ss += (z - mean) * (z - mean);
    return {mean, ss / n, sum_half / n, samples.size()};
}

void validate(const DistParams& p)
{
    std::visit(overloaded{
                   [](const LogNormalParams& q) { require(q.sigma > 0, "lognormal sigma must be positive"); },
                   [](const RayleighParams& q) { require(q.sigma > 0, "rayleigh sigma must be positive"); },
                   [](const GammaParams& q) {
                       require(q.alpha > 0 && q.beta > 0, "gamma alpha and beta must be positive");
                   },
                   [](const WeibullParams& q) {
                       require(q.beta > 0 && q.eta > 0, "weibull beta and eta must be positive");
                   },
                   [](const GA0Params& q) {
                       require(q.alpha < -1 && q.gamma > 0 && q.looks >= 1,
                               "G_A^0 requires alpha < -1, gamma > 0, looks >= 1");
                   },
               },
               p.params);
}

double weibull_cv2(double beta)
{
    return std::exp(lgamma(1.0 + 2.0 / beta) - 2.0 * lgamma(1.0 + 1.0 / beta)) - 1.0;
}

RootResult solve_weibull_shape(double cv2)
{
    require(cv2 > 0.0, "weibull: Var/E^2 must be positive");
    // cv2(beta) decreases monotonically in beta.
    const double top = weibull_cv2(kWeibullLo);
    const double bottom = weibull_cv2(kWeibullHi);
    if (cv2 > top) {
        std::ostringstream msg;
        msg << "weibull shape: Var/E^2 = " << cv2 << " exceeds the bracket maximum " << top;
        throw NumericalError(msg.str());
    }
    if (cv2 <= bottom)
        return {kWeibullHi, bottom - cv2, true, true};
    const double beta = bisect([cv2](double b) { return weibull_cv2(b) - cv2; }, kWeibullLo, kWeibullHi);
    const double residual = weibull_cv2(beta) - cv2;
    return {beta, residual, std::abs(residual) < 1e-10, false};
}

double ga0_alpha_residual(double alpha, double m_half, double m1, int looks)
{
    const double n = looks;
    const double looks_term =
        std::exp(lgamma(n) + lgamma(n + 0.5) - 2.0 * lgamma(n + 0.25));
    return std::exp(log_ga0_ratio(-alpha)) - (m_half * m_half / m1) * looks_term;
}

RootResult solve_ga0_alpha(double m_half, double m1, int looks)
{
    require(m1 > 0 && m_half > 0, "G_A^0 estimator needs positive m_1/2 and m_1");
    require(looks >= 1, "G_A^0 estimator needs looks >= 1");
    auto f = [&](double a) { return ga0_alpha_residual(a, m_half, m1, looks); };
    const double f_lo = f(kGA0Lo);
    const double f_hi = f(kGA0Hi);
    if ((f_lo < 0) == (f_hi < 0) && f_lo != 0 && f_hi != 0) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "G_A^0 alpha: no sign change on [" << kGA0Lo << ", " << kGA0Hi << "] (residuals " << f_lo << ", "
            << f_hi << ")";
        throw NumericalError(msg.str());
    }
    const double alpha = bisect(f, kGA0Lo, kGA0Hi);
    const double residual = f(alpha);
    if (!(std::abs(residual) < 1e-8))
        throw NumericalError("G_A^0 alpha: bisection residual " + std::to_string(residual) + " above 1e-8");
    return {alpha, residual, true, false};
}

double ga0_gamma(double alpha, double mean, int looks)
{
    const double n = looks;
    const double log_ratio = lgamma(-alpha) + lgamma(n) - lgamma(-alpha - 0.5) - lgamma(n + 0.5);
    return mean * mean * n * std::exp(2.0 * log_ratio);
}

DistParams estimate(Model model, const Moments& m, int looks)
{
    require(m.count >= 1 && m.mean >= 0 && m.var >= 0 && m.m_half >= 0, "invalid moments");
    if (model == Model::GA0)
        require(looks >= 1, "G_A^0 needs looks >= 1");

    if (m.var <= kDegenerateRelVar * m.mean * m.mean)
        return degenerate_params(model, m.mean, looks);

    const double e = m.mean;
    const double v = m.var;
    DistParams p;
    p.center = e;
    switch (model) {
    case Model::LogNormal:
        require(e > 0, "lognormal fit needs a positive mean");
        p.params = LogNormalParams{std::log(e * e / std::sqrt(v + e * e)), std::sqrt(std::log(v / (e * e) + 1.0))};
        break;
    case Model::Rayleigh:
        p.params = RayleighParams{std::sqrt(2.0 * v / (4.0 - std::numbers::pi))};
        break;
    case Model::Gamma: {
        require(e > 0, "gamma fit needs a positive mean");
        const double alpha = std::min(e * e / v, kGammaShapeCap);
        p.params = GammaParams{alpha, alpha / e};
        break;
    }
    case Model::Weibull: {
        require(e > 0, "weibull fit needs a positive mean");
        const RootResult r = solve_weibull_shape(v / (e * e));
        const double eta = e / std::exp(lgamma(1.0 + 1.0 / r.value));
        p.params = WeibullParams{r.value, eta};
        break;
    }
    case Model::GA0: {
        require(e > 0, "G_A^0 fit needs a positive mean");
        const RootResult r = solve_ga0_alpha(m.m_half, e, looks);
        p.params = GA0Params{r.value, ga0_gamma(r.value, e, looks), looks};
        break;
    }
    }
    return p;
}

MeanVar mean_var(const DistParams& p)
{
    return std::visit(
        overloaded{
            [](const LogNormalParams& q) {
                const double s2 = q.sigma * q.sigma;
                return MeanVar{std::exp(q.mu + 0.5 * s2), std::expm1(s2) * std::exp(2 * q.mu + s2)};
            },
            [](const RayleighParams& q) {
                return MeanVar{q.sigma * std::sqrt(std::numbers::pi / 2),
                               (4 - std::numbers::pi) / 2 * q.sigma * q.sigma};
            },
            [](const GammaParams& q) { return MeanVar{q.alpha / q.beta, q.alpha / (q.beta * q.beta)}; },
            [](const WeibullParams& q) {
                const double g1 = std::exp(lgamma(1 + 1 / q.beta));
                const double g2 = std::exp(lgamma(1 + 2 / q.beta));
                return MeanVar{q.eta * g1, q.eta * q.eta * (g2 - g1 * g1)};
            },
            [](const GA0Params& q) {
                const double n = q.looks;
                const double mean = std::sqrt(q.gamma / n) *
                                    std::exp(lgamma(-q.alpha - 0.5) + lgamma(n + 0.5) - lgamma(-q.alpha) - lgamma(n));
                const double second = q.gamma / (-q.alpha - 1.0);
                return MeanVar{mean, std::max(second - mean * mean, 0.0)};
            },
        },
        p.params);
}

Density::Density(const DistParams& p) : model_(p.model())
{
    validate(p);
    std::visit(overloaded{
                   [this](const LogNormalParams& q) {
                       a_ = q.mu;
                       b_ = q.sigma;
                       c_ = -std::log(std::sqrt(2 * std::numbers::pi) * q.sigma);
                   },
                   [this](const RayleighParams& q) { b_ = q.sigma; },
                   [this](const GammaParams& q) {
                       a_ = q.alpha;
                       b_ = q.beta;
                       c_ = q.alpha * std::log(q.beta) - lgamma(q.alpha);
                   },
                   [this](const WeibullParams& q) {
                       a_ = q.beta;
                       b_ = q.eta;
                       c_ = std::log(q.beta) - q.beta * std::log(q.eta);
                   },
                   [this](const GA0Params& q) {
                       const double n = q.looks;
                       a_ = q.alpha;
                       b_ = q.gamma;
                       n_ = q.looks;
                       c_ = std::log(2.0) + n * std::log(n) + lgamma(n - q.alpha) - q.alpha * std::log(q.gamma) -
                            lgamma(-q.alpha) - lgamma(n);
                   },
               },
               p.params);
}

double Density::operator()(double z) const
{
    require(z >= 0.0, "density evaluated at negative intensity");
    switch (model_) {
    case Model::LogNormal: {
        if (z == 0.0)
            return 0.0;
        const double t = (std::log(z) - a_) / b_;
        return std::exp(c_ - std::log(z) - 0.5 * t * t);
    }
    case Model::Rayleigh:
        return z / (b_ * b_) * std::exp(-z * z / (2 * b_ * b_));
    case Model::Gamma:
        if (z == 0.0)
            return a_ > 1 ? 0.0 : (a_ == 1 ? b_ : INFINITY);
        return std::exp(c_ + (a_ - 1) * std::log(z) - b_ * z);
    case Model::Weibull:
        if (z == 0.0)
            return a_ > 1 ? 0.0 : (a_ == 1 ? std::exp(c_) : INFINITY);
        return std::exp(c_ + (a_ - 1) * std::log(z) - std::pow(z / b_, a_));
    case Model::GA0: {
        if (z == 0.0)
            return 0.0;
        const double n = n_;
        return std::exp(c_ + (2 * n - 1) * std::log(z) - (n - a_) * std::log(b_ + z * z * n));
    }
    }
    return 0.0;
}

double Density::log(double z) const
{
    require(z >= 0.0, "density evaluated at negative intensity");
    if (z == 0.0)
        return std::log((*this)(0.0));
    switch (model_) {
    case Model::LogNormal: {
        const double t = (std::log(z) - a_) / b_;
        return c_ - std::log(z) - 0.5 * t * t;
    }
    case Model::Rayleigh:
        return std::log(z / (b_ * b_)) - z * z / (2 * b_ * b_);
    case Model::Gamma:
        return c_ + (a_ - 1) * std::log(z) - b_ * z;
    case Model::Weibull:
        return c_ + (a_ - 1) * std::log(z) - std::pow(z / b_, a_);
    case Model::GA0:
        return c_ + (2.0 * n_ - 1) * std::log(z) - (n_ - a_) * std::log(b_ + z * z * n_);
    }
    return -INFINITY;
}

double pdf(const DistParams& p, double z)
{
    return Density(p)(z);
}

std::vector<double> uniform_edges(double lo, double hi, int bins)
{
    require(bins >= 1, "bin count must be positive");
    require(hi > lo, "bin range must be non-empty");
    std::vector<double> edges(bins + 1);
    for (int i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * i / bins;
    edges[bins] = hi;
    return edges;
}

void discretize_into(const DistParams& p, std::span<const double> edges, std::span<double> mass)
{
    require(edges.size() >= 2, "discretize needs at least two bin edges");
    require(mass.size() + 1 == edges.size(), "mass buffer size must equal bin count");
    for (std::size_t i = 1; i < edges.size(); ++i)
        require(edges[i] > edges[i - 1], "bin edges must be strictly increasing");
    const std::size_t bins = mass.size();

    if (p.degenerate) {
        std::fill(mass.begin(), mass.end(), 0.0);
        const auto it = std::upper_bound(edges.begin(), edges.end(), p.center);
        const std::ptrdiff_t bin = std::clamp<std::ptrdiff_t>(it - edges.begin() - 1, 0,
                                                              static_cast<std::ptrdiff_t>(bins) - 1);
        mass[static_cast<std::size_t>(bin)] = 1.0;
    } else {
        const Density density(p);
        double widest = 0.0;
        for (std::size_t j = 0; j < bins; ++j)
            widest = std::max(widest, edges[j + 1] - edges[j]);
        const double sd = std::sqrt(mean_var(p).var);
        int sub = 8;
        if (sd > 0 && std::isfinite(sd) && sd < widest)
            sub = static_cast<int>(std::min(4096.0, std::ceil(8.0 * widest / sd)));

        for (std::size_t j = 0; j < bins; ++j) {
            const double lo = edges[j];
            const double h = (edges[j + 1] - lo) / sub;
            double acc = 0.0;
            for (int k = 0; k < sub; ++k)
                acc += density(lo + (k + 0.5) * h);
            mass[j] = acc * h;
        }
        double total = 0.0;
        for (double m : mass)
            total += m;
        if (!(total > 0.0) || !std::isfinite(total)) {
            // Support entirely outside the edges: fall back to the mean's bin.
            DistParams point = p;
            point.degenerate = true;
            point.center = mean_var(p).mean;
            discretize_into(point, edges, mass);
            return;
        }
    }

    double total = 0.0;
    for (double& m : mass) {
        m = std::max(m, kMassFloor);
        total += m;
    }
    for (double& m : mass)
        m /= total;
}

Pmf discretize(const DistParams& p, std::span<const double> edges)
{
    Pmf out;
    out.edges.assign(edges.begin(), edges.end());
    out.mass.resize(edges.size() >= 1 ? edges.size() - 1 : 0);
    discretize_into(p, edges, out.mass);
    return out;
}

} // namespace msnlac::stats
