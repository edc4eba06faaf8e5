#include "msnlac/levelset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <thread>

#include "msnlac/error.hpp"
#include "msnlac/random.hpp"
#include "msnlac/stats.hpp"

namespace msnlac::levelset {

using grid::mirror_index;

namespace {

// Runs fn(y) for every row, splitting rows into contiguous blocks.
void for_rows(int height, int threads, const std::function<void(int)>& fn)
{
    const int n = std::clamp(threads, 1, height);
    if (n == 1) {
        for (int y = 0; y < height; ++y)
            fn(y);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int k = 0; k < n; ++k) {
        const int y0 = height * k / n;
        const int y1 = height * (k + 1) / n;
        pool.emplace_back([&fn, y0, y1] {
            for (int y = y0; y < y1; ++y)
                fn(y);
        });
    }
    for (auto& t : pool)
        t.join();
}

void require_shape(const Field& a, int width, int height, const char* what)
{
    if (a.width() != width || a.height() != height)
        throw DimensionMismatch(std::string(what) + ": level set is " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " but expected " + std::to_string(width) + "x" +
                                std::to_string(height));
}

struct Gradient {
    double gx;
    double gy;
};

Gradient central(const Field& phi, int x, int y)
{
    const int w = phi.width();
    const int h = phi.height();
    return {0.5 * (phi(mirror_index(x + 1, w), y) - phi(mirror_index(x - 1, w), y)),
            0.5 * (phi(x, mirror_index(y + 1, h)) - phi(x, mirror_index(y - 1, h)))};
}

double weighted_reg(const LevelSet& ls, const Field* weight)
{
    const Field& phi = ls.phi;
    double total = 0.0;
    for (int y = 0; y < phi.height(); ++y) {
        double row = 0.0;
        for (int x = 0; x < phi.width(); ++x) {
            const auto [gx, gy] = central(phi, x, y);
            const double norm = std::sqrt(gx * gx + gy * gy + kGradEta * kGradEta);
            const double wgt = weight ? (*weight)(x, y) : 1.0;
            row += wgt * heaviside_prime(phi(x, y), ls.epsilon) * norm;
        }
        total += row;
    }
    return total;
}

// d/dphi_k of sum_p w_p H'(phi_p) N_p with N_p = sqrt(gx_p^2 + gy_p^2 + eta^2).
// The chain rule through the central differences scatters a_p = w_p H'_p grad_p / N_p
// to the mirrored neighbours of p with weights +-1/2.
Field weighted_reg_grad(const LevelSet& ls, const Field* weight)
{
    const Field& phi = ls.phi;
    const int w = phi.width();
    const int h = phi.height();
    Field out(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto [gx, gy] = central(phi, x, y);
            const double norm = std::sqrt(gx * gx + gy * gy + kGradEta * kGradEta);
            const double wgt = weight ? (*weight)(x, y) : 1.0;
            const double hp = heaviside_prime(phi(x, y), ls.epsilon);
            out(x, y) += wgt * heaviside_second(phi(x, y), ls.epsilon) * norm;
            const double ax = 0.5 * wgt * hp * gx / norm;
            const double ay = 0.5 * wgt * hp * gy / norm;
            out(mirror_index(x + 1, w), y) += ax;
            out(mirror_index(x - 1, w), y) -= ax;
            out(x, mirror_index(y + 1, h)) += ay;
            out(x, mirror_index(y - 1, h)) -= ay;
        }
    return out;
}

using Evaluator = std::function<EnergyTerms(const LevelSet&, Field*)>;
using StopCheck = std::function<bool(const LevelSet&)>;

struct DescentOptions {
    double xi;
    bool auto_xi;
    int max_xi_halvings;
    double omega;
    int max_iters;
    double phi_clamp;
};

struct DescentState {
    LevelSet phi;
    Field grad;
    EnergyTerms terms;
    eval::RunTrace trace;
    int updates = 0;
    bool converged = false;
    bool stopped = false;
    // Observer calls held back while a trial step size is being probed.
    std::vector<std::pair<int, LevelSet>> pending;
};

class Descent {
public:
    Descent(Evaluator evaluate, const DescentOptions& opt, const grid::BinaryMask* gt, StopCheck stop,
            IterationCallback on_iter)
        : evaluate_(std::move(evaluate)), opt_(opt), gt_(gt), stop_(std::move(stop)), on_iter_(std::move(on_iter)),
          start_(std::chrono::steady_clock::now())
    {
    }

    RunResult run(const LevelSet& phi0)
    {
        DescentState init;
        init.phi = phi0;
        init.grad = Field(phi0.phi.width(), phi0.phi.height(), 0.0);
        init.terms = evaluate_(init.phi, &init.grad);
        check_finite(init.terms, 0);
        record(init);
        if (stop_ && stop_(init.phi))
            init.stopped = true;

        double xi = opt_.xi;
        DescentState state;
        if (!init.stopped && opt_.auto_xi) {
            const int probe = std::min(3, opt_.max_iters);
            defer_ = true;
            for (int halvings = 0;; ++halvings) {
                state = init;
                advance(state, xi, probe);
                if (monotone(state.trace) || halvings >= opt_.max_xi_halvings)
                    break;
                xi *= 0.5;
            }
            defer_ = false;
            for (const auto& [iter, ls] : state.pending)
                on_iter_(iter, ls);
            state.pending.clear();
        } else {
            state = std::move(init);
        }
        advance(state, xi, opt_.max_iters);

        RunResult out;
        out.phi = std::move(state.phi);
        out.trace = std::move(state.trace);
        out.xi = xi;
        out.updates = state.updates;
        out.converged = state.converged;
        out.collapsed = state.stopped;
        return out;
    }

private:
    void advance(DescentState& s, double xi, int limit)
    {
        while (!s.converged && !s.stopped && s.updates < limit) {
            Field& phi = s.phi.phi;
            for (std::size_t i = 0; i < phi.size(); ++i)
                phi[i] = std::clamp(phi[i] - xi * s.grad[i], -opt_.phi_clamp, opt_.phi_clamp);
            const double previous = s.terms.total;
            s.terms = evaluate_(s.phi, &s.grad);
            ++s.updates;
            check_finite(s.terms, s.updates);
            record(s);
            if (std::abs(previous - s.terms.total) < opt_.omega)
                s.converged = true;
            else if (stop_ && stop_(s.phi))
                s.stopped = true;
        }
    }

    void record(DescentState& s) const
    {
        eval::TraceRecord r;
        r.iter = s.updates;
        r.energy = s.terms.total;
        r.data = s.terms.data;
        r.reg = s.terms.reg;
        if (gt_)
            r.rfe = eval::rfe(to_mask(s.phi), *gt_);
        r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
        s.trace.records.push_back(r);
        if (!on_iter_)
            return;
        if (defer_)
            s.pending.emplace_back(s.updates, s.phi);
        else
            on_iter_(s.updates, s.phi);
    }

    static void check_finite(const EnergyTerms& t, int iter)
    {
        if (!std::isfinite(t.total))
            throw NumericalError("energy is not finite at iteration " + std::to_string(iter) +
                                 " (step size too large?)");
    }

    static bool monotone(const eval::RunTrace& trace)
    {
        for (std::size_t i = 1; i < trace.records.size(); ++i)
            if (trace.records[i].energy > trace.records[i - 1].energy)
                return false;
        return true;
    }

    Evaluator evaluate_;
    DescentOptions opt_;
    const grid::BinaryMask* gt_;
    StopCheck stop_;
    IterationCallback on_iter_;
    bool defer_ = false;
    std::chrono::steady_clock::time_point start_;
};

void require_level_set(const LevelSet& ls)
{
    require(ls.epsilon > 0.0, "Heaviside epsilon must be positive");
    for (double v : ls.phi.data())
        require(std::isfinite(v), "level set contains non-finite values");
}

} // namespace

double heaviside(double u, double epsilon)
{
    return 0.5 + std::atan(u / epsilon) / std::numbers::pi;
}

double heaviside_prime(double u, double epsilon)
{
    return epsilon / (std::numbers::pi * (epsilon * epsilon + u * u));
}

double heaviside_second(double u, double epsilon)
{
    const double q = epsilon * epsilon + u * u;
    return -2.0 * epsilon * u / (std::numbers::pi * q * q);
}

void validate(const NlacParams& p)
{
    require(p.lambda >= 0.0, "lambda must be non-negative");
    require(p.xi > 0.0, "xi must be positive");
    require(p.omega > 0.0, "omega must be positive");
    require(p.max_iters >= 1, "max_iters must be at least 1");
    require(p.epsilon > 0.0, "epsilon must be positive");
    require(p.phi_clamp > 0.0, "phi clamp must be positive");
    require(p.max_xi_halvings >= 0, "max_xi_halvings must be non-negative");
    require(p.threads >= 1, "threads must be at least 1");
}

NonLocalOperator::NonLocalOperator(const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                                   divergence::Kind kind, divergence::JsMode js_mode, int threads,
                                   std::size_t cache_limit_bytes)
    : field_(field), window_(window),
      distance_(std::make_unique<similarity::PairDistance>(field, kind, js_mode)), threads_(std::max(1, threads))
{
    const std::size_t side = static_cast<std::size_t>(window.side());
    const std::size_t per_pixel = side * side;
    if (field.pixel_count() * per_pixel * sizeof(float) > cache_limit_bytes)
        return;

    cache_.assign(field.pixel_count() * per_pixel, 0.0f);
    const int w = field.width();
    const int h = field.height();
    const int r = window.radius;
    // Each unordered pair is evaluated once and stored in both directions;
    // every slot has exactly one writer, so rows can be filled concurrently.
    for_rows(h, threads_, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t s = static_cast<std::size_t>(y) * w + x;
            for (int dy = 0; dy <= r; ++dy) {
                const int ty = y + dy;
                if (ty >= h)
                    break;
                for (int dx = (dy == 0 ? 0 : -r); dx <= r; ++dx) {
                    const int tx = x + dx;
                    if (tx < 0 || tx >= w)
                        continue;
                    const std::size_t t = static_cast<std::size_t>(ty) * w + tx;
                    const auto v = static_cast<float>(window.weight(dx, dy) * (*distance_)(s, t));
                    cache_[s * per_pixel + (dy + r) * side + (dx + r)] = v;
                    cache_[t * per_pixel + (r - dy) * side + (r - dx)] = v;
                }
            }
        }
    });
}

NonLocalOperator::~NonLocalOperator() = default;

double NonLocalOperator::weighted_distance(std::size_t s, int dx, int dy) const
{
    const int w = field_.width();
    const std::size_t t = s + static_cast<std::ptrdiff_t>(dy) * w + dx;
    return window_.weight(dx, dy) * (*distance_)(s, t);
}

double NonLocalOperator::evaluate(const LevelSet& ls, Field* grad, TieRule ties, double clamp) const
{
    const int w = field_.width();
    const int h = field_.height();
    require_shape(ls.phi, w, h, "non-local energy");
    if (grad)
        require_shape(*grad, w, h, "non-local gradient");

    std::vector<double> heav(ls.phi.size());
    for (std::size_t i = 0; i < heav.size(); ++i)
        heav[i] = heaviside(ls.phi[i], ls.epsilon);

    const int r = window_.radius;
    const std::size_t side = static_cast<std::size_t>(window_.side());
    const std::size_t per_pixel = side * side;
    std::vector<double> row_energy(h, 0.0);

    for_rows(h, threads_, [&](int y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            const std::size_t s = static_cast<std::size_t>(y) * w + x;
            const double hs = heav[s];
            double e = 0.0;
            double below = 0.0; // weighted distance to pixels with smaller H
            double above = 0.0;
            double tied = 0.0;
            const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
            const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            for (int ty = y0; ty <= y1; ++ty) {
                const int dy = ty - y;
                for (int tx = x0; tx <= x1; ++tx) {
                    const int dx = tx - x;
                    const double c = cache_.empty()
                                         ? weighted_distance(s, dx, dy)
                                         : cache_[s * per_pixel + (dy + r) * side + (dx + r)];
                    const double diff = hs - heav[static_cast<std::size_t>(ty) * w + tx];
                    e += (1.0 - std::abs(diff)) * c;
                    if (diff > 0.0)
                        below += c;
                    else if (diff < 0.0)
                        above += c;
                    else if (dx != 0 || dy != 0)
                        tied += c;
                }
            }
            row += e;
            if (!grad)
                continue;
            const double scale = 2.0 * heaviside_prime(ls.phi[s], ls.epsilon);
            double g = scale * (above - below);
            if (ties == TieRule::Steepest && tied > 0.0) {
                // Energy change per unit step up / down.
                const double up = scale * (above - below - tied);
                const double down = scale * (below - above - tied);
                const bool can_up = ls.phi[s] < clamp;
                const bool can_down = ls.phi[s] > -clamp;
                g = 0.0;
                if (can_up && up < 0.0 && (!can_down || up < down))
                    g = up;
                else if (can_down && down < 0.0 && (!can_up || down < up))
                    g = -down;
            }
            (*grad)[s] = g;
        }
        row_energy[y] = row;
    });

    double total = 0.0;
    for (double v : row_energy)
        total += v;
    return total;
}

EnergyTerms energy(const LevelSet& phi, const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                   const NlacParams& params)
{
    validate(params);
    require_level_set(phi);
    const NonLocalOperator op(field, window, params.distance, params.js_mode, params.threads, 0);
    EnergyTerms t;
    t.data = op.evaluate(phi, nullptr);
    t.reg = reg_energy(phi);
    t.total = t.data + params.lambda * t.reg;
    return t;
}

Field data_gradient(const LevelSet& phi, const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                    const NlacParams& params)
{
    validate(params);
    require_level_set(phi);
    const NonLocalOperator op(field, window, params.distance, params.js_mode, params.threads, 0);
    Field g(phi.phi.width(), phi.phi.height(), 0.0);
    op.evaluate(phi, &g);
    return g;
}

double reg_energy(const LevelSet& phi)
{
    return weighted_reg(phi, nullptr);
}

Field reg_gradient(const LevelSet& phi)
{
    return weighted_reg_grad(phi, nullptr);
}

double weighted_reg_energy(const LevelSet& phi, const Field& weight)
{
    require_shape(weight, phi.phi.width(), phi.phi.height(), "weighted regulariser");
    return weighted_reg(phi, &weight);
}

Field weighted_reg_gradient(const LevelSet& phi, const Field& weight)
{
    require_shape(weight, phi.phi.width(), phi.phi.height(), "weighted regulariser");
    return weighted_reg_grad(phi, &weight);
}

Field curvature(const Field& phi)
{
    const int w = phi.width();
    const int h = phi.height();
    Field nx(w, h), ny(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto [gx, gy] = central(phi, x, y);
            const double norm = std::sqrt(gx * gx + gy * gy + kGradEta * kGradEta);
            nx(x, y) = gx / norm;
            ny(x, y) = gy / norm;
        }
    Field out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double div = 0.5 * (nx(mirror_index(x + 1, w), y) - nx(mirror_index(x - 1, w), y)) +
                               0.5 * (ny(x, mirror_index(y + 1, h)) - ny(x, mirror_index(y - 1, h)));
            out(x, y) = -div;
        }
    return out;
}

grid::BinaryMask to_mask(const LevelSet& phi)
{
    grid::BinaryMask m(phi.phi.width(), phi.phi.height());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = phi.phi[i] > 0.0 ? 1 : 0;
    return m;
}

RunResult nlac_run(const grid::Image& img, const LevelSet& phi0, const similarity::PatchPmfField& field,
                   const similarity::NlWindow& window, const NlacParams& params, const grid::BinaryMask* gt,
                   const IterationCallback& on_iter)
{
    validate(params);
    require_level_set(phi0);
    require_shape(phi0.phi, img.width(), img.height(), "nlac_run");
    require_shape(phi0.phi, field.width(), field.height(), "nlac_run field");
    if (gt && !gt->same_shape(img.pixels()))
        throw DimensionMismatch("nlac_run: ground truth size differs from the image");

    const NonLocalOperator op(field, window, params.distance, params.js_mode, params.threads,
                              params.cache_limit_bytes);
    const double lambda = params.lambda;
    Evaluator evaluate = [&](const LevelSet& ls, Field* grad) {
        EnergyTerms t;
        t.data = op.evaluate(ls, grad, params.ties, params.phi_clamp);
        t.reg = reg_energy(ls);
        t.total = t.data + lambda * t.reg;
        if (grad && lambda != 0.0) {
            const Field gr = reg_gradient(ls);
            for (std::size_t i = 0; i < grad->size(); ++i)
                (*grad)[i] += lambda * gr[i];
        }
        return t;
    };
    const DescentOptions opt{params.xi,    params.auto_xi,   params.max_xi_halvings,
                             params.omega, params.max_iters, params.phi_clamp};
    LevelSet start = phi0;
    start.epsilon = params.epsilon;
    return Descent(std::move(evaluate), opt, gt, nullptr, on_iter).run(start);
}

Field edge_indicator(const grid::Image& img, double sigma)
{
    require(sigma > 0.0, "edge indicator sigma must be positive");
    const Field smooth = grid::gaussian_smooth(img.pixels(), sigma);
    Field g(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto [gx, gy] = central(smooth, x, y);
            g(x, y) = 1.0 / (1.0 + gx * gx + gy * gy);
        }
    return g;
}

RunResult classic_ac_run(const grid::Image& img, const LevelSet& phi0, const ClassicParams& params,
                         const grid::BinaryMask* gt)
{
    require(params.lambda >= 0.0, "lambda must be non-negative");
    require(params.xi > 0.0, "xi must be positive");
    require(params.omega > 0.0, "omega must be positive");
    require(params.max_iters >= 1, "max_iters must be at least 1");
    require(params.epsilon > 0.0, "epsilon must be positive");
    require(params.min_region >= 2, "min_region must be at least 2");
    require_level_set(phi0);
    require_shape(phi0.phi, img.width(), img.height(), "classic_ac_run");
    if (gt && !gt->same_shape(img.pixels()))
        throw DimensionMismatch("classic_ac_run: ground truth size differs from the image");

    const Field g = edge_indicator(img, params.edge_sigma);
    const std::size_t n = img.size();

    const auto split = [&](const LevelSet& ls, std::vector<double>& in, std::vector<double>& out) {
        in.clear();
        out.clear();
        for (std::size_t i = 0; i < n; ++i)
            (ls.phi[i] > 0.0 ? in : out).push_back(img[i]);
    };
    StopCheck collapsed = [&](const LevelSet& ls) {
        std::size_t inside = 0;
        for (std::size_t i = 0; i < n; ++i)
            inside += ls.phi[i] > 0.0 ? 1 : 0;
        return inside < params.min_region || n - inside < params.min_region;
    };

    std::vector<double> in, out;
    std::vector<double> llr(n);
    Evaluator evaluate = [&](const LevelSet& ls, Field* grad) {
        EnergyTerms t;
        t.reg = weighted_reg(ls, &g);
        split(ls, in, out);
        if (in.size() < 2 || out.size() < 2) {
            // Likelihoods are undefined for an empty region; the stop check ends the run.
            t.total = params.lambda * t.reg;
            if (grad) {
                *grad = weighted_reg_grad(ls, &g);
                for (double& v : grad->data())
                    v *= params.lambda;
            }
            return t;
        }
        const stats::Density p_in(stats::estimate(stats::Model::Gamma, stats::moments(in)));
        const stats::Density p_out(stats::estimate(stats::Model::Gamma, stats::moments(out)));
        double data = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double li = p_in.log(img[i]);
            const double lo = p_out.log(img[i]);
            const double hv = heaviside(ls.phi[i], ls.epsilon);
            data -= hv * li + (1.0 - hv) * lo;
            llr[i] = li - lo;
        }
        t.data = data;
        t.total = data + params.lambda * t.reg;
        if (grad) {
            const Field gr = weighted_reg_grad(ls, &g);
            for (std::size_t i = 0; i < n; ++i)
                (*grad)[i] = -heaviside_prime(ls.phi[i], ls.epsilon) * llr[i] + params.lambda * gr[i];
        }
        return t;
    };

    const DescentOptions opt{params.xi,    params.auto_xi,   params.max_xi_halvings,
                             params.omega, params.max_iters, params.phi_clamp};
    LevelSet start = phi0;
    start.epsilon = params.epsilon;
    return Descent(std::move(evaluate), opt, gt, std::move(collapsed), nullptr).run(start);
}

LevelSet random_init(int width, int height, std::uint64_t seed, double epsilon, double clamp)
{
    require(width >= 8 && height >= 8, "random_init needs dimensions of at least 8");
    require(epsilon > 0.0 && clamp > 0.0, "random_init: epsilon and clamp must be positive");
    random::Stream rng(seed, 0);
    const double s = std::min(width, height);
    LevelSet ls{Field(width, height), epsilon};

    for (;;) {
        const int count = 4 + static_cast<int>(rng.next_u32() % 5);
        struct Circle {
            double cx, cy, r;
        };
        std::vector<Circle> circles;
        for (int k = 0; k < count; ++k) {
            // Integer centres put at least one pixel strictly inside each circle.
            const double cx = std::floor(rng.uniform() * width);
            const double cy = std::floor(rng.uniform() * height);
            const double r = s / 12.0 + rng.uniform() * (s / 6.0 - s / 12.0);
            circles.push_back({cx, cy, r});
        }
        bool negative = false;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double v = -INFINITY;
                for (const Circle& c : circles)
                    v = std::max(v, c.r - std::hypot(x - c.cx, y - c.cy));
                ls.phi(x, y) = std::clamp(v, -clamp, clamp);
                negative = negative || v < 0.0;
            }
        if (negative)
            return ls;
    }
}

} // namespace msnlac::levelset
