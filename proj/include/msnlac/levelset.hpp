#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "msnlac/divergence.hpp"
#include "msnlac/eval.hpp"
#include "msnlac/grid.hpp"
#include "msnlac/similarity.hpp"

namespace msnlac::levelset {

using grid::Field;

// Region R = {phi > 0}; the zero level set is the contour.
struct LevelSet {
    Field phi;
    double epsilon = 1.0;
};

// Regularised Heaviside H(u) = 1/2 + atan(u/eps)/pi and its derivatives.
double heaviside(double u, double epsilon);
double heaviside_prime(double u, double epsilon);
double heaviside_second(double u, double epsilon);

// Gradient-norm regulariser: |grad phi| is evaluated as sqrt(|grad phi|^2 + eta^2).
inline constexpr double kGradEta = 1e-8;

// Derivative of 1 - |u - v| at u == v. `Zero` takes sign(0) = 0, under which any
// labelling saturated at the clamp is stationary. `Steepest` uses the one-sided
// derivative of the feasible direction that lowers the energy the most; without
// exact ties both rules give the same gradient.
enum class TieRule { Zero, Steepest };

struct NlacParams {
    double lambda = 20.0;
    double xi = 0.1;     // fixed step, or the starting step when auto_xi is set
    bool auto_xi = true; // halve xi until the first three steps do not raise the energy
    int max_xi_halvings = 20;
    double omega = 1e-3; // stop once |E(i) - E(i+1)| < omega
    int max_iters = 200;
    double epsilon = 1.0;
    double phi_clamp = 10.0; // phi is clamped to [-phi_clamp, phi_clamp] after every update
    divergence::Kind distance = divergence::Kind::KL;
    divergence::JsMode js_mode = divergence::JsMode::Standard;
    TieRule ties = TieRule::Steepest;
    int threads = 1;
    // Weighted pair distances are cached per level when they fit in this budget;
    // otherwise they are recomputed on every pass.
    std::size_t cache_limit_bytes = std::size_t{1} << 30;
};

void validate(const NlacParams& p);

struct EnergyTerms {
    double total = 0.0;
    double data = 0.0;
    double reg = 0.0;
};

// Data term of the non-local energy over ordered pixel pairs inside the window:
//   E_D = sum_s sum_t (1 - |H(phi_s) - H(phi_t)|) G(s - t) d(p_s, p_t)
// and its gradient 2 H'(phi_s) sum_t -sign(H_s - H_t) G(s - t) d(p_s, p_t).
class NonLocalOperator {
public:
    NonLocalOperator(const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                     divergence::Kind kind, divergence::JsMode js_mode, int threads = 1,
                     std::size_t cache_limit_bytes = std::size_t{1} << 30);
    ~NonLocalOperator();
    NonLocalOperator(const NonLocalOperator&) = delete;
    NonLocalOperator& operator=(const NonLocalOperator&) = delete;

    // Returns E_D. When `grad` is non-null it receives dE_D/dphi; pixels at
    // +-clamp only consider directions back into the box.
    double evaluate(const LevelSet& phi, Field* grad, TieRule ties = TieRule::Zero,
                    double clamp = INFINITY) const;
    bool cached() const { return !cache_.empty(); }

private:
    double weighted_distance(std::size_t s, int dx, int dy) const;

    const similarity::PatchPmfField& field_;
    const similarity::NlWindow& window_;
    std::unique_ptr<similarity::PairDistance> distance_;
    int threads_;
    std::vector<float> cache_; // per pixel, (2r+1)^2 values G * d
};

EnergyTerms energy(const LevelSet& phi, const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                   const NlacParams& params);
Field data_gradient(const LevelSet& phi, const similarity::PatchPmfField& field, const similarity::NlWindow& window,
                    const NlacParams& params);

// E_R = sum_s H'(phi_s) |grad phi_s| with central differences (mirror borders).
double reg_energy(const LevelSet& phi);
// Exact gradient of reg_energy. In the continuum limit this is
// -div(grad phi / |grad phi|) H'(phi).
Field reg_gradient(const LevelSet& phi);
// Same, with a per-pixel weight g inside the sum (classic edge-stopping term).
double weighted_reg_energy(const LevelSet& phi, const Field& weight);
Field weighted_reg_gradient(const LevelSet& phi, const Field& weight);

// -div(grad phi / |grad phi|) by central differences; +1/r for phi = r0 - r.
Field curvature(const Field& phi);

grid::BinaryMask to_mask(const LevelSet& phi);

struct RunResult {
    LevelSet phi;
    eval::RunTrace trace;
    double xi = 0.0;
    int updates = 0;
    bool converged = false; // energy change fell below omega
    bool collapsed = false; // classic only: a region shrank below 16 pixels
};

// Called with (iteration, phi) for iteration 0 and every accepted update.
using IterationCallback = std::function<void(int, const LevelSet&)>;

RunResult nlac_run(const grid::Image& img, const LevelSet& phi0, const similarity::PatchPmfField& field,
                   const similarity::NlWindow& window, const NlacParams& params,
                   const grid::BinaryMask* gt = nullptr, const IterationCallback& on_iter = nullptr);

struct ClassicParams {
    double lambda = 0.2;
    double xi = 0.1;
    bool auto_xi = true;
    int max_xi_halvings = 20;
    double omega = 1e-3;
    int max_iters = 200;
    double epsilon = 1.0;
    double phi_clamp = 10.0;
    double edge_sigma = 1.0; // scale of the Gaussian in g = 1 / (1 + |G * grad f|^2)
    std::size_t min_region = 16;
};

// g(s) = 1 / (1 + |grad (G_sigma * f)|^2).
Field edge_indicator(const grid::Image& img, double sigma);

// Two-region active contour with gamma likelihoods re-fitted every iteration
// and a g-weighted length term.
RunResult classic_ac_run(const grid::Image& img, const LevelSet& phi0, const ClassicParams& params,
                         const grid::BinaryMask* gt = nullptr);

// Signed distance to a union of 4-8 seeded circles, clamped to [-clamp, clamp].
LevelSet random_init(int width, int height, std::uint64_t seed, double epsilon = 1.0, double clamp = 10.0);

} // namespace msnlac::levelset
