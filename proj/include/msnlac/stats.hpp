#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace msnlac::stats {

struct Moments {
    double mean = 0.0;   // E[z]
    double var = 0.0;    // population variance
    double m_half = 0.0; // E[sqrt(z)]
    std::size_t count = 0;
};

enum class Model { LogNormal, Rayleigh, Gamma, Weibull, GA0 };

struct LogNormalParams {
    double mu = 0.0;
    double sigma = 1.0;
};
struct RayleighParams {
    double sigma = 1.0;
};
struct GammaParams {
    double alpha = 1.0; // shape
    double beta = 1.0;  // rate
};
struct WeibullParams {
    double beta = 1.0; // shape
    double eta = 1.0;  // scale
};
// Amplitude G_A^0 with `looks` looks; alpha < -1 (roughness), gamma > 0 (scale).
struct GA0Params {
    double alpha = -3.0;
    double gamma = 1.0;
    int looks = 1;
};

using ModelParams = std::variant<LogNormalParams, RayleighParams, GammaParams, WeibullParams, GA0Params>;

struct DistParams {
    ModelParams params;
    // Set for constant (zero-variance) patches; discretize() then places all
    // mass in the bin containing `center`.
    bool degenerate = false;
    double center = 0.0;

    Model model() const { return static_cast<Model>(params.index()); }
};

// Probability mass function over shared bin edges (edges.size() == mass.size() + 1).
struct PmfView {
    std::span<const double> edges;
    std::span<const double> mass;
};

struct Pmf {
    std::vector<double> edges;
    std::vector<double> mass;

    PmfView view() const { return {edges, mass}; }
};

struct RootResult {
    double value = 0.0;
    double residual = 0.0;
    bool converged = false;
    // The target lies outside the bracket's range and the value was pinned to
    // the bracket end that it approaches.
    bool saturated = false;
};

inline constexpr double kMassFloor = 1e-12;
inline constexpr double kGammaShapeCap = 1e6;
inline constexpr double kWeibullLo = 0.05;
inline constexpr double kWeibullHi = 50.0;
inline constexpr double kGA0Lo = -25.0;
inline constexpr double kGA0Hi = -1.05;

std::string_view model_name(Model m);
Model parse_model(std::string_view name);

Moments moments(std::span<const double> samples);

// Throws InputError on invalid parameters.
void validate(const DistParams& p);

// Moment-based fit per model. Zero-variance input yields a degenerate-flagged
// result. Throws NumericalError when a root finder cannot bracket the target.
DistParams estimate(Model model, const Moments& m, int looks = 1);

// Solves Var/E^2 = Gamma(1+2/b) / Gamma(1+1/b)^2 - 1 for the Weibull shape b by
// bisection on [0.05, 50]. Targets below the bracket's range saturate at 50.
RootResult solve_weibull_shape(double cv2);
double weibull_cv2(double beta);

// Root of Gamma(-a-1/4)^2 / (Gamma(-a) Gamma(-a-1/2))
//          - m_half^2/m1 * Gamma(n) Gamma(n+1/2) / Gamma(n+1/4)^2
// over a in [-25, -1.05].
RootResult solve_ga0_alpha(double m_half, double m1, int looks);
double ga0_alpha_residual(double alpha, double m_half, double m1, int looks);
double ga0_gamma(double alpha, double mean, int looks);

// Mean and variance implied by the parameters.
struct MeanVar {
    double mean;
    double var;
};
MeanVar mean_var(const DistParams& p);

// Density evaluator with the normalising constants hoisted out.
class Density {
public:
    explicit Density(const DistParams& p);
    double operator()(double z) const;
    // log density; -inf where the density vanishes.
    double log(double z) const;

private:
    Model model_;
    double a_ = 0, b_ = 0, c_ = 0, d_ = 0;
    int n_ = 1;
};

double pdf(const DistParams& p, double z);

std::vector<double> uniform_edges(double lo, double hi, int bins);

// Bin masses by the midpoint rule (8 sub-samples per bin, refined for densities
// narrower than a bin), floored at kMassFloor and renormalised.
Pmf discretize(const DistParams& p, std::span<const double> edges);
void discretize_into(const DistParams& p, std::span<const double> edges, std::span<double> mass);

} // namespace msnlac::stats
