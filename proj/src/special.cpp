#include "msnlac/special.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace msnlac::special {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeff = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

// log Gamma(x) for x >= 1/2.
double lanczos_log(double x)
{
    x -= 1.0;
    double a = kLanczosCoeff[0];
    const double t = x + kLanczosG + 0.5;
    for (std::size_t i = 1; i < kLanczosCoeff.size(); ++i)
        a += kLanczosCoeff[i] / (x + static_cast<double>(i));
    return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

} // namespace

double lgamma(double x)
{
    if (x < 0.5) {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        const double s = std::sin(std::numbers::pi * x);
        return std::log(std::numbers::pi / std::abs(s)) - lanczos_log(1.0 - x);
    }
    return lanczos_log(x);
}

double tgamma(double x)
{
    if (x < 0.5) {
        const double s = std::sin(std::numbers::pi * x);
        return std::numbers::pi / (s * std::exp(lanczos_log(1.0 - x)));
    }
    return std::exp(lanczos_log(x));
}

} // namespace msnlac::special
