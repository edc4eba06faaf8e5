#include "msnlac/divergence.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "msnlac/error.hpp"

namespace msnlac::divergence {

std::string_view kind_name(Kind k)
{
    switch (k) {
    case Kind::KL: return "kl";
    case Kind::Hellinger: return "hellinger";
    case Kind::TV: return "tv";
    case Kind::JS: return "js";
    case Kind::EM: return "em";
    }
    return "?";
}

Kind parse_kind(std::string_view name)
{
    for (Kind k : {Kind::KL, Kind::Hellinger, Kind::TV, Kind::JS, Kind::EM})
        if (kind_name(k) == name)
            return k;
    throw InputError("unknown distance '" + std::string(name) + "' (expected kl|hellinger|tv|js|em)");
}

std::string_view js_mode_name(JsMode m)
{
    return m == JsMode::Standard ? "standard" : "verbatim";
}

JsMode parse_js_mode(std::string_view name)
{
    if (name == "standard")
        return JsMode::Standard;
    if (name == "verbatim")
        return JsMode::Verbatim;
    throw InputError("unknown js mode '" + std::string(name) + "' (expected standard|verbatim)");
}

double kl(std::span<const double> p, std::span<const double> q)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        acc += p[j] * std::log(p[j] / q[j]) + q[j] * std::log(q[j] / p[j]);
    return acc;
}

double hellinger(std::span<const double> p, std::span<const double> q)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = std::sqrt(p[j]) - std::sqrt(q[j]);
        acc += d * d;
    }
    return std::sqrt(acc) / std::numbers::sqrt2;
}

double total_variation(std::span<const double> p, std::span<const double> q)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        acc += std::abs(p[j] - q[j]);
    return 0.5 * acc;
}

double jensen_shannon(std::span<const double> p, std::span<const double> q, JsMode mode)
{
    double acc = 0.0;
    if (mode == JsMode::Standard) {
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double s = p[j] + q[j];
            acc += p[j] * std::log(2.0 * p[j] / s) + q[j] * std::log(2.0 * q[j] / s);
        }
        return 0.5 * acc;
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double s = p[j] + q[j];
        acc += p[j] * std::log(p[j] / s) + q[j] * std::log(q[j] / s);
    }
    return acc;
}

double earth_mover(std::span<const double> p, std::span<const double> q)
{
    double cp = 0.0;
    double cq = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        cp += p[j];
        cq += q[j];
        acc += std::abs(cp - cq);
    }
    return acc;
}

double masses(Kind kind, std::span<const double> p, std::span<const double> q, JsMode js_mode)
{
    switch (kind) {
    case Kind::KL: return kl(p, q);
    case Kind::Hellinger: return hellinger(p, q);
    case Kind::TV: return total_variation(p, q);
    case Kind::JS: return jensen_shannon(p, q, js_mode);
    case Kind::EM: return earth_mover(p, q);
    }
    return 0.0;
}

double divergence(Kind kind, const stats::PmfView& p, const stats::PmfView& q, JsMode js_mode)
{
    if (p.edges.size() != q.edges.size() || p.mass.size() != q.mass.size() ||
        p.mass.size() + 1 != p.edges.size())
        throw InputError("divergence: PMFs have mismatched bins");
    if (p.edges.data() != q.edges.data())
        for (std::size_t i = 0; i < p.edges.size(); ++i)
            if (p.edges[i] != q.edges[i])
                throw InputError("divergence: PMFs have mismatched bin edges");
    for (std::size_t j = 0; j < p.mass.size(); ++j)
        if (!(p.mass[j] > 0.0) || !(q.mass[j] > 0.0))
            throw InputError("divergence: PMF masses must be strictly positive");
    return masses(kind, p.mass, q.mass, js_mode);
}

} // namespace msnlac::divergence
