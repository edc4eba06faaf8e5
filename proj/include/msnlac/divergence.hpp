#pragma once

#include <span>
#include <string_view>

#include "msnlac/stats.hpp"

namespace msnlac::divergence {

enum class Kind { KL, Hellinger, TV, JS, EM };

// Standard JS is 1/2 [KL(P||M) + KL(Q||M)], M = (P+Q)/2. Verbatim drops the 1/2
// and the factor 2 inside the logarithms, which shifts it to
// 2 * standard - 2 ln 2 (never positive).
enum class JsMode { Standard, Verbatim };

std::string_view kind_name(Kind k);
Kind parse_kind(std::string_view name);
std::string_view js_mode_name(JsMode m);
JsMode parse_js_mode(std::string_view name);

// Checks that P and Q share edges and have strictly positive masses.
double divergence(Kind kind, const stats::PmfView& p, const stats::PmfView& q,
                  JsMode js_mode = JsMode::Standard);

// Same formulas on bare mass vectors (no validation).
double kl(std::span<const double> p, std::span<const double> q);
double hellinger(std::span<const double> p, std::span<const double> q);
double total_variation(std::span<const double> p, std::span<const double> q);
double jensen_shannon(std::span<const double> p, std::span<const double> q, JsMode mode);
double earth_mover(std::span<const double> p, std::span<const double> q);
double masses(Kind kind, std::span<const double> p, std::span<const double> q, JsMode js_mode);

} // namespace msnlac::divergence
