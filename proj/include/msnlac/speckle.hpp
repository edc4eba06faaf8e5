#pragma once

#include <cstdint>

#include "msnlac/grid.hpp"

namespace msnlac::speckle {

struct Phantom {
    grid::Image clean;      // piecewise-constant reflectivity, strictly positive
    grid::BinaryMask gt_mask;
};

// Shape layout in fractions of the canvas. Radii scale with min(width, height).
struct ShapeLayout {
    double ring_cx = 0.27, ring_cy = 0.27, ring_outer = 0.23, ring_inner = 0.07;
    double tri_ax = 0.78, tri_ay = 0.05;
    double tri_bx = 0.97, tri_by = 0.44;
    double tri_cx = 0.59, tri_cy = 0.44;
    double shoe_cx = 0.50, shoe_cy = 0.74, shoe_outer = 0.25, shoe_inner = 0.09;
    double shoe_gap_deg = 100.0; // opening centred on the downward direction
};

// Which shape a pixel centre belongs to; `ramp` is the arc position in [0, 1]
// along the horseshoe (0 elsewhere).
enum class ShapeId { None, Ring, Triangle, Horseshoe };
struct ShapeHit {
    ShapeId id = ShapeId::None;
    double ramp = 0.0;
};
ShapeHit classify_pixel(int x, int y, int width, int height, const ShapeLayout& layout = {});

// Annulus, triangle and horseshoe on a constant background. The horseshoe's
// reflectivity ramps linearly from fg_level to fg_level + gradient_span along
// its arc.
Phantom make_shapes(int width, int height, double fg_level, double bg_level, double gradient_span,
                    const ShapeLayout& layout = {});

// Multiplicative gamma speckle: f(s) ~ Gamma(shape = alpha, scale = clean(s) / alpha),
// so E[f(s)] = clean(s). Pixel i draws from Philox stream (seed, i).
grid::Image simulate(const grid::Image& clean, double shape_alpha, std::uint64_t seed);

} // namespace msnlac::speckle
