#include "msnlac/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msnlac/error.hpp"
#include "msnlac/random.hpp"

namespace msnlac::speckle {

namespace {

// Signed area test: which side of edge (a -> b) the point p lies on.
double edge(double ax, double ay, double bx, double by, double px, double py)
{
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

} // namespace

ShapeHit classify_pixel(int x, int y, int width, int height, const ShapeLayout& L)
{
    const double s = std::min(width, height);
    const double px = x;
    const double py = y;

    {
        const double dx = px - L.ring_cx * width;
        const double dy = py - L.ring_cy * height;
        const double r = std::hypot(dx, dy);
        if (r <= L.ring_outer * s && r >= L.ring_inner * s)
            return {ShapeId::Ring, 0.0};
    }
    {
        const double ax = L.tri_ax * width, ay = L.tri_ay * height;
        const double bx = L.tri_bx * width, by = L.tri_by * height;
        const double cx = L.tri_cx * width, cy = L.tri_cy * height;
        const double e0 = edge(ax, ay, bx, by, px, py);
        const double e1 = edge(bx, by, cx, cy, px, py);
        const double e2 = edge(cx, cy, ax, ay, px, py);
        if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0))
            return {ShapeId::Triangle, 0.0};
    }
    {
        const double dx = px - L.shoe_cx * width;
        const double dy = py - L.shoe_cy * height;
        const double r = std::hypot(dx, dy);
        if (r <= L.shoe_outer * s && r >= L.shoe_inner * s) {
            // Image y points down, so +90 degrees is straight down. The arc
            // starts at the gap's lower-left edge and sweeps over the top.
            const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
            const double arc = 360.0 - L.shoe_gap_deg;
            const double along = std::fmod(deg - (90.0 + 0.5 * L.shoe_gap_deg) + 720.0, 360.0);
            if (along <= arc)
                return {ShapeId::Horseshoe, along / arc};
        }
    }
    return {};
}

Phantom make_shapes(int width, int height, double fg_level, double bg_level, double gradient_span,
                    const ShapeLayout& layout)
{
    require(width >= 64 && height >= 64, "phantom canvas must be at least 64x64");
    require(bg_level > 0.0, "background level must be positive");
    require(fg_level > bg_level, "foreground level must exceed background level");
    require(gradient_span >= 0.0, "gradient span must be non-negative");
    if (std::max(width, height) > 4 * std::min(width, height))
        throw InputError("degenerate phantom geometry: aspect ratio above 4 leaves no room for the shapes");

    std::vector<double> clean(static_cast<std::size_t>(width) * height, bg_level);
    grid::BinaryMask gt(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const ShapeHit hit = classify_pixel(x, y, width, height, layout);
            if (hit.id == ShapeId::None)
                continue;
            const std::size_t i = gt.index(x, y);
            gt[i] = 1;
            clean[i] = fg_level + gradient_span * hit.ramp;
        }
    return {grid::Image(width, height, std::move(clean)), std::move(gt)};
}

grid::Image simulate(const grid::Image& clean, double shape_alpha, std::uint64_t seed)
{
    require(shape_alpha > 0.0, "speckle shape alpha must be positive");
    std::vector<double> out(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double mean = clean[i];
        require(mean > 0.0, "clean image must be strictly positive for multiplicative speckle");
        random::Stream rng(seed, i);
        double v = 0.0;
        // Marsaglia-Tsang can return exactly 0 only through underflow for tiny shapes.
        do {
            v = rng.gamma(shape_alpha) * mean / shape_alpha;
        } while (!(v > 0.0));
        out[i] = v;
    }
    return grid::Image(clean.width(), clean.height(), std::move(out));
}

} // namespace msnlac::speckle
