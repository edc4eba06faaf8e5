#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msnlac/grid.hpp"

namespace msnlac::eval {

using grid::BinaryMask;

// Region fitting error: (|R u G| - |R n G|) / |G|.
double rfe(const BinaryMask& mask, const BinaryMask& gt);

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = grid::Raster<Rgb>;

// Mask pixels with a 4-neighbour outside the mask or on the image border.
BinaryMask boundary(const BinaryMask& mask);

// Grey rendering of `img` stretched to its 0.5%-99.5% percentile range, with
// the mask boundary painted in `color`.
RgbImage overlay(const grid::Image& img, const BinaryMask& mask, Rgb color = {255, 0, 0});
void save_ppm(const RgbImage& rgb, const std::filesystem::path& path);

struct TraceRecord {
    int iter = 0;
    double energy = 0.0;
    double data = 0.0;
    double reg = 0.0;
    std::optional<double> rfe;
    double ms = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;
};

inline constexpr const char* kTraceHeader = "iter,energy,data,reg,rfe,ms";

std::string trace_csv(const RunTrace& trace);
void write_trace(const RunTrace& trace, const std::filesystem::path& path);
// `<stem>_L<l><ext>` next to `path`, one file per level. Returns the paths written.
std::vector<std::filesystem::path> export_trace(const std::vector<RunTrace>& traces,
                                                const std::filesystem::path& path);
std::filesystem::path level_path(const std::filesystem::path& path, int level);

} // namespace msnlac::eval
