#pragma once

#include <array>
#include <cstdint>

namespace msnlac::random {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Output is a pure function of (counter, key), so streams are reproducible
// across platforms and independent of thread scheduling.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter ctr, Key key);

// Sequential draws from the Philox block sequence of one (seed, stream) pair.
// `stream` identifies e.g. a pixel; draws consume counter words in order.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    // Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    // Standard normal via Box-Muller (both outputs used).
    double normal();
    // Gamma with the given shape and unit scale (Marsaglia-Tsang, with the
    // shape+1 boost for shape < 1).
    double gamma(double shape);

private:
    Key key_;
    Counter ctr_;
    Counter block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace msnlac::random
