#include <cmath>
#include <fstream>

#include "doctest.h"
#include "msnlac/error.hpp"
#include "msnlac/grid.hpp"
#include "support.hpp"

using namespace msnlac;
using namespace msnlac::grid;
using testsupport::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& header, const std::vector<unsigned char>& body)
{
    std::ofstream out(p, std::ios::binary);
    out << header;
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Field index_field(int w, int h)
{
    Field f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f(x, y) = 10.0 * y + x;
    return f;
}

} // namespace

TEST_CASE("image rejects negative or non-finite intensities")
{
    CHECK_THROWS_AS(Image(2, 1, {1.0, -1.0}), InputError);
    CHECK_THROWS_AS(Image(2, 1, {1.0, NAN}), InputError);
    CHECK_THROWS_AS(Image(2, 2, {1.0}), InputError);
    CHECK_NOTHROW(Image(2, 1, {0.0, 3.0}));
}

TEST_CASE("mirror index reflects without repeating the edge sample")
{
    CHECK(mirror_index(-1, 5) == 1);
    CHECK(mirror_index(-2, 5) == 2);
    CHECK(mirror_index(5, 5) == 3);
    CHECK(mirror_index(6, 5) == 2);
    CHECK(mirror_index(13, 5) == 3);
    CHECK(mirror_index(7, 1) == 0);
}

TEST_CASE("load_image decodes 8-bit PGM bytes as-is")
{
    TempDir tmp;
    write_bytes(tmp / "a.pgm", "P5\n2 2\n255\n", {0, 1, 2, 3});
    const Image img = load_image(tmp / "a.pgm");
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    CHECK(std::vector<double>(img.data().begin(), img.data().end()) == std::vector<double>{0, 1, 2, 3});
}

TEST_CASE("load_image reads big-endian 16-bit PGM without rescaling")
{
    TempDir tmp;
    write_bytes(tmp / "b.pgm", "P5\n# comment\n2 1\n65535\n", {0xff, 0xff, 0x01, 0x02});
    const Image img = load_image(tmp / "b.pgm");
    CHECK(img[0] == 65535.0);
    CHECK(img[1] == 258.0);
}

TEST_CASE("load_image error paths")
{
    TempDir tmp;
    try {
        load_image(tmp / "missing.pgm");
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("file not found") != std::string::npos);
    }
    write_bytes(tmp / "junk.bin", "hello", {});
    CHECK_THROWS_AS(load_image(tmp / "junk.bin"), InputError);
    write_bytes(tmp / "short.pgm", "P5\n4 4\n255\n", {1, 2});
    CHECK_THROWS_AS(load_image(tmp / "short.pgm"), InputError);
}

TEST_CASE("raw float round trip with sidecar")
{
    TempDir tmp;
    Field f(3, 2);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = 0.25 * static_cast<double>(i) + 0.5;
    save_raw(f, tmp / "f.raw");
    CHECK(std::filesystem::exists(tmp / "f.raw.json"));
    const Image back = load_image(tmp / "f.raw");
    CHECK(back.width() == 3);
    CHECK(back.height() == 2);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(back[i] == static_cast<double>(static_cast<float>(f[i])));
}

TEST_CASE("save_mask writes 0/255 and round-trips")
{
    TempDir tmp;
    BinaryMask ones(2, 2, 1);
    save_mask(ones, tmp / "ones.pgm");
    auto bytes = read_bytes(tmp / "ones.pgm");
    REQUIRE(bytes.size() >= 4);
    for (std::size_t i = bytes.size() - 4; i < bytes.size(); ++i)
        CHECK(bytes[i] == 255);

    BinaryMask zeros(2, 2, 0);
    save_mask(zeros, tmp / "zeros.pgm");
    bytes = read_bytes(tmp / "zeros.pgm");
    for (std::size_t i = bytes.size() - 4; i < bytes.size(); ++i)
        CHECK(bytes[i] == 0);

    std::mt19937_64 rng(3);
    const BinaryMask m = testsupport::random_mask(7, 5, rng);
    save_mask(m, tmp / "m.pgm");
    CHECK(load_mask(tmp / "m.pgm") == m);
}

TEST_CASE("gaussian kernel is normalised with radius ceil(3 sigma)")
{
    for (double sigma : {0.5, 0.8, 1.0, 2.3}) {
        const auto k = gaussian_kernel(sigma);
        CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3.0 * sigma)) + 1);
        double sum = 0.0;
        for (double v : k)
            sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(gaussian_kernel(0.0), InputError);
}

TEST_CASE("gaussian smoothing preserves constants")
{
    const Image c(9, 7, std::vector<double>(63, 2.75));
    const Image s = gaussian_smooth(c, 1.7);
    for (double v : s.data())
        CHECK(v == doctest::Approx(2.75).epsilon(1e-14));
}

TEST_CASE("impulse response centre equals the squared 1-D centre weight")
{
    // Hand-built truncated normalised kernel for sigma = 1: radius 3.
    double w[7];
    double sum = 0.0;
    for (int i = -3; i <= 3; ++i)
        sum += w[i + 3] = std::exp(-0.5 * i * i);
    const double centre = 1.0 / sum;

    Field f(15, 15, 0.0);
    f(7, 7) = 1.0;
    const Field out = gaussian_smooth(f, 1.0);
    CHECK(out(7, 7) == doctest::Approx(centre * centre).epsilon(1e-14));
    CHECK(out(8, 7) == doctest::Approx(centre * w[4] / sum).epsilon(1e-14));
}

TEST_CASE("gaussian smoothing matches a dense mirrored 2-D convolution")
{
    const Image img = testsupport::random_image(8, 8, 11);
    const double sigma = 0.5;
    const int r = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> k;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
        sum += k.back();
    }
    for (double& v : k)
        v /= sum;
    const Image out = gaussian_smooth(img, sigma);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i)
                    acc += k[i + r] * k[j + r] * img(mirror_index(x + i, 8), mirror_index(y + j, 8));
            CHECK(std::abs(out(x, y) - acc) < 1e-12);
        }
}

TEST_CASE("downsample2 keeps even samples")
{
    const Field d = downsample2(index_field(4, 4));
    REQUIRE(d.width() == 2);
    REQUIRE(d.height() == 2);
    CHECK(d.vector() == std::vector<double>{0, 2, 20, 22});

    const Field odd = downsample2(index_field(5, 5));
    CHECK(odd.width() == 2);
    CHECK(odd.height() == 2);

    const Field c = downsample2(Field(6, 6, 3.0));
    for (double v : c.data())
        CHECK(v == 3.0);

    CHECK_THROWS_AS(downsample2(Field(1, 4)), InputError);
}

TEST_CASE("upsample2_field")
{
    SUBCASE("constant stays constant")
    {
        const Field up = upsample2_field(Field(3, 4, -1.5), 7, 8);
        for (double v : up.data())
            CHECK(v == -1.5);
    }
    SUBCASE("sample-aligned ramp")
    {
        const Field f(2, 2, std::vector<double>{0, 1, 0, 1});
        const Field up = upsample2_field(f, 4, 4);
        for (int y = 0; y < 4; ++y) {
            CHECK(up(0, y) == 0.0);
            CHECK(up(1, y) == 0.5);
            CHECK(up(2, y) == 1.0);
            CHECK(up(3, y) == 1.0);
        }
    }
    SUBCASE("down after up is the identity on doubled targets")
    {
        const Image src = testsupport::random_image(5, 6, 4);
        const Field up = upsample2_field(src.pixels(), 10, 12);
        CHECK(downsample2(up) == src.pixels());
        const Field up_odd = upsample2_field(src.pixels(), 11, 13);
        CHECK(downsample2(up_odd) == src.pixels());
    }
    SUBCASE("target outside the allowed range")
    {
        CHECK_THROWS_AS(upsample2_field(Field(3, 3), 8, 6), InputError);
        CHECK_THROWS_AS(upsample2_field(Field(3, 3), 5, 6), InputError);
    }
}

TEST_CASE("pyramid levels")
{
    const Image img = testsupport::random_image(64, 48, 2);
    const Pyramid one = build_pyramid(img, 1);
    REQUIRE(one.levels.size() == 1);
    CHECK(one.levels[0] == img);

    const Pyramid p = build_pyramid(img, 4);
    REQUIRE(p.levels.size() == 4);
    CHECK(p.levels[0] == img);
    for (std::size_t l = 1; l < p.levels.size(); ++l) {
        CHECK(p.levels[l].width() == p.levels[l - 1].width() / 2);
        CHECK(p.levels[l].height() == p.levels[l - 1].height() / 2);
        CHECK(p.levels[l] == downsample2(gaussian_smooth(p.levels[l - 1], 0.8)));
    }

    const Image big(512, 512, std::vector<double>(512 * 512, 1.0));
    const Pyramid p3 = build_pyramid(big, 3);
    CHECK(p3.levels[1].width() == 256);
    CHECK(p3.levels[2].width() == 128);
    CHECK(p3.levels[2].height() == 128);

    CHECK(max_pyramid_levels(64, 64) == 6);
    CHECK_THROWS_AS(build_pyramid(testsupport::random_image(64, 64, 1), 10), InputError);
    CHECK_THROWS_AS(build_pyramid(img, 0), InputError);
}
