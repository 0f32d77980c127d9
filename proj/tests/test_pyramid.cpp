#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfcvd/pyramid.hpp"
#include "test_util.hpp"

using namespace rfcvd;

namespace {

// naive 5-tap binomial with the same reflect rule, used as an oracle
Plane naive_blur(const Plane& p) {
    static const double k[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
    Plane tmp(p.w, p.h), out(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * p.at_reflect(x + i, y);
            tmp.at(x, y) = float(s);
        }
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at_reflect(x, y + i);
            out.at(x, y) = float(s);
        }
    return out;
}

} // namespace

TEST_CASE("resize preserves constants") {
    Plane p(13, 9, 0.37f);
    for (auto [w, h] : {std::pair{26, 18}, {7, 5}, {13, 9}, {100, 3}}) {
        const Plane r = resize_bilinear(p, w, h);
        for (float v : r.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));
    }
}

TEST_CASE("blur matches naive oracle") {
    const Plane p = testutil::random_plane(21, 17, 5);
    CHECK(testutil::max_abs_diff(binomial_blur(p), naive_blur(p)) < 1e-6);
}

TEST_CASE("constant plane pyramid stays constant") {
    const Plane p(32, 32, 0.7f);
    const auto pyr = build_gaussian_pyramid(p, 3);
    REQUIRE(pyr.size() == 3);
    for (const auto& level : pyr)
        for (float v : level.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("impulse pyramid level matches direct convolution") {
    Plane p(8, 8, 0.0f);
    p.at(0, 0) = 1.0f;
    const auto pyr = build_gaussian_pyramid(p, 2);
    REQUIRE(pyr.size() == 2);
    const Plane oracle = naive_blur(p);
    // level 1 keeps even indices of the blurred level 0
    REQUIRE(pyr[1].w == 4);
    REQUIRE(pyr[1].h == 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(pyr[1].at(x, y) == doctest::Approx(oracle.at(2 * x, 2 * y)).epsilon(1e-6));
}

TEST_CASE("too many levels for a tiny plane is an error") {
    const Plane p(4, 4, 0.5f);
    CHECK_THROWS_AS(build_gaussian_pyramid(p, 4), Error);
}

TEST_CASE("odd dimensions halve with ceiling") {
    const Plane p = testutil::random_plane(33, 21, 6);
    const auto pyr = build_gaussian_pyramid(p, 3);
    CHECK(pyr[1].w == 17);
    CHECK(pyr[1].h == 11);
    CHECK(pyr[2].w == 9);
    CHECK(pyr[2].h == 6);
}

TEST_CASE("laplacian of a constant is zero bands plus constant residual") {
    const Plane p(40, 36, 0.25f);
    const auto lap = build_laplacian(p);
    for (const auto& band : lap.bands)
        for (float v : band.data) CHECK(std::abs(v) < 1e-6);
    for (float v : lap.residual.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("laplacian perfect reconstruction, random plane") {
    const Plane p = testutil::random_plane(47, 33, 7);
    const Plane back = collapse_laplacian(build_laplacian(p));
    CHECK(testutil::max_abs_diff(p, back) < 1e-5);
}

TEST_CASE("impulse reconstruction") {
    Plane p(32, 32, 0.0f);
    p.at(16, 16) = 1.0f;
    const Plane back = collapse_laplacian(build_laplacian(p));
    CHECK(testutil::max_abs_diff(p, back) < 1e-5);
}

TEST_CASE("zero residual leaves a near-zero-mean high-pass image") {
    const Plane p = testutil::random_plane(64, 64, 8, 0.2f, 0.8f);
    auto lap = build_laplacian(p);
    lap.residual = Plane(lap.residual.w, lap.residual.h, 0.0f);
    const Plane hp = collapse_laplacian(lap);
    CHECK(std::abs(testutil::plane_mean(hp)) < 1e-3);
}

TEST_CASE("zeroed bands leave the low-pass image") {
    const Plane p = testutil::random_plane(64, 48, 9);
    auto lap = build_laplacian(p);
    for (auto& band : lap.bands) band = Plane(band.w, band.h, 0.0f);
    const Plane low = collapse_laplacian(lap);
    // smoother than the input: high-frequency energy strictly drops
    CHECK(testutil::hf_energy(low) < 0.05 * testutil::hf_energy(p));
}

TEST_CASE("too-small plane rejected by build_laplacian") {
    CHECK_THROWS_AS(build_laplacian(Plane(16, 16, 0.5f)), Error);
}
