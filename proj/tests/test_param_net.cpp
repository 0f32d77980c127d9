#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfcvd/flow.hpp"
#include "rfcvd/param_net.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <functional>

using namespace rfcvd;

namespace {

AlignedSet static_aligned(int w, int h) {
    return align_neighbors(testutil::static_clip(w, h, 5), 2);
}

void for_each_map(const ParamMaps& m, const std::function<void(const Plane&)>& fn) {
    fn(m.sigma2_luma);
    fn(m.sigma2_chroma);
    for (int k = 0; k < 3; ++k) {
        fn(m.sigmad_luma[k]);
        fn(m.sigmad_chroma[k]);
        fn(m.sigmar_luma[k]);
        fn(m.sigmar_chroma[k]);
    }
}

} // namespace

TEST_CASE("sobel on constants and ramps") {
    SUBCASE("constant") {
        Plane p(16, 16, 0.4f), gx, gy;
        sobel_gradients(p, gx, gy);
        for (float v : gx.data) CHECK(v == 0.0f);
        for (float v : gy.data) CHECK(v == 0.0f);
    }
    SUBCASE("horizontal ramp") {
        const int W = 32;
        Plane p(W, 16), gx, gy;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < W; ++x) p.at(x, y) = float(x) / W;
        sobel_gradients(p, gx, gy);
        for (int y = 1; y < 15; ++y)
            for (int x = 1; x < W - 1; ++x) {
                CHECK(gx.at(x, y) == doctest::Approx(8.0 / W).epsilon(1e-4));
                CHECK(gy.at(x, y) == doctest::Approx(0.0).scale(1).epsilon(1e-6));
            }
    }
    SUBCASE("vertical step edge") {
        Plane p(16, 16, 0.0f), gx, gy;
        for (int y = 0; y < 16; ++y)
            for (int x = 8; x < 16; ++x) p.at(x, y) = 1.0f;
        sobel_gradients(p, gx, gy);
        double best = 0;
        int best_x = -1;
        for (int x = 1; x < 15; ++x)
            if (std::abs(gx.at(x, 8)) > best) best = std::abs(gx.at(x, 8)), best_x = x;
        CHECK((best_x == 7 || best_x == 8));
        for (float v : gy.data) CHECK(std::abs(v) < 1e-6f);
    }
}

TEST_CASE("prelu") {
    CHECK(prelu(5.0f, 0.25f) == 5.0f);
    CHECK(prelu(-2.0f, 0.25f) == -0.5f);
    CHECK(prelu(0.0f, 0.9f) == 0.0f);
}

TEST_CASE("softplus endpoints") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(softplus(100.0) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(softplus(-100.0) >= 0.0);
    CHECK(softplus(-100.0) < 1e-40);
}

TEST_CASE("stride-2 conv corner cases") {
    SUBCASE("identity kernel decimates") {
        ChannelGrid in(1, 8, 6);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 8; ++x) in.at(0, x, y) = float(y * 8 + x);
        Tensor kernel{"k", {1, 1, 3, 3}, std::vector<float>(9, 0.0f)};
        kernel.data[4] = 1.0f; // center tap
        Tensor bias{"b", {1}, {0.0f}};
        const ChannelGrid out = conv2d_s2(in, kernel, bias);
        REQUIRE(out.w == 4);
        REQUIRE(out.h == 3);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) CHECK(out.at(0, x, y) == in.at(0, 2 * x, 2 * y));
    }
    SUBCASE("all-ones 4x4 input, all-ones kernel") {
        ChannelGrid in(1, 4, 4);
        for (auto& v : in.data) v = 1.0f;
        Tensor kernel{"k", {1, 1, 3, 3}, std::vector<float>(9, 1.0f)};
        Tensor bias{"b", {1}, {0.0f}};
        const ChannelGrid out = conv2d_s2(in, kernel, bias);
        REQUIRE(out.w == 2);
        REQUIRE(out.h == 2);
        // (0,0) covers taps at {-1..1}^2 around (0,0): 4 in-bounds
        CHECK(out.at(0, 0, 0) == 4.0f);
        // (1,1) centered at (2,2): fully interior, 9 taps
        CHECK(out.at(0, 1, 1) == 9.0f);
    }
    SUBCASE("zero kernel passes the bias through") {
        ChannelGrid in(2, 5, 5);
        for (auto& v : in.data) v = 0.3f;
        Tensor kernel{"k", {3, 2, 3, 3}, std::vector<float>(3 * 2 * 9, 0.0f)};
        Tensor bias{"b", {3}, {1.5f, -0.5f, 0.0f}};
        const ChannelGrid out = conv2d_s2(in, kernel, bias);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x) CHECK(out.at(c, x, y) == bias.data[std::size_t(c)]);
    }
}

TEST_CASE("net input assembly") {
    SUBCASE("static noiseless set: identical luma channels, masks all 1") {
        const AlignedSet a = static_aligned(64, 64);
        const ChannelGrid in = assemble_net_input(a);
        REQUIRE(in.channels == 25);
        for (int c = 1; c < 5; ++c)
            for (int i = 0; i < in.w * in.h; ++i)
                CHECK(std::abs(in.channel(c)[i] - in.channel(0)[i]) < 2e-3f);
        for (int c = 20; c < 25; ++c)
            for (int i = 0; i < in.w * in.h; ++i) CHECK(in.channel(c)[i] >= 0.95f);
    }
    SUBCASE("constant frames zero the sobel channels") {
        const AlignedSet a = align_neighbors(
            [] {
                Clip c;
                for (int t = 0; t < 5; ++t) c.frames.push_back(testutil::gray_frame(64, 64, 0.5f, t));
                return c;
            }(),
            2);
        const ChannelGrid in = assemble_net_input(a);
        for (int c = 10; c < 20; ++c)
            for (int i = 0; i < in.w * in.h; ++i) CHECK(in.channel(c)[i] == 0.0f);
    }
    SUBCASE("boundary duplicates have full masks") {
        const AlignedSet a = align_neighbors(testutil::static_clip(64, 64, 5), 0);
        const ChannelGrid in = assemble_net_input(a);
        // channels 21,22 are the masks of the duplicated t-2,t-1 slots
        for (int c : {21, 22})
            for (int i = 0; i < in.w * in.h; ++i) CHECK(in.channel(c)[i] == 1.0f);
    }
}

TEST_CASE("prediction with zero weights is softplus(0) everywhere") {
    const AlignedSet a = static_aligned(64, 64);
    const ParamMaps maps = predict_param_maps(a, zero_weights());
    for_each_map(maps, [](const Plane& p) {
        for (float v : p.data) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-5));
    });
}

TEST_CASE("head bias inverse-softplus identity gives constant maps") {
    NetWeights w = zero_weights();
    const float target = 0.125f;
    for (const char* name : {"head_sigma2_luma.bias", "head_sigma2_chroma.bias",
                             "head_sigmad_luma.bias", "head_sigmad_chroma.bias",
                             "head_sigmar_luma.bias", "head_sigmar_chroma.bias"}) {
        Tensor* t = w.find(name);
        REQUIRE(t != nullptr);
        for (auto& v : t->data) v = float(inverse_softplus(target));
    }
    const ParamMaps maps = predict_param_maps(static_aligned(64, 64), w);
    for_each_map(maps, [&](const Plane& p) {
        for (float v : p.data) CHECK(v == doctest::Approx(target).epsilon(1e-5));
    });
}

TEST_CASE("maps are non-negative for random weights") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    const AlignedSet a = static_aligned(64, 64);
    for (int trial = 0; trial < 20; ++trial) {
        NetWeights w = zero_weights();
        for (auto& t : w.tensors)
            for (auto& v : t.data) v = dist(rng);
        const ParamMaps maps = predict_param_maps(a, w);
        for_each_map(maps, [](const Plane& p) {
            for (float v : p.data) CHECK(v >= 0.0f);
        });
    }
}

TEST_CASE("map geometry matches the pyramid levels") {
    const AlignedSet a = static_aligned(100, 68);
    const ParamMaps maps = predict_param_maps(a, default_theta0());
    CHECK(maps.sigma2_luma.w == 13);
    CHECK(maps.sigma2_luma.h == 9);
    CHECK(maps.sigmad_luma[0].w == 100);
    CHECK(maps.sigmad_luma[0].h == 68);
    CHECK(maps.sigmad_luma[1].w == 50);
    CHECK(maps.sigmad_luma[1].h == 34);
    CHECK(maps.sigmad_luma[2].w == 25);
    CHECK(maps.sigmad_luma[2].h == 17);
}

TEST_CASE("knob application") {
    const AlignedSet a = static_aligned(64, 64);
    const ParamMaps maps = predict_param_maps(a, default_theta0());
    SUBCASE("all ones is the identity") {
        const ParamMaps same = apply_knobs(maps, Knobs{});
        CHECK(testutil::bit_identical(same.sigma2_luma, maps.sigma2_luma));
        CHECK(testutil::bit_identical(same.sigmar_chroma[2], maps.sigmar_chroma[2]));
    }
    SUBCASE("reduced temporal only") {
        Knobs k;
        k.sigma2_luma = k.sigma2_chroma = 0.2f;
        k.sigmad_luma = k.sigmad_chroma = 0.0f;
        k.sigmar_luma = k.sigmar_chroma = 0.0f;
        const ParamMaps out = apply_knobs(maps, k);
        for (std::size_t i = 0; i < maps.sigma2_luma.size(); ++i)
            CHECK(out.sigma2_luma.data[i] ==
                  doctest::Approx(0.2f * maps.sigma2_luma.data[i]).epsilon(1e-6));
        for (int lvl = 0; lvl < 3; ++lvl) {
            for (float v : out.sigmad_luma[lvl].data) CHECK(v == 0.0f);
            for (float v : out.sigmar_chroma[lvl].data) CHECK(v == 0.0f);
        }
    }
    SUBCASE("linearity in each knob") {
        Knobs k;
        k.sigmar_luma = 3.0f;
        const ParamMaps out = apply_knobs(maps, k);
        for (std::size_t i = 0; i < maps.sigmar_luma[1].size(); ++i)
            CHECK(out.sigmar_luma[1].data[i] ==
                  doctest::Approx(3.0f * maps.sigmar_luma[1].data[i]).epsilon(1e-6));
    }
    SUBCASE("negative knob rejected") {
        Knobs k;
        k.sigma2_luma = -1.0f;
        CHECK_THROWS_AS(k.validate(), Error);
    }
}

TEST_CASE("weight serialization round-trip is bit-exact") {
    namespace fs = std::filesystem;
    const NetWeights w = default_theta0();
    const auto path = fs::temp_directory_path() / "rfcvd_weights_rt.bin";
    save_weights(w, path.string());
    const NetWeights back = load_weights(path.string());
    REQUIRE(back.tensors.size() == w.tensors.size());
    for (std::size_t i = 0; i < w.tensors.size(); ++i) {
        CHECK(back.tensors[i].name == w.tensors[i].name);
        CHECK(back.tensors[i].dims == w.tensors[i].dims);
        CHECK(back.tensors[i].data == w.tensors[i].data);
    }
    fs::remove(path);
}
