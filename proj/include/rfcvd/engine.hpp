#pragma once

#include "rfcvd/param_net.hpp"
#include "rfcvd/plane.hpp"
#include "rfcvd/profile.hpp"

#include <string>

namespace rfcvd {

struct EngineConfig {
    std::string profile_source = "auto"; // "auto" or a profile file path
    int anchor = 0;
    Knobs knobs;
    int threads = 0; // 0 = hardware concurrency
    double wiener_c = 8.0;

    void validate() const;
};

struct StageTimings {
    double profile_s = 0.0;
    double flow_s = 0.0;
    double net_s = 0.0;
    double wiener_s = 0.0;
    double bilateral_s = 0.0;
    int profile_runs = 0;
};

NoiseProfile make_profile(const Clip& clip, const EngineConfig& cfg);

// one frame through align -> predict -> knobs -> wiener -> bilateral
Frame denoise_frame(const Clip& clip, int t, const NoiseProfile& profile, const EngineConfig& cfg,
                    StageTimings* timings = nullptr);

Clip denoise_clip(const Clip& clip, const EngineConfig& cfg, StageTimings* timings = nullptr);

struct BenchReport {
    double fps = 0.0;
    int frames = 0;
    int width = 0;
    int height = 0;
    StageTimings stages;
};

BenchReport bench(int width, int height, int frames, const EngineConfig& cfg);

} // namespace rfcvd
