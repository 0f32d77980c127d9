#include "rfcvd/degrade.hpp"
#include "rfcvd/engine.hpp"
#include "rfcvd/flow.hpp"
#include "rfcvd/media_io.hpp"
#include "rfcvd/metrics.hpp"
#include "rfcvd/service.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

namespace {

rfcvd::Knobs parse_knobs_csv(const std::string& csv) {
    std::array<float, 6> values{};
    std::size_t i = 0, pos = 0;
    while (i < 6) {
        const auto comma = csv.find(',', pos);
        values[i++] = std::stof(csv.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (i != 6) rfcvd::fail(rfcvd::ErrorKind::Usage, "--knobs expects 6 comma-separated values");
    return rfcvd::Knobs::from_array(values);
}

void dump_flow_fields(const rfcvd::Clip& clip, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    static const char* slot[4] = {"m2", "m1", "p1", "p2"};
    for (std::size_t t = 0; t < clip.size(); ++t) {
        const auto aligned = rfcvd::align_neighbors(clip, int(t));
        for (int z = 0; z < 4; ++z) {
            char name[64];
            std::snprintf(name, sizeof(name), "flow_t%04zu_%s.raw", t, slot[z]);
            std::ofstream f(fs::path(dir) / name, std::ios::binary);
            const auto& flow = aligned.flows[z];
            f.write(reinterpret_cast<const char*>(flow.u.data.data()),
                    std::streamsize(flow.u.size() * sizeof(float)));
            f.write(reinterpret_cast<const char*>(flow.v.data.data()),
                    std::streamsize(flow.v.size() * sizeof(float)));
        }
    }
}

int run(int argc, char** argv) {
    CLI::App app{"RFCVD: robust, fast and controllable video denoising"};
    app.require_subcommand(1);

    // denoise
    auto* denoise = app.add_subcommand("denoise", "Denoise a Y4M clip");
    std::string in_path, out_path, profile_source = "auto", knobs_csv, dump_flow_dir;
    int anchor = 0, threads = 0;
    double wiener_c = 8.0;
    denoise->add_option("--input", in_path)->required();
    denoise->add_option("--output", out_path)->required();
    denoise->add_option("--profile", profile_source, "auto or a profile file");
    denoise->add_option("--anchor", anchor);
    denoise->add_option("--knobs", knobs_csv, "six comma-separated scale factors");
    denoise->add_option("--threads", threads);
    denoise->add_option("--wiener-c", wiener_c);
    denoise->add_option("--dump-flow", dump_flow_dir, "debug-dump flow fields to a directory");
    denoise->callback([&] {
        rfcvd::EngineConfig cfg;
        cfg.profile_source = profile_source;
        cfg.anchor = anchor;
        cfg.threads = threads;
        cfg.wiener_c = wiener_c;
        if (!knobs_csv.empty()) cfg.knobs = parse_knobs_csv(knobs_csv);
        const rfcvd::Clip clip = rfcvd::read_y4m(in_path);
        if (!dump_flow_dir.empty()) dump_flow_fields(clip, dump_flow_dir);
        rfcvd::write_y4m(rfcvd::denoise_clip(clip, cfg), out_path);
    });

    // degrade
    auto* degrade = app.add_subcommand("degrade", "Synthesize a degraded clip");
    std::string d_in, d_out, codec = "none", encoder_cmd;
    double awgn_var = 0.0, blur_sigma = 0.0;
    int q = 28, crf = 23, gop = 10;
    std::uint64_t seed = 0;
    degrade->add_option("--input", d_in)->required();
    degrade->add_option("--output", d_out)->required();
    degrade->add_option("--awgn-var", awgn_var, "AWGN variance, 8-bit scale");
    degrade->add_option("--blur-sigma", blur_sigma, "spatially correlate the noise (px)");
    degrade->add_option("--codec", codec)->check(CLI::IsMember({"none", "sim", "ext"}));
    degrade->add_option("--q", q, "simulator quality 1..51");
    degrade->add_option("--crf", crf, "external encoder CRF 0..51");
    degrade->add_option("--gop", gop);
    degrade->add_option("--encoder", encoder_cmd, "command template with {input} {output} {crf}");
    degrade->add_option("--seed", seed);
    degrade->callback([&] {
        rfcvd::Clip clip = rfcvd::read_y4m(d_in);
        if (awgn_var > 0.0) {
            clip = blur_sigma > 0.0 ? rfcvd::add_correlated_noise(clip, awgn_var, blur_sigma, seed)
                                    : rfcvd::add_awgn(clip, awgn_var, seed);
        }
        if (codec == "sim") {
            clip = rfcvd::compress_sim(clip, q, gop);
        } else if (codec == "ext") {
            if (encoder_cmd.empty())
                rfcvd::fail(rfcvd::ErrorKind::Usage, "--codec ext requires --encoder");
            clip = rfcvd::transcode_external(clip, crf, encoder_cmd);
        }
        rfcvd::write_y4m(clip, d_out);
    });

    // metrics
    auto* metrics = app.add_subcommand("metrics", "PSNR/SSIM report");
    std::string ref_path, test_path;
    metrics->add_option("--ref", ref_path)->required();
    metrics->add_option("--test", test_path)->required();
    metrics->callback([&] {
        const rfcvd::Clip ref = rfcvd::read_y4m(ref_path);
        const rfcvd::Clip test = rfcvd::read_y4m(test_path);
        const rfcvd::MetricReport report = rfcvd::compare_clips(ref, test);
        for (std::size_t i = 0; i < report.per_frame_psnr.size(); ++i)
            std::printf("frame=%zu psnr=%.4f ssim=%.6f\n", i, report.per_frame_psnr[i],
                        report.per_frame_ssim[i]);
        std::printf("summary frames=%zu psnr=%.4f ssim=%.6f\n", report.per_frame_psnr.size(),
                    report.psnr, report.ssim);
    });

    // bench
    auto* bench = app.add_subcommand("bench", "Throughput report on synthetic data");
    int b_width = 256, b_height = 256, b_frames = 20, b_threads = 0;
    bench->add_option("--width", b_width);
    bench->add_option("--height", b_height);
    bench->add_option("--frames", b_frames);
    bench->add_option("--threads", b_threads);
    bench->callback([&] {
        rfcvd::EngineConfig cfg;
        cfg.threads = b_threads;
        const rfcvd::BenchReport r = rfcvd::bench(b_width, b_height, b_frames, cfg);
        const double per_frame = 1.0 / r.fps;
        std::printf("bench %dx%d frames=%d fps=%.3f\n", r.width, r.height, r.frames, r.fps);
        std::printf("stage flow      %.4fs/frame fps=%.3f\n", r.stages.flow_s / r.frames,
                    r.frames / r.stages.flow_s);
        std::printf("stage net       %.4fs/frame fps=%.3f\n", r.stages.net_s / r.frames,
                    r.frames / r.stages.net_s);
        std::printf("stage wiener    %.4fs/frame fps=%.3f\n", r.stages.wiener_s / r.frames,
                    r.frames / r.stages.wiener_s);
        std::printf("stage bilateral %.4fs/frame fps=%.3f\n", r.stages.bilateral_s / r.frames,
                    r.frames / r.stages.bilateral_s);
        std::printf("total           %.4fs/frame\n", per_frame);
    });

    // profile
    auto* profile = app.add_subcommand("profile", "Estimate a noise profile and write its delta");
    std::string p_in, p_out;
    int p_anchor = 0;
    profile->add_option("--input", p_in)->required();
    profile->add_option("--out", p_out)->required();
    profile->add_option("--anchor", p_anchor);
    profile->callback([&] {
        const rfcvd::Clip clip = rfcvd::read_y4m(p_in);
        const rfcvd::NoiseProfile prof = rfcvd::classical_profile(clip, p_anchor);
        rfcvd::save_weights(prof.delta, p_out);
    });

    // serve
    auto* serve = app.add_subcommand("serve", "Run the interactive preview service");
    int port = 8090;
    serve->add_option("--port", port);
    serve->callback([&] {
        rfcvd::PreviewServer server;
        server.start(port);
        std::printf("preview service listening on 127.0.0.1:%d\n", server.port());
        std::fflush(stdout);
        for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rfcvd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    }
}
