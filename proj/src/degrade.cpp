#include "rfcvd/degrade.hpp"

#include "rfcvd/kernels.hpp"
#include "rfcvd/media_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include <sys/wait.h>
#include <unistd.h>

namespace rfcvd {

namespace {

inline float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

void add_noise_plane(Plane& p, const Plane& noise, float scale) {
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = clamp01(p.data[i] + noise.data[i] * scale);
}

} // namespace

Clip add_awgn(const Clip& clip, double variance_8bit, std::uint64_t seed) {
    if (variance_8bit < 0) fail(ErrorKind::Usage, "add_awgn: negative variance");
    clip.check_valid();
    Clip out = clip;
    if (variance_8bit == 0.0) return out;
    const float sigma = float(std::sqrt(variance_8bit) / 255.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (Frame& f : out.frames)
        for (Plane* p : {&f.y, &f.cb, &f.cr})
            for (float& v : p->data) v = clamp01(v + sigma * dist(rng));
    return out;
}

namespace {

Plane gaussian_blur(const Plane& p, double sigma) {
    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<float> k(std::size_t(radius) * 2 + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        k[std::size_t(i + radius)] = float(std::exp(-0.5 * i * i / (sigma * sigma)));
        sum += k[std::size_t(i + radius)];
    }
    for (float& v : k) v = float(v / sum);
    Plane tmp(p.w, p.h), out(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[std::size_t(i + radius)] * p.at_reflect(x + i, y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[std::size_t(i + radius)] * tmp.at(x, reflect_index(y + i, p.h));
            out.at(x, y) = acc;
        }
    return out;
}

} // namespace

Clip add_correlated_noise(const Clip& clip, double variance_8bit, double blur_sigma,
                          std::uint64_t seed) {
    if (variance_8bit < 0) fail(ErrorKind::Usage, "add_correlated_noise: negative variance");
    if (blur_sigma <= 0) fail(ErrorKind::Usage, "add_correlated_noise: blur_sigma must be positive");
    clip.check_valid();
    Clip out = clip;
    const double target_sigma = std::sqrt(variance_8bit) / 255.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (Frame& f : out.frames) {
        for (Plane* p : {&f.y, &f.cb, &f.cr}) {
            Plane noise(p->w, p->h);
            for (float& v : noise.data) v = dist(rng);
            noise = gaussian_blur(noise, blur_sigma);
            // rescale the correlated field back to unit variance
            const auto& k = kern::active();
            const double mean = k.sum(noise.data.data(), noise.size()) / double(noise.size());
            const double var = k.sum_sq(noise.data.data(), noise.size()) / double(noise.size()) - mean * mean;
            const float scale = float(target_sigma / std::sqrt(std::max(var, 1e-12)));
            add_noise_plane(*p, noise, scale);
        }
    }
    return out;
}

double quant_step(int quality) { return std::pow(2.0, (quality - 4) / 6.0); }

namespace {

constexpr int kMb = 16;
constexpr int kSearch = 8;

struct Dct8 {
    double m[8][8]; // orthonormal DCT-II basis
    Dct8() {
        for (int k = 0; k < 8; ++k) {
            const double s = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) m[k][n] = s * std::cos(M_PI * (n + 0.5) * k / 8.0);
        }
    }
};

const Dct8& dct_tables() {
    static const Dct8 t;
    return t;
}

// deadzone quantizer as used by H.264-style codecs: coefficients with
// |coef| < (1 - offset) * step collapse to zero, which is what makes coded
// noise persist from frame to frame (the skip/copy behavior)
double deadzone_quant(double coef, double step, double offset) {
    const double a = std::floor(std::abs(coef) / step + offset);
    return std::copysign(a * step, coef);
}

void quantize_block(const Plane& src, Plane& dst, int bx, int by, double step, double offset) {
    const auto& t = dct_tables();
    double block[8][8], tmp[8][8];
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) block[y][x] = src.at(bx + x, by + y);
    // rows then columns
    for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
            double acc = 0;
            for (int n = 0; n < 8; ++n) acc += t.m[k][n] * block[y][n];
            tmp[y][k] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 8; ++k) {
            double acc = 0;
            for (int n = 0; n < 8; ++n) acc += t.m[k][n] * tmp[n][x];
            block[k][x] = deadzone_quant(acc, step, offset);
        }
    // inverse
    for (int y = 0; y < 8; ++y)
        for (int n = 0; n < 8; ++n) {
            double acc = 0;
            for (int k = 0; k < 8; ++k) acc += t.m[k][y] * block[k][n];
            tmp[y][n] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int n = 0; n < 8; ++n) {
            double acc = 0;
            for (int k = 0; k < 8; ++k) acc += t.m[k][x] * tmp[n][k];
            dst.at(bx + x, by + n) = float(acc);
        }
}

// H.264 default rounding offsets: 1/3 for intra blocks, 1/6 for inter residuals
constexpr double kIntraOffset = 1.0 / 3.0;
constexpr double kInterOffset = 1.0 / 6.0;

void quantize_plane(const Plane& src, Plane& dst, double step, double offset) {
    for (int by = 0; by < src.h; by += 8)
        for (int bx = 0; bx < src.w; bx += 8) quantize_block(src, dst, bx, by, step, offset);
}

Plane pad_to_multiple16(const Plane& p) {
    const int w = (p.w + 15) / 16 * 16;
    const int h = (p.h + 15) / 16 * 16;
    if (w == p.w && h == p.h) return p;
    Plane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = p.at_reflect(x, y);
    return out;
}

double block_sad(const Plane& a, int ax, int ay, const Plane& b, int bx, int by) {
    double sad = 0;
    for (int y = 0; y < kMb; ++y)
        sad += kern::active().sum_abs_diff(a.row(ay + y) + ax, b.row(by + y) + bx, kMb);
    return sad;
}

} // namespace

Clip compress_sim(const Clip& clip, int quality, int gop) {
    clip.check_valid();
    if (quality < 1 || quality > 51) fail(ErrorKind::Usage, "compress_sim: quality must be in 1..51");
    if (gop < 1) fail(ErrorKind::Usage, "compress_sim: gop must be >= 1");

    const double step = quant_step(quality) / 255.0; // working units
    const int orig_w = clip.width(), orig_h = clip.height();

    Clip out;
    out.frame_rate = clip.frame_rate;
    std::array<Plane, 3> prev; // previous reconstruction, padded

    for (std::size_t fi = 0; fi < clip.size(); ++fi) {
        const Frame& src = clip.frames[fi];
        std::array<Plane, 3> padded = {pad_to_multiple16(src.y), pad_to_multiple16(src.cb),
                                       pad_to_multiple16(src.cr)};
        std::array<Plane, 3> recon = padded;
        const bool intra = (fi % std::size_t(gop)) == 0;

        if (intra) {
            for (int c = 0; c < 3; ++c) quantize_plane(padded[c], recon[c], step, kIntraOffset);
        } else {
            const int w = padded[0].w, h = padded[0].h;
            std::array<Plane, 3> pred = {Plane(w, h), Plane(w, h), Plane(w, h)};
            for (int my = 0; my < h; my += kMb)
                for (int mx = 0; mx < w; mx += kMb) {
                    // full search on luma against the previous reconstruction
                    int best_dx = 0, best_dy = 0;
                    double best = block_sad(padded[0], mx, my, prev[0], mx, my);
                    for (int dy = -kSearch; dy <= kSearch; ++dy)
                        for (int dx = -kSearch; dx <= kSearch; ++dx) {
                            const int sx = mx + dx, sy = my + dy;
                            if (sx < 0 || sy < 0 || sx + kMb > w || sy + kMb > h) continue;
                            const double sad = block_sad(padded[0], mx, my, prev[0], sx, sy);
                            if (sad < best) {
                                best = sad;
                                best_dx = dx;
                                best_dy = dy;
                            }
                        }
                    for (int c = 0; c < 3; ++c)
                        for (int y = 0; y < kMb; ++y)
                            for (int x = 0; x < kMb; ++x)
                                pred[c].at(mx + x, my + y) =
                                    prev[c].at(mx + best_dx + x, my + best_dy + y);
                }
            for (int c = 0; c < 3; ++c) {
                Plane residual(w, h);
                for (std::size_t i = 0; i < residual.size(); ++i)
                    residual.data[i] = padded[c].data[i] - pred[c].data[i];
                Plane deq(w, h);
                quantize_plane(residual, deq, step, kInterOffset);
                for (std::size_t i = 0; i < recon[c].size(); ++i)
                    recon[c].data[i] = clamp01(pred[c].data[i] + deq.data[i]);
            }
        }
        for (int c = 0; c < 3; ++c)
            for (float& v : recon[c].data) v = clamp01(v);
        prev = recon;

        Frame rframe;
        rframe.index = int(fi);
        auto crop = [&](const Plane& p) {
            Plane o(orig_w, orig_h);
            for (int y = 0; y < orig_h; ++y)
                std::copy(p.row(y), p.row(y) + orig_w, o.row(y));
            return o;
        };
        rframe.y = crop(recon[0]);
        rframe.cb = crop(recon[1]);
        rframe.cr = crop(recon[2]);
        out.frames.push_back(std::move(rframe));
    }
    return out;
}

Clip transcode_external(const Clip& clip, int crf, const std::string& encoder_cmd) {
    clip.check_valid();
    if (crf < 0 || crf > 51) fail(ErrorKind::Usage, "transcode_external: crf must be in 0..51");
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("rfcvd_xcode_" + std::to_string(std::uint64_t(::getpid())));
    fs::create_directories(dir);
    const std::string input = (dir / "in.y4m").string();
    const std::string output = (dir / "out.y4m").string();
    write_y4m(clip, input);

    std::string cmd = encoder_cmd;
    auto substitute = [&](const std::string& key, const std::string& value) {
        for (std::size_t pos; (pos = cmd.find(key)) != std::string::npos;)
            cmd.replace(pos, key.size(), value);
    };
    substitute("{input}", input);
    substitute("{output}", output);
    substitute("{crf}", std::to_string(crf));

    const int rc = std::system(cmd.c_str());
    const int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    if (exit_code == 127) {
        fs::remove_all(dir);
        fail(ErrorKind::Environment, "encoder not found: " + cmd);
    }
    if (exit_code != 0) {
        fs::remove_all(dir);
        fail(ErrorKind::Io, "encoder failed with exit code " + std::to_string(exit_code));
    }
    Clip out = read_y4m(output);
    fs::remove_all(dir);
    if (out.size() != clip.size() || out.width() != clip.width() || out.height() != clip.height())
        fail(ErrorKind::Io, "transcode changed clip geometry");
    return out;
}

} // namespace rfcvd
