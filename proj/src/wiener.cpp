#include "rfcvd/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace rfcvd {

namespace {

struct DftTables {
    std::complex<double> fwd[8][8]; // exp(-2pi i kn/8) / sqrt(8)
    std::complex<double> inv[8][8];
    DftTables() {
        const double norm = 1.0 / std::sqrt(8.0);
        for (int k = 0; k < 8; ++k)
            for (int n = 0; n < 8; ++n) {
                const double a = -2.0 * std::numbers::pi * k * n / 8.0;
                fwd[k][n] = std::polar(norm, a);
                inv[k][n] = std::polar(norm, -a);
            }
    }
};

const DftTables& tables() {
    static const DftTables t;
    return t;
}

template <class In>
void transform8(const In& in, Spectrum8& out, const std::complex<double> (*m)[8]) {
    Spectrum8 tmp;
    // rows
    for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
            std::complex<double> acc = 0;
            for (int n = 0; n < 8; ++n) acc += m[k][n] * in[y * 8 + n];
            tmp[y * 8 + k] = acc;
        }
    // columns
    for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 8; ++k) {
            std::complex<double> acc = 0;
            for (int n = 0; n < 8; ++n) acc += m[k][n] * tmp[n * 8 + x];
            out[k * 8 + x] = acc;
        }
}

} // namespace

Spectrum8 dft8x8(const Tile8& tile) {
    Spectrum8 out;
    transform8(tile, out, tables().fwd);
    return out;
}

Tile8 idft8x8(const Spectrum8& spec) {
    Spectrum8 full;
    transform8(spec, full, tables().inv);
    Tile8 out;
    for (int i = 0; i < 64; ++i) out[i] = full[i].real();
    return out;
}

Spectrum8 wiener_merge_tile(const Spectrum8& t0, const std::array<Spectrum8, 4>& alts,
                            const std::array<bool, 4>& use_alt, double sigma2, double c) {
    if (sigma2 < 0) fail(ErrorKind::Data, "wiener_merge_tile: negative sigma2");
    if (c <= 0) fail(ErrorKind::Usage, "wiener_merge_tile: c must be positive");
    Spectrum8 merged = t0; // z = 0 term: A_0 = 1
    for (int z = 0; z < 4; ++z) {
        for (int i = 0; i < 64; ++i) {
            if (!use_alt[z]) {
                merged[i] += t0[i];
                continue;
            }
            const std::complex<double> d = t0[i] - alts[z][i];
            const double d2 = std::norm(d);
            const double denom = d2 + c * sigma2;
            const double a = denom > 0.0 ? d2 / denom : 1.0;
            merged[i] += alts[z][i] + a * d;
        }
    }
    for (auto& v : merged) v *= 0.2;
    return merged;
}

namespace {

constexpr int kTile = 8;
constexpr int kStride = 4;
constexpr int kPad = 8;

struct TileLayout {
    int w, h;   // original dims
    int wp, hp; // padded dims
    int nx, ny; // tile position counts
    double win1[8];
    double win2d[64];

    explicit TileLayout(int width, int height) : w(width), h(height) {
        auto round_up = [](int base) { return base + ((kStride - (base - kTile) % kStride) % kStride); };
        wp = round_up(w + 2 * kPad);
        hp = round_up(h + 2 * kPad);
        nx = (wp - kTile) / kStride + 1;
        ny = (hp - kTile) / kStride + 1;
        for (int i = 0; i < 8; ++i)
            win1[i] = std::sin(std::numbers::pi * (i + 0.5) / 8.0);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) win2d[y * 8 + x] = win1[y] * win1[x];
    }
};

Plane pad_reflect(const Plane& p, int wp, int hp) {
    Plane out(wp, hp);
    for (int y = 0; y < hp; ++y)
        for (int x = 0; x < wp; ++x)
            out.at(x, y) = p.at(reflect_index(x - kPad, p.w), reflect_index(y - kPad, p.h));
    return out;
}

double sample_sigma2(const Plane& map, const TileLayout& lay, int tx, int ty) {
    // tile center in original full-resolution coordinates
    const double cx = tx * kStride - kPad + 3.5;
    const double cy = ty * kStride - kPad + 3.5;
    const double fx = (cx + 0.5) * double(map.w) / lay.w - 0.5;
    const double fy = (cy + 0.5) * double(map.h) / lay.h - 0.5;
    const int x0 = int(std::floor(fx));
    const int y0 = int(std::floor(fy));
    const double wx = fx - x0;
    const double wy = fy - y0;
    const double v = (map.at_clamp(x0, y0) * (1 - wx) + map.at_clamp(x0 + 1, y0) * wx) * (1 - wy) +
                     (map.at_clamp(x0, y0 + 1) * (1 - wx) + map.at_clamp(x0 + 1, y0 + 1) * wx) * wy;
    return std::max(v, 0.0);
}

// bilinear scatter weights matching sample_sigma2
struct MapFootprint {
    int x0, y0;
    double w00, w10, w01, w11;
};

MapFootprint sigma2_footprint(const Plane& map, const TileLayout& lay, int tx, int ty) {
    const double cx = tx * kStride - kPad + 3.5;
    const double cy = ty * kStride - kPad + 3.5;
    const double fx = (cx + 0.5) * double(map.w) / lay.w - 0.5;
    const double fy = (cy + 0.5) * double(map.h) / lay.h - 0.5;
    const int x0 = int(std::floor(fx));
    const int y0 = int(std::floor(fy));
    const double wx = fx - x0;
    const double wy = fy - y0;
    return {x0, y0, (1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy};
}

void extract_windowed(const Plane& padded, const TileLayout& lay, int ox, int oy, Tile8& out) {
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            out[y * 8 + x] = double(padded.at(ox + x, oy + y)) * lay.win2d[y * 8 + x];
}

bool tile_fully_valid(const Plane& mask_padded, int ox, int oy) {
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (mask_padded.at(ox + x, oy + y) < 0.5f) return false;
    return true;
}

struct PaddedInput {
    TileLayout lay;
    Plane target;
    std::array<Plane, 4> alts;
    std::array<Plane, 4> masks;

    explicit PaddedInput(const MergeInput& in)
        : lay(in.target->w, in.target->h),
          target(pad_reflect(*in.target, lay.wp, lay.hp)) {
        for (int z = 0; z < 4; ++z) {
            if (!in.target->same_dims(*in.alts[z]) || !in.target->same_dims(*in.masks[z]))
                fail(ErrorKind::Data, "merge_plane: dimension mismatch");
            alts[z] = pad_reflect(*in.alts[z], lay.wp, lay.hp);
            masks[z] = pad_reflect(*in.masks[z], lay.wp, lay.hp);
        }
    }
};

// overlap-add of the window squared; exactly 1 on the original region
std::vector<double> window_partition(const TileLayout& lay) {
    std::vector<double> part(std::size_t(lay.wp) * lay.hp, 0.0);
    for (int ty = 0; ty < lay.ny; ++ty)
        for (int tx = 0; tx < lay.nx; ++tx) {
            const int ox = tx * kStride, oy = ty * kStride;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    part[std::size_t(oy + y) * lay.wp + ox + x] += lay.win2d[y * 8 + x] * lay.win2d[y * 8 + x];
        }
    return part;
}

} // namespace

namespace {

// overlap-add accumulator over the padded grid (before the partition divide)
std::vector<double> merge_accumulate(const PaddedInput& p, const Plane& sigma2_map, double c) {
    const TileLayout& lay = p.lay;
    std::vector<double> acc(std::size_t(lay.wp) * lay.hp, 0.0);

    Tile8 tile;
    std::array<Spectrum8, 4> alt_spec;
    std::array<bool, 4> use_alt;
    for (int ty = 0; ty < lay.ny; ++ty) {
        for (int tx = 0; tx < lay.nx; ++tx) {
            const int ox = tx * kStride, oy = ty * kStride;
            extract_windowed(p.target, lay, ox, oy, tile);
            const Spectrum8 t0 = dft8x8(tile);
            for (int z = 0; z < 4; ++z) {
                use_alt[z] = tile_fully_valid(p.masks[z], ox, oy);
                extract_windowed(p.alts[z], lay, ox, oy, tile);
                alt_spec[z] = dft8x8(tile);
            }
            const double sigma2 = sample_sigma2(sigma2_map, lay, tx, ty);
            const Tile8 merged = idft8x8(wiener_merge_tile(t0, alt_spec, use_alt, sigma2, c));
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    acc[std::size_t(oy + y) * lay.wp + ox + x] += merged[y * 8 + x] * lay.win2d[y * 8 + x];
        }
    }
    return acc;
}

} // namespace

Plane merge_plane(const MergeInput& in, const Plane& sigma2_map, double c) {
    const PaddedInput p(in);
    const TileLayout& lay = p.lay;
    const std::vector<double> acc = merge_accumulate(p, sigma2_map, c);
    const std::vector<double> part = window_partition(lay);

    Plane out(lay.w, lay.h);
    for (int y = 0; y < lay.h; ++y)
        for (int x = 0; x < lay.w; ++x) {
            const std::size_t i = std::size_t(y + kPad) * lay.wp + x + kPad;
            out.at(x, y) = float(acc[i] / part[i]);
        }
    return out;
}

double merge_weighted_sum(const MergeInput& in, const Plane& sigma2_map, double c,
                          const Plane& weights) {
    if (!in.target->same_dims(weights))
        fail(ErrorKind::Data, "merge_weighted_sum: weight dimension mismatch");
    const PaddedInput p(in);
    const TileLayout& lay = p.lay;
    const std::vector<double> acc = merge_accumulate(p, sigma2_map, c);
    const std::vector<double> part = window_partition(lay);

    double sum = 0.0;
    for (int y = 0; y < lay.h; ++y)
        for (int x = 0; x < lay.w; ++x) {
            const std::size_t i = std::size_t(y + kPad) * lay.wp + x + kPad;
            sum += acc[i] / part[i] * double(weights.at(x, y));
        }
    return sum;
}

Frame merge_frame(const AlignedSet& aligned, const ParamMaps& maps, double c) {
    Frame out;
    out.index = aligned.target.index;
    auto group = [&](const Plane Frame::*plane, const Plane& sigma2_map) {
        MergeInput in;
        in.target = &(aligned.target.*plane);
        for (int z = 0; z < 4; ++z) {
            in.alts[z] = &(aligned.neighbors[z].*plane);
            in.masks[z] = &aligned.masks[z].m;
        }
        return merge_plane(in, sigma2_map, c);
    };
    out.y = group(&Frame::y, maps.sigma2_luma);
    out.cb = group(&Frame::cb, maps.sigma2_chroma);
    out.cr = group(&Frame::cr, maps.sigma2_chroma);
    return out;
}

Plane d_merge_d_sigma2(const MergeInput& in, const Plane& sigma2_map, double c,
                       const Plane& upstream_grad) {
    if (!in.target->same_dims(upstream_grad))
        fail(ErrorKind::Data, "d_merge_d_sigma2: upstream gradient dimension mismatch");
    const PaddedInput p(in);
    const TileLayout& lay = p.lay;
    const std::vector<double> part = window_partition(lay);

    // upstream over the padded grid, already divided by the overlap partition
    std::vector<double> up(std::size_t(lay.wp) * lay.hp, 0.0);
    for (int y = 0; y < lay.h; ++y)
        for (int x = 0; x < lay.w; ++x) {
            const std::size_t i = std::size_t(y + kPad) * lay.wp + x + kPad;
            up[i] = double(upstream_grad.at(x, y)) / part[i];
        }

    Plane grad(sigma2_map.w, sigma2_map.h);
    Tile8 tile;
    std::array<Spectrum8, 4> alt_spec;
    std::array<bool, 4> use_alt;
    for (int ty = 0; ty < lay.ny; ++ty) {
        for (int tx = 0; tx < lay.nx; ++tx) {
            const int ox = tx * kStride, oy = ty * kStride;
            extract_windowed(p.target, lay, ox, oy, tile);
            const Spectrum8 t0 = dft8x8(tile);
            for (int z = 0; z < 4; ++z) {
                use_alt[z] = tile_fully_valid(p.masks[z], ox, oy);
                extract_windowed(p.alts[z], lay, ox, oy, tile);
                alt_spec[z] = dft8x8(tile);
            }
            const double sigma2 = sample_sigma2(sigma2_map, lay, tx, ty);

            // dM/dsigma2 = (1/5) sum_z dA_z/dsigma2 * D_z
            Spectrum8 dm{};
            for (int z = 0; z < 4; ++z) {
                if (!use_alt[z]) continue;
                for (int i = 0; i < 64; ++i) {
                    const std::complex<double> d = t0[i] - alt_spec[z][i];
                    const double d2 = std::norm(d);
                    const double denom = d2 + c * sigma2;
                    if (denom <= 0.0) continue;
                    const double da = -c * d2 / (denom * denom);
                    dm[i] += da * d;
                }
            }
            for (auto& v : dm) v *= 0.2;
            const Tile8 g = idft8x8(dm);

            double dot = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    dot += g[y * 8 + x] * lay.win2d[y * 8 + x] * up[std::size_t(oy + y) * lay.wp + ox + x];

            const MapFootprint fp = sigma2_footprint(sigma2_map, lay, tx, ty);
            auto add = [&](int mx, int my, double w) {
                grad.at(std::clamp(mx, 0, grad.w - 1), std::clamp(my, 0, grad.h - 1)) += float(dot * w);
            };
            add(fp.x0, fp.y0, fp.w00);
            add(fp.x0 + 1, fp.y0, fp.w10);
            add(fp.x0, fp.y0 + 1, fp.w01);
            add(fp.x0 + 1, fp.y0 + 1, fp.w11);
        }
    }
    return grad;
}

} // namespace rfcvd
