#include "rfcvd/media_io.hpp"

#include "rfcvd/color.hpp"
#include "rfcvd/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace rfcvd {

std::uint8_t quantize_u8(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return std::uint8_t(std::floor(c * 255.0f + 0.5f));
}

namespace {

struct Y4mHeader {
    int w = 0, h = 0;
    int fps_num = 30, fps_den = 1;
    bool chroma420 = false;
};

Y4mHeader parse_y4m_header(const std::string& line, const std::string& path) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok != "YUV4MPEG2") fail(ErrorKind::Io, path + ": not a YUV4MPEG2 file");
    Y4mHeader hdr;
    std::string chroma = "420";
    while (ss >> tok) {
        if (tok.empty()) continue;
        switch (tok[0]) {
            case 'W': hdr.w = std::atoi(tok.c_str() + 1); break;
            case 'H': hdr.h = std::atoi(tok.c_str() + 1); break;
            case 'F': {
                if (std::sscanf(tok.c_str() + 1, "%d:%d", &hdr.fps_num, &hdr.fps_den) != 2)
                    fail(ErrorKind::Io, path + ": malformed frame rate");
                break;
            }
            case 'C': chroma = tok.substr(1); break;
            default: break; // interlacing / aspect tokens ignored
        }
    }
    if (hdr.w <= 0 || hdr.h <= 0) fail(ErrorKind::Io, path + ": malformed Y4M header");
    if (hdr.fps_num <= 0 || hdr.fps_den <= 0) fail(ErrorKind::Io, path + ": bad frame rate");
    if (chroma == "420" || chroma == "420jpeg" || chroma == "420mpeg2" || chroma == "420paldv") {
        hdr.chroma420 = true;
        if (hdr.w % 2 || hdr.h % 2) fail(ErrorKind::Io, path + ": odd dimensions with 4:2:0");
    } else if (chroma == "444") {
        hdr.chroma420 = false;
    } else {
        fail(ErrorKind::Io, path + ": unsupported chroma subsampling C" + chroma);
    }
    return hdr;
}

Plane plane_from_bytes(const std::uint8_t* bytes, int w, int h) {
    Plane p(w, h);
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = bytes[i] / 255.0f;
    return p;
}

} // namespace

Clip read_y4m(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) fail(ErrorKind::Io, path + ": empty file");
    const Y4mHeader hdr = parse_y4m_header(line, path);

    const std::size_t y_size = std::size_t(hdr.w) * hdr.h;
    const std::size_t c_size = hdr.chroma420 ? y_size / 4 : y_size;
    std::vector<std::uint8_t> buf(y_size + 2 * c_size);

    Clip clip;
    clip.frame_rate = double(hdr.fps_num) / hdr.fps_den;
    int index = 0;
    while (std::getline(f, line)) {
        if (line.rfind("FRAME", 0) != 0) fail(ErrorKind::Io, path + ": missing FRAME marker");
        f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
        if (std::size_t(f.gcount()) != buf.size())
            fail(ErrorKind::Io, path + ": truncated frame " + std::to_string(index));
        Frame frame;
        frame.index = index++;
        frame.y = plane_from_bytes(buf.data(), hdr.w, hdr.h);
        if (hdr.chroma420) {
            const int cw = hdr.w / 2, ch = hdr.h / 2;
            frame.cb = resize_bilinear(plane_from_bytes(buf.data() + y_size, cw, ch), hdr.w, hdr.h);
            frame.cr = resize_bilinear(plane_from_bytes(buf.data() + y_size + c_size, cw, ch), hdr.w, hdr.h);
        } else {
            frame.cb = plane_from_bytes(buf.data() + y_size, hdr.w, hdr.h);
            frame.cr = plane_from_bytes(buf.data() + 2 * y_size, hdr.w, hdr.h);
        }
        clip.frames.push_back(std::move(frame));
    }
    if (clip.empty()) fail(ErrorKind::Io, path + ": no frames");
    return clip;
}

void write_y4m(const Clip& clip, const std::string& path) {
    clip.check_valid();
    // frame rate emitted as a rational with millisecond precision
    const int num = int(std::lround(clip.frame_rate * 1000.0));
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot create " + path);
    f << "YUV4MPEG2 W" << clip.width() << " H" << clip.height()
      << " F" << num << ":1000 Ip A1:1 C444\n";
    std::vector<std::uint8_t> buf(std::size_t(clip.width()) * clip.height());
    for (const Frame& frame : clip.frames) {
        f << "FRAME\n";
        for (const Plane* p : {&frame.y, &frame.cb, &frame.cr}) {
            for (std::size_t i = 0; i < p->size(); ++i) buf[i] = quantize_u8(p->data[i]);
            f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
        }
    }
    if (!f) fail(ErrorKind::Io, "write failed: " + path);
}

Frame frame_from_rgb(const RgbImage& img, int index) {
    Frame f;
    f.index = index;
    f.y = Plane(img.w, img.h);
    f.cb = Plane(img.w, img.h);
    f.cr = Plane(img.w, img.h);
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        const std::uint8_t* px = img.rgb.data() + i * 3;
        const YCbCr c = rgb_to_ycbcr(px[0] / 255.0f, px[1] / 255.0f, px[2] / 255.0f);
        f.y.data[i] = c.y;
        f.cb.data[i] = c.cb;
        f.cr.data[i] = c.cr;
    }
    return f;
}

RgbImage frame_to_rgb(const Frame& f) {
    RgbImage img;
    img.w = f.width();
    img.h = f.height();
    img.rgb.resize(std::size_t(img.w) * img.h * 3);
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        const Rgb c = ycbcr_to_rgb(f.y.data[i], f.cb.data[i], f.cr.data[i]);
        img.rgb[i * 3 + 0] = quantize_u8(c.r);
        img.rgb[i * 3 + 1] = quantize_u8(c.g);
        img.rgb[i * 3 + 2] = quantize_u8(c.b);
    }
    return img;
}

namespace {

bool wildcard_match(const std::string& pattern, const std::string& name) {
    const auto star = pattern.find('*');
    if (star == std::string::npos) return pattern == name;
    const std::string prefix = pattern.substr(0, star);
    const std::string suffix = pattern.substr(star + 1);
    return name.size() >= prefix.size() + suffix.size() &&
           name.compare(0, prefix.size(), prefix) == 0 &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<long> numeric_index(const std::string& name) {
    // last run of digits in the stem
    const std::string stem = std::filesystem::path(name).stem().string();
    long value = 0;
    bool found = false;
    for (std::size_t i = stem.size(); i-- > 0;) {
        if (std::isdigit(static_cast<unsigned char>(stem[i]))) {
            std::size_t end = i + 1, begin = i;
            while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
            value = std::atol(stem.substr(begin, end - begin).c_str());
            found = true;
            break;
        }
    }
    if (!found) return std::nullopt;
    return value;
}

} // namespace

Clip read_png_sequence(const std::string& dir, const std::string& pattern) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir + ": not a directory");
    std::vector<std::pair<long, std::string>> matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (!wildcard_match(pattern, name)) continue;
        const auto idx = numeric_index(name);
        matches.emplace_back(idx.value_or(long(matches.size())), entry.path().string());
    }
    if (matches.empty()) fail(ErrorKind::Io, dir + ": no files match " + pattern);
    std::sort(matches.begin(), matches.end());

    Clip clip;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const RgbImage img = read_png(matches[i].second);
        Frame f = frame_from_rgb(img, int(i));
        if (i > 0 && !f.same_dims(clip.frames[0]))
            fail(ErrorKind::Data, matches[i].second + ": dimension mismatch");
        clip.frames.push_back(std::move(f));
    }
    return clip;
}

} // namespace rfcvd
