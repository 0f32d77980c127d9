#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rfcvd {

struct RgbImage {
    int w = 0;
    int h = 0;
    std::vector<std::uint8_t> rgb; // interleaved, 3 bytes per pixel
};

// 8-bit PNG only; RGBA alpha is dropped, gray expanded to RGB.
RgbImage read_png(const std::string& path);
void write_png(const RgbImage& img, const std::string& path);
std::vector<std::uint8_t> encode_png(const RgbImage& img);

} // namespace rfcvd
