#pragma once

#include "rfcvd/plane.hpp"
#include "rfcvd/png_io.hpp"

#include <string>

namespace rfcvd {

// YUV4MPEG2, 8-bit, C420 or C444. 4:2:0 chroma is bilinearly upsampled to
// 4:4:4 on read; writing always emits C444.
Clip read_y4m(const std::string& path);
void write_y4m(const Clip& clip, const std::string& path);

// All PNGs matching `pattern` (a single '*' wildcard, e.g. "frame_*.png")
// inside `dir`, ordered by the numeric index embedded in the filename.
Clip read_png_sequence(const std::string& dir, const std::string& pattern = "*.png");

Frame frame_from_rgb(const RgbImage& img, int index);
RgbImage frame_to_rgb(const Frame& f);

// round-half-up after clamping to [0,1]
std::uint8_t quantize_u8(float v);

} // namespace rfcvd
