#pragma once

#include "rfcvd/plane.hpp"

#include <cstdint>
#include <string>

namespace rfcvd {

// variance is on the 8-bit scale (sigma = sqrt(var)/255 in working units)
Clip add_awgn(const Clip& clip, double variance_8bit, std::uint64_t seed);

// white noise convolved with a Gaussian and rescaled to the target variance
Clip add_correlated_noise(const Clip& clip, double variance_8bit, double blur_sigma,
                          std::uint64_t seed);

// Motion-compensated DCT-quantization codec simulator. Frame 0 and every
// gop-th frame are intra coded; other frames are predicted from the previous
// reconstruction via 16x16 full-search motion estimation (+-8 px, luma SAD)
// with the residual DCT-quantized at the same quality.
Clip compress_sim(const Clip& clip, int quality, int gop);

// quantizer step on the 8-bit scale for a given quality
double quant_step(int quality);

// Round-trip through an external encoder. The command template may use
// {input}, {output} and {crf} placeholders; Y4M is the exchange format.
Clip transcode_external(const Clip& clip, int crf, const std::string& encoder_cmd);

} // namespace rfcvd
