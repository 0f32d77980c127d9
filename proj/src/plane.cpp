#include "rfcvd/plane.hpp"

#include <algorithm>
#include <cmath>

namespace rfcvd {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

float Plane::at_reflect(int x, int y) const {
    return at(reflect_index(x, w), reflect_index(y, h));
}

float Plane::at_clamp(int x, int y) const {
    return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
}

bool Plane::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Frame::check_valid() const {
    if (!y.same_dims(cb) || !y.same_dims(cr))
        fail(ErrorKind::Data, "frame " + std::to_string(index) + ": plane dimensions differ");
    if (!y.all_finite() || !cb.all_finite() || !cr.all_finite())
        fail(ErrorKind::Data, "frame " + std::to_string(index) + ": non-finite sample");
}

void Clip::check_valid() const {
    if (frames.empty()) fail(ErrorKind::Data, "empty clip");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].same_dims(frames[0]))
            fail(ErrorKind::Data, "frame " + std::to_string(i) + ": dimension mismatch");
        frames[i].check_valid();
    }
}

} // namespace rfcvd
