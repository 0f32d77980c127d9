#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfcvd {

// Error categories map onto the CLI exit codes.
enum class ErrorKind { Usage = 2, Io = 3, Environment = 4, Data = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Row-major float grid, values nominally in [0,1].
struct Plane {
    int w = 0;
    int h = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int width, int height, float fill = 0.0f)
        : w(width), h(height), data(std::size_t(width) * height, fill) {}

    float& at(int x, int y) { return data[std::size_t(y) * w + x]; }
    float at(int x, int y) const { return data[std::size_t(y) * w + x]; }
    float* row(int y) { return data.data() + std::size_t(y) * w; }
    const float* row(int y) const { return data.data() + std::size_t(y) * w; }
    std::size_t size() const { return data.size(); }
    bool same_dims(const Plane& o) const { return w == o.w && h == o.h; }

    // reflect-101 style clamp-free border handling is not used here; borders
    // reflect without repeating the edge sample twice
    float at_reflect(int x, int y) const;
    float at_clamp(int x, int y) const;

    bool all_finite() const;
};

struct Frame {
    Plane y, cb, cr;
    int index = 0;

    bool same_dims(const Frame& o) const {
        return y.same_dims(o.y) && cb.same_dims(o.cb) && cr.same_dims(o.cr);
    }
    int width() const { return y.w; }
    int height() const { return y.h; }
    void check_valid() const;
};

struct Clip {
    std::vector<Frame> frames;
    double frame_rate = 30.0;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    int width() const { return frames.empty() ? 0 : frames[0].width(); }
    int height() const { return frames.empty() ? 0 : frames[0].height(); }
    void check_valid() const;
};

int reflect_index(int i, int n);

} // namespace rfcvd
