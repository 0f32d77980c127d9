#include "rfcvd/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace rfcvd {

double softplus(double x) {
    if (x > 20.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
    if (y < 1e-6) y = 1e-6;
    if (y > 20.0) return y;
    return std::log(std::expm1(y));
}

float prelu(float x, float slope) { return x >= 0.0f ? x : slope * x; }

Tensor* NetWeights::find(const std::string& name) {
    for (auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const Tensor* NetWeights::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const Tensor& NetWeights::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) fail(ErrorKind::Data, "missing tensor: " + name);
    return *t;
}

namespace {

struct TensorSpec {
    const char* name;
    std::vector<std::uint32_t> dims;
};

const std::vector<TensorSpec>& layout() {
    static const std::vector<TensorSpec> kLayout = {
        {"conv1.weight", {32, 25, 3, 3}}, {"conv1.bias", {32}},
        {"conv2.weight", {32, 32, 3, 3}}, {"conv2.bias", {32}},
        {"conv3.weight", {32, 32, 3, 3}}, {"conv3.bias", {32}},
        {"prelu1.slope", {1}},            {"prelu2.slope", {1}},
        {"head_sigma2_luma.weight", {1, 32, 1, 1}},   {"head_sigma2_luma.bias", {1}},
        {"head_sigma2_chroma.weight", {1, 32, 1, 1}}, {"head_sigma2_chroma.bias", {1}},
        {"head_sigmad_luma.weight", {3, 32, 1, 1}},   {"head_sigmad_luma.bias", {3}},
        {"head_sigmad_chroma.weight", {3, 32, 1, 1}}, {"head_sigmad_chroma.bias", {3}},
        {"head_sigmar_luma.weight", {3, 32, 1, 1}},   {"head_sigmar_luma.bias", {3}},
        {"head_sigmar_chroma.weight", {3, 32, 1, 1}}, {"head_sigmar_chroma.bias", {3}},
    };
    return kLayout;
}

} // namespace

void NetWeights::check_shapes() const {
    for (const auto& spec : layout()) {
        const Tensor& t = require(spec.name);
        if (t.dims != spec.dims)
            fail(ErrorKind::Data, std::string("tensor ") + spec.name + ": unexpected shape");
        if (t.data.size() != t.count())
            fail(ErrorKind::Data, std::string("tensor ") + spec.name + ": data size mismatch");
        for (float v : t.data)
            if (!std::isfinite(v)) fail(ErrorKind::Data, std::string("tensor ") + spec.name + ": non-finite value");
    }
}

NetWeights zero_weights() {
    NetWeights w;
    for (const auto& spec : layout()) {
        Tensor t;
        t.name = spec.name;
        t.dims = spec.dims;
        t.data.assign(t.count(), 0.0f);
        w.tensors.push_back(std::move(t));
    }
    return w;
}

NetWeights default_theta0() {
    NetWeights w = zero_weights();
    std::mt19937 rng(0x52464357u);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (const char* name : {"conv1.weight", "conv2.weight", "conv3.weight"}) {
        Tensor& t = *w.find(name);
        const float fan_in = float(t.dims[1] * t.dims[2] * t.dims[3]);
        const float scale = 0.1f * std::sqrt(2.0f / fan_in);
        for (float& v : t.data) v = scale * dist(rng);
    }
    w.find("prelu1.slope")->data[0] = 0.25f;
    w.find("prelu2.slope")->data[0] = 0.25f;

    // head kernels stay zero: with theta0 alone or a bias-only profile delta,
    // parameter maps are exactly softplus(bias)
    const float sigma2_bias = float(inverse_softplus(1e-4));
    w.find("head_sigma2_luma.bias")->data[0] = sigma2_bias;
    w.find("head_sigma2_chroma.bias")->data[0] = sigma2_bias;
    const double sigmad_levels[3] = {1.5, 1.5, 2.0};
    for (const char* name : {"head_sigmad_luma.bias", "head_sigmad_chroma.bias"}) {
        Tensor& t = *w.find(name);
        for (int k = 0; k < 3; ++k) t.data[k] = float(inverse_softplus(sigmad_levels[k]));
    }
    const float sigmar_bias = float(inverse_softplus(0.02));
    for (const char* name : {"head_sigmar_luma.bias", "head_sigmar_chroma.bias"}) {
        Tensor& t = *w.find(name);
        for (int k = 0; k < 3; ++k) t.data[k] = sigmar_bias;
    }
    return w;
}

NetWeights add_weights(const NetWeights& a, const NetWeights& b) {
    if (a.tensors.size() != b.tensors.size()) fail(ErrorKind::Data, "weight sets differ in tensor count");
    NetWeights out = a;
    for (std::size_t i = 0; i < out.tensors.size(); ++i) {
        const Tensor& bt = b.tensors[i];
        Tensor& ot = out.tensors[i];
        if (ot.name != bt.name || !ot.same_shape(bt))
            fail(ErrorKind::Data, "shape mismatch for tensor " + ot.name);
        for (std::size_t j = 0; j < ot.data.size(); ++j) ot.data[j] += bt.data[j];
    }
    return out;
}

namespace {

constexpr char kMagic[5] = {'R', 'F', 'C', 'W', '1'};

template <class T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_raw(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) fail(ErrorKind::Io, path + ": truncated weight file");
    return v;
}

} // namespace

void save_weights(const NetWeights& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot create " + path);
    f.write(kMagic, sizeof(kMagic));
    write_raw(f, std::uint32_t(w.tensors.size()));
    for (const Tensor& t : w.tensors) {
        write_raw(f, std::uint32_t(t.name.size()));
        f.write(t.name.data(), std::streamsize(t.name.size()));
        write_raw(f, std::uint32_t(t.dims.size()));
        for (auto d : t.dims) write_raw(f, d);
        f.write(reinterpret_cast<const char*>(t.data.data()),
                std::streamsize(t.data.size() * sizeof(float)));
    }
    if (!f) fail(ErrorKind::Io, "write failed: " + path);
}

NetWeights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open " + path);
    char magic[5];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        fail(ErrorKind::Io, path + ": bad magic, not an RFCW1 file");
    const auto count = read_raw<std::uint32_t>(f, path);
    NetWeights w;
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const auto name_len = read_raw<std::uint32_t>(f, path);
        t.name.resize(name_len);
        f.read(t.name.data(), name_len);
        const auto rank = read_raw<std::uint32_t>(f, path);
        for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(read_raw<std::uint32_t>(f, path));
        t.data.resize(t.count());
        f.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size() * sizeof(float)));
        if (!f) fail(ErrorKind::Io, path + ": truncated weight file");
        w.tensors.push_back(std::move(t));
    }
    return w;
}

} // namespace rfcvd
