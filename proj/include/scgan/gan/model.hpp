#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/nn/network.hpp"

namespace scgan::gan {

using data::SampleShape;
using nn::Activation;
using nn::LayerSpec;

/// Output head of the discriminator. `linear` is the unbounded Wasserstein critic;
/// `sigmoid` bounds the output to (0, 1) as in a standard GAN discriminator.
enum class CriticOutput : std::uint8_t { linear = 0, sigmoid = 1 };

struct ArchitectureOptions {
    double scale = 1.0;                     // multiplies every hidden width (rounded up)
    std::size_t noise_dim = 100;
    std::size_t kernel = 5;
    CriticOutput critic_output = CriticOutput::linear;
    bool critic_batch_norm = true;
    bool generator_batch_norm = true;
    Activation generator_output = Activation::sigmoid;
    double leaky_slope = 0.2;
    double init_std = 0.02;
    std::uint64_t seed = 1;
};

/// Generator and discriminator plus the shapes that tie them together.
template <typename T = float>
struct GanModel {
    nn::Network<T> generator;
    nn::Network<T> discriminator;
    std::size_t noise_dim = 100;
    SampleShape sample_shape;
    std::size_t label_dim = 0;
    CriticOutput critic_output = CriticOutput::linear;

    std::size_t generator_input_dim() const { return noise_dim + label_dim; }
    std::size_t critic_input_channels() const { return sample_shape.channels + label_dim; }
};

inline std::size_t scaled_width(std::size_t width, double scale) {
    if (!(scale > 0.0)) throw ConfigError("architecture scale must be positive");
    const double w = std::ceil(static_cast<double>(width) * scale - 1e-9);
    return static_cast<std::size_t>(std::max(1.0, w));
}

namespace detail {

inline void push_hidden(std::vector<LayerSpec>& specs, std::size_t features, bool batch_norm, Activation act,
                        double slope) {
    if (batch_norm) specs.push_back(LayerSpec::batch_norm(features));
    specs.push_back(LayerSpec::act(act, slope));
}

template <typename T>
void check_maps(const GanModel<T>& m) {
    const auto g_out = m.generator.output_shape({2, m.generator_input_dim()});
    if (nn::element_count(g_out) != 2 * m.sample_shape.size()) {
        throw ConfigError("generator does not map onto the sample shape");
    }
    const auto d_out = m.discriminator.output_shape(
        {2, m.critic_input_channels(), m.sample_shape.height, m.sample_shape.width});
    if (nn::element_count(d_out) != 2) throw ConfigError("discriminator must emit one score per sample");
}

} // namespace detail

/// Convolutional generator/discriminator pair:
///   G: MLP 2048 -> MLP 1024 -> MLP 128 x (H/4 x W/4) -> convT 128 -> convT 64 -> convT to C (stride 1)
///   D: conv 64 -> conv 128 -> MLP 1024 -> MLP 128 -> scalar
/// All widths are multiplied by `opt.scale`. Convolutions use stride 2 and opt.kernel with "same" padding.
template <typename T = float>
GanModel<T> build_conv_architecture(SampleShape shape, std::size_t label_dim, ArchitectureOptions opt = {}) {
    if (shape.height % 4 || shape.width % 4 || shape.height == 0 || shape.width == 0) {
        throw ConfigError("sample height and width must be divisible by 4 for two stride-2 stages");
    }
    if (opt.kernel % 2 == 0) throw ConfigError("kernel size must be odd");
    const auto w = [&](std::size_t base) { return scaled_width(base, opt.scale); };
    const std::size_t h4 = shape.height / 4, w4 = shape.width / 4;
    const std::size_t h2 = shape.height / 2, w2 = shape.width / 2;
    const std::size_t k = opt.kernel, pad = opt.kernel / 2;
    const double slope = opt.leaky_slope;
    const bool gbn = opt.generator_batch_norm, dbn = opt.critic_batch_norm;

    std::vector<LayerSpec> g;
    g.push_back(LayerSpec::dense(opt.noise_dim + label_dim, w(2048)));
    detail::push_hidden(g, w(2048), gbn, Activation::relu, slope);
    g.push_back(LayerSpec::dense(w(2048), w(1024)));
    detail::push_hidden(g, w(1024), gbn, Activation::relu, slope);
    g.push_back(LayerSpec::dense(w(1024), w(128) * h4 * w4));
    detail::push_hidden(g, w(128) * h4 * w4, gbn, Activation::relu, slope);
    g.push_back(LayerSpec::conv_transpose2d(w(128), w(128), h4, w4, k, 2, pad));
    detail::push_hidden(g, w(128), gbn, Activation::relu, slope);
    g.push_back(LayerSpec::conv_transpose2d(w(128), w(64), h2, w2, k, 2, pad));
    detail::push_hidden(g, w(64), gbn, Activation::relu, slope);
    g.push_back(LayerSpec::conv_transpose2d(w(64), shape.channels, shape.height, shape.width, k, 1, pad));
    g.push_back(LayerSpec::act(opt.generator_output));

    std::vector<LayerSpec> d;
    d.push_back(LayerSpec::conv2d(shape.channels + label_dim, w(64), shape.height, shape.width, k, 2, pad));
    d.push_back(LayerSpec::act(Activation::leaky_relu, slope));
    d.push_back(LayerSpec::conv2d(w(64), w(128), h2, w2, k, 2, pad));
    detail::push_hidden(d, w(128), dbn, Activation::leaky_relu, slope);
    d.push_back(LayerSpec::dense(w(128) * h4 * w4, w(1024)));
    detail::push_hidden(d, w(1024), dbn, Activation::leaky_relu, slope);
    d.push_back(LayerSpec::dense(w(1024), w(128)));
    detail::push_hidden(d, w(128), dbn, Activation::leaky_relu, slope);
    d.push_back(LayerSpec::dense(w(128), 1));
    if (opt.critic_output == CriticOutput::sigmoid) d.push_back(LayerSpec::act(Activation::sigmoid));

    std::mt19937_64 rng(opt.seed);
    GanModel<T> m;
    m.generator = nn::Network<T>(g, "generator", rng, opt.init_std);
    m.discriminator = nn::Network<T>(d, "discriminator", rng, opt.init_std);
    m.noise_dim = opt.noise_dim;
    m.sample_shape = shape;
    m.label_dim = label_dim;
    m.critic_output = opt.critic_output;
    detail::check_maps(m);
    return m;
}

/// Fully connected variant with the same width schedule (G: 2048, 1024; D: 1024, 128),
/// for low-dimensional samples that do not fit the convolutional stack.
template <typename T = float>
GanModel<T> build_mlp_architecture(SampleShape shape, std::size_t label_dim, ArchitectureOptions opt = {}) {
    const auto w = [&](std::size_t base) { return scaled_width(base, opt.scale); };
    const double slope = opt.leaky_slope;
    std::vector<LayerSpec> g;
    g.push_back(LayerSpec::dense(opt.noise_dim + label_dim, w(2048)));
    detail::push_hidden(g, w(2048), opt.generator_batch_norm, Activation::relu, slope);
    g.push_back(LayerSpec::dense(w(2048), w(1024)));
    detail::push_hidden(g, w(1024), opt.generator_batch_norm, Activation::relu, slope);
    g.push_back(LayerSpec::dense(w(1024), shape.size()));
    g.push_back(LayerSpec::act(opt.generator_output));

    std::vector<LayerSpec> d;
    d.push_back(LayerSpec::dense((shape.channels + label_dim) * shape.height * shape.width, w(1024)));
    d.push_back(LayerSpec::act(Activation::leaky_relu, slope));
    d.push_back(LayerSpec::dense(w(1024), w(128)));
    detail::push_hidden(d, w(128), opt.critic_batch_norm, Activation::leaky_relu, slope);
    d.push_back(LayerSpec::dense(w(128), 1));
    if (opt.critic_output == CriticOutput::sigmoid) d.push_back(LayerSpec::act(Activation::sigmoid));

    std::mt19937_64 rng(opt.seed);
    GanModel<T> m;
    m.generator = nn::Network<T>(g, "generator", rng, opt.init_std);
    m.discriminator = nn::Network<T>(d, "discriminator", rng, opt.init_std);
    m.noise_dim = opt.noise_dim;
    m.sample_shape = shape;
    m.label_dim = label_dim;
    m.critic_output = opt.critic_output;
    detail::check_maps(m);
    return m;
}

namespace detail {

template <typename T>
double mean_of(std::span<const T> v, const char* what) {
    if (v.empty()) throw DataError(std::string("empty batch for ") + what);
    double s = 0.0;
    for (T x : v) s += static_cast<double>(x);
    return s / static_cast<double>(v.size());
}

} // namespace detail

/// L_G = -mean D(G(z)).
template <typename T>
double generator_loss(std::span<const T> d_out_fake) {
    return -detail::mean_of(d_out_fake, "generator loss");
}

/// mean D(x) - mean D(G(z)): the dual-form estimate of the Wasserstein distance.
template <typename T>
double wasserstein_estimate(std::span<const T> d_out_real, std::span<const T> d_out_fake) {
    const double real = detail::mean_of(d_out_real, "Wasserstein estimate");
    const double fake = detail::mean_of(d_out_fake, "Wasserstein estimate");
    return real - fake;
}

/// L_D = -mean D(x) + mean D(G(z)); always the exact negation of wasserstein_estimate.
template <typename T>
double discriminator_loss(std::span<const T> d_out_real, std::span<const T> d_out_fake) {
    return -wasserstein_estimate(d_out_real, d_out_fake);
}

namespace detail {

template <typename T>
void check_one_hot(const nn::Tensor<T>& y, std::size_t batch, std::size_t label_dim) {
    if (y.rank() != 2 || y.dim(0) != batch || y.dim(1) != label_dim) {
        throw DataError("label batch must be (batch, " + std::to_string(label_dim) + ")");
    }
    for (std::size_t b = 0; b < batch; ++b) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < label_dim; ++j) {
            const T v = y[b * label_dim + j];
            if (v == T{1}) ++ones;
            else if (v != T{0}) throw DataError("label vector is not one-hot");
        }
        if (ones != 1) throw DataError("label vector is not one-hot");
    }
}

} // namespace detail

/// Generator side: concatenates the one-hot label onto each noise vector, (B, Z) -> (B, Z + L).
template <typename T>
nn::Tensor<T> condition_noise(const nn::Tensor<T>& z, const nn::Tensor<T>* y) {
    if (!y) return z;
    const std::size_t batch = z.dim(0), zdim = z.size() / batch, l = y->rank() == 2 ? y->dim(1) : 0;
    detail::check_one_hot(*y, batch, l);
    nn::Tensor<T> out({batch, zdim + l});
    for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(z.data().data() + b * zdim, zdim, out.data().data() + b * (zdim + l));
        std::copy_n(y->data().data() + b * l, l, out.data().data() + b * (zdim + l) + zdim);
    }
    return out;
}

/// Critic side: appends one constant channel per label entry, (B, C, H, W) -> (B, C + L, H, W).
template <typename T>
nn::Tensor<T> condition_sample(const nn::Tensor<T>& x, const nn::Tensor<T>* y, SampleShape shape) {
    if (!y) return x;
    const std::size_t batch = x.dim(0), l = y->rank() == 2 ? y->dim(1) : 0;
    detail::check_one_hot(*y, batch, l);
    if (x.size() != batch * shape.size()) throw ConfigError("sample batch does not match the sample shape");
    const std::size_t plane = shape.height * shape.width;
    nn::Tensor<T> out({batch, shape.channels + l, shape.height, shape.width});
    for (std::size_t b = 0; b < batch; ++b) {
        T* dst = out.data().data() + b * (shape.channels + l) * plane;
        std::copy_n(x.data().data() + b * shape.size(), shape.size(), dst);
        for (std::size_t j = 0; j < l; ++j) std::fill_n(dst + (shape.channels + j) * plane, plane, (*y)[b * l + j]);
    }
    return out;
}

/// Drops the label channels from a critic-input gradient, (B, C + L, H, W) -> (B, C*H*W).
template <typename T>
nn::Tensor<T> strip_label_channels(const nn::Tensor<T>& g, SampleShape shape) {
    const std::size_t batch = g.dim(0);
    const std::size_t per = g.size() / batch;
    nn::Tensor<T> out({batch, shape.size()});
    for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(g.data().data() + b * per, shape.size(), out.data().data() + b * shape.size());
    }
    return out;
}

/// One-hot label batch for class indices.
template <typename T>
nn::Tensor<T> one_hot_batch(std::span<const std::size_t> classes, std::size_t label_dim) {
    nn::Tensor<T> y({classes.size(), label_dim});
    for (std::size_t b = 0; b < classes.size(); ++b) {
        if (classes[b] >= label_dim) throw DataError("class index out of range");
        y[b * label_dim + classes[b]] = T{1};
    }
    return y;
}

} // namespace scgan::gan
