#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "scgan/error.hpp"
#include "scgan/nn/layer_spec.hpp"
#include "scgan/nn/tensor.hpp"

namespace scgan::nn {

/// Thrown when batch normalization is asked for batch statistics of a single sample.
class DegenerateBatchError : public DataError {
public:
    using DataError::DataError;
};

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
    std::size_t channels, height, width;  // image side
    std::size_t kernel, stride, padding;
    std::size_t out_height, out_width;    // column side (one column per output pixel)
};

/// cols[(c*k + ki)*k + kj][b*P + oy*OW + ox] = image[b][c][oy*s - p + ki][ox*s - p + kj] (zero outside).
template <typename T>
void im2col(const T* image, std::size_t batch, const ConvGeometry& g, T* cols) {
    const std::size_t pixels = g.out_height * g.out_width;
    const std::size_t ncols = batch * pixels;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                T* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * ncols;
                for (std::size_t b = 0; b < batch; ++b) {
                    const T* plane = image + (b * g.channels + c) * g.height * g.width;
                    T* out = row + b * pixels;
                    for (std::size_t oy = 0; oy < g.out_height; ++oy) {
                        const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
                        T* out_row = out + oy * g.out_width;
                        if (iy < 0 || iy >= static_cast<long>(g.height)) {
                            std::fill(out_row, out_row + g.out_width, T{0});
                            continue;
                        }
                        const T* in_row = plane + static_cast<std::size_t>(iy) * g.width;
                        for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
                            out_row[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T{0} : in_row[ix];
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatters-adds columns back onto the (zero-initialized by caller) image.
template <typename T>
void col2im(const T* cols, std::size_t batch, const ConvGeometry& g, T* image) {
    const std::size_t pixels = g.out_height * g.out_width;
    const std::size_t ncols = batch * pixels;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                const T* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * ncols;
                for (std::size_t b = 0; b < batch; ++b) {
                    T* plane = image + (b * g.channels + c) * g.height * g.width;
                    const T* in = row + b * pixels;
                    for (std::size_t oy = 0; oy < g.out_height; ++oy) {
                        const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
                        if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                        T* img_row = plane + static_cast<std::size_t>(iy) * g.width;
                        const T* in_row = in + oy * g.out_width;
                        for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
                            if (ix >= 0 && ix < static_cast<long>(g.width)) img_row[ix] += in_row[ox];
                        }
                    }
                }
            }
        }
    }
}

/// (B, C, P) -> (C, B*P)
template <typename T>
void to_channel_major(const T* src, std::size_t batch, std::size_t channels, std::size_t pixels, T* dst) {
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c)
            std::copy_n(src + (b * channels + c) * pixels, pixels, dst + c * batch * pixels + b * pixels);
}

/// (C, B*P) -> (B, C, P)
template <typename T>
void from_channel_major(const T* src, std::size_t batch, std::size_t channels, std::size_t pixels, T* dst) {
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c)
            std::copy_n(src + c * batch * pixels + b * pixels, pixels, dst + (b * channels + c) * pixels);
}

template <typename T>
Tensor<T> gaussian_tensor(Shape shape, std::mt19937_64& rng, double stddev) {
    Tensor<T> t(std::move(shape));
    if (stddev == 0.0) return t;
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    return t;
}

template <typename T>
void accumulate(Parameter<T>& p, const T* grad) {
    auto g = p.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
    p.grad_ready = true;
}

inline void require_cache(bool present, LayerKind kind) {
    if (!present) throw StateError(std::string("backward on ") + to_string(kind) + " without a recorded forward pass");
}

template <typename T>
void require_same_shape(const Tensor<T>& grad, const Shape& expected, LayerKind kind) {
    if (grad.shape() != expected) {
        throw ConfigError(std::string(to_string(kind)) + " output gradient has shape " + to_string(grad.shape()) +
                          ", expected " + to_string(expected));
    }
}

} // namespace detail

/// Weight initialization source shared by all layers of one network.
struct Init {
    std::mt19937_64* rng = nullptr;
    double weight_std = 0.02;
};

template <typename T>
class Dense {
public:
    Dense(LayerSpec spec, const std::string& prefix, Init init)
        : spec_(std::move(spec)),
          weight_(prefix + "weight", detail::gaussian_tensor<T>({spec_.out_features, spec_.in_features}, *init.rng,
                                                               init.weight_std)),
          bias_(prefix + "bias", Tensor<T>({spec_.out_features})) {
        spec_.validate();
    }

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        Tensor<T> y = predict(x);
        input_ = x;
        output_shape_ = y.shape();
        return y;
    }

    Tensor<T> predict(const Tensor<T>& x) const {
        Tensor<T> y(spec_.output_shape(x.shape()));
        const auto batch = static_cast<Eigen::Index>(x.dim(0));
        detail::ConstMatrixMap<T> in(x.data().data(), batch, spec_.in_features);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.out_features, spec_.in_features);
        detail::MatrixMap<T> out(y.data().data(), batch, spec_.out_features);
        out.noalias() = in * w.transpose();
        Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.data().data(), spec_.out_features);
        out.rowwise() += b;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(input_.has_value(), spec_.kind);
        detail::require_same_shape(grad_out, output_shape_, spec_.kind);
        const auto batch = static_cast<Eigen::Index>(input_->dim(0));
        detail::ConstMatrixMap<T> g(grad_out.data().data(), batch, spec_.out_features);
        detail::ConstMatrixMap<T> in(input_->data().data(), batch, spec_.in_features);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.out_features, spec_.in_features);

        detail::MatrixMap<T> gw(weight_.value.grad().data(), spec_.out_features, spec_.in_features);
        gw.noalias() += g.transpose() * in;
        weight_.grad_ready = true;
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(bias_.value.grad().data(), spec_.out_features);
        gb += g.colwise().sum();
        bias_.grad_ready = true;

        Tensor<T> grad_in(input_->shape());
        detail::MatrixMap<T> gi(grad_in.data().data(), batch, spec_.in_features);
        gi.noalias() = g * w;
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {&weight_, &bias_}; }
    std::vector<const Parameter<T>*> parameters() const { return {&weight_, &bias_}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    std::vector<const Buffer<T>*> buffers() const { return {}; }

private:
    LayerSpec spec_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    std::optional<Tensor<T>> input_;
    Shape output_shape_;
};

/// Strided 2-D convolution, NCHW, weight (out_channels, in_channels, k, k).
template <typename T>
class Conv2d {
public:
    Conv2d(LayerSpec spec, const std::string& prefix, Init init)
        : spec_(std::move(spec)),
          weight_(prefix + "weight",
                  detail::gaussian_tensor<T>({spec_.out_channels, spec_.in_channels, spec_.kernel, spec_.kernel},
                                             *init.rng, init.weight_std)),
          bias_(prefix + "bias", Tensor<T>({spec_.out_channels})) {
        spec_.validate();
    }

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        const Shape out_shape = spec_.output_shape(x.shape());
        const std::size_t batch = x.dim(0);
        cols_.assign(rows() * batch * pixels(), T{0});
        detail::im2col(x.data().data(), batch, geometry(), cols_.data());
        input_shape_ = x.shape();
        output_shape_ = out_shape;
        recorded_ = true;
        return multiply(cols_, batch, out_shape);
    }

    Tensor<T> predict(const Tensor<T>& x) const {
        const Shape out_shape = spec_.output_shape(x.shape());
        const std::size_t batch = x.dim(0);
        Storage<T> cols(rows() * batch * pixels());
        detail::im2col(x.data().data(), batch, geometry(), cols.data());
        return multiply(cols, batch, out_shape);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(recorded_, spec_.kind);
        detail::require_same_shape(grad_out, output_shape_, spec_.kind);
        const std::size_t batch = input_shape_[0];
        const auto n = static_cast<Eigen::Index>(batch * pixels());
        Storage<T> gmat(spec_.out_channels * batch * pixels());
        detail::to_channel_major(grad_out.data().data(), batch, spec_.out_channels, pixels(), gmat.data());
        detail::ConstMatrixMap<T> g(gmat.data(), spec_.out_channels, n);
        detail::ConstMatrixMap<T> cols(cols_.data(), rows(), n);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.out_channels, rows());

        detail::MatrixMap<T> gw(weight_.value.grad().data(), spec_.out_channels, rows());
        gw.noalias() += g * cols.transpose();
        weight_.grad_ready = true;
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(bias_.value.grad().data(), spec_.out_channels);
        gb += g.rowwise().sum();
        bias_.grad_ready = true;

        Storage<T> gcols(rows() * batch * pixels());
        detail::MatrixMap<T>(gcols.data(), rows(), n).noalias() = w.transpose() * g;
        Tensor<T> grad_in(input_shape_);
        detail::col2im(gcols.data(), batch, geometry(), grad_in.data().data());
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {&weight_, &bias_}; }
    std::vector<const Parameter<T>*> parameters() const { return {&weight_, &bias_}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    std::vector<const Buffer<T>*> buffers() const { return {}; }

private:
    std::size_t rows() const { return spec_.in_channels * spec_.kernel * spec_.kernel; }
    std::size_t pixels() const { return spec_.out_height() * spec_.out_width(); }
    detail::ConvGeometry geometry() const {
        return {spec_.in_channels, spec_.in_height, spec_.in_width, spec_.kernel,
                spec_.stride,      spec_.padding,   spec_.out_height(), spec_.out_width()};
    }

    Tensor<T> multiply(const Storage<T>& cols_data, std::size_t batch, const Shape& out_shape) const {
        const auto n = static_cast<Eigen::Index>(batch * pixels());
        detail::ConstMatrixMap<T> cols(cols_data.data(), rows(), n);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.out_channels, rows());
        detail::RowMatrix<T> out = w * cols;
        for (std::size_t c = 0; c < spec_.out_channels; ++c) out.row(c).array() += bias_.value[c];
        Tensor<T> y(out_shape);
        detail::from_channel_major(out.data(), batch, spec_.out_channels, pixels(), y.data().data());
        return y;
    }

    LayerSpec spec_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    Storage<T> cols_;
    Shape input_shape_;
    Shape output_shape_;
    bool recorded_ = false;
};

/// Transposed convolution (the adjoint of Conv2d's input map), weight (in_channels, out_channels, k, k).
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d(LayerSpec spec, const std::string& prefix, Init init)
        : spec_(std::move(spec)),
          weight_(prefix + "weight",
                  detail::gaussian_tensor<T>({spec_.in_channels, spec_.out_channels, spec_.kernel, spec_.kernel},
                                             *init.rng, init.weight_std)),
          bias_(prefix + "bias", Tensor<T>({spec_.out_channels})) {
        spec_.validate();
    }

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        Tensor<T> y = predict_impl(x, &xmat_);
        input_shape_ = x.shape();
        output_shape_ = y.shape();
        recorded_ = true;
        return y;
    }

    Tensor<T> predict(const Tensor<T>& x) const { return predict_impl(x, nullptr); }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(recorded_, spec_.kind);
        detail::require_same_shape(grad_out, output_shape_, spec_.kind);
        const std::size_t batch = input_shape_[0];
        const auto n = static_cast<Eigen::Index>(batch * in_pixels());
        Storage<T> gcols(cols_rows() * batch * in_pixels());
        detail::im2col(grad_out.data().data(), batch, geometry(), gcols.data());
        detail::ConstMatrixMap<T> gc(gcols.data(), cols_rows(), n);
        detail::ConstMatrixMap<T> x(xmat_.data(), spec_.in_channels, n);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.in_channels, cols_rows());

        detail::MatrixMap<T> gw(weight_.value.grad().data(), spec_.in_channels, cols_rows());
        gw.noalias() += x * gc.transpose();
        weight_.grad_ready = true;

        auto gb = bias_.value.grad();
        const std::size_t out_pixels = spec_.out_height() * spec_.out_width();
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < spec_.out_channels; ++c) {
                const T* plane = grad_out.data().data() + (b * spec_.out_channels + c) * out_pixels;
                T sum{0};
                for (std::size_t i = 0; i < out_pixels; ++i) sum += plane[i];
                gb[c] += sum;
            }
        bias_.grad_ready = true;

        detail::RowMatrix<T> gx = w * gc;
        Tensor<T> grad_in(input_shape_);
        detail::from_channel_major(gx.data(), batch, spec_.in_channels, in_pixels(), grad_in.data().data());
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {&weight_, &bias_}; }
    std::vector<const Parameter<T>*> parameters() const { return {&weight_, &bias_}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    std::vector<const Buffer<T>*> buffers() const { return {}; }

private:
    std::size_t cols_rows() const { return spec_.out_channels * spec_.kernel * spec_.kernel; }
    std::size_t in_pixels() const { return spec_.in_height * spec_.in_width; }
    // The output image plays the role of a convolution input whose columns are the input pixels.
    detail::ConvGeometry geometry() const {
        return {spec_.out_channels, spec_.out_height(), spec_.out_width(), spec_.kernel,
                spec_.stride,       spec_.padding,      spec_.in_height,   spec_.in_width};
    }

    Tensor<T> predict_impl(const Tensor<T>& x, Storage<T>* keep_xmat) const {
        const Shape out_shape = spec_.output_shape(x.shape());
        const std::size_t batch = x.dim(0);
        const auto n = static_cast<Eigen::Index>(batch * in_pixels());
        Storage<T> xmat(spec_.in_channels * batch * in_pixels());
        detail::to_channel_major(x.data().data(), batch, spec_.in_channels, in_pixels(), xmat.data());
        detail::ConstMatrixMap<T> xm(xmat.data(), spec_.in_channels, n);
        detail::ConstMatrixMap<T> w(weight_.value.data().data(), spec_.in_channels, cols_rows());
        detail::RowMatrix<T> cols = w.transpose() * xm;
        Tensor<T> y(out_shape);
        detail::col2im(cols.data(), batch, geometry(), y.data().data());
        const std::size_t out_pixels = spec_.out_height() * spec_.out_width();
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < spec_.out_channels; ++c) {
                T* plane = y.data().data() + (b * spec_.out_channels + c) * out_pixels;
                const T bias = bias_.value[c];
                for (std::size_t i = 0; i < out_pixels; ++i) plane[i] += bias;
            }
        if (keep_xmat) *keep_xmat = std::move(xmat);
        return y;
    }

    LayerSpec spec_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    Storage<T> xmat_;
    Shape input_shape_;
    Shape output_shape_;
    bool recorded_ = false;
};

/// Batch normalization over axis 1: per feature for (B, F), per channel for (B, C, H, W).
template <typename T>
class BatchNorm {
public:
    BatchNorm(LayerSpec spec, const std::string& prefix, Init /*init*/)
        : spec_(std::move(spec)),
          gamma_(prefix + "gamma", Tensor<T>({spec_.features}, T{1})),
          beta_(prefix + "beta", Tensor<T>({spec_.features}, T{0})),
          running_mean_{prefix + "running_mean", Tensor<T>({spec_.features}, T{0})},
          running_var_{prefix + "running_var", Tensor<T>({spec_.features}, T{1})} {
        spec_.validate();
    }

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (!training) {
            Tensor<T> y = predict(x);
            const std::size_t f = spec_.features;
            const std::size_t inner = x.size() / (x.dim(0) * f);
            xhat_ = Tensor<T>(x.shape());
            inv_std_.assign(f, T{0});
            for (std::size_t c = 0; c < f; ++c) {
                inv_std_[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + spec_.epsilon));
                for (std::size_t b = 0; b < x.dim(0); ++b) {
                    const std::size_t off = (b * f + c) * inner;
                    for (std::size_t i = 0; i < inner; ++i)
                        xhat_[off + i] = (x[off + i] - running_mean_.value[c]) * inv_std_[c];
                }
            }
            mode_ = Mode::inference;
            output_shape_ = y.shape();
            return y;
        }
        spec_.output_shape(x.shape());
        const std::size_t batch = x.dim(0);
        if (batch < 2) throw DegenerateBatchError("batch_norm in training mode needs a batch of at least 2 samples");
        const std::size_t f = spec_.features;
        const std::size_t inner = x.size() / (batch * f);
        const std::size_t count = batch * inner;

        xhat_ = Tensor<T>(x.shape());
        inv_std_.assign(f, T{0});
        Tensor<T> y(x.shape());
        for (std::size_t c = 0; c < f; ++c) {
            double sum = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const T* p = x.data().data() + (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) sum += p[i];
            }
            const double mean = sum / static_cast<double>(count);
            double sq = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const T* p = x.data().data() + (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) sq += (p[i] - mean) * (p[i] - mean);
            }
            const double var = sq / static_cast<double>(count);
            const double inv = 1.0 / std::sqrt(var + spec_.epsilon);
            inv_std_[c] = static_cast<T>(inv);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t off = (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    const T h = static_cast<T>((x[off + i] - mean) * inv);
                    xhat_[off + i] = h;
                    y[off + i] = gamma_.value[c] * h + beta_.value[c];
                }
            }
            const double unbiased = sq / static_cast<double>(count - 1);
            const double m = spec_.momentum;
            running_mean_.value[c] = static_cast<T>(m * running_mean_.value[c] + (1.0 - m) * mean);
            running_var_.value[c] = static_cast<T>(m * running_var_.value[c] + (1.0 - m) * unbiased);
        }
        mode_ = Mode::training;
        output_shape_ = y.shape();
        return y;
    }

    /// Inference mode: normalizes with the running statistics.
    Tensor<T> predict(const Tensor<T>& x) const {
        spec_.output_shape(x.shape());
        const std::size_t batch = x.dim(0);
        const std::size_t f = spec_.features;
        const std::size_t inner = x.size() / (batch * f);
        Tensor<T> y(x.shape());
        for (std::size_t c = 0; c < f; ++c) {
            const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + spec_.epsilon));
            const T scale = gamma_.value[c] * inv;
            const T shift = beta_.value[c] - running_mean_.value[c] * scale;
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t off = (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) y[off + i] = x[off + i] * scale + shift;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(mode_ != Mode::none, spec_.kind);
        detail::require_same_shape(grad_out, output_shape_, spec_.kind);
        const std::size_t batch = grad_out.dim(0);
        const std::size_t f = spec_.features;
        const std::size_t inner = grad_out.size() / (batch * f);
        Tensor<T> grad_in(grad_out.shape());
        auto gg = gamma_.value.grad();
        auto gbeta = beta_.value.grad();
        if (mode_ == Mode::inference) {
            // Running statistics are constants here, so the map is affine per feature.
            for (std::size_t c = 0; c < f; ++c) {
                double sum_g = 0.0, sum_gh = 0.0;
                for (std::size_t b = 0; b < batch; ++b) {
                    const std::size_t off = (b * f + c) * inner;
                    for (std::size_t i = 0; i < inner; ++i) {
                        sum_g += grad_out[off + i];
                        sum_gh += static_cast<double>(grad_out[off + i]) * xhat_[off + i];
                        grad_in[off + i] = grad_out[off + i] * gamma_.value[c] * inv_std_[c];
                    }
                }
                gg[c] += static_cast<T>(sum_gh);
                gbeta[c] += static_cast<T>(sum_g);
            }
            gamma_.grad_ready = true;
            beta_.grad_ready = true;
            return grad_in;
        }
        const double count = static_cast<double>(batch * inner);
        for (std::size_t c = 0; c < f; ++c) {
            double sum_g = 0.0, sum_gh = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t off = (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    sum_g += grad_out[off + i];
                    sum_gh += static_cast<double>(grad_out[off + i]) * xhat_[off + i];
                }
            }
            gg[c] += static_cast<T>(sum_gh);
            gbeta[c] += static_cast<T>(sum_g);
            const double k = gamma_.value[c] * inv_std_[c] / count;
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t off = (b * f + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    grad_in[off + i] =
                        static_cast<T>(k * (count * grad_out[off + i] - sum_g - xhat_[off + i] * sum_gh));
                }
            }
        }
        gamma_.grad_ready = true;
        beta_.grad_ready = true;
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {&gamma_, &beta_}; }
    std::vector<const Parameter<T>*> parameters() const { return {&gamma_, &beta_}; }
    std::vector<Buffer<T>*> buffers() { return {&running_mean_, &running_var_}; }
    std::vector<const Buffer<T>*> buffers() const { return {&running_mean_, &running_var_}; }

private:
    enum class Mode { none, training, inference };

    LayerSpec spec_;
    Parameter<T> gamma_;
    Parameter<T> beta_;
    Buffer<T> running_mean_;
    Buffer<T> running_var_;
    Tensor<T> xhat_;
    Storage<T> inv_std_;
    Shape output_shape_;
    Mode mode_ = Mode::none;
};

template <typename T>
class ActivationLayer {
public:
    ActivationLayer(LayerSpec spec, const std::string& /*prefix*/, Init /*init*/) : spec_(std::move(spec)) {}

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        Tensor<T> y = predict(x);
        input_ = x;
        if (spec_.activation == Activation::sigmoid) output_ = y;
        return y;
    }

    Tensor<T> predict(const Tensor<T>& x) const {
        spec_.output_shape(x.shape());
        Tensor<T> y(x.shape());
        const T slope = static_cast<T>(spec_.slope);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const T v = x[i];
            switch (spec_.activation) {
                case Activation::relu: y[i] = v > T{0} ? v : T{0}; break;
                case Activation::leaky_relu: y[i] = v > T{0} ? v : slope * v; break;
                case Activation::sigmoid: y[i] = T{1} / (T{1} + std::exp(-v)); break;
                case Activation::linear: y[i] = v; break;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(input_.has_value(), spec_.kind);
        detail::require_same_shape(grad_out, input_->shape(), spec_.kind);
        Tensor<T> grad_in(grad_out.shape());
        const T slope = static_cast<T>(spec_.slope);
        for (std::size_t i = 0; i < grad_out.size(); ++i) {
            const T v = (*input_)[i];
            const T g = grad_out[i];
            switch (spec_.activation) {
                case Activation::relu: grad_in[i] = v > T{0} ? g : T{0}; break;
                case Activation::leaky_relu: grad_in[i] = v > T{0} ? g : slope * g; break;
                case Activation::sigmoid: {
                    const T s = output_[i];
                    grad_in[i] = g * s * (T{1} - s);
                    break;
                }
                case Activation::linear: grad_in[i] = g; break;
            }
        }
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {}; }
    std::vector<const Parameter<T>*> parameters() const { return {}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    std::vector<const Buffer<T>*> buffers() const { return {}; }

private:
    LayerSpec spec_;
    std::optional<Tensor<T>> input_;
    Tensor<T> output_;
};

/// 2x2 max pooling with stride 2.
template <typename T>
class MaxPool2d {
public:
    MaxPool2d(LayerSpec spec, const std::string& /*prefix*/, Init /*init*/) : spec_(std::move(spec)) {
        spec_.validate();
    }

    const LayerSpec& spec() const { return spec_; }

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        Tensor<T> y = pool(x, &argmax_);
        input_shape_ = x.shape();
        output_shape_ = y.shape();
        recorded_ = true;
        return y;
    }

    Tensor<T> predict(const Tensor<T>& x) const { return pool(x, nullptr); }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        detail::require_cache(recorded_, spec_.kind);
        detail::require_same_shape(grad_out, output_shape_, spec_.kind);
        Tensor<T> grad_in(input_shape_);
        for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[argmax_[i]] += grad_out[i];
        return grad_in;
    }

    std::vector<Parameter<T>*> parameters() { return {}; }
    std::vector<const Parameter<T>*> parameters() const { return {}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    std::vector<const Buffer<T>*> buffers() const { return {}; }

private:
    Tensor<T> pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const {
        Tensor<T> y(spec_.output_shape(x.shape()));
        if (argmax) argmax->assign(y.size(), 0);
        const std::size_t planes = x.dim(0) * spec_.in_channels;
        const std::size_t h = spec_.in_height, w = spec_.in_width, oh = h / 2, ow = w / 2;
        for (std::size_t p = 0; p < planes; ++p) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    std::size_t best = p * h * w + (2 * oy) * w + 2 * ox;
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = p * h * w + (2 * oy + dy) * w + 2 * ox + dx;
                            if (x[idx] > x[best]) best = idx;
                        }
                    const std::size_t o = p * oh * ow + oy * ow + ox;
                    y[o] = x[best];
                    if (argmax) (*argmax)[o] = best;
                }
            }
        }
        return y;
    }

    LayerSpec spec_;
    std::vector<std::size_t> argmax_;
    Shape input_shape_;
    Shape output_shape_;
    bool recorded_ = false;
};

} // namespace scgan::nn
