#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "scgan/error.hpp"

namespace scgan::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

/// Heap storage aligned for the vector kernels, so that reductions take the same
/// code path (and produce the same bits) regardless of where the allocator lands.
template <typename T>
using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense row-major n-d array with an optional gradient buffer of identical shape.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(element_count(shape_), fill);
    }

    Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        validate_shape();
        if (element_count(shape_) != data_.size()) {
            throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                              " does not match shape " + nn::to_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T> values() const { return {data_.begin(), data_.end()}; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    bool requires_grad() const noexcept { return requires_grad_; }

    /// Enabling allocates a zeroed gradient buffer; disabling drops it.
    void set_requires_grad(bool on) {
        requires_grad_ = on;
        if (on && !grad_) grad_.emplace(data_.size(), T{0});
        if (!on) grad_.reset();
    }

    bool has_grad() const noexcept { return grad_.has_value(); }
    std::span<T> grad() {
        if (!grad_) throw StateError("tensor has no gradient buffer");
        return *grad_;
    }
    std::span<const T> grad() const {
        if (!grad_) throw StateError("tensor has no gradient buffer");
        return *grad_;
    }
    void zero_grad() {
        if (grad_) std::fill(grad_->begin(), grad_->end(), T{0});
    }

    /// Same data viewed under a new shape with the same element count.
    Tensor reshaped(Shape shape) const {
        Tensor out(std::move(shape), data_);
        return out;
    }

    void reshape(Shape shape) {
        if (element_count(shape) != data_.size()) {
            throw ConfigError("cannot reshape " + nn::to_string(shape_) + " to " + nn::to_string(shape));
        }
        shape_ = std::move(shape);
    }

    /// Throws NumericError naming `what` if any value (or gradient) is NaN/Inf.
    void ensure_finite(const std::string& what) const {
        for (T v : data_) {
            if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
        }
        if (grad_) {
            for (T v : *grad_) {
                if (!std::isfinite(v)) throw NumericError("non-finite gradient in " + what);
            }
        }
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void validate_shape() const {
        for (std::size_t extent : shape_) {
            if (extent == 0) throw ConfigError("tensor extents must be positive, got " + nn::to_string(shape_));
        }
    }

    Shape shape_;
    Storage<T> data_;
    bool requires_grad_ = false;
    std::optional<Storage<T>> grad_;
};

/// Trainable weight with its RMSProp accumulator.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    std::vector<T> rms_accumulator;
    bool grad_ready = false;  // set by backward, cleared by the optimizer

    Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)) {
        value.set_requires_grad(true);
        rms_accumulator.assign(value.size(), T{0});
    }
};

/// Non-trainable persistent state (batch-norm running statistics).
template <typename T>
struct Buffer {
    std::string name;
    Tensor<T> value;
};

} // namespace scgan::nn
