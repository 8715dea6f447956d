#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scgan/nn/tensor.hpp"

namespace scgan::nn {

struct GradCheckReport {
    bool passed = false;
    double max_relative_error = 0.0;
    std::string worst;        // name of the tensor with the largest error
    std::size_t checked = 0;  // number of coordinates compared
};

namespace detail {

/// Scale-normalized error between two gradient arrays: max|a-n| / max(|a|_inf, |n|_inf).
inline double gradient_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
        scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    return scale < 1e-7 ? diff : diff / scale;
}

} // namespace detail

/// Compares reverse-mode gradients of `module` against central differences (f(x+h)-f(x-h))/2h.
///
/// The scalar probed is sum_i r_i * y_i for a fixed Gaussian projection r, accumulated in double.
/// Both the input gradient and every parameter gradient are checked.
template <typename T, typename Module>
GradCheckReport finite_difference_check(Module& module, Tensor<T> input, double tolerance, double h = 1e-3,
                                        bool training = true, std::uint64_t seed = 0) {
    for (auto* p : module.parameters()) {
        p->value.zero_grad();
        p->grad_ready = false;
    }
    Tensor<T> y = module.forward(input, training);
    Tensor<T> projection(y.shape());
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    for (auto& v : projection.data()) v = static_cast<T>(normal(rng));

    auto probe = [&]() {
        Tensor<T> out = module.forward(input, training);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<double>(projection[i]) * out[i];
        return s;
    };

    module.forward(input, training);
    Tensor<T> grad_input = module.backward(projection);

    GradCheckReport report;
    report.passed = true;
    auto record = [&](const std::string& name, const std::vector<double>& analytic, const std::vector<double>& numeric) {
        const double err = detail::gradient_error(analytic, numeric);
        report.checked += analytic.size();
        if (err >= report.max_relative_error) {
            report.max_relative_error = err;
            report.worst = name;
        }
        if (!(err <= tolerance)) report.passed = false;
    };

    {
        std::vector<double> analytic(grad_input.data().begin(), grad_input.data().end());
        std::vector<double> numeric(input.size());
        for (std::size_t i = 0; i < input.size(); ++i) {
            const T orig = input[i];
            input[i] = static_cast<T>(orig + h);
            const double hi = input[i];
            const double up = probe();
            input[i] = static_cast<T>(orig - h);
            const double lo = input[i];
            const double down = probe();
            input[i] = orig;
            numeric[i] = (up - down) / (hi - lo);
        }
        record("input", analytic, numeric);
    }

    for (auto* p : module.parameters()) {
        auto grad = p->value.grad();
        std::vector<double> analytic(grad.begin(), grad.end());
        std::vector<double> numeric(analytic.size());
        auto w = p->value.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const T orig = w[i];
            w[i] = static_cast<T>(orig + h);
            const double hi = w[i];
            const double up = probe();
            w[i] = static_cast<T>(orig - h);
            const double lo = w[i];
            const double down = probe();
            w[i] = orig;
            numeric[i] = (up - down) / (hi - lo);
        }
        record(p->name, analytic, numeric);
        p->value.zero_grad();
        p->grad_ready = false;
    }
    return report;
}

} // namespace scgan::nn
