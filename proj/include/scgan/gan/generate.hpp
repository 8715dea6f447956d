#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/gan/model.hpp"

namespace scgan::gan {

/// Draws `count` scenarios from the trained generator in inference mode.
///
/// Conditional models require `label`; every returned sample is tagged with it.
/// The result carries the model's sample shape and values in the generator's output range.
template <typename T>
data::ScenarioDataset generate(const GanModel<T>& model, std::size_t count, std::optional<std::size_t> label,
                               std::uint64_t seed, std::size_t chunk = 256) {
    if (model.label_dim > 0 && !label) throw ConfigError("conditional model needs a class label to generate");
    if (model.label_dim == 0 && label) throw ConfigError("unconditional model cannot generate for a class label");
    if (label && *label >= model.label_dim) throw ConfigError("class label out of range");

    data::ScenarioDataset out;
    out.shape = model.sample_shape;
    out.label_dim = model.label_dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const std::size_t per = model.sample_shape.size();
    for (std::size_t done = 0; done < count;) {
        const std::size_t b = std::min(chunk, count - done);
        nn::Tensor<T> z({b, model.noise_dim});
        for (auto& v : z.data()) v = static_cast<T>(normal(rng));
        nn::Tensor<T> x;
        if (label) {
            const std::vector<std::size_t> classes(b, *label);
            const nn::Tensor<T> y = one_hot_batch<T>(classes, model.label_dim);
            x = model.generator.predict(condition_noise(z, &y));
        } else {
            x = model.generator.predict(z);
        }
        for (std::size_t i = 0; i < b; ++i) {
            std::vector<float> s(per);
            for (std::size_t j = 0; j < per; ++j) s[j] = static_cast<float>(x[i * per + j]);
            out.samples.push_back(std::move(s));
            if (label) out.labels.push_back(*label);
        }
        done += b;
    }
    return out;
}

} // namespace scgan::gan
