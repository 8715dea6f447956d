#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/data/labels.hpp"
#include "scgan/error.hpp"

namespace scgan::data {

struct Split {
    ScenarioDataset train;
    ScenarioDataset validation;
    bool stratified = false;
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
}

} // namespace detail

/// Seeded shuffle into train/validation. The train side gets ceil(fraction * n) samples.
/// With labels and `stratify`, each class contributes within one sample of its exact share;
/// a class with fewer than 2 samples triggers a warning and an unstratified split.
inline Split split(const ScenarioDataset& ds, double fraction, std::uint64_t seed, bool stratify = true,
                   Warnings* warnings = nullptr) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie strictly between 0 and 1");
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train_idx, val_idx;

    bool stratified = stratify && ds.labeled();
    if (stratified) {
        for (std::size_t c : ds.class_counts()) {
            if (c == 1) {
                detail::warn(warnings, "a class has fewer than 2 samples; falling back to an unstratified split");
                stratified = false;
                break;
            }
        }
    }

    if (!stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        detail::shuffle_indices(idx, rng);
        train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        val_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    } else {
        std::vector<std::vector<std::size_t>> by_class(ds.label_dim);
        for (std::size_t i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
        // Floor of each class's share, then the leftover slots go to the largest remainders.
        std::vector<std::size_t> quota(ds.label_dim);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < ds.label_dim; ++c) {
            const double exact = fraction * static_cast<double>(by_class[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
            assigned += quota[c];
            remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < n_train && k < remainders.size(); ++k) {
            const std::size_t c = remainders[k].second;
            if (quota[c] < by_class[c].size()) {
                ++quota[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < ds.label_dim; ++c) {
            detail::shuffle_indices(by_class[c], rng);
            for (std::size_t k = 0; k < by_class[c].size(); ++k) (k < quota[c] ? train_idx : val_idx).push_back(by_class[c][k]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    return {ds.subset(train_idx), ds.subset(val_idx), stratified};
}

struct NoiseResult {
    ScenarioDataset dataset;
    double added_std = 0.0;        // empirical std of the Gaussian draws, before clamping
    double noise_to_signal = 0.0;  // added_std / mean clean value
};

/// Adds i.i.d. N(0, sigma^2) to every normalized value and clamps the result to [0,1].
inline NoiseResult inject_noise(ScenarioDataset ds, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ConfigError("noise standard deviation must be non-negative");
    NoiseResult r;
    double signal = 0.0, s = 0.0, ss = 0.0;
    std::size_t count = 0;
    if (sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, sigma);
        for (auto& sample : ds.samples) {
            for (auto& v : sample) {
                const double e = normal(rng);
                signal += v;
                s += e;
                ss += e * e;
                ++count;
                v = static_cast<float>(std::clamp(static_cast<double>(v) + e, 0.0, 1.0));
            }
        }
    }
    if (count > 1) {
        const double n = static_cast<double>(count);
        r.added_std = std::sqrt(std::max(0.0, (ss - s * s / n) / (n - 1.0)));
        r.noise_to_signal = signal > 0.0 ? r.added_std / (signal / n) : 0.0;
    }
    r.dataset = std::move(ds);
    return r;
}

struct BadDataResult {
    ScenarioDataset dataset;
    std::vector<std::size_t> replaced;  // indices into the solar dataset, ascending
};

/// Replaces floor(rate * n) randomly chosen solar samples with randomly chosen wind samples.
inline BadDataResult inject_bad_data(const ScenarioDataset& solar, const ScenarioDataset& wind, double rate,
                                     std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("contamination rate must lie in [0, 1]");
    if (solar.shape != wind.shape) throw DataError("solar and wind samples differ in shape");
    const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(solar.size()) + 1e-9));
    if (k > 0 && wind.size() == 0) throw DataError("no wind samples to inject");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(solar.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    detail::shuffle_indices(idx, rng);
    std::vector<std::size_t> donors(wind.size());
    std::iota(donors.begin(), donors.end(), std::size_t{0});
    detail::shuffle_indices(donors, rng);

    BadDataResult r{solar, {}};
    for (std::size_t j = 0; j < k; ++j) {
        r.dataset.samples[idx[j]] = wind.samples[donors[j % donors.size()]];
        r.replaced.push_back(idx[j]);
    }
    std::sort(r.replaced.begin(), r.replaced.end());
    return r;
}

} // namespace scgan::data
