#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scgan/error.hpp"

namespace scgan::data {

enum class ShapingMode { single_site_grid, multi_site_day };

inline const char* to_string(ShapingMode m) {
    return m == ShapingMode::single_site_grid ? "single_site_grid" : "multi_site_day";
}

/// (channels, height, width) of one scenario sample.
struct SampleShape {
    std::size_t channels = 1;
    std::size_t height = 24;
    std::size_t width = 24;

    std::size_t size() const { return channels * height * width; }
    friend bool operator==(const SampleShape&, const SampleShape&) = default;
};

struct DatasetMeta {
    double resolution_minutes = 5.0;
    double capacity = 1.0;  // MW; normalized value 1 corresponds to this
    std::vector<std::string> sites;
    ShapingMode mode = ShapingMode::single_site_grid;
    /// Samples hold forecast errors e = actual - forecast (per unit), stored as (e + 1) / 2.
    bool forecast_error = false;

    double to_mw(double v) const { return (forecast_error ? 2.0 * v - 1.0 : v) * capacity; }
    double from_mw(double mw) const { return forecast_error ? (mw / capacity + 1.0) / 2.0 : mw / capacity; }
};

/// Normalized samples x_j in [0,1] with optional class labels y_j.
///
/// Labels are stored as class indices; `one_hot` materializes the indicator vector.
/// `start_minutes` (minutes since 1970-01-01T00:00) is empty when sample times are unknown.
/// `forecasts`, when present, is aligned sample-for-sample with `samples`.
struct ScenarioDataset {
    SampleShape shape;
    std::vector<std::vector<float>> samples;
    std::size_t label_dim = 0;
    std::vector<std::size_t> labels;
    std::vector<std::int64_t> start_minutes;
    std::vector<std::vector<float>> forecasts;
    DatasetMeta meta;

    std::size_t size() const { return samples.size(); }
    bool labeled() const { return label_dim > 0; }

    std::vector<float> one_hot(std::size_t i) const {
        std::vector<float> y(label_dim, 0.f);
        y.at(labels.at(i)) = 1.f;
        return y;
    }

    /// Throws DataError if any structural invariant is broken.
    void validate() const {
        for (const auto& s : samples) {
            if (s.size() != shape.size()) throw DataError("sample length does not match the dataset sample shape");
            for (float v : s) {
                if (!(v >= 0.f && v <= 1.f)) throw DataError("sample value outside [0,1]");
            }
        }
        if (label_dim > 0) {
            if (labels.size() != samples.size()) throw DataError("labeled dataset needs one label per sample");
            for (std::size_t l : labels) {
                if (l >= label_dim) throw DataError("label index out of range");
            }
        } else if (!labels.empty()) {
            throw DataError("labels present but label_dim is 0");
        }
        if (!start_minutes.empty() && start_minutes.size() != samples.size()) {
            throw DataError("start times must align with samples");
        }
        if (!forecasts.empty() && forecasts.size() != samples.size()) {
            throw DataError("forecasts must align with samples");
        }
    }

    /// Copy restricted to the given sample indices (in that order), carrying labels and times.
    ScenarioDataset subset(const std::vector<std::size_t>& indices) const {
        ScenarioDataset out;
        out.shape = shape;
        out.label_dim = label_dim;
        out.meta = meta;
        for (std::size_t i : indices) {
            out.samples.push_back(samples.at(i));
            if (label_dim > 0) out.labels.push_back(labels.at(i));
            if (!start_minutes.empty()) out.start_minutes.push_back(start_minutes.at(i));
            if (!forecasts.empty()) out.forecasts.push_back(forecasts.at(i));
        }
        return out;
    }

    /// Number of samples in each class (empty for unlabeled data).
    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(label_dim, 0);
        for (std::size_t l : labels) ++counts.at(l);
        return counts;
    }
};

} // namespace scgan::data
