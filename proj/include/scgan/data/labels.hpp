#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/data/series.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/error.hpp"

namespace scgan::data {

enum class LabelKind { mean_value, ramp, forecast_error, month };

inline const char* to_string(LabelKind k) {
    switch (k) {
        case LabelKind::mean_value: return "mean";
        case LabelKind::ramp: return "ramp";
        case LabelKind::forecast_error: return "forecast_error";
        case LabelKind::month: return "month";
    }
    return "?";
}

inline LabelKind parse_label_kind(const std::string& s) {
    if (s == "mean") return LabelKind::mean_value;
    if (s == "ramp") return LabelKind::ramp;
    if (s == "forecast_error") return LabelKind::forecast_error;
    if (s == "month") return LabelKind::month;
    throw ConfigError("unknown label scheme '" + s + "' (expected mean, ramp, forecast_error or month)");
}

/// Class boundaries in MW. Mean classes use "value >= boundary moves up"; ramp classes send ties down.
inline const std::vector<double> kMeanBoundaries{0.5, 1.5, 3.0, 6.0};
inline const std::vector<double> kRampBoundaries{4.0, 8.0, 12.0, 16.0};

/// Collects non-fatal diagnostics; may be null.
using Warnings = std::vector<std::string>;

namespace detail {

inline void warn(Warnings* w, std::string msg) {
    if (w) w->push_back(std::move(msg));
}

inline void check_ascending(const std::vector<double>& b) {
    if (b.empty()) throw ConfigError("class boundaries must not be empty");
    for (std::size_t i = 1; i < b.size(); ++i) {
        if (!(b[i] > b[i - 1])) throw ConfigError("class boundaries must be strictly increasing");
    }
}

inline double sample_mean(const std::vector<float>& s) {
    double acc = 0.0;
    for (float v : s) acc += v;
    return acc / static_cast<double>(s.size());
}

} // namespace detail

/// Class of a per-sample mean in MW: the number of boundaries that are <= mean.
inline std::size_t mean_class(double mean_mw, const std::vector<double>& boundaries = kMeanBoundaries) {
    return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), mean_mw) - boundaries.begin());
}

/// Labels each sample by its mean output in MW: boundaries.size() + 1 classes.
inline ScenarioDataset label_by_mean(ScenarioDataset ds, const std::vector<double>& boundaries = kMeanBoundaries) {
    detail::check_ascending(boundaries);
    if (!(ds.meta.capacity > 0.0)) throw ConfigError("capacity must be known to label by mean");
    ds.label_dim = boundaries.size() + 1;
    ds.labels.clear();
    for (const auto& s : ds.samples) ds.labels.push_back(mean_class(ds.meta.to_mw(detail::sample_mean(s)), boundaries));
    return ds;
}

/// Largest absolute change over `window_steps` readings, max_t |x(t+w) - x(t)|, in the units of x.
inline double ramp_statistic(std::span<const double> x, std::size_t window_steps) {
    if (window_steps == 0) throw ConfigError("ramp window must span at least one step");
    if (x.size() <= window_steps) {
        throw DataError("series of length " + std::to_string(x.size()) + " is too short for a " +
                        std::to_string(window_steps) + "-step ramp window");
    }
    double best = 0.0;
    for (std::size_t t = 0; t + window_steps < x.size(); ++t) best = std::max(best, std::abs(x[t + window_steps] - x[t]));
    return best;
}

/// Same, with the window given in minutes.
inline double ramp_statistic(std::span<const double> x, int window_minutes, int resolution_minutes) {
    if (resolution_minutes <= 0 || window_minutes <= 0 || window_minutes % resolution_minutes != 0) {
        throw ConfigError("ramp window must be a positive multiple of the resolution");
    }
    return ramp_statistic(x, static_cast<std::size_t>(window_minutes / resolution_minutes));
}

/// Class of a ramp magnitude: the number of boundaries strictly below it (ties go to the lower class).
/// Values beyond the last boundary are impossible for the capacity and raise DataError.
inline std::size_t ramp_class(double ramp_mw, const std::vector<double>& boundaries = kRampBoundaries) {
    if (ramp_mw > boundaries.back() * (1.0 + 1e-9)) {
        throw DataError("ramp of " + std::to_string(ramp_mw) + " MW exceeds the top class boundary " +
                        std::to_string(boundaries.back()) + " MW");
    }
    return std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(boundaries.begin(), boundaries.end(), ramp_mw) - boundaries.begin()),
        boundaries.size() - 1);
}

/// Per-sample ramp in MW; for multi-site samples the largest ramp over all sites.
inline double sample_ramp(const ScenarioDataset& ds, std::size_t i, int window_minutes) {
    double best = 0.0;
    for (auto row : sample_series(ds, i)) {
        for (auto& v : row) v = ds.meta.to_mw(v);
        best = std::max(best, ramp_statistic(row, window_minutes, static_cast<int>(ds.meta.resolution_minutes)));
    }
    return best;
}

/// Labels each sample by its ramp magnitude: boundaries.size() classes.
inline ScenarioDataset label_by_ramp(ScenarioDataset ds, int window_minutes = 30,
                                     const std::vector<double>& boundaries = kRampBoundaries) {
    detail::check_ascending(boundaries);
    if (!(ds.meta.capacity > 0.0)) throw ConfigError("capacity must be known to label by ramp");
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < ds.size(); ++i) labels.push_back(ramp_class(sample_ramp(ds, i, window_minutes), boundaries));
    ds.label_dim = boundaries.size();
    ds.labels = std::move(labels);
    return ds;
}

/// Labels each sample by the calendar month of its first reading (12 classes).
inline ScenarioDataset label_by_month(ScenarioDataset ds) {
    if (ds.start_minutes.size() != ds.size()) throw DataError("month labels need a start time for every sample");
    ds.label_dim = 12;
    ds.labels.clear();
    for (Minutes t : ds.start_minutes) ds.labels.push_back(month_index(t));
    return ds;
}

/// Total forecast power over each sample window (normalized units).
inline std::vector<double> forecast_totals(const ScenarioDataset& ds) {
    if (ds.forecasts.size() != ds.size()) throw DataError("forecast-error labels need a forecast for every sample");
    std::vector<double> totals;
    for (const auto& f : ds.forecasts) {
        if (f.empty()) throw DataError("empty forecast for a sample");
        double acc = 0.0;
        for (float v : f) acc += v;
        totals.push_back(acc);
    }
    return totals;
}

/// Linear-interpolation quantile of already sorted values (q in [0,1]).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of an empty set");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Quartile cut points of the forecast totals of a (training) dataset.
inline std::vector<double> forecast_quartiles(const ScenarioDataset& train, Warnings* warnings = nullptr) {
    auto totals = forecast_totals(train);
    std::sort(totals.begin(), totals.end());
    std::vector<double> cuts{quantile_sorted(totals, 0.25), quantile_sorted(totals, 0.5), quantile_sorted(totals, 0.75)};
    if (cuts.front() == cuts.back()) {
        detail::warn(warnings, "forecast totals have degenerate quartiles; samples at the common value fall in class 0");
    }
    return cuts;
}

/// Labels samples into 4 classes by forecast total against quartile cut points
/// (class = number of cut points strictly below the total). Values outside the training range clamp
/// to the end classes.
inline ScenarioDataset label_by_forecast_error(ScenarioDataset ds, const std::vector<double>& cuts) {
    if (cuts.size() != 3) throw ConfigError("forecast classes need exactly 3 cut points");
    const auto totals = forecast_totals(ds);
    ds.label_dim = 4;
    ds.labels.clear();
    for (double t : totals) {
        ds.labels.push_back(static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), t) - cuts.begin()));
    }
    return ds;
}

/// Convenience: quartiles estimated on the dataset itself.
inline ScenarioDataset label_by_forecast_error(ScenarioDataset ds, Warnings* warnings = nullptr) {
    const auto cuts = forecast_quartiles(ds, warnings);
    return label_by_forecast_error(std::move(ds), cuts);
}

} // namespace scgan::data
