#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/data/series.hpp"
#include "scgan/error.hpp"

namespace scgan::data {

struct ShapeConfig {
    ShapingMode mode = ShapingMode::single_site_grid;
    std::size_t height = 24;                    // grid rows (single_site_grid)
    std::size_t width = 24;                     // grid columns, or time steps per sample (multi_site_day)
    std::optional<std::size_t> expected_sites;  // multi_site_day: required site count
};

/// Cuts normalized series into samples.
///
/// single_site_grid: each site's series is split into consecutive height*width readings laid out
/// row-major on a height x width grid (one channel); samples of all sites are pooled.
/// multi_site_day: the sites are stacked into an (N sites) x (width steps) matrix per sample.
inline ScenarioDataset shape_samples(const std::vector<NormalizedSeries>& series, const ShapeConfig& cfg) {
    if (series.empty()) throw DataError("no series to shape");
    ScenarioDataset ds;
    ds.meta.mode = cfg.mode;
    ds.meta.resolution_minutes = series[0].resolution_minutes;
    ds.meta.capacity = series[0].capacity;
    for (const auto& s : series) {
        ds.meta.sites.push_back(s.site_id);
        if (s.resolution_minutes != series[0].resolution_minutes) throw DataError("sites differ in resolution");
        if (s.capacity != series[0].capacity) throw DataError("sites differ in capacity");
    }

    if (cfg.mode == ShapingMode::single_site_grid) {
        const std::size_t span = cfg.height * cfg.width;
        if (span == 0) throw ConfigError("grid dimensions must be positive");
        ds.shape = {1, cfg.height, cfg.width};
        for (const auto& s : series) {
            if (s.values.size() % span != 0) {
                throw DataError("series " + s.site_id + " length " + std::to_string(s.values.size()) +
                                " is not divisible by the sample span " + std::to_string(span));
            }
            for (std::size_t off = 0; off < s.values.size(); off += span) {
                std::vector<float> sample(span);
                for (std::size_t i = 0; i < span; ++i) sample[i] = static_cast<float>(s.values[off + i]);
                ds.samples.push_back(std::move(sample));
                ds.start_minutes.push_back(s.start + static_cast<Minutes>(off) * s.resolution_minutes);
            }
        }
        return ds;
    }

    const std::size_t sites = series.size();
    if (cfg.expected_sites && *cfg.expected_sites != sites) {
        throw DataError("multi-site shaping expects " + std::to_string(*cfg.expected_sites) + " sites, got " +
                        std::to_string(sites));
    }
    const std::size_t steps = cfg.width;
    if (steps == 0) throw ConfigError("time steps per sample must be positive");
    const std::size_t length = series[0].values.size();
    for (const auto& s : series) {
        if (s.values.size() != length || s.start != series[0].start) {
            throw DataError("multi-site shaping needs equal-length, aligned series");
        }
    }
    if (length % steps != 0) {
        throw DataError("series length " + std::to_string(length) + " is not divisible by " + std::to_string(steps));
    }
    ds.shape = {1, sites, steps};
    for (std::size_t off = 0; off < length; off += steps) {
        std::vector<float> sample(sites * steps);
        for (std::size_t r = 0; r < sites; ++r)
            for (std::size_t t = 0; t < steps; ++t) sample[r * steps + t] = static_cast<float>(series[r].values[off + t]);
        ds.samples.push_back(std::move(sample));
        ds.start_minutes.push_back(series[0].start + static_cast<Minutes>(off) * series[0].resolution_minutes);
    }
    return ds;
}

/// Cuts forecast series with the same layout and attaches them sample-for-sample.
inline ScenarioDataset attach_forecasts(ScenarioDataset ds, const std::vector<NormalizedSeries>& forecasts,
                                        const ShapeConfig& cfg) {
    const ScenarioDataset f = shape_samples(forecasts, cfg);
    if (f.size() != ds.size() || f.shape != ds.shape) throw DataError("forecasts do not align with the actual series");
    ds.forecasts = f.samples;
    return ds;
}

/// Replaces each sample by its forecast error, encoded into [0,1] as (actual - forecast + 1) / 2.
inline ScenarioDataset to_forecast_errors(ScenarioDataset ds) {
    if (ds.forecasts.size() != ds.size()) throw DataError("forecast errors need a forecast for every sample");
    if (ds.meta.forecast_error) throw DataError("dataset already holds forecast errors");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.forecasts[i].size() != ds.samples[i].size()) throw DataError("forecast length differs from its sample");
        for (std::size_t j = 0; j < ds.samples[i].size(); ++j) {
            ds.samples[i][j] = (ds.samples[i][j] - ds.forecasts[i][j] + 1.f) / 2.f;
        }
    }
    ds.meta.forecast_error = true;
    return ds;
}

/// Temporal series contained in one sample: the whole grid row-major for single_site_grid,
/// one series per site row for multi_site_day.
inline std::vector<std::vector<double>> sample_series(const ScenarioDataset& ds, std::size_t i) {
    const auto& s = ds.samples.at(i);
    if (ds.meta.mode == ShapingMode::single_site_grid) return {std::vector<double>(s.begin(), s.end())};
    std::vector<std::vector<double>> rows(ds.shape.height);
    for (std::size_t r = 0; r < ds.shape.height; ++r) {
        rows[r].assign(s.begin() + static_cast<std::ptrdiff_t>(r * ds.shape.width),
                       s.begin() + static_cast<std::ptrdiff_t>((r + 1) * ds.shape.width));
    }
    return rows;
}

/// Concatenates samples back into per-site normalized series (inverse of shape_samples for
/// datasets produced from one site, or from aligned multi-site input).
inline std::vector<std::vector<double>> flatten(const ScenarioDataset& ds) {
    if (ds.meta.mode == ShapingMode::single_site_grid) {
        std::vector<double> out;
        for (const auto& s : ds.samples) out.insert(out.end(), s.begin(), s.end());
        return {out};
    }
    std::vector<std::vector<double>> out(ds.shape.height);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto rows = sample_series(ds, i);
        for (std::size_t r = 0; r < rows.size(); ++r) out[r].insert(out[r].end(), rows[r].begin(), rows[r].end());
    }
    return out;
}

} // namespace scgan::data
