#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "scgan/data/dataset.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/error.hpp"

namespace scgan::eval {

/// R(tau) = sum_t (S_t - mu)(S_{t+tau} - mu) / ((n - tau) sigma^2), tau = 0..max_lag,
/// with sample mean mu and variance sigma^2 = sum (S_t - mu)^2 / n.
inline std::vector<double> autocorrelation(std::span<const double> s, std::size_t max_lag) {
    const std::size_t n = s.size();
    if (n <= max_lag) {
        throw DataError("series of length " + std::to_string(n) + " is too short for lag " + std::to_string(max_lag));
    }
    double mu = 0.0;
    for (double v : s) mu += v;
    mu /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : s) c0 += (v - mu) * (v - mu);
    const double var = c0 / static_cast<double>(n);
    if (!(var > 0.0)) throw DataError("autocorrelation is undefined for a constant series");
    std::vector<double> r(max_lag + 1);
    for (std::size_t tau = 0; tau <= max_lag; ++tau) {
        double c = 0.0;
        for (std::size_t t = 0; t + tau < n; ++t) c += (s[t] - mu) * (s[t + tau] - mu);
        r[tau] = (c / static_cast<double>(n - tau)) / var;
    }
    return r;
}

/// Mean ACF over every temporal series of a dataset (each sample, and each site row for
/// multi-site samples). Constant series are skipped; throws if none is usable.
inline std::vector<double> dataset_autocorrelation(const data::ScenarioDataset& ds, std::size_t max_lag) {
    std::vector<double> acc(max_lag + 1, 0.0);
    std::size_t used = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (const auto& row : data::sample_series(ds, i)) {
            if (row.size() <= max_lag) throw DataError("samples are shorter than the requested ACF lag");
            if (std::all_of(row.begin(), row.end(), [&](double v) { return v == row.front(); })) continue;
            const auto r = autocorrelation(row, max_lag);
            for (std::size_t k = 0; k <= max_lag; ++k) acc[k] += r[k];
            ++used;
        }
    }
    if (used == 0) throw DataError("every series is constant; autocorrelation is undefined");
    for (auto& v : acc) v /= static_cast<double>(used);
    return acc;
}

/// Step-function ECDF evaluated at its sorted support points.
struct Ecdf {
    std::vector<double> x;  // sorted distinct values
    std::vector<double> f;  // F(x) = fraction of values <= x
};

inline Ecdf ecdf(std::vector<double> values) {
    if (values.empty()) throw DataError("ECDF of an empty set");
    std::sort(values.begin(), values.end());
    Ecdf e;
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        e.x.push_back(values[i]);
        e.f.push_back(static_cast<double>(i + 1) / n);
    }
    return e;
}

struct KsResult {
    Ecdf real;
    Ecdf gen;
    double distance = 0.0;
};

/// sup_x |F_real(x) - F_gen(x)| by a merged scan over both sorted samples.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DataError("KS distance needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline KsResult ecdf_and_ks(const std::vector<double>& real, const std::vector<double>& gen) {
    return {ecdf(real), ecdf(gen), ks_distance(real, gen)};
}

struct PsdResult {
    std::vector<double> frequency;  // cycles per hour
    std::vector<double> power;      // one-sided density, (units^2) per (cycle/hour)
    std::size_t segments = 0;
};

namespace detail {

inline std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

/// |DFT|^2 of a real sequence at bins 0..n/2.
inline std::vector<double> power_spectrum(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> in(x);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    if (!plan) throw NumericError("FFT planning failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<double> p(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) p[k] = std::norm(out[k]);
    return p;
}

} // namespace detail

/// Welch estimate over the full one-sided spectrum: Hann-windowed segments of `segment_steps`
/// readings with 50% overlap, each detrended by its mean. Integrating the result over frequency
/// gives the mean windowed variance of the segments.
inline PsdResult welch_psd(std::span<const double> s, double resolution_minutes, std::size_t segment_steps) {
    if (!(resolution_minutes > 0.0)) throw ConfigError("resolution must be positive");
    if (segment_steps < 4) throw ConfigError("PSD segments need at least 4 readings");
    if (s.size() < segment_steps) {
        throw DataError("series of " + std::to_string(s.size()) + " readings is shorter than one " +
                        std::to_string(segment_steps) + "-reading PSD segment");
    }
    const double fs = 60.0 / resolution_minutes;  // samples per hour
    const auto w = detail::hann(segment_steps);
    double wss = 0.0;
    for (double v : w) wss += v * v;
    const std::size_t hop = segment_steps / 2;
    const std::size_t bins = segment_steps / 2 + 1;
    PsdResult r;
    r.power.assign(bins, 0.0);
    for (std::size_t start = 0; start + segment_steps <= s.size(); start += hop) {
        double mu = 0.0;
        for (std::size_t i = 0; i < segment_steps; ++i) mu += s[start + i];
        mu /= static_cast<double>(segment_steps);
        std::vector<double> seg(segment_steps);
        for (std::size_t i = 0; i < segment_steps; ++i) seg[i] = (s[start + i] - mu) * w[i];
        const auto p = detail::power_spectrum(seg);
        for (std::size_t k = 0; k < bins; ++k) r.power[k] += p[k];
        ++r.segments;
    }
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (segment_steps % 2 == 0 && k == bins - 1);
        r.power[k] *= (edge ? 1.0 : 2.0) / (fs * wss * static_cast<double>(r.segments));
        r.frequency.push_back(static_cast<double>(k) * fs / static_cast<double>(segment_steps));
    }
    return r;
}

/// PSD restricted to periods between `min_period_hours` and `max_period_hours`, using segments
/// that span the longest period (6 days and 2 hours by default).
inline PsdResult psd(std::span<const double> s, double resolution_minutes, double max_period_hours = 144.0,
                     double min_period_hours = 2.0) {
    if (!(min_period_hours > 0.0 && max_period_hours > min_period_hours)) throw ConfigError("invalid PSD period band");
    const auto segment = static_cast<std::size_t>(std::llround(max_period_hours * 60.0 / resolution_minutes));
    const PsdResult full = welch_psd(s, resolution_minutes, segment);
    PsdResult band;
    band.segments = full.segments;
    const double fmin = 1.0 / max_period_hours, fmax = 1.0 / min_period_hours;
    for (std::size_t k = 0; k < full.frequency.size(); ++k) {
        const double f = full.frequency[k];
        if (f >= fmin * (1.0 - 1e-9) && f <= fmax * (1.0 + 1e-9)) {
            band.frequency.push_back(f);
            band.power.push_back(full.power[k]);
        }
    }
    return band;
}

/// N x N Pearson correlation, row-major; entries involving a zero-variance series are NaN.
struct CorrelationMatrix {
    std::size_t n = 0;
    std::vector<double> values;
    std::vector<bool> undefined;  // per series

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

inline CorrelationMatrix correlation(const std::vector<std::vector<double>>& rows) {
    CorrelationMatrix c;
    c.n = rows.size();
    if (c.n == 0) throw DataError("correlation of no series");
    const std::size_t len = rows[0].size();
    for (const auto& r : rows) {
        if (r.size() != len || len < 2) throw DataError("correlated series must share a length of at least 2");
    }
    std::vector<std::vector<double>> centered(c.n, std::vector<double>(len));
    std::vector<double> norm(c.n);
    c.undefined.assign(c.n, false);
    for (std::size_t i = 0; i < c.n; ++i) {
        double mu = 0.0;
        for (double v : rows[i]) mu += v;
        mu /= static_cast<double>(len);
        double ss = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
            centered[i][t] = rows[i][t] - mu;
            ss += centered[i][t] * centered[i][t];
        }
        norm[i] = std::sqrt(ss);
        c.undefined[i] = !(ss > 0.0);
    }
    c.values.assign(c.n * c.n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < c.n; ++i) {
        if (c.undefined[i]) continue;
        c.values[i * c.n + i] = 1.0;
        for (std::size_t j = i + 1; j < c.n; ++j) {
            if (c.undefined[j]) continue;
            double s = 0.0;
            for (std::size_t t = 0; t < len; ++t) s += centered[i][t] * centered[j][t];
            const double r = std::clamp(s / (norm[i] * norm[j]), -1.0, 1.0);
            c.values[i * c.n + j] = r;
            c.values[j * c.n + i] = r;
        }
    }
    return c;
}

enum class SpatialPooling { concatenate, per_sample_mean };

/// Correlation between the site rows of multi-site samples. `concatenate` joins all samples along
/// time before correlating; `per_sample_mean` averages the per-sample matrices.
inline CorrelationMatrix spatial_correlation(const data::ScenarioDataset& ds,
                                             SpatialPooling pooling = SpatialPooling::concatenate) {
    if (ds.size() < 2) throw DataError("spatial correlation needs at least 2 samples");
    if (ds.meta.mode != data::ShapingMode::multi_site_day) throw DataError("spatial correlation needs multi-site samples");
    if (pooling == SpatialPooling::concatenate) return correlation(data::flatten(ds));
    CorrelationMatrix acc;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto c = correlation(data::sample_series(ds, i));
        if (acc.n == 0) {
            acc.n = c.n;
            acc.values.assign(c.n * c.n, 0.0);
            acc.undefined.assign(c.n, true);
            counts.assign(c.n * c.n, 0);
        }
        for (std::size_t k = 0; k < c.values.size(); ++k) {
            if (std::isnan(c.values[k])) continue;
            acc.values[k] += c.values[k];
            ++counts[k];
        }
        for (std::size_t s = 0; s < c.n; ++s) acc.undefined[s] = acc.undefined[s] && c.undefined[s];
    }
    for (std::size_t k = 0; k < acc.values.size(); ++k) {
        acc.values[k] = counts[k] ? acc.values[k] / static_cast<double>(counts[k]) : std::numeric_limits<double>::quiet_NaN();
    }
    return acc;
}

struct ClassHistogram {
    std::vector<double> frequency;  // 10 bins over [0, capacity]; empty when the class has no samples
    std::size_t samples = 0;
    bool empty() const { return samples == 0; }
};

/// Bin index of `mw` among `bins` equal bins over [0, capacity]; the last bin is closed above.
inline std::size_t histogram_bin(double mw, double capacity, std::size_t bins = 10) {
    const double u = std::clamp(mw / capacity, 0.0, 1.0);
    return std::min(static_cast<std::size_t>(u * static_cast<double>(bins)), bins - 1);
}

/// Per-class normalized histograms of all values (in MW) of the samples in that class.
inline std::vector<ClassHistogram> class_marginal_histograms(const data::ScenarioDataset& ds, double capacity,
                                                             std::size_t bins = 10) {
    if (!ds.labeled()) throw DataError("class histograms need a labeled dataset");
    if (!(capacity > 0.0)) throw ConfigError("capacity must be positive");
    std::vector<ClassHistogram> out(ds.label_dim);
    std::vector<std::vector<double>> counts(ds.label_dim, std::vector<double>(bins, 0.0));
    std::vector<double> totals(ds.label_dim, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t c = ds.labels.at(i);
        ++out[c].samples;
        for (float v : ds.samples[i]) {
            counts[c][histogram_bin(ds.meta.to_mw(v), capacity, bins)] += 1.0;
            totals[c] += 1.0;
        }
    }
    for (std::size_t c = 0; c < ds.label_dim; ++c) {
        if (out[c].samples == 0) continue;
        out[c].frequency = counts[c];
        for (auto& f : out[c].frequency) f /= totals[c];
    }
    return out;
}

/// Shannon entropy (nats) of a frequency vector.
inline double entropy(const std::vector<double>& freq) {
    double h = 0.0;
    for (double p : freq)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

/// Mean output in MW over readings between 00:00 and 01:00. Samples without start times are
/// taken to begin at midnight.
inline double midnight_power(const data::ScenarioDataset& ds) {
    const double res = ds.meta.resolution_minutes;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::int64_t start = ds.start_minutes.empty() ? 0 : ds.start_minutes[i];
        const auto rows = data::sample_series(ds, i);
        for (const auto& row : rows) {
            for (std::size_t t = 0; t < row.size(); ++t) {
                const auto minute = static_cast<std::int64_t>(std::llround(static_cast<double>(start) + static_cast<double>(t) * res));
                const std::int64_t of_day = ((minute % 1440) + 1440) % 1440;
                if (of_day < 60) {
                    acc += ds.meta.to_mw(row[t]);
                    ++count;
                }
            }
        }
    }
    if (count == 0) throw DataError("no readings fall between midnight and 1 am");
    return acc / static_cast<double>(count);
}

/// All values of a dataset in MW, in sample order.
inline std::vector<double> values_mw(const data::ScenarioDataset& ds) {
    std::vector<double> out;
    for (const auto& s : ds.samples)
        for (float v : s) out.push_back(ds.meta.to_mw(v));
    return out;
}

} // namespace scgan::eval
