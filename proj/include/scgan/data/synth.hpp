#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "scgan/data/dataset.hpp"
#include "scgan/data/series.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/error.hpp"

namespace scgan::data {

enum class SynthKind { diurnal_solar, ar1_wind, multi_site };

inline const char* to_string(SynthKind k) {
    switch (k) {
        case SynthKind::diurnal_solar: return "diurnal_solar";
        case SynthKind::ar1_wind: return "ar1_wind";
        case SynthKind::multi_site: return "multi_site";
    }
    return "?";
}

struct SynthParams {
    std::size_t days = 30;
    std::uint64_t seed = 1;
    double capacity = 16.0;
    int resolution_minutes = 5;  // multi_site uses hourly data by default (see defaults_for)
    Minutes start = 26297280;    // 2020-01-01T00:00

    // diurnal_solar: clipped half-sine between sunrise and sunset times a per-day amplitude.
    double sunrise_hour = 6.0;
    double sunset_hour = 18.0;
    double amplitude_min = 0.3;
    double amplitude_max = 1.0;
    double solar_noise = 0.02;

    // ar1_wind / multi_site: latent z_t = phi z_{t-1} + sqrt(1-phi^2) e_t, power = logistic(offset + gain z).
    double phi = 0.9;
    double gain = 1.5;
    double offset = 0.0;
    /// When non-empty, each block of `regime_steps` readings draws its offset uniformly from this list.
    std::vector<double> regime_offsets;
    std::size_t regime_steps = 576;

    // multi_site: target latent correlation; empty means rho^|i-j| with `site_rho`.
    std::size_t sites = 8;
    double site_rho = 0.8;
    std::vector<double> correlation;  // row-major sites x sites
};

/// Ground truth recorded alongside a synthetic dataset.
struct SynthDescriptor {
    SynthKind kind = SynthKind::ar1_wind;
    SynthParams params;
    std::vector<double> latent_acf;           // phi^tau, tau = 0..48 (AR kinds)
    std::vector<double> target_correlation;   // multi_site latent correlation, row-major
};

inline SynthParams defaults_for(SynthKind kind) {
    SynthParams p;
    if (kind == SynthKind::multi_site) p.resolution_minutes = 60;
    return p;
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> ar_acf(double phi) {
    std::vector<double> acf(49);
    for (std::size_t t = 0; t < acf.size(); ++t) acf[t] = std::pow(phi, static_cast<double>(t));
    return acf;
}

inline std::size_t steps_per_day(const SynthParams& p) {
    if (p.resolution_minutes <= 0 || 1440 % p.resolution_minutes != 0) {
        throw ConfigError("resolution must divide a day");
    }
    return static_cast<std::size_t>(1440 / p.resolution_minutes);
}

} // namespace detail

/// Latent AR(1) path with unit stationary variance, as used by the wind generators.
inline std::vector<double> ar1_latent(std::size_t n, double phi, std::mt19937_64& rng) {
    if (!(phi > -1.0 && phi < 1.0)) throw ConfigError("AR coefficient must lie in (-1, 1)");
    std::normal_distribution<double> normal;
    std::vector<double> z(n);
    double prev = normal(rng);
    const double innovation = std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 0; t < n; ++t) {
        prev = phi * prev + innovation * normal(rng);
        z[t] = prev;
    }
    return z;
}

/// Synthesizes MW series with known structure standing in for measured plant data.
inline std::vector<RawSeries> synthesize(SynthKind kind, const SynthParams& p, SynthDescriptor* descriptor = nullptr) {
    if (p.days == 0) throw ConfigError("days must be positive");
    if (!(p.capacity > 0.0)) throw ConfigError("capacity must be positive");
    const std::size_t per_day = detail::steps_per_day(p);
    const std::size_t n = p.days * per_day;
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> normal;
    if (descriptor) {
        descriptor->kind = kind;
        descriptor->params = p;
        descriptor->latent_acf.clear();
        descriptor->target_correlation.clear();
    }

    auto make = [&](std::string id) {
        RawSeries s;
        s.site_id = std::move(id);
        s.start = p.start;
        s.resolution_minutes = p.resolution_minutes;
        s.capacity = p.capacity;
        s.values.resize(n);
        return s;
    };

    switch (kind) {
        case SynthKind::diurnal_solar: {
            if (!(p.sunrise_hour < p.sunset_hour) || p.amplitude_min < 0 || p.amplitude_max > 1 ||
                p.amplitude_min > p.amplitude_max) {
                throw ConfigError("invalid diurnal solar parameters");
            }
            RawSeries s = make("solar_1");
            std::uniform_real_distribution<double> amp(p.amplitude_min, p.amplitude_max);
            for (std::size_t d = 0; d < p.days; ++d) {
                const double a = amp(rng);
                for (std::size_t k = 0; k < per_day; ++k) {
                    const double hour = static_cast<double>(k * p.resolution_minutes) / 60.0;
                    double v = 0.0;
                    if (hour > p.sunrise_hour && hour < p.sunset_hour) {
                        const double phase = (hour - p.sunrise_hour) / (p.sunset_hour - p.sunrise_hour);
                        v = a * std::sin(std::numbers::pi * phase) + p.solar_noise * normal(rng);
                    }
                    s.values[d * per_day + k] = std::clamp(v, 0.0, 1.0) * p.capacity;
                }
            }
            return {s};
        }
        case SynthKind::ar1_wind: {
            RawSeries s = make("wind_1");
            const auto z = ar1_latent(n, p.phi, rng);
            std::uniform_int_distribution<std::size_t> pick(0, p.regime_offsets.empty() ? 0 : p.regime_offsets.size() - 1);
            double offset = p.offset;
            for (std::size_t t = 0; t < n; ++t) {
                if (!p.regime_offsets.empty() && t % p.regime_steps == 0) offset = p.regime_offsets[pick(rng)];
                s.values[t] = detail::logistic(offset + p.gain * z[t]) * p.capacity;
            }
            if (descriptor) descriptor->latent_acf = detail::ar_acf(p.phi);
            return {s};
        }
        case SynthKind::multi_site: {
            const std::size_t m = p.sites;
            if (m == 0) throw ConfigError("site count must be positive");
            Eigen::MatrixXd sigma(m, m);
            if (p.correlation.empty()) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        sigma(i, j) = std::pow(p.site_rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
            } else {
                if (p.correlation.size() != m * m) throw ConfigError("correlation matrix must be sites x sites");
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) sigma(i, j) = p.correlation[i * m + j];
            }
            if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw DataError("target correlation must be symmetric");
            Eigen::LLT<Eigen::MatrixXd> llt(sigma);
            if (llt.info() != Eigen::Success) throw DataError("target correlation matrix is not positive definite");
            const Eigen::MatrixXd chol = llt.matrixL();
            if (!(p.phi > -1.0 && p.phi < 1.0)) throw ConfigError("AR coefficient must lie in (-1, 1)");
            const double innovation = std::sqrt(1.0 - p.phi * p.phi);

            std::vector<RawSeries> out;
            for (std::size_t i = 0; i < m; ++i) out.push_back(make("site_" + std::to_string(i + 1)));
            Eigen::VectorXd e(m), z(m);
            for (std::size_t i = 0; i < m; ++i) e(i) = normal(rng);
            z = chol * e;
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t i = 0; i < m; ++i) e(i) = normal(rng);
                z = p.phi * z + innovation * (chol * e);
                for (std::size_t i = 0; i < m; ++i) out[i].values[t] = detail::logistic(p.offset + p.gain * z(i)) * p.capacity;
            }
            if (descriptor) {
                descriptor->latent_acf = detail::ar_acf(p.phi);
                descriptor->target_correlation.assign(sigma.data(), sigma.data() + m * m);
            }
            return out;
        }
    }
    throw ConfigError("unknown synthetic kind");
}

struct SynthDataset {
    ScenarioDataset dataset;
    SynthDescriptor descriptor;
};

/// Default sample layout for each kind: 24x24 grids of 5-minute readings for the single-site kinds,
/// sites x 24 hourly steps for multi_site.
inline ShapeConfig default_shape(SynthKind kind, const SynthParams& p) {
    ShapeConfig cfg;
    if (kind == SynthKind::multi_site) {
        cfg.mode = ShapingMode::multi_site_day;
        cfg.width = static_cast<std::size_t>(1440 / p.resolution_minutes);
        cfg.expected_sites = p.sites;
    }
    return cfg;
}

/// Synthesizes exactly `n_samples` normalized samples of the kind's default layout
/// (p.days is derived from the count) together with the ground-truth descriptor.
inline SynthDataset synth_dataset(SynthKind kind, SynthParams p, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw ConfigError("sample count must be positive");
    p.seed = seed;
    const ShapeConfig cfg = default_shape(kind, p);
    const std::size_t per_day = detail::steps_per_day(p);
    const std::size_t span = cfg.mode == ShapingMode::single_site_grid ? cfg.height * cfg.width : cfg.width;
    std::size_t steps = n_samples * span;
    while (steps % per_day != 0) steps += span;
    p.days = steps / per_day;
    SynthDataset out;
    const auto raw = synthesize(kind, p, &out.descriptor);
    std::vector<NormalizedSeries> normalized;
    for (const auto& r : raw) normalized.push_back(normalize(r));
    out.dataset = shape_samples(normalized, cfg);
    std::vector<std::size_t> keep(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) keep[i] = i;
    out.dataset = out.dataset.subset(keep);
    return out;
}

} // namespace scgan::data
