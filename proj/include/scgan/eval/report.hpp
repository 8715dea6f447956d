#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/eval/metrics.hpp"

namespace scgan::eval {

struct EvalConfig {
    std::size_t max_lag = 24;
    double acf_tolerance = 0.1;      // max |ACF_real - ACF_gen| over lags 1..max_lag
    double ks_threshold = 0.1;
    double spatial_tolerance = 0.15; // max elementwise |C_real - C_gen|
    double psd_max_period_hours = 144.0;
    double psd_min_period_hours = 2.0;
    SpatialPooling pooling = SpatialPooling::concatenate;
};

template <typename R>
struct Metric {
    std::optional<R> value;
    std::string error;  // set when the metric could not be computed
    bool ok() const { return value.has_value(); }
};

struct AcfPair {
    std::vector<double> real, gen;
    double max_abs_diff = 0.0;  // over lags 1..max_lag
};

struct PsdPair {
    PsdResult real, gen;
};

struct SpatialPair {
    CorrelationMatrix real, gen;
    double max_abs_diff = 0.0;
};

struct HistogramSet {
    std::vector<ClassHistogram> real, gen;
};

struct Verdict {
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct EvalReport {
    Metric<AcfPair> acf;
    Metric<KsResult> ks;
    Metric<PsdPair> psd;
    Metric<SpatialPair> spatial;
    Metric<HistogramSet> histograms;
    Metric<double> midnight_real;
    Metric<double> midnight_gen;
    std::vector<Verdict> verdicts;
    std::size_t real_samples = 0;
    std::size_t gen_samples = 0;
};

namespace detail {

template <typename R>
Metric<R> attempt(const std::function<R()>& f) {
    Metric<R> m;
    try {
        m.value = f();
    } catch (const Error& e) {
        m.error = e.what();
    }
    return m;
}

inline PsdResult mean_psd(const data::ScenarioDataset& ds, const EvalConfig& cfg) {
    const auto rows = data::flatten(ds);
    PsdResult acc;
    for (const auto& row : rows) {
        const auto p = psd(row, ds.meta.resolution_minutes, cfg.psd_max_period_hours, cfg.psd_min_period_hours);
        if (acc.power.empty()) {
            acc = p;
        } else {
            for (std::size_t k = 0; k < p.power.size(); ++k) acc.power[k] += p.power[k];
        }
    }
    for (auto& v : acc.power) v /= static_cast<double>(rows.size());
    return acc;
}

} // namespace detail

/// Runs every applicable metric on a real and a generated set. Failures of individual metrics
/// are recorded in the report rather than thrown.
inline EvalReport evaluate(const data::ScenarioDataset& real, const data::ScenarioDataset& gen, const EvalConfig& cfg = {}) {
    if (real.shape != gen.shape) throw DataError("real and generated samples differ in shape");
    if (real.meta.mode != gen.meta.mode) throw DataError("real and generated sets use different sample layouts");
    EvalReport r;
    r.real_samples = real.size();
    r.gen_samples = gen.size();

    r.acf = detail::attempt<AcfPair>([&] {
        AcfPair a{dataset_autocorrelation(real, cfg.max_lag), dataset_autocorrelation(gen, cfg.max_lag), 0.0};
        for (std::size_t k = 1; k <= cfg.max_lag; ++k) a.max_abs_diff = std::max(a.max_abs_diff, std::abs(a.real[k] - a.gen[k]));
        return a;
    });
    r.ks = detail::attempt<KsResult>([&] { return ecdf_and_ks(values_mw(real), values_mw(gen)); });
    r.psd = detail::attempt<PsdPair>([&] { return PsdPair{detail::mean_psd(real, cfg), detail::mean_psd(gen, cfg)}; });
    if (real.meta.mode == data::ShapingMode::multi_site_day) {
        r.spatial = detail::attempt<SpatialPair>([&] {
            SpatialPair s{spatial_correlation(real, cfg.pooling), spatial_correlation(gen, cfg.pooling), 0.0};
            for (std::size_t k = 0; k < s.real.values.size(); ++k) {
                const double d = std::abs(s.real.values[k] - s.gen.values[k]);
                if (!std::isnan(d)) s.max_abs_diff = std::max(s.max_abs_diff, d);
            }
            return s;
        });
    } else {
        r.spatial.error = "single-site samples";
    }
    if (real.labeled() && gen.labeled()) {
        r.histograms = detail::attempt<HistogramSet>([&] {
            return HistogramSet{class_marginal_histograms(real, real.meta.capacity),
                                class_marginal_histograms(gen, gen.meta.capacity)};
        });
    } else {
        r.histograms.error = "unlabeled data";
    }
    r.midnight_real = detail::attempt<double>([&] { return midnight_power(real); });
    r.midnight_gen = detail::attempt<double>([&] { return midnight_power(gen); });

    if (r.acf.ok()) r.verdicts.push_back({"acf_max_abs_diff", r.acf.value->max_abs_diff, cfg.acf_tolerance,
                                          r.acf.value->max_abs_diff <= cfg.acf_tolerance});
    if (r.ks.ok()) r.verdicts.push_back({"ks_distance", r.ks.value->distance, cfg.ks_threshold,
                                         r.ks.value->distance < cfg.ks_threshold});
    if (r.spatial.ok()) r.verdicts.push_back({"spatial_max_abs_diff", r.spatial.value->max_abs_diff,
                                              cfg.spatial_tolerance, r.spatial.value->max_abs_diff <= cfg.spatial_tolerance});
    return r;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void open_out(std::ofstream& out, const std::filesystem::path& p) {
    out.open(p);
    if (!out) throw Error("cannot write " + p.string());
}

inline void header(std::ostream& out, const std::vector<std::string>& lines) {
    for (const auto& l : lines) out << "# " << l << '\n';
}

} // namespace detail

/// Human-readable summary.
inline std::string report_text(const EvalReport& r) {
    std::ostringstream os;
    os << "samples: real " << r.real_samples << ", generated " << r.gen_samples << '\n';
    auto line = [&](const std::string& name, const auto& metric, const std::function<std::string()>& body) {
        os << name << ": " << (metric.ok() ? body() : "unavailable (" + metric.error + ")") << '\n';
    };
    line("acf", r.acf, [&] {
        std::string s = "max |diff| over lags 1.." + std::to_string(r.acf.value->real.size() - 1) + " = " +
                        detail::fmt(r.acf.value->max_abs_diff);
        for (std::size_t k : {std::size_t{1}, std::size_t{6}, std::size_t{12}, std::size_t{24}}) {
            if (k < r.acf.value->real.size()) {
                s += "; lag " + std::to_string(k) + " real " + detail::fmt(r.acf.value->real[k]) + " gen " +
                     detail::fmt(r.acf.value->gen[k]);
            }
        }
        return s;
    });
    line("ks", r.ks, [&] { return "distance " + detail::fmt(r.ks.value->distance); });
    line("psd", r.psd, [&] {
        const auto& p = r.psd.value->real;
        return std::to_string(p.frequency.size()) + " band bins from " + detail::fmt(1.0 / p.frequency.back()) +
               " h to " + detail::fmt(1.0 / p.frequency.front()) + " h";
    });
    line("spatial", r.spatial, [&] { return "max |diff| " + detail::fmt(r.spatial.value->max_abs_diff); });
    line("class_histograms", r.histograms, [&] {
        std::string s;
        for (std::size_t c = 0; c < r.histograms.value->gen.size(); ++c) {
            const auto& g = r.histograms.value->gen[c];
            const auto& re = r.histograms.value->real[c];
            s += (c ? "; " : "") + std::string("class ") + std::to_string(c) + " entropy real " +
                 (re.empty() ? "empty" : detail::fmt(entropy(re.frequency))) + " gen " +
                 (g.empty() ? "empty" : detail::fmt(entropy(g.frequency)));
        }
        return s;
    });
    line("midnight_mw_real", r.midnight_real, [&] { return detail::fmt(*r.midnight_real.value); });
    line("midnight_mw_gen", r.midnight_gen, [&] { return detail::fmt(*r.midnight_gen.value); });
    for (const auto& v : r.verdicts) {
        os << "verdict " << v.metric << ' ' << detail::fmt(v.value) << " vs " << detail::fmt(v.threshold) << ' '
           << (v.pass ? "PASS" : "FAIL") << '\n';
    }
    return os.str();
}

/// Writes report.txt plus one CSV table per available metric into `dir`. Returns the files written.
inline std::vector<std::filesystem::path> write_report(const EvalReport& r, const std::filesystem::path& dir,
                                                       const std::vector<std::string>& header_lines = {}) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    auto open = [&](const std::string& name, std::ofstream& out) {
        files.push_back(dir / name);
        detail::open_out(out, files.back());
        detail::header(out, header_lines);
    };
    {
        std::ofstream out;
        open("report.txt", out);
        out << report_text(r);
    }
    if (r.acf.ok()) {
        std::ofstream out;
        open("acf.csv", out);
        out << "lag,real,gen\n";
        for (std::size_t k = 0; k < r.acf.value->real.size(); ++k) {
            out << k << ',' << detail::fmt(r.acf.value->real[k]) << ',' << detail::fmt(r.acf.value->gen[k]) << '\n';
        }
    }
    if (r.ks.ok()) {
        std::ofstream out;
        open("cdf.csv", out);
        out << "set,value_mw,cdf\n";
        for (const auto* e : {&r.ks.value->real, &r.ks.value->gen}) {
            const std::string name = e == &r.ks.value->real ? "real" : "gen";
            // Thin very large supports to at most ~2000 steps per set.
            const std::size_t stride = std::max<std::size_t>(1, e->x.size() / 2000);
            for (std::size_t i = 0; i < e->x.size(); i += stride) out << name << ',' << detail::fmt(e->x[i]) << ',' << detail::fmt(e->f[i]) << '\n';
            if ((e->x.size() - 1) % stride != 0) out << name << ',' << detail::fmt(e->x.back()) << ",1\n";
        }
        out << "# ks_distance=" << detail::fmt(r.ks.value->distance) << '\n';
    }
    if (r.psd.ok()) {
        std::ofstream out;
        open("psd.csv", out);
        out << "frequency_per_hour,period_hours,real,gen\n";
        const auto& p = *r.psd.value;
        for (std::size_t k = 0; k < p.real.frequency.size(); ++k) {
            out << detail::fmt(p.real.frequency[k]) << ',' << detail::fmt(1.0 / p.real.frequency[k]) << ','
                << detail::fmt(p.real.power[k]) << ',' << detail::fmt(p.gen.power[k]) << '\n';
        }
    }
    if (r.spatial.ok()) {
        for (const auto* m : {&r.spatial.value->real, &r.spatial.value->gen}) {
            std::ofstream out;
            open(m == &r.spatial.value->real ? "spatial_real.csv" : "spatial_gen.csv", out);
            for (std::size_t i = 0; i < m->n; ++i) {
                for (std::size_t j = 0; j < m->n; ++j) out << (j ? "," : "") << detail::fmt((*m)(i, j));
                out << '\n';
            }
        }
    }
    if (r.histograms.ok()) {
        std::ofstream out;
        open("class_histograms.csv", out);
        out << "set,class,samples";
        for (int b = 0; b < 10; ++b) out << ",bin" << b;
        out << '\n';
        for (const auto* hs : {&r.histograms.value->real, &r.histograms.value->gen}) {
            const std::string name = hs == &r.histograms.value->real ? "real" : "gen";
            for (std::size_t c = 0; c < hs->size(); ++c) {
                out << name << ',' << c << ',' << (*hs)[c].samples;
                for (double f : (*hs)[c].frequency) out << ',' << detail::fmt(f);
                out << '\n';
            }
        }
    }
    return files;
}

} // namespace scgan::eval
