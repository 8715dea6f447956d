#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scgan/data/labels.hpp"
#include "scgan/data/series.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/data/synth.hpp"
#include "scgan/data/transforms.hpp"

using namespace scgan;
using namespace scgan::data;

namespace {

std::string csv_rows(int sites, int rows, int step_minutes, double value = 1.0) {
    std::ostringstream os;
    os << "timestamp";
    for (int s = 0; s < sites; ++s) os << ",site_" << s;
    os << '\n';
    for (int r = 0; r < rows; ++r) {
        os << format_timestamp(26297280 + static_cast<Minutes>(r) * step_minutes);
        for (int s = 0; s < sites; ++s) os << ',' << value;
        os << '\n';
    }
    return os.str();
}

std::vector<RawSeries> parse(const std::string& text, CsvOptions opt = {}) {
    std::istringstream in(text);
    return parse_csv(in, opt);
}

ScenarioDataset constant_dataset(const std::vector<double>& means_mw, double capacity = 16.0) {
    ScenarioDataset ds;
    ds.shape = {1, 4, 4};
    ds.meta.capacity = capacity;
    for (double m : means_mw) ds.samples.emplace_back(16, static_cast<float>(m / capacity));
    return ds;
}

ScenarioDataset labeled_dataset(const std::vector<std::size_t>& labels, std::size_t label_dim) {
    ScenarioDataset ds;
    ds.shape = {1, 1, 2};
    ds.label_dim = label_dim;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ds.samples.push_back({static_cast<float>(i) / static_cast<float>(labels.size()), 0.f});
        ds.labels.push_back(labels[i]);
    }
    return ds;
}

// Independent ramp oracle: every ordered pair at distance exactly w.
double brute_force_ramp(const std::vector<double>& x, std::size_t w) {
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j > i && j - i == w) best = std::max(best, std::fabs(x[i] - x[j]));
    return best;
}

} // namespace

TEST(Csv, TwoSitesOneDay) {
    const auto s = parse(csv_rows(2, 288, 5));
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].size(), 288u);
    EXPECT_EQ(s[1].size(), 288u);
    EXPECT_EQ(s[0].resolution_minutes, 5);
    EXPECT_EQ(s[1].site_id, "site_1");
}

TEST(Csv, HourlyResolution) {
    const auto s = parse(csv_rows(1, 24, 60));
    EXPECT_EQ(s[0].resolution_minutes, 60);
    EXPECT_EQ(s[0].size(), 24u);
}

TEST(Csv, DuplicateTimestampNamesRow) {
    const std::string text = "timestamp,a\n2020-01-01T00:00,1\n2020-01-01T00:05,1\n2020-01-01T00:05,2\n";
    try {
        parse(text);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
    }
}

TEST(Csv, RejectsNegativeMissingAndGaps) {
    EXPECT_THROW(parse("timestamp,a\n2020-01-01T00:00,1\n2020-01-01T00:05,-1\n"), DataError);
    EXPECT_THROW(parse("timestamp,a\n2020-01-01T00:00,1\n2020-01-01T00:05,\n2020-01-01T00:10,1\n"), DataError);
    EXPECT_THROW(parse("timestamp,a\n2020-01-01T00:05,1\n2020-01-01T00:00,1\n"), DataError);
    const std::string gap = "timestamp,a\n2020-01-01T00:00,1\n2020-01-01T00:05,2\n2020-01-01T00:20,5\n";
    EXPECT_THROW(parse(gap), DataError);
    CsvOptions fill;
    fill.gaps = GapPolicy::interpolate;
    const auto s = parse(gap, fill);
    ASSERT_EQ(s[0].size(), 5u);
    EXPECT_DOUBLE_EQ(s[0].values[2], 3.0);
    EXPECT_DOUBLE_EQ(s[0].values[3], 4.0);
}

TEST(Csv, WriteThenParseRoundTrip) {
    RawSeries a{"a", 26297280, 5, {0.0, 1.5, 16.0}, 16.0};
    RawSeries b{"b", 26297280, 5, {2.0, 3.25, 4.0}, 16.0};
    std::ostringstream os;
    write_csv(os, {a, b}, {"config_hash=abc"});
    const auto back = parse(os.str());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].values, a.values);
    EXPECT_EQ(back[1].values, b.values);
    EXPECT_DOUBLE_EQ(back[0].capacity, 16.0);
    EXPECT_EQ(back[0].start, a.start);
}

TEST(Csv, ForecastColumnsSeparated) {
    std::istringstream in("timestamp,a,a_forecast\n2020-01-01T00:00,1,2\n2020-01-01T01:00,3,4\n");
    std::vector<RawSeries> fc;
    const auto s = parse_csv(in, {}, &fc);
    ASSERT_EQ(s.size(), 1u);
    ASSERT_EQ(fc.size(), 1u);
    EXPECT_EQ(fc[0].values, (std::vector<double>{2, 4}));
}

TEST(Timestamps, ParseFormatAndMonth) {
    const auto t = parse_timestamp("2020-07-03T12:30");
    ASSERT_TRUE(t);
    EXPECT_EQ(format_timestamp(*t), "2020-07-03T12:30:00");
    EXPECT_EQ(month_index(*t), 6u);
    EXPECT_EQ(month_index(*parse_timestamp("2019-12-31T23:55")), 11u);
    EXPECT_FALSE(parse_timestamp("yesterday"));
}

TEST(Normalize, Examples) {
    RawSeries s{"a", 0, 5, {8.0, 0.0, 16.0}, 16.0};
    const auto n = normalize(s);
    EXPECT_EQ(n.values, (std::vector<double>{0.5, 0.0, 1.0}));
    const auto back = denormalize(n);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.values[i], s.values[i], 1e-6 * std::max(1.0, s.values[i]));
    s.capacity = 0;
    EXPECT_THROW(normalize(s), ConfigError);
}

TEST(Shaping, SingleSiteGridCounts) {
    NormalizedSeries s{"a", 0, 5, std::vector<double>(1152, 0.25), 16};
    const auto ds = shape_samples({s}, {});
    EXPECT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.shape, (SampleShape{1, 24, 24}));
    EXPECT_EQ(ds.start_minutes[1], 576 * 5);
    s.values.resize(1000);
    EXPECT_THROW(shape_samples({s}, {}), DataError);
}

TEST(Shaping, MultiSiteDay) {
    std::vector<NormalizedSeries> sites;
    for (int i = 0; i < 24; ++i) sites.push_back({"s" + std::to_string(i), 0, 60, std::vector<double>(30 * 24, 0.1 * (i % 10)), 16});
    ShapeConfig cfg;
    cfg.mode = ShapingMode::multi_site_day;
    cfg.width = 24;
    cfg.expected_sites = 24;
    const auto ds = shape_samples(sites, cfg);
    EXPECT_EQ(ds.size(), 30u);
    EXPECT_EQ(ds.shape, (SampleShape{1, 24, 24}));
    sites.pop_back();
    EXPECT_THROW(shape_samples(sites, cfg), DataError);
    cfg.expected_sites.reset();
    sites[3].values.resize(30 * 24 - 24);
    EXPECT_THROW(shape_samples(sites, cfg), DataError);
}

TEST(Shaping, FlattenRecoversSeries) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    NormalizedSeries s{"a", 0, 5, std::vector<double>(576 * 3), 16};
    for (auto& v : s.values) v = static_cast<float>(u(rng));
    const auto flat = flatten(shape_samples({s}, {}));
    EXPECT_EQ(flat[0], s.values);

    std::vector<NormalizedSeries> sites;
    for (int i = 0; i < 3; ++i) {
        NormalizedSeries m{"s", 0, 60, std::vector<double>(48), 16};
        for (auto& v : m.values) v = static_cast<float>(u(rng));
        sites.push_back(m);
    }
    ShapeConfig cfg;
    cfg.mode = ShapingMode::multi_site_day;
    const auto rows = flatten(shape_samples(sites, cfg));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(rows[i], sites[i].values);
}

TEST(Labels, MeanExamples) {
    const auto ds = label_by_mean(constant_dataset({2.0, 0.0, 6.0, 0.49, 1.5, 5.99}));
    EXPECT_EQ(ds.label_dim, 5u);
    EXPECT_EQ(ds.labels, (std::vector<std::size_t>{2, 0, 4, 0, 2, 3}));
}

TEST(Labels, RampExamples) {
    EXPECT_DOUBLE_EQ(ramp_statistic(std::vector<double>(50, 3.0), std::size_t{6}), 0.0);
    EXPECT_DOUBLE_EQ(ramp_statistic(std::vector<double>{0, 3, 1}, std::size_t{2}), 1.0);
    EXPECT_THROW(ramp_statistic(std::vector<double>{0, 1}, std::size_t{2}), DataError);
    EXPECT_EQ(ramp_class(9.0), 2u);
    EXPECT_EQ(ramp_class(0.0), 0u);
    EXPECT_EQ(ramp_class(4.0), 0u);
    EXPECT_EQ(ramp_class(8.0), 1u);
    EXPECT_EQ(ramp_class(16.0), 3u);
    EXPECT_THROW(ramp_class(16.5), DataError);
    EXPECT_THROW(ramp_statistic(std::vector<double>{0, 1, 2}, 7, 5), ConfigError);
}

TEST(Labels, RampMatchesBruteForce) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 16);
    for (int seed = 0; seed < 200; ++seed) {
        std::vector<double> x(288);
        for (auto& v : x) v = u(rng);
        const std::size_t w = 1 + static_cast<std::size_t>(seed % 12);
        const double fast = ramp_statistic(x, w);
        const double slow = brute_force_ramp(x, w);
        EXPECT_NEAR(fast, slow, 1e-9 * std::max(1.0, slow));
    }
}

TEST(Labels, RampDatasetUsesThirtyMinuteWindow) {
    ScenarioDataset ds;
    ds.shape = {1, 1, 12};
    ds.meta.capacity = 16;
    ds.meta.resolution_minutes = 5;
    std::vector<float> s(12, 0.f);
    for (std::size_t i = 6; i < 12; ++i) s[i] = 9.f / 16.f;  // 9 MW step six readings later
    ds.samples = {s, std::vector<float>(12, 0.5f)};
    const auto l = label_by_ramp(ds);
    EXPECT_EQ(l.label_dim, 4u);
    EXPECT_EQ(l.labels, (std::vector<std::size_t>{2, 0}));
}

TEST(Labels, MonthExamples) {
    ScenarioDataset ds = constant_dataset({1, 1, 1});
    ds.start_minutes = {*parse_timestamp("2020-07-03T00:00"), *parse_timestamp("2020-12-31T00:00"),
                        *parse_timestamp("2021-01-31T23:00")};
    const auto l = label_by_month(ds);
    EXPECT_EQ(l.labels, (std::vector<std::size_t>{6, 11, 0}));
    ds.start_minutes.clear();
    EXPECT_THROW(label_by_month(ds), DataError);
}

TEST(Labels, MonthYearCoversAllClasses) {
    NormalizedSeries s{"a", *parse_timestamp("2021-01-01T00:00"), 60, std::vector<double>(365 * 24, 0.3), 16};
    ShapeConfig cfg;
    cfg.mode = ShapingMode::multi_site_day;
    const auto l = label_by_month(shape_samples({s}, cfg));
    for (std::size_t c : l.class_counts()) EXPECT_GT(c, 0u);
}

TEST(Labels, ForecastQuartiles) {
    ScenarioDataset train = constant_dataset(std::vector<double>(101, 1.0));
    for (int i = 0; i <= 100; ++i) train.forecasts.push_back({static_cast<float>(i)});
    Warnings w;
    const auto cuts = forecast_quartiles(train, &w);
    EXPECT_TRUE(w.empty());
    ScenarioDataset probe = constant_dataset({1, 1, 1, 1, 1});
    probe.forecasts = {{10.f}, {30.f}, {60.f}, {90.f}, {-5.f}};
    EXPECT_EQ(label_by_forecast_error(probe, cuts).labels, (std::vector<std::size_t>{0, 1, 2, 3, 0}));

    ScenarioDataset flat = constant_dataset({1, 1, 1});
    flat.forecasts = {{5.f}, {5.f}, {5.f}};
    Warnings w2;
    const auto l = label_by_forecast_error(flat, &w2);
    EXPECT_EQ(l.labels, (std::vector<std::size_t>{0, 0, 0}));
    EXPECT_EQ(w2.size(), 1u);
    flat.forecasts.clear();
    EXPECT_THROW(label_by_forecast_error(flat, nullptr), DataError);
}

TEST(Labels, PartitionAndOrderInvariance) {
    const auto synth = synth_dataset(SynthKind::ar1_wind, defaults_for(SynthKind::ar1_wind), 40, 5);
    ScenarioDataset ds = synth.dataset;
    const auto mean = label_by_mean(ds);
    const auto ramp = label_by_ramp(ds);
    for (const auto* l : {&mean, &ramp}) {
        std::size_t total = 0;
        for (std::size_t c : l->class_counts()) total += c;
        EXPECT_EQ(total, ds.size());
    }
    std::vector<std::size_t> perm(ds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7) % perm.size();
    const auto shuffled = label_by_ramp(ds.subset(perm));
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(shuffled.labels[i], ramp.labels[perm[i]]);
}

TEST(Split, Proportions) {
    const auto ds = labeled_dataset(std::vector<std::size_t>(100, 0), 1);
    const auto s = split(ds, 0.8, 1);
    EXPECT_EQ(s.train.size(), 80u);
    EXPECT_EQ(s.validation.size(), 20u);
    const auto three = split(labeled_dataset({0, 0, 0}, 1), 0.5, 1);
    EXPECT_EQ(three.train.size(), 2u);
    EXPECT_EQ(three.validation.size(), 1u);
    EXPECT_THROW(split(ds, 1.0, 1), ConfigError);
    EXPECT_THROW(split(ds, 0.0, 1), ConfigError);
}

TEST(Split, DeterministicDisjointExhaustiveStratified) {
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < 97; ++i) labels.push_back(i % 3 == 0 ? 0 : (i % 5 == 0 ? 1 : 2));
    const auto ds = labeled_dataset(labels, 3);
    const auto a = split(ds, 0.8, 42);
    const auto b = split(ds, 0.8, 42);
    EXPECT_TRUE(a.stratified);
    EXPECT_EQ(a.train.samples, b.train.samples);
    std::multiset<float> seen;
    for (const auto* part : {&a.train, &a.validation})
        for (const auto& s : part->samples) seen.insert(s[0]);
    EXPECT_EQ(seen.size(), ds.size());
    EXPECT_EQ(std::set<float>(seen.begin(), seen.end()).size(), ds.size());
    EXPECT_EQ(a.train.size(), 78u);
    const auto counts = ds.class_counts();
    const auto tc = a.train.class_counts();
    for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(std::fabs(static_cast<double>(tc[c]) - 0.8 * counts[c]), 1.0);
}

TEST(Split, SingletonClassFallsBack) {
    const auto ds = labeled_dataset({0, 0, 0, 0, 1}, 2);
    Warnings w;
    const auto s = split(ds, 0.6, 3, true, &w);
    EXPECT_FALSE(s.stratified);
    EXPECT_EQ(w.size(), 1u);
    EXPECT_EQ(s.train.size(), 3u);
}

TEST(Noise, ZeroSigmaIsIdentity) {
    const auto ds = synth_dataset(SynthKind::ar1_wind, defaults_for(SynthKind::ar1_wind), 4, 1).dataset;
    EXPECT_EQ(inject_noise(ds, 0.0, 3).dataset.samples, ds.samples);
    EXPECT_THROW(inject_noise(ds, -0.1, 3), ConfigError);
}

TEST(Noise, EmpiricalStdAndRatio) {
    const auto ds = synth_dataset(SynthKind::ar1_wind, defaults_for(SynthKind::ar1_wind), 20, 1).dataset;
    const auto r = inject_noise(ds, 0.1, 9);
    EXPECT_NEAR(r.added_std, 0.1, 0.01);
    for (const auto& s : r.dataset.samples)
        for (float v : s) {
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
        }
    // Wind-like data with a mean near 0.3 of capacity puts sigma = 0.01 in the few-percent band.
    auto p = defaults_for(SynthKind::ar1_wind);
    p.offset = -1.0;
    const auto windy = synth_dataset(SynthKind::ar1_wind, p, 20, 2).dataset;
    const auto small = inject_noise(windy, 0.01, 4);
    EXPECT_GE(small.noise_to_signal, 0.02);
    EXPECT_LE(small.noise_to_signal, 0.05);
}

TEST(BadData, ReplacementCounts) {
    auto solar = synth_dataset(SynthKind::diurnal_solar, defaults_for(SynthKind::diurnal_solar), 1000, 1).dataset;
    const auto wind = synth_dataset(SynthKind::ar1_wind, defaults_for(SynthKind::ar1_wind), 100, 2).dataset;
    EXPECT_EQ(inject_bad_data(solar, wind, 0.0, 1).dataset.samples, solar.samples);
    const auto five = inject_bad_data(solar, wind, 0.05, 1);
    EXPECT_EQ(five.replaced.size(), 50u);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < solar.size(); ++i) changed += five.dataset.samples[i] != solar.samples[i];
    EXPECT_EQ(changed, 50u);
    const auto all = inject_bad_data(solar, wind, 1.0, 1);
    EXPECT_EQ(all.replaced.size(), solar.size());
    std::set<std::vector<float>> wind_set(wind.samples.begin(), wind.samples.end());
    for (const auto& s : all.dataset.samples) EXPECT_TRUE(wind_set.count(s));
    EXPECT_THROW(inject_bad_data(solar, wind, 1.5, 1), ConfigError);
}

TEST(Synth, Ar1LatentAcf) {
    std::mt19937_64 rng(11);
    const auto z = ar1_latent(20000, 0.9, rng);
    double mu = 0;
    for (double v : z) mu += v;
    mu /= static_cast<double>(z.size());
    double c0 = 0, c1 = 0;
    for (std::size_t t = 0; t < z.size(); ++t) c0 += (z[t] - mu) * (z[t] - mu);
    for (std::size_t t = 0; t + 1 < z.size(); ++t) c1 += (z[t] - mu) * (z[t + 1] - mu);
    EXPECT_NEAR(c1 / c0, 0.9, 0.05);
}

TEST(Synth, SolarNightIsDark) {
    auto p = defaults_for(SynthKind::diurnal_solar);
    p.days = 10;
    const auto s = synthesize(SynthKind::diurnal_solar, p);
    for (std::size_t i = 0; i < s[0].size(); ++i) {
        const double hour = static_cast<double>((i * 5) % 1440) / 60.0;
        if (hour < p.sunrise_hour || hour >= p.sunset_hour) EXPECT_LT(s[0].values[i] / p.capacity, 0.02);
    }
}

TEST(Synth, IndependentSitesAreUncorrelated) {
    auto p = defaults_for(SynthKind::multi_site);
    p.sites = 3;
    p.days = 500;
    p.correlation = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    const auto s = synthesize(SynthKind::multi_site, p);
    auto corr = [](const std::vector<double>& a, const std::vector<double>& b) {
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i];
            mb += b[i];
        }
        ma /= a.size();
        mb /= b.size();
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        return sab / std::sqrt(saa * sbb);
    };
    EXPECT_LT(std::fabs(corr(s[0].values, s[1].values)), 0.1);
    EXPECT_LT(std::fabs(corr(s[0].values, s[2].values)), 0.1);
}

TEST(Synth, NonPositiveDefiniteIsError) {
    auto p = defaults_for(SynthKind::multi_site);
    p.sites = 2;
    p.correlation = {1, 1.5, 1.5, 1};
    EXPECT_THROW(synthesize(SynthKind::multi_site, p), DataError);
}

TEST(Synth, DatasetCountsAndDescriptor) {
    const auto w = synth_dataset(SynthKind::ar1_wind, defaults_for(SynthKind::ar1_wind), 7, 3);
    EXPECT_EQ(w.dataset.size(), 7u);
    EXPECT_NEAR(w.descriptor.latent_acf[1], 0.9, 1e-12);
    auto p = defaults_for(SynthKind::multi_site);
    p.sites = 4;
    const auto m = synth_dataset(SynthKind::multi_site, p, 5, 3);
    EXPECT_EQ(m.dataset.shape, (SampleShape{1, 4, 24}));
    EXPECT_EQ(m.descriptor.target_correlation.size(), 16u);
    EXPECT_NO_THROW(m.dataset.validate());
}

TEST(ForecastErrors, EncodingRoundTrip) {
    ScenarioDataset ds = constant_dataset({8.0});
    ds.forecasts = {std::vector<float>(16, 0.25f)};
    const auto e = to_forecast_errors(ds);
    EXPECT_TRUE(e.meta.forecast_error);
    EXPECT_FLOAT_EQ(e.samples[0][0], 0.625f);
    EXPECT_NEAR(e.meta.to_mw(e.samples[0][0]), 4.0, 1e-6);
    EXPECT_NEAR(e.meta.from_mw(4.0), 0.625, 1e-12);
}
