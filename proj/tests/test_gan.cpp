#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "scgan/gan/checkpoint.hpp"
#include "scgan/gan/generate.hpp"
#include "scgan/gan/model.hpp"
#include "scgan/gan/train.hpp"

using namespace scgan;
using namespace scgan::gan;

namespace {

data::ScenarioDataset random_dataset(std::size_t n, data::SampleShape shape, std::size_t label_dim, std::uint64_t seed) {
    data::ScenarioDataset ds;
    ds.shape = shape;
    ds.label_dim = label_dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> s(shape.size());
        for (auto& v : s) v = u(rng);
        ds.samples.push_back(std::move(s));
        if (label_dim) ds.labels.push_back(i % label_dim);
    }
    return ds;
}

ArchitectureOptions small(double scale = 1.0 / 16) {
    ArchitectureOptions o;
    o.scale = scale;
    o.noise_dim = 8;
    return o;
}

std::vector<float> flat_params(const nn::Network<float>& net) {
    std::vector<float> out;
    for (const auto* p : net.parameters()) out.insert(out.end(), p->value.data().begin(), p->value.data().end());
    for (const auto* b : net.buffers()) out.insert(out.end(), b->value.data().begin(), b->value.data().end());
    return out;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("scgan_test_" + name)).string();
}

} // namespace

TEST(Losses, GeneratorLossExamples) {
    EXPECT_DOUBLE_EQ(generator_loss<float>(std::vector<float>{1, 1, 1}), -1.0);
    EXPECT_DOUBLE_EQ(generator_loss<float>(std::vector<float>{0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(generator_loss<float>(std::vector<float>{2, -1}), -0.5);
    EXPECT_THROW(generator_loss<float>(std::vector<float>{}), DataError);
}

TEST(Losses, DiscriminatorLossExamples) {
    EXPECT_DOUBLE_EQ(discriminator_loss<float>(std::vector<float>{1, 1}, std::vector<float>{0, 0}), -1.0);
    EXPECT_DOUBLE_EQ(discriminator_loss<float>(std::vector<float>{0.3f, 2}, std::vector<float>{0.3f, 2}), 0.0);
    EXPECT_DOUBLE_EQ(discriminator_loss<float>(std::vector<float>{3}, std::vector<float>{1, 1, 1}), -2.0);
    EXPECT_THROW(discriminator_loss<float>(std::vector<float>{}, std::vector<float>{1}), DataError);
}

TEST(Losses, WassersteinEstimateExamples) {
    EXPECT_DOUBLE_EQ(wasserstein_estimate<float>(std::vector<float>{1, 3}, std::vector<float>{0.5f}), 1.5);
    EXPECT_DOUBLE_EQ(wasserstein_estimate<float>(std::vector<float>{0, 4}, std::vector<float>{1, 3}), 0.0);
}

TEST(Losses, EstimateIsExactNegationOfCriticLoss) {
    std::mt19937_64 rng(5);
    std::normal_distribution<float> n;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<float> a(1 + trial % 7), b(1 + trial % 5);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = n(rng);
        const double w = wasserstein_estimate<float>(a, b);
        const double l = discriminator_loss<float>(a, b);
        EXPECT_EQ(w, -l);
    }
}

TEST(Losses, GeneratorLossIgnoresRealBatch) {
    const std::vector<float> fake{0.2f, -0.7f};
    const double before = generator_loss<float>(fake);
    EXPECT_EQ(before, generator_loss<float>(std::vector<float>{0.2f, -0.7f}));
}

TEST(Conditioning, NoiseConcatenation) {
    nn::Tensor<float> z({2, 100}, 0.5f);
    const std::vector<std::size_t> cls{1, 4};
    const auto y = one_hot_batch<float>(cls, 5);
    const auto out = condition_noise(z, &y);
    EXPECT_EQ(out.shape(), (nn::Shape{2, 105}));
    EXPECT_EQ(out[100 + 1], 1.f);
    EXPECT_EQ(out[105 + 100 + 4], 1.f);
    EXPECT_EQ(out[105 + 99], 0.5f);
}

TEST(Conditioning, LabelChannels) {
    const SampleShape shape{1, 24, 24};
    nn::Tensor<float> x({1, 1, 24, 24}, 0.25f);
    const std::vector<std::size_t> cls{1};
    const auto y = one_hot_batch<float>(cls, 3);
    const auto out = condition_sample(x, &y, shape);
    ASSERT_EQ(out.shape(), (nn::Shape{1, 4, 24, 24}));
    const std::size_t plane = 576;
    for (std::size_t i = 0; i < plane; ++i) {
        EXPECT_EQ(out[i], 0.25f);
        EXPECT_EQ(out[plane + i], 0.f);
        EXPECT_EQ(out[2 * plane + i], 1.f);
        EXPECT_EQ(out[3 * plane + i], 0.f);
    }
}

TEST(Conditioning, UnconditionalIsIdentity) {
    nn::Tensor<float> z({3, 7}, 0.1f);
    EXPECT_EQ(condition_noise<float>(z, nullptr), z);
    nn::Tensor<float> x({3, 1, 4, 4}, 0.3f);
    EXPECT_EQ(condition_sample<float>(x, nullptr, {1, 4, 4}), x);
}

TEST(Conditioning, RejectsNonOneHot) {
    nn::Tensor<float> z({1, 4});
    nn::Tensor<float> y({1, 3}, std::vector<float>{1, 1, 0});
    EXPECT_THROW(condition_noise(z, &y), DataError);
    nn::Tensor<float> half({1, 3}, std::vector<float>{0.5f, 0.5f, 0});
    EXPECT_THROW(condition_noise(z, &half), DataError);
}

TEST(Architecture, FullScaleWidths) {
    const auto m = build_conv_architecture<float>({1, 24, 24}, 0, ArchitectureOptions{});
    const auto g = m.generator.specs();
    EXPECT_EQ(g[0].in_features, 100u);
    EXPECT_EQ(g[0].out_features, 2048u);
    std::vector<LayerSpec> d = m.discriminator.specs();
    std::size_t first_dense = 0;
    while (d[first_dense].kind != nn::LayerKind::dense) ++first_dense;
    EXPECT_EQ(d[first_dense].in_features, 128u * 6 * 6);
    EXPECT_EQ(d[first_dense].out_features, 1024u);
    EXPECT_EQ(m.discriminator.output_shape({4, 1, 24, 24}), (nn::Shape{4, 1}));
    EXPECT_EQ(nn::element_count(m.generator.output_shape({4, 100})), 4u * 576);
}

TEST(Architecture, ScaledWidthsRoundUp) {
    ArchitectureOptions o;
    o.scale = 1.0 / 8;
    const auto m = build_conv_architecture<float>({1, 24, 24}, 0, o);
    EXPECT_EQ(m.generator.specs()[0].out_features, 256u);
    EXPECT_EQ(scaled_width(1000, 1.0 / 3), 334u);
    EXPECT_EQ(scaled_width(64, 1.0 / 16), 4u);
}

TEST(Architecture, ConditionalInputWidths) {
    const auto m = build_conv_architecture<float>({1, 24, 24}, 5, small());
    EXPECT_EQ(m.generator.specs()[0].in_features, 8u + 5);
    EXPECT_EQ(m.discriminator.specs()[0].in_channels, 6u);
}

TEST(Architecture, IndivisibleExtentIsConfigError) {
    EXPECT_THROW(build_conv_architecture<float>({1, 22, 24}, 0, small()), ConfigError);
}

TEST(Architecture, BatchNormPlacement) {
    const auto m = build_conv_architecture<float>({1, 8, 8}, 0, small());
    const auto d = m.discriminator.specs();
    ASSERT_GE(d.size(), 2u);
    EXPECT_EQ(d[0].kind, nn::LayerKind::conv2d);
    EXPECT_EQ(d[1].kind, nn::LayerKind::activation);
    const auto g = m.generator.specs();
    EXPECT_EQ(g.back().kind, nn::LayerKind::activation);
    EXPECT_EQ(g.back().activation, Activation::sigmoid);
    EXPECT_EQ(g[g.size() - 2].kind, nn::LayerKind::conv_transpose2d);
    std::size_t bn = 0;
    for (const auto& s : g) bn += s.kind == nn::LayerKind::batch_norm;
    EXPECT_EQ(bn, 5u);
}

TEST(Architecture, CriticOutputModes) {
    auto o = small();
    o.critic_output = CriticOutput::sigmoid;
    const auto m = build_conv_architecture<float>({1, 8, 8}, 0, o);
    EXPECT_EQ(m.discriminator.specs().back().activation, Activation::sigmoid);
    const auto lin = build_conv_architecture<float>({1, 8, 8}, 0, small());
    EXPECT_EQ(lin.discriminator.specs().back().kind, nn::LayerKind::dense);
}

TEST(Architecture, InitStandardDeviation) {
    const auto m = build_conv_architecture<float>({1, 24, 24}, 0, ArchitectureOptions{});
    const auto* w = m.generator.parameters()[0];
    ASSERT_GE(w->value.size(), 100000u);
    double s = 0, ss = 0;
    for (float v : w->value.data()) {
        s += v;
        ss += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(w->value.size());
    const double sd = std::sqrt(ss / n - (s / n) * (s / n));
    EXPECT_NEAR(sd, 0.02, 0.002);
}

TEST(Training, UpdateAccountingAndClipping) {
    const auto ds = random_dataset(64, {1, 8, 8}, 0, 3);
    TrainConfig cfg;
    cfg.total_iterations = 10;
    cfg.eval_every = 1;
    cfg.batch_size = 8;
    Trainer<float> tr(build_conv_architecture<float>(ds.shape, 0, small()), ds, cfg);
    tr.run([&](const Trainer<float>& t, const TraceRow& row) {
        EXPECT_LE(row.max_abs_critic_weight, cfg.clip);
        EXPECT_EQ(t.trace().discriminator_updates, 4 * row.iteration);
    });
    EXPECT_EQ(tr.trace().discriminator_updates, 40u);
    EXPECT_EQ(tr.trace().generator_updates, 10u);
    EXPECT_EQ(tr.trace().rows.size(), 10u);
    for (const auto& r : tr.trace().rows) EXPECT_EQ(r.w_estimate, r.d_real - r.d_fake);
}

TEST(Training, DeterministicGivenSeed) {
    const auto ds = random_dataset(40, {1, 8, 8}, 2, 4);
    TrainConfig cfg;
    cfg.total_iterations = 5;
    cfg.batch_size = 8;
    cfg.eval_every = 1;
    auto a = train(build_conv_architecture<float>(ds.shape, 2, small()), ds, cfg);
    auto b = train(build_conv_architecture<float>(ds.shape, 2, small()), ds, cfg);
    EXPECT_EQ(flat_params(a.model.generator), flat_params(b.model.generator));
    EXPECT_EQ(flat_params(a.model.discriminator), flat_params(b.model.discriminator));
    ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) EXPECT_EQ(a.trace.rows[i].l_g, b.trace.rows[i].l_g);
}

TEST(Training, ResumeMatchesUninterruptedRun) {
    const auto ds = random_dataset(40, {1, 8, 8}, 0, 9);
    TrainConfig cfg;
    cfg.total_iterations = 6;
    cfg.batch_size = 8;
    auto full = train(build_conv_architecture<float>(ds.shape, 0, small()), ds, cfg);

    TrainConfig half = cfg;
    half.total_iterations = 3;
    Trainer<float> first(build_conv_architecture<float>(ds.shape, 0, small()), ds, half);
    first.run();
    Checkpoint c{first.model(), {}, "", first.progress()};
    const auto restored = deserialize_checkpoint(serialize_checkpoint(c));
    Trainer<float> second(restored.model, ds, cfg, *restored.progress);
    second.run();
    EXPECT_EQ(flat_params(second.model().generator), flat_params(full.model.generator));
    EXPECT_EQ(flat_params(second.model().discriminator), flat_params(full.model.discriminator));
    EXPECT_EQ(second.trace().generator_updates, 6u);
}

TEST(Training, Preconditions) {
    const auto ds = random_dataset(4, {1, 8, 8}, 0, 1);
    TrainConfig cfg;
    cfg.batch_size = 8;
    EXPECT_THROW(Trainer<float>(build_conv_architecture<float>(ds.shape, 0, small()), ds, cfg), DataError);
    cfg.batch_size = 2;
    EXPECT_THROW(Trainer<float>(build_conv_architecture<float>(ds.shape, 3, small()), ds, cfg), ConfigError);
    TrainConfig bad;
    bad.clip = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = {};
    bad.batch_size = 1;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Training, NanAbortCarriesTrace) {
    const auto ds = random_dataset(16, {1, 8, 8}, 0, 1);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.total_iterations = 5;
    cfg.eval_every = 1;
    Trainer<float> tr(build_conv_architecture<float>(ds.shape, 0, small()), ds, cfg);
    tr.step();
    tr.model().generator.parameters()[0]->value[0] = std::nanf("");
    try {
        tr.run();
        FAIL() << "expected an abort";
    } catch (const TrainingAborted& e) {
        EXPECT_NE(std::string(e.what()).find("iteration 2"), std::string::npos);
        EXPECT_EQ(e.trace().generator_updates, 1u);
    }
}

TEST(Generate, CountsAndLabels) {
    const auto m = build_conv_architecture<float>({1, 8, 8}, 3, small());
    const auto g = generate(m, 10, std::size_t{2}, 1);
    EXPECT_EQ(g.size(), 10u);
    for (std::size_t l : g.labels) EXPECT_EQ(l, 2u);
    EXPECT_NO_THROW(g.validate());
    EXPECT_EQ(generate(m, 0, std::size_t{0}, 1).size(), 0u);
    EXPECT_THROW(generate(m, 5, std::nullopt, 1), ConfigError);
    EXPECT_THROW(generate(m, 5, std::size_t{3}, 1), ConfigError);
    const auto u = build_conv_architecture<float>({1, 8, 8}, 0, small());
    EXPECT_THROW(generate(u, 5, std::size_t{0}, 1), ConfigError);
}

TEST(Generate, ChunkingDoesNotChangeSamples) {
    const auto m = build_conv_architecture<float>({1, 8, 8}, 0, small());
    const auto a = generate(m, 7, std::nullopt, 11, 256);
    const auto b = generate(m, 7, std::nullopt, 11, 3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.samples[i].size(); ++j) EXPECT_NEAR(a.samples[i][j], b.samples[i][j], 1e-6);
    }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    const auto ds = random_dataset(16, {1, 8, 8}, 2, 2);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.total_iterations = 2;
    auto trained = train(build_conv_architecture<float>(ds.shape, 2, small()), ds, cfg);
    Checkpoint c{trained.model, {}, "mean", std::nullopt};
    c.meta.capacity = 16;
    c.meta.sites = {"a", "b"};
    c.meta.forecast_error = true;
    const auto bytes = serialize_checkpoint(c);
    const auto back = deserialize_checkpoint(bytes);
    EXPECT_EQ(serialize_checkpoint(back), bytes);
    EXPECT_EQ(flat_params(back.model.generator), flat_params(trained.model.generator));
    EXPECT_EQ(back.model.generator.specs(), trained.model.generator.specs());
    EXPECT_EQ(back.label_scheme, "mean");
    EXPECT_EQ(back.meta.sites, c.meta.sites);
    EXPECT_TRUE(back.meta.forecast_error);
    const auto g1 = generate(trained.model, 5, std::size_t{1}, 4);
    const auto g2 = generate(back.model, 5, std::size_t{1}, 4);
    EXPECT_EQ(g1.samples, g2.samples);
}

TEST(Checkpoint, FileRoundTripKeepsScaledWidths) {
    ArchitectureOptions o;
    o.scale = 1.0 / 8;
    const auto m = build_conv_architecture<float>({1, 24, 24}, 0, o);
    const auto path = temp_path("ckpt.bin");
    save_checkpoint({m, {}, "", std::nullopt}, path);
    const auto back = load_checkpoint(path);
    EXPECT_EQ(back.model.generator.specs()[0].out_features, 256u);
    EXPECT_EQ(back.model.discriminator.specs(), m.discriminator.specs());
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionIsFormatError) {
    const auto m = build_conv_architecture<float>({1, 8, 8}, 0, small());
    auto bytes = serialize_checkpoint({m, {}, "", std::nullopt});
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(deserialize_checkpoint(bad_magic), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    EXPECT_THROW(deserialize_checkpoint(bad_version), FormatError);
    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    EXPECT_THROW(deserialize_checkpoint(truncated), FormatError);
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    EXPECT_THROW(deserialize_checkpoint(flipped), FormatError);
    EXPECT_THROW(load_checkpoint(temp_path("does_not_exist.bin")), FormatError);
}
