#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "scgan/copula/copula.hpp"
#include "scgan/data/scenario_csv.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/gan/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace scgan;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("scgan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const {
        const std::string cmd = "cd '" + dir_.string() + "' && '" SCGAN_CLI_PATH "' " + args + " > log.txt 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const std::string& rel) const {
        std::ifstream in(dir_ / rel, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::size_t data_rows(const std::string& rel) const {
        std::istringstream in(read(rel));
        std::string line;
        std::size_t n = 0;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header) {
                header = true;
                continue;
            }
            ++n;
        }
        return n;
    }

    std::string first_row(const std::string& rel) const {
        std::istringstream in(read(rel));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') return line;
        return {};
    }

    fs::path dir_;
};

constexpr const char* kSmallTrain = "train --data s/synth.csv --scale 0.0625 --batch 4 --eval-every 10";

} // namespace

TEST_F(Cli, SynthRowCountAndDeterminism) {
    ASSERT_EQ(run("synth --kind ar1_wind --days 200 --seed 7 --out a"), 0) << read("log.txt");
    EXPECT_EQ(data_rows("a/synth.csv"), 200u * 288u);
    ASSERT_EQ(run("synth --kind ar1_wind --days 200 --seed 7 --out b"), 0);
    EXPECT_TRUE(read("a/synth.csv") == read("b/synth.csv"));
    EXPECT_EQ(read("a/synth.json"), read("b/synth.json"));
    EXPECT_NE(read("a/synth.csv").find("# config_hash="), std::string::npos);
}

TEST_F(Cli, MultiSiteSynthHasOneColumnPerSite) {
    ASSERT_EQ(run("synth --kind multi_site --sites 24 --days 3 --out m"), 0) << read("log.txt");
    const std::string header = first_row("m/synth.csv");
    EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 25);
    EXPECT_EQ(data_rows("m/synth.csv"), 72u);
}

TEST_F(Cli, TrainWritesTraceAndCheckpoint) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 30 --out t"), 0) << read("log.txt");
    EXPECT_EQ(data_rows("t/trace.csv"), 3u);
    EXPECT_EQ(first_row("t/trace.csv"), "iter,d_real,d_fake,w_est,l_g,l_d");
    EXPECT_NE(read("t/trace.csv").find("# config_hash="), std::string::npos);
    const auto c = gan::load_checkpoint((dir_ / "t/model.scgn").string());
    EXPECT_EQ(c.model.label_dim, 0u);
    ASSERT_TRUE(c.progress.has_value());
    EXPECT_EQ(c.progress->generator_updates, 30u);
    EXPECT_EQ(c.progress->discriminator_updates, 120u);
}

TEST_F(Cli, MeanLabelsGiveFiveClassModel) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 10 --labels mean --out t"), 0) << read("log.txt");
    const auto c = gan::load_checkpoint((dir_ / "t/model.scgn").string());
    EXPECT_EQ(c.model.label_dim, 5u);
    EXPECT_EQ(c.label_scheme, "mean");
    ASSERT_EQ(run("generate --checkpoint t/model.scgn --per-class 4 --out g"), 0) << read("log.txt");
    const auto g = data::read_scenarios((dir_ / "g/scenarios.csv").string());
    EXPECT_EQ(g.size(), 20u);
    EXPECT_EQ(g.class_counts(), (std::vector<std::size_t>{4, 4, 4, 4, 4}));
    EXPECT_EQ(run("generate --checkpoint t/model.scgn --count 5 --out g2"), 1);
}

TEST_F(Cli, ResumedTrainingMatchesUninterruptedRun) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 30 --out full"), 0) << read("log.txt");
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 20 --out part"), 0) << read("log.txt");
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 30 --out part --resume part/model.scgn"), 0) << read("log.txt");
    EXPECT_TRUE(read("part/model.scgn") == read("full/model.scgn"));
    EXPECT_EQ(data_rows("part/trace.csv"), 3u);
}

TEST_F(Cli, SameSeedGivesIdenticalArtifacts) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 10 --out a"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 10 --out b"), 0);
    EXPECT_TRUE(read("a/model.scgn") == read("b/model.scgn"));
    ASSERT_EQ(run("generate --checkpoint a/model.scgn --count 6 --seed 4 --out ga"), 0);
    ASSERT_EQ(run("generate --checkpoint a/model.scgn --count 6 --seed 4 --out gb"), 0);
    EXPECT_TRUE(read("ga/scenarios.csv") == read("gb/scenarios.csv"));
    ASSERT_EQ(run("generate --checkpoint a/model.scgn --count 6 --seed 5 --out gc"), 0);
    EXPECT_FALSE(read("ga/scenarios.csv") == read("gc/scenarios.csv"));
}

TEST_F(Cli, NumericBlowUpExitsWithCodeTwo) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    EXPECT_EQ(run(std::string(kSmallTrain) + " --iterations 40 --lr 1e300 --out t"), 2) << read("log.txt");
    EXPECT_NE(read("log.txt").find("aborted"), std::string::npos);
}

TEST_F(Cli, GenerateCountsAndErrors) {
    ASSERT_EQ(run("synth --days 8 --out s"), 0);
    ASSERT_EQ(run(std::string(kSmallTrain) + " --iterations 10 --out t"), 0);
    ASSERT_EQ(run("generate --checkpoint t/model.scgn --count 7 --out g"), 0) << read("log.txt");
    const auto g = data::read_scenarios((dir_ / "g/scenarios.csv").string());
    EXPECT_EQ(g.size(), 7u);
    EXPECT_EQ(data_rows("g/scenarios.csv"), 7u * 576u);
    for (const auto& s : g.samples)
        for (float v : s) {
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
        }
    ASSERT_EQ(run("generate --checkpoint t/model.scgn --count 0 --out g0"), 0);
    EXPECT_EQ(data_rows("g0/scenarios.csv"), 0u);
    EXPECT_EQ(first_row("g0/scenarios.csv"), "sample_id,timestamp,wind_1");
    EXPECT_EQ(run("generate --checkpoint t/model.scgn --class 1 --out g1"), 1);
    EXPECT_EQ(run("generate --checkpoint missing.scgn --out g2"), 1);
}

TEST_F(Cli, EvaluateSelfComparisonAndPlots) {
    ASSERT_EQ(run("synth --kind multi_site --sites 4 --days 12 --out s"), 0);
    ASSERT_EQ(run("baseline --data s/synth.csv --mode multi_site --count 12 --out b"), 0) << read("log.txt");
    ASSERT_EQ(run("evaluate --real b/scenarios.csv --generated b/scenarios.csv --max-lag 12 --plots --out e"), 0) << read("log.txt");
    const std::string report = read("e/report.txt");
    EXPECT_NE(report.find("ks: distance 0\n"), std::string::npos) << report;
    EXPECT_EQ(report.find("FAIL"), std::string::npos) << report;
    for (const char* f : {"acf.svg", "cdf.svg", "spatial_real.svg", "spatial_gen.svg", "acf.csv", "cdf.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "e" / f)) << f;
    }
    EXPECT_NE(read("e/acf.csv").find("# config_hash="), std::string::npos);
    ASSERT_EQ(run("evaluate --real s/synth.csv --generated b/scenarios.csv --max-lag 12 --out e2"), 0) << read("log.txt");
    EXPECT_FALSE(fs::exists(dir_ / "e2" / "acf.svg"));
    EXPECT_EQ(run("evaluate --real s/synth.csv --generated nothing.csv --out e3"), 1);
    EXPECT_NE(read("log.txt").find("nothing.csv"), std::string::npos);
}

TEST_F(Cli, BaselinePreservesRankCorrelation) {
    ASSERT_EQ(run("synth --kind multi_site --sites 3 --days 400 --out s"), 0);
    ASSERT_EQ(run("baseline --data s/synth.csv --mode multi_site --count 10000 --seed 3 --out a"), 0) << read("log.txt");
    ASSERT_EQ(run("baseline --data s/synth.csv --mode multi_site --count 10000 --seed 3 --out b"), 0);
    EXPECT_TRUE(read("a/scenarios.csv") == read("b/scenarios.csv"));
    EXPECT_TRUE(read("a/copula.scgn") == read("b/copula.scgn"));

    std::vector<data::NormalizedSeries> series;
    for (const auto& r : data::load_csv((dir_ / "s/synth.csv").string())) series.push_back(data::normalize(r));
    data::ShapeConfig shape;
    shape.mode = data::ShapingMode::multi_site_day;
    const auto train = data::shape_samples(series, shape);
    const auto gen = data::read_scenarios((dir_ / "a/scenarios.csv").string());
    ASSERT_EQ(gen.size(), 10000u);
    ASSERT_EQ(gen.shape, train.shape);
    const auto st = copula::spearman_matrix(copula::dataset_rows(train));
    const auto sg = copula::spearman_matrix(copula::dataset_rows(gen));
    double num = 0, den = 0;
    for (std::size_t k = 0; k < st.size(); ++k) {
        num += (sg[k] - st[k]) * (sg[k] - st[k]);
        den += st[k] * st[k];
    }
    EXPECT_LT(std::sqrt(num / den), 0.05);

    EXPECT_EQ(run("baseline --data s/synth.csv --mode multi_site --count 10 --dim 71 --out bad"), 1);
    EXPECT_NE(read("log.txt").find("dimension"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverrides) {
    std::ofstream(dir_ / "run.ini") << "seed=5\n[synth]\nkind=multi_site\nsites=6\ndays=2\n";
    ASSERT_EQ(run("--config run.ini synth --out a"), 0) << read("log.txt");
    EXPECT_EQ(data_rows("a/synth.csv"), 48u);
    ASSERT_EQ(run("--config run.ini synth --days 3 --out b"), 0);
    EXPECT_EQ(data_rows("b/synth.csv"), 72u);
    ASSERT_EQ(run("--seed 5 synth --kind multi_site --sites 6 --days 2 --out c"), 0);
    EXPECT_TRUE(read("a/synth.csv") == read("c/synth.csv"));
    std::ofstream(dir_ / "bad.ini") << "[synth]\nbogus=1\n";
    EXPECT_EQ(run("--config bad.ini synth --out d"), 1);
    EXPECT_EQ(run("synth --kind nope --out d"), 1);
    EXPECT_EQ(run(""), 1);
}
