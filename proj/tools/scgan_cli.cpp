// scgan: synthesize data, train, generate, evaluate and run the copula baseline.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scgan/copula/copula.hpp"
#include "scgan/data/labels.hpp"
#include "scgan/data/scenario_csv.hpp"
#include "scgan/data/series.hpp"
#include "scgan/data/shaping.hpp"
#include "scgan/data/synth.hpp"
#include "scgan/eval/report.hpp"
#include "scgan/eval/svg.hpp"
#include "scgan/gan/checkpoint.hpp"
#include "scgan/gan/generate.hpp"
#include "scgan/gan/model.hpp"
#include "scgan/gan/train.hpp"

namespace fs = std::filesystem;
using namespace scgan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNumeric = 2;

struct Global {
    std::uint64_t seed = 1;
    std::string out = ".";
    bool plots = false;
};

struct SynthOpts {
    std::string kind = "ar1_wind";
    std::size_t days = 30;
    std::size_t sites = 8;
    double capacity = 16.0;
    int resolution = 0;  // 0: the kind's default
    double phi = 0.9;
    double site_rho = 0.8;
    std::vector<double> regime_offsets;
    std::size_t regime_steps = 576;
};

struct DataOpts {
    std::string path;
    std::string mode = "grid";
    std::size_t height = 24;
    std::size_t width = 24;
    std::string gaps = "reject";
    double capacity = 0.0;  // 0: from the CSV header
    std::string target = "power";
    std::string labels = "none";
    int ramp_window = 30;
};

struct TrainOpts {
    DataOpts data;
    double scale = 1.0;
    std::size_t noise_dim = 100;
    double lr = 5e-5;
    double clip = 0.01;
    std::size_t batch = 32;
    std::size_t n_discri = 4;
    std::size_t iterations = 1000;
    std::size_t eval_every = 100;
    bool critic_bn = true;
    std::string critic_output = "linear";
    std::string resume;
};

struct GenerateOpts {
    std::string checkpoint;
    std::size_t count = 2500;
    std::size_t per_class = 0;
    std::optional<std::size_t> label;
};

struct EvaluateOpts {
    DataOpts real;
    std::string generated;
    std::size_t max_lag = 24;
    std::string pooling = "concatenate";
};

struct BaselineOpts {
    DataOpts data;
    std::size_t count = 2500;
    std::size_t dim = 0;  // 0: no check
    std::optional<std::size_t> label;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Hash of the command name plus every effective option value except output location and config path.
std::string config_hash(const CLI::App& app, const CLI::App& sub) {
    std::string canon = sub.get_name() + '\n';
    for (const CLI::App* a : {&app, &sub}) {
        for (const CLI::Option* o : a->get_options()) {
            const std::string name = o->get_name();
            if (name == "--help" || name == "--config" || name == "--out" || name == "--plots") continue;
            std::string value;
            if (o->count() > 0) {
                for (const auto& r : o->results()) value += r + ';';
            } else {
                value = o->get_default_str();
            }
            canon += name + '=' + value + '\n';
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    return buf;
}

void add_data_options(CLI::App* sub, DataOpts& d, const std::string& prefix = "") {
    sub->add_option("--" + prefix + "data", d.path, "Time-series CSV (timestamp,<site>...) or scenario CSV")->required();
    sub->add_option("--" + prefix + "mode", d.mode, "Sample layout")->check(CLI::IsMember({"grid", "multi_site"}))->capture_default_str();
    sub->add_option("--" + prefix + "height", d.height, "Grid rows")->capture_default_str();
    sub->add_option("--" + prefix + "width", d.width, "Grid columns, or steps per multi-site sample")->capture_default_str();
    sub->add_option("--" + prefix + "gaps", d.gaps, "Missing-cell policy")->check(CLI::IsMember({"reject", "interpolate"}))->capture_default_str();
    sub->add_option("--" + prefix + "capacity", d.capacity, "Capacity in MW (overrides the CSV header)")->capture_default_str();
    sub->add_option("--" + prefix + "target", d.target, "Model power or forecast errors")
        ->check(CLI::IsMember({"power", "forecast_error"}))->capture_default_str();
    sub->add_option("--" + prefix + "labels", d.labels, "Class labels")
        ->check(CLI::IsMember({"none", "mean", "ramp", "forecast_error", "month"}))->capture_default_str();
    sub->add_option("--" + prefix + "ramp-window", d.ramp_window, "Ramp window in minutes")->capture_default_str();
}

bool file_is_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return data::is_scenario_csv(in);
}

data::ScenarioDataset load_dataset(const DataOpts& d) {
    data::ScenarioDataset ds;
    if (file_is_scenarios(d.path)) {
        ds = data::read_scenarios(d.path);
    } else {
        data::CsvOptions csv;
        if (d.capacity > 0) csv.capacity = d.capacity;
        csv.gaps = d.gaps == "interpolate" ? data::GapPolicy::interpolate : data::GapPolicy::reject;
        std::vector<data::RawSeries> forecasts;
        const auto raw = data::load_csv(d.path, csv, &forecasts);
        std::vector<data::NormalizedSeries> norm, fnorm;
        for (const auto& r : raw) norm.push_back(data::normalize(r));
        for (const auto& r : forecasts) fnorm.push_back(data::normalize(r));
        data::ShapeConfig shape;
        shape.mode = d.mode == "grid" ? data::ShapingMode::single_site_grid : data::ShapingMode::multi_site_day;
        shape.height = d.height;
        shape.width = d.width;
        ds = data::shape_samples(norm, shape);
        if (!fnorm.empty()) ds = data::attach_forecasts(std::move(ds), fnorm, shape);
    }
    data::Warnings warnings;
    if (d.labels == "mean") ds = data::label_by_mean(std::move(ds));
    else if (d.labels == "ramp") ds = data::label_by_ramp(std::move(ds), d.ramp_window);
    else if (d.labels == "month") ds = data::label_by_month(std::move(ds));
    else if (d.labels == "forecast_error") ds = data::label_by_forecast_error(std::move(ds), &warnings);
    if (d.target == "forecast_error") ds = data::to_forecast_errors(std::move(ds));
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (ds.size() == 0) throw DataError("no samples in " + d.path);
    return ds;
}

std::vector<std::string> provenance(const std::string& command, const std::string& hash, std::uint64_t seed) {
    return {"scgan " + command, "config_hash=" + hash, "seed=" + std::to_string(seed)};
}

void write_text_header(std::ostream& out, const std::vector<std::string>& lines) {
    for (const auto& l : lines) out << "# " << l << '\n';
}

/// Writes through a temporary file so an interrupted write never leaves a truncated target.
template <typename F>
void atomic_write(const fs::path& target, F&& write) {
    const fs::path tmp = target.string() + ".tmp";
    write(tmp);
    fs::rename(tmp, target);
}

int cmd_synth(const Global& g, const SynthOpts& o, const std::string& hash) {
    data::SynthKind kind = data::SynthKind::ar1_wind;
    if (o.kind == "diurnal_solar") kind = data::SynthKind::diurnal_solar;
    else if (o.kind == "multi_site") kind = data::SynthKind::multi_site;
    auto p = data::defaults_for(kind);
    p.days = o.days;
    p.seed = g.seed;
    p.sites = o.sites;
    p.capacity = o.capacity;
    if (o.resolution > 0) p.resolution_minutes = o.resolution;
    p.phi = o.phi;
    p.site_rho = o.site_rho;
    p.regime_offsets = o.regime_offsets;
    p.regime_steps = o.regime_steps;
    data::SynthDescriptor desc;
    const auto series = data::synthesize(kind, p, &desc);

    fs::create_directories(g.out);
    const auto header = provenance("synth", hash, g.seed);
    const fs::path csv = fs::path(g.out) / "synth.csv";
    std::ofstream out(csv);
    if (!out) throw DataError("cannot write " + csv.string());
    data::write_csv(out, series, header);

    nlohmann::json j;
    j["kind"] = o.kind;
    j["config_hash"] = hash;
    j["seed"] = g.seed;
    j["days"] = p.days;
    j["resolution_minutes"] = p.resolution_minutes;
    j["capacity_mw"] = p.capacity;
    j["sites"] = series.size();
    j["rows"] = series.front().size();
    j["phi"] = p.phi;
    j["gain"] = p.gain;
    j["offset"] = p.offset;
    j["regime_offsets"] = p.regime_offsets;
    j["regime_steps"] = p.regime_steps;
    j["latent_acf"] = desc.latent_acf;
    j["target_correlation"] = desc.target_correlation;
    std::ofstream jout(fs::path(g.out) / "synth.json");
    jout << j.dump(2) << '\n';
    std::cout << "wrote " << csv.string() << " (" << series.front().size() << " rows, " << series.size() << " sites)\n";
    return kExitOk;
}

int cmd_train(const Global& g, const TrainOpts& o, const std::string& hash) {
    const auto ds = load_dataset(o.data);
    gan::TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.clip = o.clip;
    cfg.batch_size = o.batch;
    cfg.n_discri = o.n_discri;
    cfg.total_iterations = o.iterations;
    cfg.eval_every = o.eval_every;
    cfg.seed = g.seed;
    cfg.validate();

    gan::Checkpoint ckpt;
    ckpt.meta = ds.meta;
    ckpt.label_scheme = ds.labeled() ? o.data.labels : "";
    gan::TrainProgress progress;
    if (!o.resume.empty()) {
        auto prev = gan::load_checkpoint(o.resume);
        if (!prev.progress) throw ConfigError(o.resume + " is not a resumable training checkpoint");
        if (prev.model.sample_shape != ds.shape || prev.model.label_dim != ds.label_dim) {
            throw ConfigError("checkpoint " + o.resume + " does not match the dataset layout");
        }
        ckpt.model = std::move(prev.model);
        progress = *prev.progress;
    } else {
        gan::ArchitectureOptions arch;
        arch.scale = o.scale;
        arch.noise_dim = o.noise_dim;
        arch.critic_batch_norm = o.critic_bn;
        arch.critic_output = o.critic_output == "sigmoid" ? gan::CriticOutput::sigmoid : gan::CriticOutput::linear;
        arch.seed = g.seed;
        ckpt.model = gan::build_conv_architecture<float>(ds.shape, ds.label_dim, arch);
    }

    gan::Trainer<float> trainer(std::move(ckpt.model), ds, cfg, progress);
    fs::create_directories(g.out);
    const fs::path model_path = fs::path(g.out) / "model.scgn";
    const fs::path trace_path = fs::path(g.out) / "trace.csv";
    std::vector<std::string> kept;
    if (progress.iteration > 0 && fs::exists(trace_path)) {
        std::ifstream in(trace_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("iter", 0) == 0) continue;
            if (std::stoull(line.substr(0, line.find(','))) <= progress.iteration) kept.push_back(line);
        }
    }
    std::ofstream trace(trace_path, std::ios::trunc);
    if (!trace) throw DataError("cannot write " + trace_path.string());
    write_text_header(trace, provenance("train", hash, g.seed));
    trace << "iter,d_real,d_fake,w_est,l_g,l_d\n";
    for (const auto& l : kept) trace << l << '\n';
    trace.flush();

    auto save = [&](const gan::Trainer<float>& t) {
        gan::Checkpoint c{t.model(), ckpt.meta, ckpt.label_scheme, t.progress()};
        atomic_write(model_path, [&](const fs::path& p) { gan::save_checkpoint(c, p.string()); });
    };
    try {
        trainer.run([&](const gan::Trainer<float>& t, const gan::TraceRow& r) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g", r.iteration, r.d_real, r.d_fake, r.w_estimate, r.l_g, r.l_d);
            trace << buf << '\n';
            trace.flush();
            save(t);
            std::cout << "iter " << r.iteration << " w_est " << r.w_estimate << '\n';
        });
    } catch (const gan::TrainingAborted& e) {
        std::cerr << "training aborted: " << e.what() << '\n';
        return kExitNumeric;
    }
    save(trainer);
    std::cout << "wrote " << model_path.string() << " and " << trace_path.string() << '\n';
    return kExitOk;
}

int cmd_generate(const Global& g, const GenerateOpts& o, const std::string& hash) {
    const auto ckpt = gan::load_checkpoint(o.checkpoint);
    const auto& model = ckpt.model;
    data::ScenarioDataset out;
    out.shape = model.sample_shape;
    out.meta = ckpt.meta;
    out.label_dim = model.label_dim;
    auto append = [&](const data::ScenarioDataset& part) {
        out.samples.insert(out.samples.end(), part.samples.begin(), part.samples.end());
        out.labels.insert(out.labels.end(), part.labels.begin(), part.labels.end());
    };
    if (model.label_dim == 0) {
        if (o.label || o.per_class > 0) throw ConfigError("class labels requested from an unconditional model");
        append(gan::generate(model, o.count, std::nullopt, g.seed));
    } else if (o.label) {
        append(gan::generate(model, o.count, o.label, g.seed));
    } else {
        if (o.per_class == 0) throw ConfigError("conditional model: pass --per-class N or --class K");
        for (std::size_t c = 0; c < model.label_dim; ++c) append(gan::generate(model, o.per_class, c, g.seed + 7919 * c));
    }
    fs::create_directories(g.out);
    const fs::path path = fs::path(g.out) / "scenarios.csv";
    data::write_scenarios(path.string(), out, provenance("generate", hash, g.seed));
    std::cout << "wrote " << out.size() << " scenarios to " << path.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const Global& g, const EvaluateOpts& o, const std::string& hash) {
    if (!fs::exists(o.generated)) throw DataError("generated set not found: " + o.generated);
    const auto gen = data::read_scenarios(o.generated);
    DataOpts real_opts = o.real;
    real_opts.mode = gen.meta.mode == data::ShapingMode::single_site_grid ? "grid" : "multi_site";
    real_opts.height = gen.shape.height;
    real_opts.width = gen.shape.width;
    if (!fs::exists(real_opts.path)) throw DataError("real set not found: " + real_opts.path);
    const auto real = load_dataset(real_opts);

    eval::EvalConfig cfg;
    cfg.max_lag = o.max_lag;
    cfg.pooling = o.pooling == "per_sample_mean" ? eval::SpatialPooling::per_sample_mean : eval::SpatialPooling::concatenate;
    const auto report = eval::evaluate(real, gen, cfg);
    const auto files = eval::write_report(report, g.out, provenance("evaluate", hash, g.seed));
    if (g.plots) eval::write_plots(report, g.out);
    std::cout << eval::report_text(report);
    std::cout << "wrote " << files.size() << " report files to " << g.out << '\n';
    return kExitOk;
}

int cmd_baseline(const Global& g, const BaselineOpts& o, const std::string& hash) {
    auto ds = load_dataset(o.data);
    if (o.label) {
        if (!ds.labeled()) throw ConfigError("--class needs --labels");
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == *o.label) keep.push_back(i);
        if (keep.size() < 2) throw DataError("class " + std::to_string(*o.label) + " has fewer than 2 samples");
        ds = ds.subset(keep);
    }
    if (o.dim > 0 && o.dim != ds.shape.size()) {
        throw ConfigError("configured dimension " + std::to_string(o.dim) + " differs from the sample dimension " +
                          std::to_string(ds.shape.size()));
    }
    const auto model = copula::fit_dataset(ds);
    if (model.model.repaired) std::cerr << "warning: indefinite correlation estimate was repaired\n";
    auto out = copula::sample_dataset(model, static_cast<std::int64_t>(o.count), g.seed);
    if (o.label) {
        out.label_dim = ds.label_dim;
        out.labels.assign(out.size(), *o.label);
    }
    fs::create_directories(g.out);
    const fs::path model_path = fs::path(g.out) / "copula.scgn";
    copula::save(model, model_path.string());
    const fs::path path = fs::path(g.out) / "scenarios.csv";
    data::write_scenarios(path.string(), out, provenance("baseline", hash, g.seed));
    std::cout << "wrote " << model_path.string() << " and " << out.size() << " scenarios to " << path.string() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional Wasserstein GAN scenario generation for renewable power"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "INI file with one [section] per command; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Global g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("--plots", g.plots, "Emit SVG plots (evaluate)");

    SynthOpts so;
    auto* synth = app.add_subcommand("synth", "Write a synthetic time-series CSV and its ground-truth descriptor");
    synth->add_option("--kind", so.kind)->check(CLI::IsMember({"ar1_wind", "diurnal_solar", "multi_site"}))->capture_default_str();
    synth->add_option("--days", so.days)->capture_default_str();
    synth->add_option("--sites", so.sites, "Sites (multi_site)")->capture_default_str();
    synth->add_option("--capacity", so.capacity, "Capacity in MW")->capture_default_str();
    synth->add_option("--resolution", so.resolution, "Minutes per step (0: 5, or 60 for multi_site)")->capture_default_str();
    synth->add_option("--phi", so.phi, "AR(1) coefficient")->capture_default_str();
    synth->add_option("--site-rho", so.site_rho, "Neighbour correlation (multi_site)")->capture_default_str();
    synth->add_option("--regime-offsets", so.regime_offsets, "Latent offsets drawn per regime block");
    synth->add_option("--regime-steps", so.regime_steps)->capture_default_str();

    TrainOpts to;
    auto* train = app.add_subcommand("train", "Train a GAN and write model.scgn plus trace.csv");
    add_data_options(train, to.data);
    train->add_option("--scale", to.scale, "Width multiplier of the default networks")->capture_default_str();
    train->add_option("--noise-dim", to.noise_dim)->capture_default_str();
    train->add_option("--lr", to.lr, "RMSProp learning rate")->capture_default_str();
    train->add_option("--clip", to.clip, "Critic weight bound")->capture_default_str();
    train->add_option("--batch", to.batch)->capture_default_str();
    train->add_option("--n-discri", to.n_discri, "Critic updates per generator update")->capture_default_str();
    train->add_option("--iterations", to.iterations)->capture_default_str();
    train->add_option("--eval-every", to.eval_every, "Trace and checkpoint interval")->capture_default_str();
    train->add_option("--critic-bn", to.critic_bn, "Batch norm in the critic")->capture_default_str();
    train->add_option("--critic-output", to.critic_output)->check(CLI::IsMember({"linear", "sigmoid"}))->capture_default_str();
    train->add_option("--resume", to.resume, "Continue from a training checkpoint");

    GenerateOpts go;
    auto* generate = app.add_subcommand("generate", "Sample scenarios from a trained model");
    generate->add_option("--checkpoint", go.checkpoint)->required();
    generate->add_option("--count", go.count)->capture_default_str();
    generate->add_option("--per-class", go.per_class, "Samples for every class of a conditional model")->capture_default_str();
    generate->add_option("--class", go.label, "Single class to sample");

    EvaluateOpts eo;
    auto* evaluate = app.add_subcommand("evaluate", "Compare a generated scenario set with real data");
    evaluate->add_option("--real", eo.real.path, "Time-series CSV or scenario CSV")->required();
    evaluate->add_option("--generated", eo.generated, "Scenario CSV")->required();
    evaluate->add_option("--capacity", eo.real.capacity, "Capacity of the real CSV in MW")->capture_default_str();
    evaluate->add_option("--gaps", eo.real.gaps)->check(CLI::IsMember({"reject", "interpolate"}))->capture_default_str();
    evaluate->add_option("--max-lag", eo.max_lag)->capture_default_str();
    evaluate->add_option("--pooling", eo.pooling)->check(CLI::IsMember({"concatenate", "per_sample_mean"}))->capture_default_str();

    BaselineOpts bo;
    auto* baseline = app.add_subcommand("baseline", "Fit a Gaussian copula and sample scenarios");
    add_data_options(baseline, bo.data);
    baseline->add_option("--count", bo.count)->capture_default_str();
    baseline->add_option("--dim", bo.dim, "Expected sample dimension (0: unchecked)")->capture_default_str();
    baseline->add_option("--class", bo.label, "Fit on one class only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*synth) return cmd_synth(g, so, config_hash(app, *synth));
        if (*train) return cmd_train(g, to, config_hash(app, *train));
        if (*generate) return cmd_generate(g, go, config_hash(app, *generate));
        if (*evaluate) return cmd_evaluate(g, eo, config_hash(app, *evaluate));
        if (*baseline) return cmd_baseline(g, bo, config_hash(app, *baseline));
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
