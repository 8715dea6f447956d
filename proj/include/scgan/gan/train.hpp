#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/gan/model.hpp"
#include "scgan/nn/optim.hpp"

namespace scgan::gan {

/// Hyperparameters of the alternating critic/generator loop.
struct TrainConfig {
    double learning_rate = 5e-5;
    double clip = 0.01;
    std::size_t batch_size = 32;
    std::size_t n_discri = 4;
    std::size_t total_iterations = 1000;
    std::uint64_t seed = 1;
    std::size_t eval_every = 100;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(clip > 0.0)) throw ConfigError("clip bound must be positive");
        if (batch_size < 2) throw ConfigError("batch size must be at least 2");
        if (n_discri < 1) throw ConfigError("n_discri must be at least 1");
        if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
    }
};

struct TraceRow {
    std::size_t iteration = 0;  // 1-based count of completed outer iterations
    double d_real = 0.0;        // mean D(x) over the last critic batch
    double d_fake = 0.0;        // mean D(G(z)) over the last critic batch
    double w_estimate = 0.0;    // d_real - d_fake
    double l_g = 0.0;
    double l_d = 0.0;
    double max_abs_critic_weight = 0.0;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
    std::size_t discriminator_updates = 0;
    std::size_t generator_updates = 0;
};

/// Raised when a loss or gradient becomes non-finite; carries the trace up to that point.
class TrainingAborted : public NumericError {
public:
    TrainingAborted(const std::string& what, TrainTrace trace) : NumericError(what), trace_(std::move(trace)) {}
    const TrainTrace& trace() const { return trace_; }

private:
    TrainTrace trace_;
};

/// Position of a run: enough to resume it bit-identically from a checkpoint.
struct TrainProgress {
    std::size_t iteration = 0;
    std::size_t discriminator_updates = 0;
    std::size_t generator_updates = 0;
    std::string rng_state;  // textual std::mt19937_64 state; empty means "seed from config"
};

/// Stateful runner for the training loop. Each outer iteration performs n_discri critic
/// steps (RMSProp on L_D followed by weight clipping) and one generator step on L_G.
template <typename T = float>
class Trainer {
public:
    Trainer(GanModel<T> model, const data::ScenarioDataset& dataset, TrainConfig cfg, TrainProgress progress = {})
        : model_(std::move(model)), data_(&dataset), cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        data_->validate();
        if (data_->shape != model_.sample_shape) throw ConfigError("dataset sample shape does not match the model");
        if (data_->labeled() != (model_.label_dim > 0) || data_->label_dim != model_.label_dim) {
            throw ConfigError("dataset labels must be present exactly when the model is conditional, with equal "
                              "label dimension");
        }
        if (data_->size() < cfg_.batch_size) throw DataError("dataset has fewer samples than the batch size");
        order_.resize(data_->size());
        trace_.discriminator_updates = progress.discriminator_updates;
        trace_.generator_updates = progress.generator_updates;
        iteration_ = progress.iteration;
        if (!progress.rng_state.empty()) {
            std::istringstream is(progress.rng_state);
            is >> rng_ >> normal_;
            if (!is) throw FormatError("cannot restore the training random state");
        }
    }

    const GanModel<T>& model() const { return model_; }
    GanModel<T>& model() { return model_; }
    const TrainTrace& trace() const { return trace_; }
    std::size_t iteration() const { return iteration_; }

    TrainProgress progress() const {
        std::ostringstream os;
        os << rng_ << ' ' << normal_;
        return {iteration_, trace_.discriminator_updates, trace_.generator_updates, os.str()};
    }

    /// Runs until total_iterations; `on_log` fires after each logged iteration.
    void run(const std::function<void(const Trainer&, const TraceRow&)>& on_log = {}) {
        while (iteration_ < cfg_.total_iterations) {
            const TraceRow row = step();
            if (iteration_ % cfg_.eval_every == 0) {
                trace_.rows.push_back(row);
                if (on_log) on_log(*this, row);
            }
        }
    }

    /// One outer iteration.
    TraceRow step() {
        TraceRow row;
        try {
            for (std::size_t t = 0; t < cfg_.n_discri; ++t) critic_step(row);
            generator_step(row);
        } catch (const NumericError& e) {
            throw TrainingAborted(std::string("training aborted at iteration ") + std::to_string(iteration_ + 1) +
                                      ": " + e.what(),
                                  trace_);
        }
        ++iteration_;
        row.iteration = iteration_;
        row.max_abs_critic_weight = nn::max_abs_weight<T>(std::as_const(model_.discriminator).parameters());
        return row;
    }

private:
    struct Batch {
        nn::Tensor<T> x;
        nn::Tensor<T> y;
        bool labeled = false;
        const nn::Tensor<T>* labels() const { return labeled ? &y : nullptr; }
    };

    Batch sample_real() {
        const std::size_t m = cfg_.batch_size;
        const SampleShape shape = model_.sample_shape;
        // Partial Fisher-Yates from the identity: the first m entries are a uniform draw without replacement.
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, order_.size() - 1);
            std::swap(order_[i], order_[pick(rng_)]);
        }
        Batch b{nn::Tensor<T>({m, shape.channels, shape.height, shape.width}), {}, false};
        std::vector<std::size_t> classes;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& s = data_->samples[order_[i]];
            std::copy(s.begin(), s.end(), b.x.data().begin() + static_cast<std::ptrdiff_t>(i * shape.size()));
            if (data_->labeled()) classes.push_back(data_->labels[order_[i]]);
        }
        if (data_->labeled()) {
            b.y = one_hot_batch<T>(classes, model_.label_dim);
            b.labeled = true;
        }
        return b;
    }

    nn::Tensor<T> sample_noise(std::size_t m) {
        nn::Tensor<T> z({m, model_.noise_dim});
        for (auto& v : z.data()) v = static_cast<T>(normal_(rng_));
        return z;
    }

    void critic_step(TraceRow& row) {
        const std::size_t m = cfg_.batch_size;
        auto& d = model_.discriminator;
        const SampleShape shape = model_.sample_shape;
        Batch real = sample_real();
        nn::Tensor<T> z = sample_noise(m);
        nn::Tensor<T> fake = model_.generator.forward(condition_noise(z, real.labels()), true);
        fake.reshape({m, shape.channels, shape.height, shape.width});

        d.zero_grad();
        const nn::Tensor<T> out_real = d.forward(condition_sample(real.x, real.labels(), shape), true);
        d.backward(nn::Tensor<T>(out_real.shape(), static_cast<T>(-1.0 / static_cast<double>(m))));
        const nn::Tensor<T> out_fake = d.forward(condition_sample(fake, real.labels(), shape), true);
        d.backward(nn::Tensor<T>(out_fake.shape(), static_cast<T>(1.0 / static_cast<double>(m))));

        row.l_d = discriminator_loss<T>(out_real.data(), out_fake.data());
        row.w_estimate = wasserstein_estimate<T>(out_real.data(), out_fake.data());
        row.d_real = detail::mean_of<T>(out_real.data(), "critic");
        row.d_fake = detail::mean_of<T>(out_fake.data(), "critic");
        if (!std::isfinite(row.l_d)) throw NumericError("non-finite discriminator loss");

        auto params = d.parameters();
        nn::rmsprop_step<T>(params, rms());
        nn::clip_weights<T>(params, cfg_.clip);
        ++trace_.discriminator_updates;
    }

    void generator_step(TraceRow& row) {
        const std::size_t m = cfg_.batch_size;
        auto& g = model_.generator;
        auto& d = model_.discriminator;
        const SampleShape shape = model_.sample_shape;
        Batch labels_from = data_->labeled() ? sample_real() : Batch{};
        nn::Tensor<T> z = sample_noise(m);

        g.zero_grad();
        nn::Tensor<T> fake = g.forward(condition_noise(z, labels_from.labels()), true);
        const nn::Shape g_shape = fake.shape();
        fake.reshape({m, shape.channels, shape.height, shape.width});
        const nn::Tensor<T> out = d.forward(condition_sample(fake, labels_from.labels(), shape), true);
        nn::Tensor<T> grad_critic_in = d.backward(nn::Tensor<T>(out.shape(), static_cast<T>(-1.0 / static_cast<double>(m))));
        d.zero_grad();
        nn::Tensor<T> grad_fake = strip_label_channels(grad_critic_in, shape);
        grad_fake.reshape(g_shape);
        g.backward(grad_fake);

        row.l_g = generator_loss<T>(out.data());
        if (!std::isfinite(row.l_g)) throw NumericError("non-finite generator loss");
        auto params = g.parameters();
        nn::rmsprop_step<T>(params, rms());
        ++trace_.generator_updates;
    }

    nn::RmsPropConfig rms() const { return {cfg_.learning_rate, cfg_.rms_decay, cfg_.rms_epsilon}; }

    GanModel<T> model_;
    const data::ScenarioDataset* data_;
    TrainConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    std::vector<std::size_t> order_;
    TrainTrace trace_;
    std::size_t iteration_ = 0;
};

template <typename T>
struct TrainResult {
    GanModel<T> model;
    TrainTrace trace;
};

/// Runs the full loop from scratch; deterministic given (model, data, cfg).
template <typename T>
TrainResult<T> train(GanModel<T> model, const data::ScenarioDataset& dataset, const TrainConfig& cfg) {
    Trainer<T> trainer(std::move(model), dataset, cfg);
    trainer.run();
    return {trainer.model(), trainer.trace()};
}

} // namespace scgan::gan
