#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/gan/model.hpp"
#include "scgan/gan/train.hpp"
#include "scgan/io/container.hpp"
#include "scgan/io/meta.hpp"

namespace scgan::gan {

/// Everything a checkpoint file carries besides the networks themselves.
struct Checkpoint {
    GanModel<float> model;
    data::DatasetMeta meta;
    std::string label_scheme;                // empty for unconditional models
    std::optional<TrainProgress> progress;   // present for resumable training checkpoints
};

namespace detail {

enum class TensorRole : std::uint8_t { parameter = 0, rms_accumulator = 1, buffer = 2 };

inline void write_spec(io::BinaryWriter& w, const LayerSpec& s) {
    io::BinaryWriter rec;
    rec.u8(static_cast<std::uint8_t>(s.kind));
    rec.u8(static_cast<std::uint8_t>(s.activation));
    for (std::size_t v : {s.in_features, s.out_features, s.in_channels, s.out_channels, s.in_height, s.in_width,
                          s.kernel, s.stride, s.padding, s.output_padding, s.features}) {
        rec.u32(static_cast<std::uint32_t>(v));
    }
    rec.f64(s.momentum);
    rec.f64(s.epsilon);
    rec.f64(s.slope);
    w.u32(static_cast<std::uint32_t>(rec.bytes().size()));
    w.raw(rec.bytes());
}

inline LayerSpec read_spec(io::BinaryReader& r) {
    const std::uint32_t len = r.u32();
    io::BinaryReader rec(r.raw(len));
    LayerSpec s;
    const auto kind = rec.u8();
    const auto act = rec.u8();
    if (kind > static_cast<std::uint8_t>(nn::LayerKind::max_pool2d)) throw FormatError("unknown layer kind in checkpoint");
    if (act > static_cast<std::uint8_t>(Activation::linear)) throw FormatError("unknown activation in checkpoint");
    s.kind = static_cast<nn::LayerKind>(kind);
    s.activation = static_cast<Activation>(act);
    for (std::size_t* v : {&s.in_features, &s.out_features, &s.in_channels, &s.out_channels, &s.in_height,
                           &s.in_width, &s.kernel, &s.stride, &s.padding, &s.output_padding, &s.features}) {
        *v = rec.u32();
    }
    s.momentum = rec.f64();
    s.epsilon = rec.f64();
    s.slope = rec.f64();
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid layer record in checkpoint: ") + e.what());
    }
    return s;
}

inline void write_array(io::BinaryWriter& w, const std::string& name, TensorRole role, const nn::Shape& shape,
                        std::span<const float> values) {
    w.str(name);
    w.u8(static_cast<std::uint8_t>(role));
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : values) w.f32(v);
}

inline void read_array(io::BinaryReader& r, const std::string& name, TensorRole role, const nn::Shape& shape,
                       std::span<float> values) {
    const std::string got = r.str();
    if (got != name) throw FormatError("checkpoint tensor order mismatch: expected " + name + ", found " + got);
    if (r.u8() != static_cast<std::uint8_t>(role)) throw FormatError("checkpoint tensor role mismatch for " + name);
    const std::uint32_t rank = r.u32();
    nn::Shape stored(rank);
    for (auto& d : stored) d = r.u32();
    if (stored != shape) {
        throw FormatError("checkpoint tensor " + name + " has shape " + nn::to_string(stored) + ", expected " +
                          nn::to_string(shape));
    }
    for (float& v : values) v = r.f32();
}

inline void write_network(io::BinaryWriter& w, const nn::Network<float>& net) {
    w.str(net.name());
    const auto specs = net.specs();
    w.u32(static_cast<std::uint32_t>(specs.size()));
    for (const auto& s : specs) write_spec(w, s);
    for (const auto* p : net.parameters()) {
        write_array(w, p->name, TensorRole::parameter, p->value.shape(), p->value.data());
        write_array(w, p->name, TensorRole::rms_accumulator, p->value.shape(), p->rms_accumulator);
    }
    for (const auto* b : net.buffers()) write_array(w, b->name, TensorRole::buffer, b->value.shape(), b->value.data());
}

inline nn::Network<float> read_network(io::BinaryReader& r) {
    const std::string name = r.str();
    const std::uint32_t count = r.u32();
    std::vector<LayerSpec> specs;
    for (std::uint32_t i = 0; i < count; ++i) specs.push_back(read_spec(r));
    std::mt19937_64 unused(0);
    nn::Network<float> net(specs, name, unused, 0.0);
    for (auto* p : net.parameters()) {
        read_array(r, p->name, TensorRole::parameter, p->value.shape(), p->value.data());
        read_array(r, p->name, TensorRole::rms_accumulator, p->value.shape(), p->rms_accumulator);
    }
    for (auto* b : net.buffers()) read_array(r, b->name, TensorRole::buffer, b->value.shape(), b->value.data());
    return net;
}

} // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
    io::BinaryWriter w;
    w.header("gan");
    const auto& m = c.model;
    w.u32(static_cast<std::uint32_t>(m.noise_dim));
    w.u32(static_cast<std::uint32_t>(m.label_dim));
    w.u32(static_cast<std::uint32_t>(m.sample_shape.channels));
    w.u32(static_cast<std::uint32_t>(m.sample_shape.height));
    w.u32(static_cast<std::uint32_t>(m.sample_shape.width));
    w.u8(static_cast<std::uint8_t>(m.critic_output));

    io::write_meta(w, c.meta);
    w.str(c.label_scheme);

    detail::write_network(w, m.generator);
    detail::write_network(w, m.discriminator);

    w.u8(c.progress ? 1 : 0);
    if (c.progress) {
        w.u64(c.progress->iteration);
        w.u64(c.progress->discriminator_updates);
        w.u64(c.progress->generator_updates);
        w.str(c.progress->rng_state);
    }
    return w.finish();
}

inline Checkpoint deserialize_checkpoint(std::vector<std::uint8_t> bytes) {
    io::BinaryReader r(std::move(bytes));
    const std::string block = r.open();
    if (block != "gan") throw FormatError("checkpoint holds a '" + block + "' block, expected 'gan'");
    Checkpoint c;
    auto& m = c.model;
    m.noise_dim = r.u32();
    m.label_dim = r.u32();
    m.sample_shape.channels = r.u32();
    m.sample_shape.height = r.u32();
    m.sample_shape.width = r.u32();
    const auto critic = r.u8();
    if (critic > 1) throw FormatError("unknown critic output mode in checkpoint");
    m.critic_output = static_cast<CriticOutput>(critic);

    c.meta = io::read_meta(r);
    c.label_scheme = r.str();

    m.generator = detail::read_network(r);
    m.discriminator = detail::read_network(r);
    try {
        detail::check_maps(m);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("inconsistent checkpoint architecture: ") + e.what());
    }

    if (r.u8() == 1) {
        TrainProgress p;
        p.iteration = r.u64();
        p.discriminator_updates = r.u64();
        p.generator_updates = r.u64();
        p.rng_state = r.str();
        c.progress = p;
    }
    if (!r.at_end()) throw FormatError("trailing bytes in checkpoint");
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    io::write_file(path, serialize_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(io::read_file(path)); }

} // namespace scgan::gan
