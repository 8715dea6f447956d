#pragma once

#include <cstdint>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/io/container.hpp"

namespace scgan::io {

inline void write_meta(BinaryWriter& w, const data::DatasetMeta& meta) {
    w.f64(meta.resolution_minutes);
    w.f64(meta.capacity);
    w.u8(static_cast<std::uint8_t>(meta.mode));
    w.u8(meta.forecast_error ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(meta.sites.size()));
    for (const auto& s : meta.sites) w.str(s);
}

inline data::DatasetMeta read_meta(BinaryReader& r) {
    data::DatasetMeta meta;
    meta.resolution_minutes = r.f64();
    meta.capacity = r.f64();
    const auto mode = r.u8();
    if (mode > 1) throw FormatError("unknown shaping mode in checkpoint");
    meta.mode = static_cast<data::ShapingMode>(mode);
    const auto fe = r.u8();
    if (fe > 1) throw FormatError("invalid forecast-error flag in checkpoint");
    meta.forecast_error = fe == 1;
    const std::uint32_t sites = r.u32();
    for (std::uint32_t i = 0; i < sites; ++i) meta.sites.push_back(r.str());
    return meta;
}

} // namespace scgan::io
