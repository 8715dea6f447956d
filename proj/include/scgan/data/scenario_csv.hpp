#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scgan/data/dataset.hpp"
#include "scgan/data/series.hpp"
#include "scgan/error.hpp"

namespace scgan::data {

/// Scenario CSV: one row per time step of each sample, `sample_id[,class],timestamp,<columns>`.
///
/// Values are in MW. Sample layout travels in `# key=value` comment lines so that the file reads
/// back into an identical dataset. Timestamps are relative to 1970-01-01T00:00 unless the sample
/// carries a start time.
inline void write_scenarios(std::ostream& out, const ScenarioDataset& ds, const std::vector<std::string>& header_lines = {}) {
    const bool grid = ds.meta.mode == ShapingMode::single_site_grid;
    const std::size_t steps = grid ? ds.shape.size() : ds.shape.width;
    const std::size_t cols = grid ? 1 : ds.shape.height;
    if (!grid && ds.shape.channels != 1) throw DataError("multi-site scenarios must have one channel");
    for (const auto& h : header_lines) out << "# " << h << '\n';
    out << "# capacity_mw=" << ds.meta.capacity << '\n';
    out << "# resolution_minutes=" << ds.meta.resolution_minutes << '\n';
    out << "# mode=" << to_string(ds.meta.mode) << '\n';
    out << "# shape=" << ds.shape.channels << 'x' << ds.shape.height << 'x' << ds.shape.width << '\n';
    out << "# forecast_error=" << (ds.meta.forecast_error ? 1 : 0) << '\n';
    if (ds.labeled()) out << "# label_dim=" << ds.label_dim << '\n';

    out << "sample_id";
    if (ds.labeled()) out << ",class";
    out << ",timestamp";
    std::vector<std::string> names;
    if (grid) {
        names.push_back(ds.meta.sites.size() == 1 ? ds.meta.sites[0] : "power");
    } else {
        for (std::size_t c = 0; c < cols; ++c) names.push_back(c < ds.meta.sites.size() ? ds.meta.sites[c] : "site" + std::to_string(c));
    }
    for (const auto& n : names) out << ',' << n;
    out << '\n';

    char buf[32];
    const auto res = static_cast<Minutes>(ds.meta.resolution_minutes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Minutes start = i < ds.start_minutes.size() ? ds.start_minutes[i] : 0;
        for (std::size_t t = 0; t < steps; ++t) {
            out << i;
            if (ds.labeled()) out << ',' << ds.labels[i];
            out << ',' << format_timestamp(start + static_cast<Minutes>(t) * res);
            for (std::size_t c = 0; c < cols; ++c) {
                std::snprintf(buf, sizeof buf, "%.6f", ds.meta.to_mw(ds.samples[i][c * steps + t]));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
}

inline void write_scenarios(const std::string& path, const ScenarioDataset& ds, const std::vector<std::string>& header_lines = {}) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write_scenarios(out, ds, header_lines);
}

/// True when the stream's first non-comment line is a scenario CSV header.
inline bool is_scenario_csv(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        return line.rfind("sample_id", 0) == 0;
    }
    return false;
}

inline ScenarioDataset read_scenarios(std::istream& in) {
    std::map<std::string, std::string> keys;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) keys[detail::trim(line.substr(1, eq - 1))] = detail::trim(line.substr(eq + 1));
            continue;
        }
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty() || header[0] != "sample_id") throw DataError("scenario CSV needs a sample_id header");
    for (const char* k : {"capacity_mw", "resolution_minutes", "mode", "shape"}) {
        if (!keys.count(k)) throw DataError(std::string("scenario CSV lacks the '# ") + k + "=' header");
    }

    ScenarioDataset ds;
    auto number = [&](const std::string& key) {
        const auto v = detail::parse_number(keys[key]);
        if (!v) throw DataError("scenario CSV header " + key + " is not a number");
        return *v;
    };
    ds.meta.capacity = number("capacity_mw");
    ds.meta.resolution_minutes = number("resolution_minutes");
    if (keys["mode"] == "single_site_grid") ds.meta.mode = ShapingMode::single_site_grid;
    else if (keys["mode"] == "multi_site_day") ds.meta.mode = ShapingMode::multi_site_day;
    else throw DataError("unknown scenario mode " + keys["mode"]);
    ds.meta.forecast_error = keys.count("forecast_error") && keys["forecast_error"] == "1";
    {
        std::size_t c = 0, h = 0, w = 0;
        char x1 = 0, x2 = 0;
        std::istringstream is(keys["shape"]);
        if (!(is >> c >> x1 >> h >> x2 >> w) || x1 != 'x' || x2 != 'x' || c * h * w == 0) throw DataError("malformed shape header");
        ds.shape = {c, h, w};
    }
    const bool labeled = header.size() > 1 && header[1] == "class";
    if (labeled) {
        if (!keys.count("label_dim")) throw DataError("labeled scenario CSV lacks label_dim");
        ds.label_dim = static_cast<std::size_t>(number("label_dim"));
    }
    const std::size_t first_value = labeled ? 3 : 2;
    if (header.size() <= first_value || header[first_value - 1] != "timestamp") throw DataError("scenario CSV lacks a timestamp column");
    const bool grid = ds.meta.mode == ShapingMode::single_site_grid;
    const std::size_t cols = header.size() - first_value;
    const std::size_t steps = grid ? ds.shape.size() : ds.shape.width;
    if (cols != (grid ? 1 : ds.shape.height)) throw DataError("scenario CSV column count does not match its shape");
    ds.meta.sites.assign(header.begin() + static_cast<std::ptrdiff_t>(first_value), header.end());

    std::size_t t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto f = detail::split_csv_line(line);
        const std::string where = " at line " + std::to_string(line_no);
        if (f.size() != header.size()) throw DataError("wrong field count" + where);
        const auto id = detail::parse_number(f[0]);
        if (!id || *id != static_cast<double>(ds.size() - (t > 0 ? 1 : 0))) throw DataError("sample ids must be consecutive" + where);
        if (t == 0) {
            ds.samples.emplace_back(ds.shape.size());
            const auto ts = parse_timestamp(f[first_value - 1]);
            if (!ts) throw DataError("bad timestamp" + where);
            ds.start_minutes.push_back(*ts);
            if (labeled) {
                const auto c = detail::parse_number(f[1]);
                if (!c || *c < 0 || *c >= static_cast<double>(ds.label_dim)) throw DataError("bad class" + where);
                ds.labels.push_back(static_cast<std::size_t>(*c));
            }
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = detail::parse_number(f[first_value + c]);
            if (!v) throw DataError("bad value" + where);
            ds.samples.back()[c * steps + t] = static_cast<float>(ds.meta.from_mw(*v));
        }
        if (++t == steps) t = 0;
    }
    if (t != 0) throw DataError("last sample is incomplete");
    ds.validate();
    return ds;
}

inline ScenarioDataset read_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_scenarios(in);
}

} // namespace scgan::data
