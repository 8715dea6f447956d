#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scgan/error.hpp"

namespace scgan::data {

/// Minutes since 1970-01-01T00:00 (no time zone handling; timestamps are taken as given).
using Minutes = std::int64_t;

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the 'T').
inline std::optional<Minutes> parse_timestamp(std::string_view s) {
    while (!s.empty() && (s.back() == 'Z' || s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        if (pos + len > s.size()) return false;
        auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
        return r.ec == std::errc{} && r.ptr == s.data() + pos + len;
    };
    if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
        return std::nullopt;
    }
    if (!num(0, 4, y) || !num(5, 2, mo) || !num(8, 2, d) || !num(11, 2, h) || !num(14, 2, mi)) return std::nullopt;
    if (s.size() > 16) {
        if (s.size() != 19 || s[16] != ':' || !num(17, 2, sec)) return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Minutes>(days) * 1440 + h * 60 + mi;
}

inline std::string format_timestamp(Minutes t) {
    using namespace std::chrono;
    const auto day_index = static_cast<int>(t >= 0 ? t / 1440 : (t - 1439) / 1440);
    const Minutes in_day = t - static_cast<Minutes>(day_index) * 1440;
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(in_day / 60), static_cast<int>(in_day % 60));
    return buf;
}

/// Zero-based calendar month (0 = January) of an instant.
inline unsigned month_index(Minutes t) {
    using namespace std::chrono;
    const auto day_index = static_cast<int>(t >= 0 ? t / 1440 : (t - 1439) / 1440);
    const year_month_day ymd{sys_days{days{day_index}}};
    return static_cast<unsigned>(ymd.month()) - 1;
}

/// Uniformly sampled power series of one site, in MW.
struct RawSeries {
    std::string site_id;
    Minutes start = 0;
    int resolution_minutes = 5;
    std::vector<double> values;
    double capacity = 1.0;

    Minutes timestamp(std::size_t i) const { return start + static_cast<Minutes>(i) * resolution_minutes; }
    std::size_t size() const { return values.size(); }

    void validate() const {
        if (!(capacity > 0.0)) throw ConfigError("capacity of site " + site_id + " must be positive");
        if (resolution_minutes <= 0) throw ConfigError("resolution must be positive");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0)) throw DataError("negative or missing power at index " + std::to_string(i));
            if (values[i] > capacity * (1.0 + 1e-6)) {
                throw DataError("power above capacity at index " + std::to_string(i) + " of site " + site_id);
            }
        }
    }
};

/// Per-unit series in [0,1]; `capacity` converts back to MW.
struct NormalizedSeries {
    std::string site_id;
    Minutes start = 0;
    int resolution_minutes = 5;
    std::vector<double> values;
    double capacity = 1.0;
};

inline NormalizedSeries normalize(const RawSeries& s) {
    if (!(s.capacity > 0.0)) throw ConfigError("capacity must be positive to normalize");
    NormalizedSeries n{s.site_id, s.start, s.resolution_minutes, {}, s.capacity};
    n.values.reserve(s.values.size());
    for (double v : s.values) n.values.push_back(std::clamp(v / s.capacity, 0.0, 1.0));
    return n;
}

inline RawSeries denormalize(const NormalizedSeries& n) {
    RawSeries s{n.site_id, n.start, n.resolution_minutes, {}, n.capacity};
    s.values.reserve(n.values.size());
    for (double v : n.values) s.values.push_back(v * n.capacity);
    return s;
}

enum class GapPolicy { reject, interpolate };

struct CsvOptions {
    std::optional<double> capacity;  // overrides any "# capacity_mw=" header comment
    GapPolicy gaps = GapPolicy::reject;
    std::size_t max_fill_steps = 3;  // longest run of missing steps that interpolation may fill
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(const std::string& field) {
    const std::string t = trim(field);
    if (t.empty() || t == "NaN" || t == "nan" || t == "NA") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

/// Fills runs of NaN no longer than max_run by linear interpolation; returns false otherwise.
inline bool fill_gaps(std::vector<double>& v, std::size_t max_run) {
    for (std::size_t i = 0; i < v.size();) {
        if (!std::isnan(v[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < v.size() && std::isnan(v[j])) ++j;
        if (i == 0 || j == v.size() || j - i > max_run) return false;
        const double a = v[i - 1], b = v[j];
        for (std::size_t k = i; k < j; ++k) {
            v[k] = a + (b - a) * static_cast<double>(k - i + 1) / static_cast<double>(j - i + 1);
        }
        i = j;
    }
    return true;
}

} // namespace detail

/// Reads `timestamp,<site>...` CSV text. Lines starting with '#' are comments; a
/// "# capacity_mw=<value>" comment sets the capacity of every site unless overridden.
/// Columns whose name ends in "_forecast" are returned separately via `forecasts`.
inline std::vector<RawSeries> parse_csv(std::istream& in, const CsvOptions& opt = {},
                                        std::vector<RawSeries>* forecasts = nullptr) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<double> capacity = opt.capacity;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '#') {
            const auto pos = line.find("capacity_mw=");
            if (pos != std::string::npos && !opt.capacity) {
                capacity = detail::parse_number(line.substr(pos + 12));
            }
            continue;
        }
        if (detail::trim(line).empty()) continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.size() < 2 || detail::trim(header[0]) != "timestamp") {
        throw DataError("CSV header must be 'timestamp,<site_id>...'");
    }
    const std::size_t columns = header.size() - 1;
    std::vector<Minutes> times;
    std::vector<std::size_t> rows;
    std::vector<std::vector<double>> cols(columns);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        }
        const auto t = parse_timestamp(fields[0]);
        if (!t) throw DataError("row " + std::to_string(line_no) + ": unparseable timestamp '" + fields[0] + "'");
        if (!times.empty() && *t <= times.back()) {
            throw DataError("row " + std::to_string(line_no) + ": timestamp " + fields[0] +
                            " is not after the previous row (duplicate or non-monotonic)");
        }
        times.push_back(*t);
        rows.push_back(line_no);
        for (std::size_t c = 0; c < columns; ++c) {
            const auto v = detail::parse_number(fields[c + 1]);
            if (v && *v < 0.0) {
                throw DataError("row " + std::to_string(line_no) + ": negative power in column " + header[c + 1]);
            }
            if (!v && opt.gaps == GapPolicy::reject) {
                throw DataError("row " + std::to_string(line_no) + ": missing value in column " + header[c + 1]);
            }
            cols[c].push_back(v ? *v : std::nan(""));
        }
    }
    if (times.empty()) throw DataError("CSV has no data rows");

    int resolution = 60;
    if (times.size() >= 2) {
        Minutes step = times[1] - times[0];
        for (std::size_t i = 2; i < times.size(); ++i) step = std::min(step, times[i] - times[i - 1]);
        resolution = static_cast<int>(step);
    }
    // Expand missing timestamps into NaN rows, then apply the gap policy.
    std::vector<std::vector<double>> full(columns);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0) {
            const Minutes delta = times[i] - times[i - 1];
            if (delta % resolution != 0) {
                throw DataError("row " + std::to_string(rows[i]) + ": timestamp not on the " +
                                std::to_string(resolution) + "-minute grid");
            }
            const auto missing = static_cast<std::size_t>(delta / resolution - 1);
            if (missing > 0 && opt.gaps == GapPolicy::reject) {
                throw DataError("row " + std::to_string(rows[i]) + ": gap of " + std::to_string(missing) +
                                " missing steps before this row");
            }
            for (std::size_t k = 0; k < missing; ++k)
                for (auto& f : full) f.push_back(std::nan(""));
        }
        for (std::size_t c = 0; c < columns; ++c) full[c].push_back(cols[c][i]);
    }

    std::vector<RawSeries> out;
    for (std::size_t c = 0; c < columns; ++c) {
        if (!detail::fill_gaps(full[c], opt.max_fill_steps)) {
            throw DataError("column " + header[c + 1] + " has a gap longer than " + std::to_string(opt.max_fill_steps) +
                            " steps or at the series boundary");
        }
        RawSeries s;
        s.site_id = detail::trim(header[c + 1]);
        s.start = times.front();
        s.resolution_minutes = resolution;
        s.values = std::move(full[c]);
        s.capacity = capacity ? *capacity : std::max(1e-9, *std::max_element(s.values.begin(), s.values.end()));
        s.validate();
        const std::string suffix = "_forecast";
        const bool is_forecast =
            s.site_id.size() > suffix.size() && s.site_id.compare(s.site_id.size() - suffix.size(), suffix.size(), suffix) == 0;
        if (is_forecast) {
            if (forecasts) forecasts->push_back(std::move(s));
        } else {
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline std::vector<RawSeries> load_csv(const std::string& path, const CsvOptions& opt = {},
                                       std::vector<RawSeries>* forecasts = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_csv(in, opt, forecasts);
}

/// Writes series sharing one time axis as `timestamp,<site>...`, preceded by `header_lines` comments.
inline void write_csv(std::ostream& out, const std::vector<RawSeries>& series,
                      const std::vector<std::string>& header_lines = {}) {
    if (series.empty()) throw DataError("nothing to write");
    for (const auto& s : series) {
        if (s.size() != series[0].size() || s.start != series[0].start ||
            s.resolution_minutes != series[0].resolution_minutes) {
            throw DataError("series written to one CSV must share their time axis");
        }
    }
    for (const auto& h : header_lines) out << "# " << h << '\n';
    out << "# capacity_mw=" << series[0].capacity << '\n';
    out << "timestamp";
    for (const auto& s : series) out << ',' << s.site_id;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < series[0].size(); ++i) {
        out << format_timestamp(series[0].timestamp(i));
        for (const auto& s : series) {
            std::snprintf(buf, sizeof buf, "%.6f", s.values[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace scgan::data
