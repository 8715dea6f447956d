#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include "scgan/data/dataset.hpp"
#include "scgan/error.hpp"
#include "scgan/io/container.hpp"
#include "scgan/io/meta.hpp"

namespace scgan::copula {

/// Empirical marginal of one dimension: ascending order statistics.
struct Marginal {
    std::vector<double> sorted;
    bool constant = false;

    bool operator==(const Marginal&) const = default;
};

/// Gaussian copula: correlation matrix of normal scores plus empirical marginals.
struct CopulaModel {
    std::size_t d = 0;
    std::vector<double> sigma;  // row-major d x d, symmetric PSD, unit diagonal
    std::vector<Marginal> marginals;
    bool repaired = false;      // sigma was projected after an indefinite estimate

    double operator()(std::size_t i, std::size_t j) const { return sigma[i * d + j]; }
    bool operator==(const CopulaModel&) const = default;
};

using Rows = std::vector<std::vector<double>>;

/// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double normal_quantile(double u) { return boost::math::quantile(boost::math::normal_distribution<double>(), u); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Inverse ECDF with order statistic k (1-based) at probability k/(n+1), linear in between,
/// clamped to the sample range outside [1/(n+1), n/(n+1)].
inline double inverse_ecdf(const Marginal& m, double u) {
    const auto& x = m.sorted;
    const std::size_t n = x.size();
    const double p = u * static_cast<double>(n + 1);
    if (p <= 1.0) return x.front();
    if (p >= static_cast<double>(n)) return x.back();
    const auto i = static_cast<std::size_t>(std::floor(p));
    const double frac = p - static_cast<double>(i);
    return x[i - 1] + frac * (x[i] - x[i - 1]);
}

namespace detail {

inline std::size_t check_rows(const Rows& rows) {
    if (rows.empty()) throw DataError("no samples");
    const std::size_t d = rows.front().size();
    if (d == 0) throw DataError("samples have zero dimensions");
    for (const auto& r : rows) {
        if (r.size() != d) throw DataError("samples differ in dimension");
        for (double v : r)
            if (!std::isfinite(v)) throw DataError("non-finite sample value");
    }
    return d;
}

inline std::vector<double> column(const Rows& rows, std::size_t j) {
    std::vector<double> c(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) c[i] = rows[i][j];
    return c;
}

inline Eigen::MatrixXd pearson(const std::vector<std::vector<double>>& cols) {
    const std::size_t d = cols.size();
    const std::size_t n = cols.front().size();
    Eigen::MatrixXd z(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0;
        for (double v : cols[j]) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0;
        for (double v : cols[j]) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss);
        for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sd > 0 ? (cols[j][i] - mean) / sd : 0.0;
    }
    Eigen::MatrixXd c = z.transpose() * z;
    for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        for (Eigen::Index k = 0; k < c.rows(); ++k) {
            if (c(jj, jj) == 0.0) c(jj, k) = c(k, jj) = 0.0;
        }
        c(jj, jj) = 1.0;
    }
    return c;
}

/// Clips eigenvalues at `floor` and rescales back to unit diagonal. Returns true when a repair happened.
inline bool repair_correlation(Eigen::MatrixXd& c, double floor = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.eigenvalues().minCoeff() >= 0.0) return false;
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd a = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd s = a.diagonal().cwiseSqrt().cwiseInverse();
    c = s.asDiagonal() * a * s.asDiagonal();
    c = 0.5 * (c + c.transpose());
    c.diagonal().setOnes();
    return true;
}

/// Factor F with F F^T = sigma: Cholesky when it succeeds, otherwise V sqrt(max(lambda, 0)).
inline Eigen::MatrixXd sampling_factor(const CopulaModel& m) {
    const auto d = static_cast<Eigen::Index>(m.d);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(m.sigma.data(), d, d);
    Eigen::MatrixXd sigma = s;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd l = llt.matrixL();
        if (l.allFinite()) return l;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

} // namespace detail

/// Fits marginals and the normal-score correlation matrix to n samples of dimension d.
inline CopulaModel fit(const Rows& rows) {
    const std::size_t d = detail::check_rows(rows);
    if (rows.size() < 2) throw DataError("copula fit needs at least 2 samples");
    const double n = static_cast<double>(rows.size());
    CopulaModel m;
    m.d = d;
    std::vector<std::vector<double>> scores(d);
    for (std::size_t j = 0; j < d; ++j) {
        auto col = detail::column(rows, j);
        const auto ranks = average_ranks(col);
        std::sort(col.begin(), col.end());
        Marginal mg{col, col.front() == col.back()};
        m.marginals.push_back(std::move(mg));
        scores[j].resize(ranks.size());
        for (std::size_t i = 0; i < ranks.size(); ++i) scores[j][i] = m.marginals[j].constant ? 0.0 : normal_quantile(ranks[i] / (n + 1.0));
    }
    Eigen::MatrixXd c = detail::pearson(scores);
    m.repaired = detail::repair_correlation(c);
    m.sigma.resize(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m.sigma[i * d + j] = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return m;
}

/// Draws `count` scenarios: g ~ N(0, sigma), u = Phi(g), x = inverse ECDF(u) per dimension.
inline Rows sample(const CopulaModel& m, std::int64_t count, std::uint64_t seed) {
    if (count <= 0) return {};
    if (m.d == 0 || m.marginals.size() != m.d || m.sigma.size() != m.d * m.d) throw StateError("copula model is not fitted");
    const Eigen::MatrixXd f = detail::sampling_factor(m);
    const auto d = static_cast<Eigen::Index>(m.d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Rows out(static_cast<std::size_t>(count), std::vector<double>(m.d));
    Eigen::VectorXd e(d);
    for (auto& row : out) {
        for (Eigen::Index k = 0; k < d; ++k) e(k) = normal(rng);
        const Eigen::VectorXd g = f * e;
        for (std::size_t j = 0; j < m.d; ++j) {
            row[j] = m.marginals[j].constant ? m.marginals[j].sorted.front()
                                             : inverse_ecdf(m.marginals[j], normal_cdf(g(static_cast<Eigen::Index>(j))));
        }
    }
    return out;
}

/// Spearman rank-correlation matrix (row-major d x d) of n samples.
inline std::vector<double> spearman_matrix(const Rows& rows) {
    const std::size_t d = detail::check_rows(rows);
    std::vector<std::vector<double>> ranks(d);
    for (std::size_t j = 0; j < d; ++j) ranks[j] = average_ranks(detail::column(rows, j));
    const Eigen::MatrixXd c = detail::pearson(ranks);
    std::vector<double> out(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

/// A fitted copula together with the layout needed to emit scenario sets.
struct CopulaCheckpoint {
    CopulaModel model;
    data::SampleShape shape;
    data::DatasetMeta meta;
};

inline Rows dataset_rows(const data::ScenarioDataset& ds) {
    Rows rows;
    rows.reserve(ds.size());
    for (const auto& s : ds.samples) rows.emplace_back(s.begin(), s.end());
    return rows;
}

inline CopulaCheckpoint fit_dataset(const data::ScenarioDataset& ds) {
    return {fit(dataset_rows(ds)), ds.shape, ds.meta};
}

/// Unlabeled scenario set in the fitted dataset's layout.
inline data::ScenarioDataset sample_dataset(const CopulaCheckpoint& c, std::int64_t count, std::uint64_t seed) {
    if (c.shape.size() != c.model.d) throw ConfigError("copula dimension does not match the sample shape");
    data::ScenarioDataset out;
    out.shape = c.shape;
    out.meta = c.meta;
    for (const auto& row : sample(c.model, count, seed)) out.samples.emplace_back(row.begin(), row.end());
    return out;
}

inline std::vector<std::uint8_t> serialize(const CopulaCheckpoint& c) {
    const auto& m = c.model;
    io::BinaryWriter w;
    w.header("copula");
    w.u32(static_cast<std::uint32_t>(c.shape.channels));
    w.u32(static_cast<std::uint32_t>(c.shape.height));
    w.u32(static_cast<std::uint32_t>(c.shape.width));
    io::write_meta(w, c.meta);
    w.u32(static_cast<std::uint32_t>(m.d));
    w.u8(m.repaired ? 1 : 0);
    for (double v : m.sigma) w.f64(v);
    for (const auto& mg : m.marginals) {
        w.u8(mg.constant ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(mg.sorted.size()));
        for (double v : mg.sorted) w.f64(v);
    }
    return w.finish();
}

inline CopulaCheckpoint deserialize(std::vector<std::uint8_t> bytes) {
    io::BinaryReader r(std::move(bytes));
    const std::string block = r.open();
    if (block != "copula") throw FormatError("checkpoint holds a '" + block + "' block, expected 'copula'");
    CopulaCheckpoint c;
    c.shape.channels = r.u32();
    c.shape.height = r.u32();
    c.shape.width = r.u32();
    c.meta = io::read_meta(r);
    auto& m = c.model;
    m.d = r.u32();
    if (m.d != c.shape.size()) throw FormatError("copula dimension does not match the stored sample shape");
    const auto repaired = r.u8();
    if (repaired > 1) throw FormatError("invalid repair flag in copula checkpoint");
    m.repaired = repaired == 1;
    m.sigma.resize(m.d * m.d);
    for (double& v : m.sigma) v = r.f64();
    for (std::size_t j = 0; j < m.d; ++j) {
        Marginal mg;
        const auto flag = r.u8();
        if (flag > 1) throw FormatError("invalid marginal flag in copula checkpoint");
        mg.constant = flag == 1;
        mg.sorted.resize(r.u32());
        if (mg.sorted.empty()) throw FormatError("empty marginal in copula checkpoint");
        for (double& v : mg.sorted) v = r.f64();
        if (!std::is_sorted(mg.sorted.begin(), mg.sorted.end())) throw FormatError("unsorted marginal in copula checkpoint");
        m.marginals.push_back(std::move(mg));
    }
    if (!r.at_end()) throw FormatError("trailing bytes in copula checkpoint");
    return c;
}

inline void save(const CopulaCheckpoint& c, const std::string& path) { io::write_file(path, serialize(c)); }

inline CopulaCheckpoint load(const std::string& path) { return deserialize(io::read_file(path)); }

} // namespace scgan::copula
