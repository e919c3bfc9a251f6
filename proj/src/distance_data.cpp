#include "mfd/distance_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

void check_dense_distance(const Eigen::MatrixXd& D) {
    if (D.rows() != D.cols())
        throw invalid_input_error("distance matrix must be square");
    const int n = static_cast<int>(D.rows());
    for (int i = 0; i < n; ++i) {
        if (D(i, i) != 0.0)
            throw invalid_input_error("distance matrix must have zero diagonal");
        for (int j = i + 1; j < n; ++j) {
            if (D(i, j) < 0.0)
                throw invalid_input_error("distance matrix must be nonnegative");
            if (std::abs(D(i, j) - D(j, i)) >
                1e-12 * std::max(1.0, std::abs(D(i, j))))
                throw invalid_input_error("distance matrix must be symmetric");
        }
    }
}

std::uint64_t pair_count(int n) {
    return static_cast<std::uint64_t>(n) * (static_cast<std::uint64_t>(n) - 1) / 2;
}

// Pair index <-> (i, j) with i < j, lexicographic over rows.
std::pair<int, int> unrank_pair(std::uint64_t r, int n) {
    // row i starts at offset i*n - i(i+1)/2 - i ... walk rows directly.
    std::uint64_t offset = 0;
    for (int i = 0; i < n - 1; ++i) {
        std::uint64_t rowLen = static_cast<std::uint64_t>(n - 1 - i);
        if (r < offset + rowLen)
            return {i, static_cast<int>(r - offset) + i + 1};
        offset += rowLen;
    }
    throw invalid_input_error("pair rank out of range");
}

} // namespace

IncompleteDistance::IncompleteDistance(int n, std::vector<DistanceEntry> entries,
                                       SamplingMeta meta)
    : n_(n), entries_(std::move(entries)), meta_(meta) {
    if (n_ < 0) throw invalid_input_error("negative point count");
    for (auto& e : entries_) {
        if (e.i == e.j) throw invalid_input_error("diagonal entry not allowed");
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i < 0 || e.j >= n_) throw invalid_input_error("entry index out of range");
        if (e.sq < 0.0) throw invalid_input_error("negative squared distance");
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const DistanceEntry& a, const DistanceEntry& b) {
                  return a.i != b.i ? a.i < b.i : a.j < b.j;
              });
    for (std::size_t k = 1; k < entries_.size(); ++k) {
        if (entries_[k].i == entries_[k - 1].i && entries_[k].j == entries_[k - 1].j)
            throw invalid_input_error("duplicate pair entry");
    }
    rows_.resize(n_);
    double maxSq = 0.0;
    for (const auto& e : entries_) {
        rows_[e.i].push_back({e.j, e.sq});
        rows_[e.j].push_back({e.i, e.sq});
        maxSq = std::max(maxSq, e.sq);
    }
    for (auto& row : rows_)
        std::sort(row.begin(), row.end(),
                  [](const RowEntry& a, const RowEntry& b) { return a.j < b.j; });
    maxDistance_ = std::sqrt(maxSq);
}

bool IncompleteDistance::has(int i, int j) const {
    return squared(i, j).has_value();
}

std::optional<double> IncompleteDistance::squared(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= n_ || j >= n_) return std::nullopt;
    const auto& row = rows_[i];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const RowEntry& e, int col) { return e.j < col; });
    if (it != row.end() && it->j == j) return it->sq;
    return std::nullopt;
}

Eigen::MatrixXd IncompleteDistance::toDense(double missing) const {
    Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n_, n_, missing);
    D.diagonal().setZero();
    for (const auto& e : entries_) {
        D(e.i, e.j) = e.sq;
        D(e.j, e.i) = e.sq;
    }
    return D;
}

DenseDistanceSource::DenseDistanceSource(const Eigen::MatrixXd& D) : D_(D) {
    check_dense_distance(D);
}

void DenseDistanceSource::squaredRow(int i, Eigen::VectorXd& out) const {
    out = D_.row(i).transpose();
}

void PointCloudDistanceSource::squaredRow(int i, Eigen::VectorXd& out) const {
    const int n = count();
    out.resize(n);
    for (int j = 0; j < n; ++j)
        out[j] = (points_.row(i) - points_.row(j)).squaredNorm();
}

IncompleteDistance sample_mask(const Eigen::MatrixXd& D_full, double gamma,
                               std::uint64_t rng_seed) {
    check_dense_distance(D_full);
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw invalid_input_error("gamma must be in (0, 1]");
    const int n = static_cast<int>(D_full.rows());
    const std::uint64_t total = pair_count(n);
    const std::uint64_t keep = static_cast<std::uint64_t>(
        std::ceil(gamma * static_cast<double>(total) - 1e-9));

    // Partial Fisher-Yates over pair ranks; only displaced slots are stored.
    std::mt19937_64 rng(rng_seed);
    std::unordered_map<std::uint64_t, std::uint64_t> displaced;
    displaced.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(keep, total)));
    std::vector<DistanceEntry> entries;
    entries.reserve(static_cast<std::size_t>(keep));
    for (std::uint64_t k = 0; k < keep; ++k) {
        std::uniform_int_distribution<std::uint64_t> dist(k, total - 1);
        std::uint64_t pick = dist(rng);
        auto lookup = [&](std::uint64_t slot) {
            auto it = displaced.find(slot);
            return it == displaced.end() ? slot : it->second;
        };
        std::uint64_t value = lookup(pick);
        displaced[pick] = lookup(k);
        auto [i, j] = unrank_pair(value, n);
        entries.push_back({i, j, D_full(i, j)});
    }
    SamplingMeta meta;
    meta.gamma = gamma;
    return IncompleteDistance(n, std::move(entries), meta);
}

IncompleteDistance sample_local_mask(const Eigen::MatrixXd& D_full, double gamma,
                                     int ell, std::uint64_t rng_seed) {
    DenseDistanceSource source(D_full);
    return sample_local_mask(source, gamma, ell, rng_seed);
}

IncompleteDistance sample_local_mask(const PairwiseDistanceSource& source,
                                     double gamma, int ell,
                                     std::uint64_t rng_seed) {
    const int n = source.count();
    if (ell >= n) throw invalid_input_error("ell must be smaller than n");
    if (ell < 1) throw invalid_input_error("ell must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw invalid_input_error("gamma must be in (0, 1]");

    // Candidate pairs: (i, j) with j among the true ell nearest others of i.
    std::vector<DistanceEntry> candidates;
    candidates.reserve(static_cast<std::size_t>(n) * ell);
    Eigen::VectorXd row;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        source.squaredRow(i, row);
        int m = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) order[m++] = j;
        std::nth_element(order.begin(), order.begin() + ell, order.begin() + m,
                         [&](int a, int b) {
                             return row[a] != row[b] ? row[a] < row[b] : a < b;
                         });
        for (int k = 0; k < ell; ++k) {
            int j = order[k];
            candidates.push_back({std::min(i, j), std::max(i, j),
                                  row[j]});
        }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const DistanceEntry& a, const DistanceEntry& b) {
                  return a.i != b.i ? a.i < b.i : a.j < b.j;
              });
    candidates.erase(std::unique(candidates.begin(), candidates.end(),
                                 [](const DistanceEntry& a, const DistanceEntry& b) {
                                     return a.i == b.i && a.j == b.j;
                                 }),
                     candidates.end());

    // Intersect with a uniform global gamma-sample of all pairs. Sequential
    // conditional sampling gives exactly the distribution the restriction of
    // a uniform K-subset would have, without materializing it.
    const std::uint64_t total = pair_count(n);
    std::uint64_t budget = static_cast<std::uint64_t>(
        std::ceil(gamma * static_cast<double>(total) - 1e-9));
    std::uint64_t remaining = total;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<DistanceEntry> kept;
    kept.reserve(candidates.size());
    for (const auto& c : candidates) {
        bool take;
        if (budget >= remaining) {
            take = true;
        } else if (budget == 0) {
            take = false;
        } else {
            take = unit(rng) * static_cast<double>(remaining) <
                   static_cast<double>(budget);
        }
        if (take) {
            kept.push_back(c);
            --budget;
        }
        --remaining;
    }
    SamplingMeta meta;
    meta.gamma = gamma;
    meta.ell = ell;
    return IncompleteDistance(n, std::move(kept), meta);
}

Neighborhood estimate_knn(const IncompleteDistance& D, int center, int ell) {
    if (center < 0 || center >= D.pointCount())
        throw invalid_input_error("center index out of range");
    if (ell < 2) throw invalid_input_error("ell must be at least 2");
    const auto& row = D.row(center);
    if (static_cast<int>(row.size()) < ell)
        throw insufficient_data_error(
            "row " + std::to_string(center) + " has " +
            std::to_string(row.size()) + " available entries, need " +
            std::to_string(ell));
    std::vector<IncompleteDistance::RowEntry> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const IncompleteDistance::RowEntry& a,
                 const IncompleteDistance::RowEntry& b) {
                  return a.sq != b.sq ? a.sq < b.sq : a.j < b.j;
              });
    std::vector<int> others(ell - 1);
    for (int k = 0; k < ell - 1; ++k) others[k] = sorted[k].j;
    return neighborhood_from_members(D, center, others);
}

Neighborhood neighborhood_from_members(const IncompleteDistance& D, int center,
                                       const std::vector<int>& others) {
    Neighborhood nb;
    nb.center = center;
    nb.members.reserve(others.size() + 1);
    nb.members.push_back(center);
    for (int j : others) {
        if (j == center) throw invalid_input_error("center repeated in members");
        nb.members.push_back(j);
    }
    const int ell = static_cast<int>(nb.members.size());
    std::vector<DistanceEntry> local;
    for (int a = 0; a < ell; ++a)
        for (int b = a + 1; b < ell; ++b)
            if (auto sq = D.squared(nb.members[a], nb.members[b]))
                local.push_back({a, b, *sq});
    nb.localDistances = IncompleteDistance(ell, std::move(local), D.meta());
    return nb;
}

IncompleteDistance add_noise(const IncompleteDistance& D, double sigma,
                             std::uint64_t rng_seed) {
    if (sigma < 0.0) throw invalid_input_error("sigma must be nonnegative");
    if (sigma == 0.0) return D;
    const double scale = sigma * D.maxDistance();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, scale);
    std::vector<DistanceEntry> entries = D.entries();
    for (auto& e : entries) {
        double d = std::sqrt(e.sq) + gauss(rng);
        if (d < 0.0) d = 0.0;
        e.sq = d * d;
    }
    SamplingMeta meta = D.meta();
    meta.sigma = sigma;
    return IncompleteDistance(D.pointCount(), std::move(entries), meta);
}

} // namespace mfd
