#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace mfd {

// How a mask was produced; carried along for report echoing.
struct SamplingMeta {
    std::optional<double> gamma;  // fraction of pairs kept
    std::optional<int> ell;       // KNN restriction size (others per row)
    std::optional<double> sigma;  // noise std dev, fraction of max distance
};

struct DistanceEntry {
    int i = 0;  // i < j
    int j = 0;
    double sq = 0.0;  // squared distance
};

// Sparse symmetric set of squared inter-point distances over an index set.
// Values are stored squared; each unordered pair appears once (i < j); no
// diagonal entries. Immutable after construction, safe for concurrent reads.
class IncompleteDistance {
public:
    struct RowEntry {
        int j;
        double sq;
    };

    IncompleteDistance() = default;
    IncompleteDistance(int n, std::vector<DistanceEntry> entries,
                       SamplingMeta meta = {});

    int pointCount() const { return n_; }
    std::size_t entryCount() const { return entries_.size(); }
    const std::vector<DistanceEntry>& entries() const { return entries_; }
    const SamplingMeta& meta() const { return meta_; }

    // Symmetric queries: (i,j) and (j,i) are the same entry.
    bool has(int i, int j) const;
    std::optional<double> squared(int i, int j) const;

    // All available entries in row i, sorted by column index.
    const std::vector<RowEntry>& row(int i) const { return rows_[i]; }

    // Maximum available (un-squared) distance; 0 if empty.
    double maxDistance() const { return maxDistance_; }

    Eigen::MatrixXd toDense(double missing = 0.0) const;

private:
    int n_ = 0;
    std::vector<DistanceEntry> entries_;          // sorted (i, j), i < j
    std::vector<std::vector<RowEntry>> rows_;     // symmetric adjacency
    SamplingMeta meta_;
    double maxDistance_ = 0.0;
};

// Center plus its nearest available neighbors, with the distance data
// restricted to the members and reindexed 0..ell-1 (center at 0).
struct Neighborhood {
    int center = 0;                   // global index
    std::vector<int> members;         // size ell, members[0] == center
    IncompleteDistance localDistances;
};

// Abstract source of squared distances, row at a time. Lets the local-mask
// sampler run on point clouds too large for a dense matrix.
class PairwiseDistanceSource {
public:
    virtual ~PairwiseDistanceSource() = default;
    virtual int count() const = 0;
    virtual void squaredRow(int i, Eigen::VectorXd& out) const = 0;
};

class DenseDistanceSource final : public PairwiseDistanceSource {
public:
    explicit DenseDistanceSource(const Eigen::MatrixXd& D);
    int count() const override { return static_cast<int>(D_.rows()); }
    void squaredRow(int i, Eigen::VectorXd& out) const override;

private:
    const Eigen::MatrixXd& D_;
};

class PointCloudDistanceSource final : public PairwiseDistanceSource {
public:
    explicit PointCloudDistanceSource(const Eigen::MatrixXd& points)
        : points_(points) {}
    int count() const override { return static_cast<int>(points_.rows()); }
    void squaredRow(int i, Eigen::VectorXd& out) const override;

private:
    const Eigen::MatrixXd& points_;
};

// Keeps exactly ceil(gamma * n(n-1)/2) pairs, chosen uniformly at random
// without replacement; deterministic per seed.
IncompleteDistance sample_mask(const Eigen::MatrixXd& D_full, double gamma,
                               std::uint64_t rng_seed);

// D_{gamma,ell}: per-row restriction to the true ell nearest neighbors,
// intersected with a global gamma-fraction sample, symmetric-deduplicated.
IncompleteDistance sample_local_mask(const Eigen::MatrixXd& D_full,
                                     double gamma, int ell,
                                     std::uint64_t rng_seed);
IncompleteDistance sample_local_mask(const PairwiseDistanceSource& source,
                                     double gamma, int ell,
                                     std::uint64_t rng_seed);

// Nearest-neighborhood of `center` using only available entries; ties broken
// by smaller index. Throws insufficient_data_error if row has < ell entries.
Neighborhood estimate_knn(const IncompleteDistance& D, int center, int ell);

// Builds a Neighborhood from externally supplied member indices (exact-KNN
// mode); local distances are whatever entries of D exist among the members.
Neighborhood neighborhood_from_members(const IncompleteDistance& D, int center,
                                       const std::vector<int>& others);

// Gaussian corruption of un-squared distances, clamped at 0, re-squared.
// sigma scales the maximum available distance.
IncompleteDistance add_noise(const IncompleteDistance& D, double sigma,
                             std::uint64_t rng_seed);

} // namespace mfd
