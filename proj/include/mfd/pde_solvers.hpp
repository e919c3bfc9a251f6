#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mfd/distance_data.hpp"
#include "mfd/gram_completion.hpp"

namespace mfd {

enum class RowOrigin : std::uint8_t { Mls, BoundaryFlagged, Failed };

// Row-wise discretization of an intrinsic differential operator: row i holds
// the stencil weights over N(i).
struct DiscreteOperator {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<RowOrigin> rowOrigin;

    Eigen::SparseMatrix<double> toSparse() const;
};

struct AssemblyParams {
    int ell = 30;
    int d = -1;  // intrinsic dimension; -1 = per-point auto detection
    CompletionParams completion;
    double failureTolerance = 0.01;
    unsigned threads = 0;
    // Exact-KNN mode: member lists (excluding the center) per point.
    std::optional<std::vector<std::vector<int>>> neighborhoods;
    // When set, local patch distances are drawn from this source instead of
    // the mask (pairs among members outside the KNN restriction may still be
    // sampled); the mask keeps driving neighbor estimation.
    std::function<std::optional<double>(int, int)> localPairSource;
};

struct AssemblyStats {
    int failed = 0;
    int retried = 0;
    int boundaryFlagged = 0;
    double completionSeconds = 0.0;
    double fitSeconds = 0.0;
    std::vector<int> failedPoints;
};

struct AssemblyResult {
    DiscreteOperator op;
    AssemblyStats stats;
};

// Per point: nearest neighborhood -> Gram completion -> MDS coordinates ->
// PCA frame -> degree-2 MLS -> Laplace-Beltrami row. Fails only if more than
// failureTolerance of the rows cannot be built (after one retry at 2*ell).
AssemblyResult assemble_lb(const IncompleteDistance& D, const AssemblyParams& params);

struct EigenSystem {
    Eigen::VectorXd values;    // ascending
    Eigen::MatrixXd vectors;   // unit-norm columns
    Eigen::VectorXd residuals; // ||L phi + lambda phi||
    std::string diagnostics;
};

// K eigenpairs of -L with smallest real part via shift-invert Arnoldi
// (dense fallback for n <= 4000). Complex-residue eigenvalues are rejected.
EigenSystem lb_eigs(const DiscreteOperator& L, int K);

struct AnalyticCluster {
    double lambda = 0.0;
    int multiplicity = 1;
};

// E_max per cluster: computed eigenvalues are assigned greedily in ascending
// order respecting multiplicities; zero clusters are measured absolutely.
std::vector<double> eigenvalue_error(const Eigen::VectorXd& computed,
                                     const std::vector<AnalyticCluster>& clusters);

// ---------------------------------------------------------------------------
// Geodesics
// ---------------------------------------------------------------------------

// Union of first-ring triangles with rigid-motion-invariant edge lengths.
struct TriangleSoup {
    int n = 0;
    std::vector<std::array<int, 3>> triangles;          // global indices, sorted
    std::vector<std::array<double, 3>> edgeLengths;     // (01, 02, 12)
};

struct MeshAssemblyResult {
    TriangleSoup mesh;
    AssemblyStats stats;
};

// Same per-point pipeline as assemble_lb but stopping at the local Delaunay
// mesh (d = 2); lengths come from the completed local Gram matrices.
MeshAssemblyResult assemble_local_meshes(const IncompleteDistance& D,
                                         const AssemblyParams& params);

struct DistanceMap {
    Eigen::VectorXd values;       // +inf where unreachable
    std::vector<int> sources;
    std::vector<std::uint8_t> reached;
    bool monotoneAcceptance = true;
    int unreachable = 0;
};

// Fast marching over the triangle soup: min-heap front propagation with the
// two-accepted-vertex planar update and edge fallback for obtuse angles or
// acausal roots.
DistanceMap fast_march(const TriangleSoup& mesh, const std::vector<int>& sources);

// Dijkstra baseline on an explicit undirected edge list (lengths, not squares).
using EdgeList = std::vector<std::vector<std::pair<int, double>>>;

EdgeList edges_from_distance(const IncompleteDistance& D);
DistanceMap dijkstra(const EdgeList& edges, const std::vector<int>& sources);

} // namespace mfd
