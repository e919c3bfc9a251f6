// Global assembly of the discretized Laplace-Beltrami operator from per-point
// local reconstructions, its eigensolve, and geodesic distance maps (fast
// marching on local meshes, Dijkstra on the neighborhood graph).
#include "mfd/pde_solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/Dense>

#include "mfd/eigs.hpp"
#include "mfd/errors.hpp"
#include "mfd/local_geometry.hpp"
#include "mfd/parallel.hpp"

namespace mfd {

Eigen::SparseMatrix<double> DiscreteOperator::toSparse() const {
    std::vector<Eigen::Triplet<double>> trips;
    std::size_t nnz = 0;
    for (const auto& row : rows) nnz += row.size();
    trips.reserve(nnz);
    for (int i = 0; i < n; ++i)
        for (const auto& [j, w] : rows[i]) trips.emplace_back(i, j, w);
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct PointPipeline {
    Neighborhood nb;
    Eigen::MatrixXd coords;
    LocalFrame frame;
    GramSolution gram;
};

PointPipeline run_point_pipeline(const IncompleteDistance& D, int i, int ell,
                                 int d, const CompletionParams& cp,
                                 const std::vector<std::vector<int>>* exactKnn,
                                 const std::function<std::optional<double>(int, int)>& pairSource,
                                 double* completionSeconds) {
    PointPipeline out;
    if (exactKnn) {
        out.nb = neighborhood_from_members(D, i, (*exactKnn)[i]);
    } else {
        // sparse rows cannot always supply ell-1 neighbors; take what is
        // available above a workable floor and let the completion fill in
        auto row = D.row(i);
        const int avail = static_cast<int>(row.size());
        const int floorNeeded = std::max(6, (ell - 1) / 2);
        if (avail < floorNeeded)
            throw insufficient_data_error(
                "row " + std::to_string(i) + " has " + std::to_string(avail) +
                " available entries, need " + std::to_string(floorNeeded));
        const int take = std::min(ell - 1, avail);
        std::vector<IncompleteDistance::RowEntry> sorted(row.begin(), row.end());
        std::sort(sorted.begin(), sorted.end(),
                  [](const IncompleteDistance::RowEntry& a,
                     const IncompleteDistance::RowEntry& b) {
                      return a.sq != b.sq ? a.sq < b.sq : a.j < b.j;
                  });
        std::vector<int> others(take);
        for (int k = 0; k < take; ++k) others[k] = sorted[k].j;
        out.nb = neighborhood_from_members(D, i, others);
    }
    if (pairSource) {
        // patch pairs outside the KNN restriction may still be sampled
        const int m = static_cast<int>(out.nb.members.size());
        std::vector<DistanceEntry> local;
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b)
                if (auto sq = pairSource(out.nb.members[a], out.nb.members[b]))
                    local.push_back({a, b, *sq});
        out.nb.localDistances = IncompleteDistance(m, std::move(local), D.meta());
    }
    auto t0 = Clock::now();
    out.gram = complete_gram(out.nb.localDistances, cp);
    if (completionSeconds) *completionSeconds = seconds_since(t0);
    // dimension cutoff sits above the completion noise floor so that junk
    // eigenvalues of the completed Gram cannot masquerade as dimensions;
    // measurement noise raises the floor further
    double dimTol = 0.02;
    if (D.meta().sigma) dimTol = std::max(dimTol, 2.0 * *D.meta().sigma);
    out.coords = mds_coordinates(out.gram.B, -1, dimTol);
    out.frame = pca_frame(out.coords, 0, d);
    return out;
}

} // namespace

AssemblyResult assemble_lb(const IncompleteDistance& D, const AssemblyParams& params) {
    const int n = D.pointCount();
    const auto* exactKnn =
        params.neighborhoods ? &*params.neighborhoods : nullptr;
    if (exactKnn && static_cast<int>(exactKnn->size()) != n)
        throw invalid_input_error("neighborhood list size mismatch");

    AssemblyResult result;
    result.op.n = n;
    result.op.rows.resize(n);
    result.op.rowOrigin.assign(n, RowOrigin::Mls);
    std::vector<std::uint8_t> failed(n, 0);
    std::vector<std::uint8_t> retried(n, 0);
    std::vector<double> completionTime(n, 0.0);
    std::vector<double> fitTime(n, 0.0);

    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t idx) {
            const int i = static_cast<int>(idx);
            for (int attempt = 0; attempt < 2; ++attempt) {
                const int ell = attempt == 0 ? params.ell : 2 * params.ell;
                try {
                    double compSec = 0.0;
                    PointPipeline pp = run_point_pipeline(
                        D, i, ell, params.d, params.completion,
                        attempt == 0 ? exactKnn : nullptr,
                        params.localPairSource, &compSec);
                    completionTime[i] = compSec;
                    auto t0 = Clock::now();
                    MlsSurface surf = mls_fit(pp.frame);
                    Eigen::VectorXd w = lb_row(pp.frame, surf);
                    fitTime[i] = seconds_since(t0);
                    auto& row = result.op.rows[i];
                    row.clear();
                    row.reserve(w.size());
                    for (int k = 0; k < w.size(); ++k)
                        row.emplace_back(pp.nb.members[k], w[k]);
                    result.op.rowOrigin[i] = pp.frame.boundaryFlag
                                                 ? RowOrigin::BoundaryFlagged
                                                 : RowOrigin::Mls;
                    if (attempt > 0) retried[i] = 1;
                    return;
                } catch (const std::exception&) {
                    if (attempt == 1 || 2 * params.ell >= n) break;
                }
            }
            failed[i] = 1;
            result.op.rowOrigin[i] = RowOrigin::Failed;
        },
        params.threads);

    for (int i = 0; i < n; ++i) {
        result.stats.completionSeconds += completionTime[i];
        result.stats.fitSeconds += fitTime[i];
        if (failed[i]) {
            ++result.stats.failed;
            result.stats.failedPoints.push_back(i);
        }
        if (retried[i]) ++result.stats.retried;
        if (result.op.rowOrigin[i] == RowOrigin::BoundaryFlagged)
            ++result.stats.boundaryFlagged;
    }
    if (result.stats.failed > params.failureTolerance * n) {
        std::string msg = "operator assembly failed for " +
                          std::to_string(result.stats.failed) + " of " +
                          std::to_string(n) + " points (first:";
        for (std::size_t k = 0; k < result.stats.failedPoints.size() && k < 8; ++k)
            msg += " " + std::to_string(result.stats.failedPoints[k]);
        msg += ")";
        throw numerical_error(msg);
    }
    return result;
}

EigenSystem lb_eigs(const DiscreteOperator& L, int K) {
    if (K < 1 || K >= L.n) throw invalid_input_error("need 1 <= K < n");
    Eigen::SparseMatrix<double> negL = -L.toSparse();

    ShiftInvertOptions opts;
    opts.k = K;
    opts.sigma = -1e-8;
    ShiftInvertResult res;
    try {
        res = smallest_real_eigs_shift_invert(negL, opts);
    } catch (const numerical_error&) {
        res.converged = false;
    }
    if (!res.converged) {
        if (L.n <= 4000) {
            Eigen::MatrixXd dense = Eigen::MatrixXd(negL);
            ShiftInvertResult fallback = smallest_real_eigs_dense(dense, K);
            fallback.diagnostics = res.diagnostics + "; " + fallback.diagnostics;
            res = std::move(fallback);
        }
        if (!res.converged)
            throw numerical_error("eigensolver did not converge: " + res.diagnostics);
    }

    EigenSystem sys;
    sys.values = res.values;
    sys.vectors = res.vectors;
    sys.residuals = res.residuals;  // ||(-L) x - lambda x|| = ||L x + lambda x||
    sys.diagnostics = res.diagnostics;
    return sys;
}

std::vector<double> eigenvalue_error(const Eigen::VectorXd& computed,
                                     const std::vector<AnalyticCluster>& clusters) {
    int needed = 0;
    for (const auto& c : clusters) needed += c.multiplicity;
    if (computed.size() < needed)
        throw invalid_input_error("spectrum shorter than requested clusters");
    std::vector<double> errors;
    errors.reserve(clusters.size());
    int pos = 0;
    for (const auto& c : clusters) {
        double worst = 0.0;
        for (int t = 0; t < c.multiplicity; ++t, ++pos) {
            double dev = std::abs(computed[pos] - c.lambda);
            if (c.lambda != 0.0) dev /= std::abs(c.lambda);
            worst = std::max(worst, dev);
        }
        errors.push_back(worst);
    }
    return errors;
}

// ---------------------------------------------------------------------------
// Local meshes and fast marching
// ---------------------------------------------------------------------------

MeshAssemblyResult assemble_local_meshes(const IncompleteDistance& D,
                                         const AssemblyParams& params) {
    const int n = D.pointCount();
    const auto* exactKnn =
        params.neighborhoods ? &*params.neighborhoods : nullptr;

    MeshAssemblyResult result;
    result.mesh.n = n;
    std::vector<std::vector<std::array<int, 3>>> localTris(n);
    std::vector<std::vector<std::array<double, 3>>> localLens(n);
    std::vector<std::uint8_t> failed(n, 0);
    std::vector<double> completionTime(n, 0.0);

    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t idx) {
            const int i = static_cast<int>(idx);
            try {
                double compSec = 0.0;
                PointPipeline pp =
                    run_point_pipeline(D, i, params.ell, 2, params.completion,
                                       exactKnn, params.localPairSource,
                                       &compSec);
                completionTime[i] = compSec;
                LocalMesh mesh = local_delaunay(pp.frame);
                const Eigen::MatrixXd& B = pp.gram.B;
                auto completedDist = [&](int a, int b) {
                    double sq = B(a, a) + B(b, b) - 2.0 * B(a, b);
                    return std::sqrt(std::max(sq, 0.0));
                };
                for (const auto& t : mesh.triangles) {
                    std::array<int, 3> g{pp.nb.members[t[0]], pp.nb.members[t[1]],
                                         pp.nb.members[t[2]]};
                    std::array<double, 3> len{completedDist(t[0], t[1]),
                                              completedDist(t[0], t[2]),
                                              completedDist(t[1], t[2])};
                    // sort vertices, permuting lengths (01, 02, 12) alongside
                    auto swapV = [&](int a, int b) {
                        std::swap(g[a], g[b]);
                        if ((a == 0 && b == 1) || (a == 1 && b == 0))
                            std::swap(len[1], len[2]);
                        else if ((a == 1 && b == 2) || (a == 2 && b == 1))
                            std::swap(len[0], len[1]);
                        else
                            std::swap(len[0], len[2]);
                    };
                    if (g[0] > g[1]) swapV(0, 1);
                    if (g[1] > g[2]) swapV(1, 2);
                    if (g[0] > g[1]) swapV(0, 1);
                    localTris[i].push_back(g);
                    localLens[i].push_back(len);
                }
            } catch (const std::exception&) {
                failed[i] = 1;
            }
        },
        params.threads);

    std::map<std::array<int, 3>, std::array<double, 3>> dedup;
    for (int i = 0; i < n; ++i) {
        result.stats.completionSeconds += completionTime[i];
        if (failed[i]) {
            ++result.stats.failed;
            result.stats.failedPoints.push_back(i);
        }
        for (std::size_t k = 0; k < localTris[i].size(); ++k)
            dedup.emplace(localTris[i][k], localLens[i][k]);
    }
    if (result.stats.failed > params.failureTolerance * n)
        throw numerical_error("local mesh assembly failed for " +
                              std::to_string(result.stats.failed) + " points");
    result.mesh.triangles.reserve(dedup.size());
    result.mesh.edgeLengths.reserve(dedup.size());
    for (const auto& [tri, len] : dedup) {
        result.mesh.triangles.push_back(tri);
        result.mesh.edgeLengths.push_back(len);
    }
    return result;
}

namespace {

// Planar-wavefront update for vertex C of a triangle with accepted values at
// A and B; geometry enters only through the edge lengths b = |AC|, a = |BC|,
// c = |AB|. Returns the causal root or nothing.
std::optional<double> triangle_update(double dA, double dB, double b, double a,
                                      double c) {
    const double q11 = b * b;
    const double q22 = a * a;
    const double q12 = 0.5 * (a * a + b * b - c * c);
    if (q12 < -1e-12 * a * b) return std::nullopt;  // obtuse at the update vertex
    const double det = q11 * q22 - q12 * q12;
    if (det <= 1e-300) return std::nullopt;
    // Q^{-1} entries
    const double i11 = q22 / det, i22 = q11 / det, i12 = -q12 / det;
    const double sum11 = i11 + i22 + 2.0 * i12;           // 1' Qinv 1
    const double sumTd = (i11 + i12) * dA + (i12 + i22) * dB;  // 1' Qinv td
    const double tdTd =
        i11 * dA * dA + 2.0 * i12 * dA * dB + i22 * dB * dB;   // td' Qinv td
    const double disc = sumTd * sumTd - sum11 * (tdTd - 1.0);
    if (disc < 0.0 || sum11 <= 0.0) return std::nullopt;
    const double d = (sumTd + std::sqrt(disc)) / sum11;
    if (d < std::max(dA, dB)) return std::nullopt;
    // causality: the characteristic must come from inside the triangle
    const double w1 = i11 * (d - dA) + i12 * (d - dB);
    const double w2 = i12 * (d - dA) + i22 * (d - dB);
    if (w1 < -1e-12 || w2 < -1e-12) return std::nullopt;
    return d;
}

} // namespace

DistanceMap fast_march(const TriangleSoup& mesh, const std::vector<int>& sources) {
    const int n = mesh.n;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::vector<int>> incident(n);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int v : mesh.triangles[t]) incident[v].push_back(static_cast<int>(t));

    enum State : std::uint8_t { Far = 0, Trial = 1, Accepted = 2 };
    std::vector<std::uint8_t> state(n, Far);
    DistanceMap out;
    out.values = Eigen::VectorXd::Constant(n, inf);
    out.sources = sources;
    out.reached.assign(n, 0);

    using HeapItem = std::pair<double, int>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
    for (int s : sources) {
        if (s < 0 || s >= n) throw invalid_input_error("source index out of range");
        out.values[s] = 0.0;
        state[s] = Trial;
        heap.push({0.0, s});
    }

    auto relax = [&](int v) {
        // best candidate over all incident triangles with accepted vertices
        double best = out.values[v];
        for (int t : incident[v]) {
            const auto& tri = mesh.triangles[t];
            const auto& len = mesh.edgeLengths[t];
            int slot = tri[0] == v ? 0 : tri[1] == v ? 1 : 2;
            int oa, ob;           // the two other slots
            double la, lb, lab;   // |v-a|, |v-b|, |a-b|
            if (slot == 0) { oa = 1; ob = 2; la = len[0]; lb = len[1]; lab = len[2]; }
            else if (slot == 1) { oa = 0; ob = 2; la = len[0]; lb = len[2]; lab = len[1]; }
            else { oa = 0; ob = 1; la = len[1]; lb = len[2]; lab = len[0]; }
            const int A = tri[oa], B = tri[ob];
            const bool accA = state[A] == Accepted, accB = state[B] == Accepted;
            if (accA && accB) {
                auto d = triangle_update(out.values[A], out.values[B], la, lb, lab);
                if (d) best = std::min(best, *d);
                best = std::min(best, out.values[A] + la);  // edge fallback
                best = std::min(best, out.values[B] + lb);
            } else if (accA) {
                best = std::min(best, out.values[A] + la);
            } else if (accB) {
                best = std::min(best, out.values[B] + lb);
            }
        }
        if (best < out.values[v]) {
            out.values[v] = best;
            state[v] = Trial;
            heap.push({best, v});
        }
    };

    double lastAccepted = 0.0;
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (state[v] == Accepted || d > out.values[v]) continue;  // stale entry
        state[v] = Accepted;
        out.reached[v] = 1;
        if (d < lastAccepted - 1e-12 * std::max(1.0, lastAccepted))
            out.monotoneAcceptance = false;
        lastAccepted = std::max(lastAccepted, d);
        for (int t : incident[v]) {
            for (int u : mesh.triangles[t])
                if (state[u] != Accepted) relax(u);
        }
    }
    for (int i = 0; i < n; ++i)
        if (!out.reached[i]) ++out.unreachable;
    return out;
}

EdgeList edges_from_distance(const IncompleteDistance& D) {
    EdgeList edges(D.pointCount());
    for (const auto& e : D.entries()) {
        double len = std::sqrt(e.sq);
        edges[e.i].emplace_back(e.j, len);
        edges[e.j].emplace_back(e.i, len);
    }
    return edges;
}

DistanceMap dijkstra(const EdgeList& edges, const std::vector<int>& sources) {
    const int n = static_cast<int>(edges.size());
    const double inf = std::numeric_limits<double>::infinity();
    DistanceMap out;
    out.values = Eigen::VectorXd::Constant(n, inf);
    out.sources = sources;
    out.reached.assign(n, 0);

    using HeapItem = std::pair<double, int>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
    for (int s : sources) {
        if (s < 0 || s >= n) throw invalid_input_error("source index out of range");
        out.values[s] = 0.0;
        heap.push({0.0, s});
    }
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > out.values[v]) continue;
        out.reached[v] = 1;
        for (const auto& [u, len] : edges[v]) {
            double cand = d + len;
            if (cand < out.values[u]) {
                out.values[u] = cand;
                heap.push({cand, u});
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (!out.reached[i]) ++out.unreachable;
    return out;
}

} // namespace mfd
