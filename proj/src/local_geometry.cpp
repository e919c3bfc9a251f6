// Local differential geometry from reconstructed neighborhood coordinates:
// PCA tangent frames, degree-2 moving-least-squares surface fits, metric
// tensors, intrinsic operator rows, and first-ring Delaunay meshes.
//
// The operator rows exploit that the surface map Z is a quadratic polynomial
// in the tangent coordinates: its Jacobian is linear and its Hessian constant,
// so all metric derivatives are exact. A function sample vector enters through
// the same weighted least-squares fit as the geometry, which makes the map
// from samples to any derived differential quantity linear; the rows are the
// coefficient vectors of those maps.
#include "mfd/local_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

std::vector<std::vector<int>> degree2_exponents(int d) {
    std::vector<std::vector<int>> exps;
    exps.push_back(std::vector<int>(d, 0));  // constant
    for (int s = 0; s < d; ++s) {
        std::vector<int> e(d, 0);
        e[s] = 1;
        exps.push_back(e);
    }
    for (int s = 0; s < d; ++s)
        for (int t = s; t < d; ++t) {
            std::vector<int> e(d, 0);
            e[s] += 1;
            e[t] += 1;
            exps.push_back(e);
        }
    return exps;
}

double eval_monomial(const std::vector<int>& e, const Eigen::VectorXd& delta) {
    double v = 1.0;
    for (std::size_t s = 0; s < e.size(); ++s)
        for (int r = 0; r < e[s]; ++r) v *= delta[static_cast<int>(s)];
    return v;
}

// Indices into the degree-2 basis laid out by degree2_exponents.
int linear_index(int s, int /*d*/) { return 1 + s; }
int quad_index(int s, int t, int d) {
    if (s > t) std::swap(s, t);
    // offset of (s, t), t >= s, in the upper-triangular enumeration
    int off = 0;
    for (int r = 0; r < s; ++r) off += d - r;
    return 1 + d + off + (t - s);
}

bool boundary_heuristic(const Eigen::MatrixXd& U, int centerIndex, int d) {
    const int ell = static_cast<int>(U.rows());
    if (d == 1) {
        double lo = 0.0, hi = 0.0;
        for (int k = 0; k < ell; ++k) {
            if (k == centerIndex) continue;
            double delta = U(k, 0) - U(centerIndex, 0);
            lo = std::min(lo, delta);
            hi = std::max(hi, delta);
        }
        return !(lo < 0.0 && hi > 0.0);
    }
    if (d == 2) {
        std::vector<double> angles;
        angles.reserve(ell - 1);
        for (int k = 0; k < ell; ++k) {
            if (k == centerIndex) continue;
            double dx = U(k, 0) - U(centerIndex, 0);
            double dy = U(k, 1) - U(centerIndex, 1);
            if (dx * dx + dy * dy <= 0.0) continue;
            angles.push_back(std::atan2(dy, dx));
        }
        if (angles.size() < 3) return true;
        std::sort(angles.begin(), angles.end());
        double maxGap = 2.0 * M_PI - (angles.back() - angles.front());
        for (std::size_t k = 1; k < angles.size(); ++k)
            maxGap = std::max(maxGap, angles[k] - angles[k - 1]);
        return maxGap >= M_PI - 1e-9;
    }
    // d >= 3: strong resultant of unit directions signals one-sidedness
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    int count = 0;
    for (int k = 0; k < ell; ++k) {
        if (k == centerIndex) continue;
        Eigen::VectorXd delta =
            (U.row(k).head(d) - U.row(centerIndex).head(d)).transpose();
        double norm = delta.norm();
        if (norm <= 0.0) continue;
        w += delta / norm;
        ++count;
    }
    return count == 0 || w.norm() / count > 0.75;
}

} // namespace

LocalFrame pca_frame(const Eigen::MatrixXd& coords, int centerIndex, int d) {
    const int ell = static_cast<int>(coords.rows());
    const int p = static_cast<int>(coords.cols());
    if (ell < 2) throw invalid_input_error("need at least 2 points");
    if (centerIndex < 0 || centerIndex >= ell)
        throw invalid_input_error("center index out of range");
    if (d > p) throw invalid_input_error("intrinsic dimension exceeds ambient");

    Eigen::VectorXd centroid = coords.colwise().mean();
    Eigen::MatrixXd centered = coords.rowwise() - centroid.transpose();
    Eigen::MatrixXd P = centered.transpose() * centered;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    if (es.info() != Eigen::Success)
        throw numerical_error("PCA eigendecomposition failed");
    Eigen::VectorXd lam(p);
    Eigen::MatrixXd basis(p, p);
    for (int k = 0; k < p; ++k) {  // descending
        lam[k] = es.eigenvalues()[p - 1 - k];
        basis.col(k) = es.eigenvectors().col(p - 1 - k);
    }
    const double scale = std::max(lam[0], 0.0);
    if (scale <= 0.0)
        throw degenerate_input_error("all neighborhood points coincide");

    int dim = d;
    if (dim <= 0) {
        // candidate dimensions must leave the degree-2 fit solvable
        int maxFeasible = 1;
        while ((maxFeasible + 2) * (maxFeasible + 3) / 2 <= ell && maxFeasible < p)
            ++maxFeasible;
        if (p == 1) {
            dim = 1;
        } else {
            double bestRatio = -1.0;
            dim = 1;
            for (int j = 0; j < std::min(p - 1, maxFeasible); ++j) {
                double denom = std::max(lam[j + 1], 1e-14 * scale);
                double ratio = lam[j] / denom;
                if (ratio > bestRatio) {
                    bestRatio = ratio;
                    dim = j + 1;
                }
            }
            // no pronounced jump: every direction carries variance, the
            // patch fills the whole embedding space (codimension 0); noisy
            // tails keep genuine jumps down to ~5x, true isotropy sits near 1x
            if (bestRatio < 4.0) dim = std::min(p, maxFeasible);
        }
    }
    if (dim < 1 || dim > p) throw degenerate_input_error("bad intrinsic dimension");

    LocalFrame frame;
    frame.centerIndex = centerIndex;
    frame.basis = basis;
    frame.intrinsicDim = dim;
    frame.virtualCoords = centered * basis;
    frame.centroid = centroid;
    frame.centerU = frame.virtualCoords.row(centerIndex).head(dim).transpose();
    frame.boundaryFlag = boundary_heuristic(frame.virtualCoords, centerIndex, dim);
    return frame;
}

Eigen::VectorXd MlsSurface::evaluate(const Eigen::VectorXd& u) const {
    Eigen::VectorXd delta = u - centerU;
    Eigen::VectorXd phi(basisSize());
    for (int b = 0; b < basisSize(); ++b) phi[b] = eval_monomial(exponents[b], delta);
    return coefficients.transpose() * phi;
}

MlsSurface mls_fit(const LocalFrame& frame) {
    const int ell = static_cast<int>(frame.virtualCoords.rows());
    const int p = static_cast<int>(frame.virtualCoords.cols());
    const int d = frame.intrinsicDim;
    const int codim = p - d;

    MlsSurface surf;
    surf.d = d;
    surf.codim = codim;
    surf.centerU = frame.centerU;
    surf.exponents = degree2_exponents(d);
    const int nb = surf.basisSize();
    if (ell < nb)
        throw insufficient_data_error("neighborhood too small for degree-2 fit");

    // Gaussian weights from full-space distances to the center. The
    // bandwidth tracks the first-ring spacing rather than the patch radius:
    // wide kernels over many-point stencils produce oscillatory
    // least-squares rows whose assembled operator grows spurious unstable
    // modes, while ring-scaled kernels stay consistent at second order.
    Eigen::VectorXd dist(ell);
    for (int k = 0; k < ell; ++k)
        dist[k] =
            (frame.virtualCoords.row(k) - frame.virtualCoords.row(frame.centerIndex))
                .norm();
    std::vector<double> sorted(dist.data(), dist.data() + ell);
    std::sort(sorted.begin(), sorted.end());
    const int ringCount = std::min(4, ell - 1);
    double ring = 0.0;
    for (int t = 1; t <= ringCount; ++t) ring += sorted[t];
    double h = 0.8 * ring / ringCount;
    if (h <= 0.0) throw degenerate_input_error("zero neighborhood radius");
    surf.bandwidth = h;
    surf.weights.resize(ell);
    for (int k = 0; k < ell; ++k)
        surf.weights[k] = std::exp(-dist[k] * dist[k] / (h * h));

    Eigen::MatrixXd design(ell, nb);
    for (int k = 0; k < ell; ++k) {
        Eigen::VectorXd delta =
            frame.virtualCoords.row(k).head(d).transpose() - frame.centerU;
        for (int b = 0; b < nb; ++b)
            design(k, b) = eval_monomial(surf.exponents[b], delta);
    }

    Eigen::VectorXd sqrtW = surf.weights.cwiseSqrt();
    Eigen::MatrixXd weighted = sqrtW.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted);
    qr.setThreshold(1e-10);
    if (qr.rank() == nb) {
        // coeffMap = (W^1/2 Phi)^+ W^1/2, so coefficients = coeffMap * samples
        Eigen::MatrixXd rhs = Eigen::MatrixXd(sqrtW.asDiagonal());
        surf.coeffMap = qr.solve(rhs);
    } else {
        // rank-deficient design: damped normal equations
        surf.regularized = true;
        Eigen::MatrixXd normal = weighted.transpose() * weighted;
        normal.diagonal().array() += 1e-10 * normal.trace();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
        surf.coeffMap = ldlt.solve(design.transpose() * surf.weights.asDiagonal());
    }

    Eigen::MatrixXd V = frame.virtualCoords.rightCols(codim);
    surf.coefficients = surf.coeffMap * V;
    if (codim > 0) {
        Eigen::MatrixXd resid = design * surf.coefficients - V;
        surf.fitResidual =
            std::sqrt((sqrtW.asDiagonal() * resid).squaredNorm());
    }
    return surf;
}

namespace {

// Jacobian (codim x d) and per-component Hessians of Z at the expansion point.
struct SurfaceJets {
    Eigen::MatrixXd J;                    // codim x d
    std::vector<Eigen::MatrixXd> hess;    // codim matrices, d x d
};

SurfaceJets surface_jets(const MlsSurface& surf) {
    const int d = surf.d;
    SurfaceJets jets;
    jets.J.setZero(surf.codim, d);
    jets.hess.assign(surf.codim, Eigen::MatrixXd::Zero(d, d));
    for (int m = 0; m < surf.codim; ++m) {
        for (int s = 0; s < d; ++s)
            jets.J(m, s) = surf.coefficients(linear_index(s, d), m);
        for (int s = 0; s < d; ++s)
            for (int t = s; t < d; ++t) {
                double c = surf.coefficients(quad_index(s, t, d), m);
                if (s == t) jets.hess[m](s, s) = 2.0 * c;
                else {
                    jets.hess[m](s, t) = c;
                    jets.hess[m](t, s) = c;
                }
            }
    }
    return jets;
}

MetricTensor metric_from_jacobian(const Eigen::MatrixXd& J) {
    const int d = static_cast<int>(J.cols());
    MetricTensor g;
    g.G = Eigen::MatrixXd::Identity(d, d) + J.transpose() * J;
    Eigen::LLT<Eigen::MatrixXd> llt(g.G);
    if (llt.info() != Eigen::Success)
        throw numerical_error("metric tensor not positive definite");
    g.Ginv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    g.det = g.G.determinant();
    if (!(g.det > 0.0))
        throw numerical_error("metric tensor has nonpositive determinant");
    return g;
}

// dG/du_r at the expansion point for each r.
std::vector<Eigen::MatrixXd> metric_derivatives(const SurfaceJets& jets, int d) {
    std::vector<Eigen::MatrixXd> dG(d, Eigen::MatrixXd::Zero(d, d));
    for (int r = 0; r < d; ++r)
        for (int m = 0; m < static_cast<int>(jets.hess.size()); ++m) {
            const Eigen::MatrixXd& T = jets.hess[m];
            for (int s = 0; s < d; ++s)
                for (int t = 0; t < d; ++t)
                    dG[r](s, t) +=
                        T(r, s) * jets.J(m, t) + jets.J(m, s) * T(r, t);
        }
    return dG;
}

} // namespace

MetricTensor metric_at(const MlsSurface& surf, const Eigen::VectorXd& u) {
    const int d = surf.d;
    if (u.size() != d) throw invalid_input_error("evaluation point has wrong size");
    // Jacobian of the quadratic map at u: linear terms plus Hessian * delta.
    SurfaceJets jets = surface_jets(surf);
    Eigen::VectorXd delta = u - surf.centerU;
    Eigen::MatrixXd J = jets.J;
    for (int m = 0; m < surf.codim; ++m)
        J.row(m) += (jets.hess[m] * delta).transpose();
    return metric_from_jacobian(J);
}

Eigen::VectorXd lb_row(const LocalFrame&, const MlsSurface& surf) {
    const int d = surf.d;
    SurfaceJets jets = surface_jets(surf);
    MetricTensor g = metric_from_jacobian(jets.J);
    std::vector<Eigen::MatrixXd> dG = metric_derivatives(jets, d);

    // Delta f = sum_t c_t d_t f + sum_{s,t} g^{st} d_s d_t f  at the center,
    // with c_t = sum_s [ 1/2 tr(Ginv dG_s) g^{st} - (Ginv dG_s Ginv)_{st} ].
    Eigen::VectorXd cLin = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < d; ++s) {
        double halfTrace = 0.5 * (g.Ginv * dG[s]).trace();
        Eigen::MatrixXd dGinv = -g.Ginv * dG[s] * g.Ginv;
        for (int t = 0; t < d; ++t)
            cLin[t] += halfTrace * g.Ginv(s, t) + dGinv(s, t);
    }

    Eigen::VectorXd coeffFunctional = Eigen::VectorXd::Zero(surf.basisSize());
    for (int t = 0; t < d; ++t)
        coeffFunctional[linear_index(t, d)] += cLin[t];
    for (int s = 0; s < d; ++s) {
        coeffFunctional[quad_index(s, s, d)] += 2.0 * g.Ginv(s, s);
        for (int t = s + 1; t < d; ++t)
            coeffFunctional[quad_index(s, t, d)] += 2.0 * g.Ginv(s, t);
    }
    return surf.coeffMap.transpose() * coeffFunctional;
}

Eigen::MatrixXd gradient_rows(const LocalFrame&, const MlsSurface& surf) {
    const int d = surf.d;
    SurfaceJets jets = surface_jets(surf);
    MetricTensor g = metric_from_jacobian(jets.J);
    const int ell = static_cast<int>(surf.coeffMap.cols());
    Eigen::MatrixXd rows(d, ell);
    for (int s = 0; s < d; ++s) {
        Eigen::VectorXd functional = Eigen::VectorXd::Zero(surf.basisSize());
        for (int t = 0; t < d; ++t)
            functional[linear_index(t, d)] += g.Ginv(s, t);
        rows.row(s) = (surf.coeffMap.transpose() * functional).transpose();
    }
    return rows;
}

Eigen::MatrixXd divergence_rows(const LocalFrame&, const MlsSurface& surf) {
    const int d = surf.d;
    SurfaceJets jets = surface_jets(surf);
    MetricTensor g = metric_from_jacobian(jets.J);
    std::vector<Eigen::MatrixXd> dG = metric_derivatives(jets, d);
    const int ell = static_cast<int>(surf.coeffMap.cols());
    // div V = sum_s [ 1/2 tr(Ginv dG_s) V^s + d_s V^s ] at the center.
    Eigen::MatrixXd rows(d, ell);
    for (int s = 0; s < d; ++s) {
        double halfTrace = 0.5 * (g.Ginv * dG[s]).trace();
        Eigen::VectorXd functional = Eigen::VectorXd::Zero(surf.basisSize());
        functional[0] += halfTrace;
        functional[linear_index(s, d)] += 1.0;
        rows.row(s) = (surf.coeffMap.transpose() * functional).transpose();
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bowyer-Watson Delaunay on the tangent projection
// ---------------------------------------------------------------------------

namespace {

struct Tri {
    int a, b, c;
    double cx, cy, r2;  // circumcircle
    bool alive = true;
};

bool circumcircle(const std::vector<double>& xs, const std::vector<double>& ys,
                  int a, int b, int c, double& cx, double& cy, double& r2) {
    double ax = xs[a], ay = ys[a];
    double bx = xs[b], by = ys[b];
    double cxx = xs[c], cyy = ys[c];
    double dd = 2.0 * (ax * (by - cyy) + bx * (cyy - ay) + cxx * (ay - by));
    if (std::abs(dd) < 1e-14) return false;
    double a2 = ax * ax + ay * ay;
    double b2 = bx * bx + by * by;
    double c2 = cxx * cxx + cyy * cyy;
    cx = (a2 * (by - cyy) + b2 * (cyy - ay) + c2 * (ay - by)) / dd;
    cy = (a2 * (cxx - bx) + b2 * (ax - cxx) + c2 * (bx - ax)) / dd;
    double dx = ax - cx, dy = ay - cy;
    r2 = dx * dx + dy * dy;
    return true;
}

} // namespace

std::vector<std::array<int, 3>> delaunay_2d(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    if (n < 3) throw degenerate_input_error("need at least 3 points");

    double minx = pts.col(0).minCoeff(), maxx = pts.col(0).maxCoeff();
    double miny = pts.col(1).minCoeff(), maxy = pts.col(1).maxCoeff();
    double span = std::max({maxx - minx, maxy - miny, 1e-12});

    std::vector<double> xs(n + 3), ys(n + 3);
    for (int i = 0; i < n; ++i) {
        xs[i] = (pts(i, 0) - minx) / span;
        ys[i] = (pts(i, 1) - miny) / span;
    }
    // super-triangle well outside the normalized unit box
    xs[n] = -20.0; ys[n] = -20.0;
    xs[n + 1] = 40.0; ys[n + 1] = -20.0;
    xs[n + 2] = 0.5; ys[n + 2] = 40.0;

    std::vector<Tri> tris;
    {
        Tri t{n, n + 1, n + 2, 0, 0, 0};
        if (!circumcircle(xs, ys, t.a, t.b, t.c, t.cx, t.cy, t.r2))
            throw numerical_error("super-triangle construction failed");
        tris.push_back(t);
    }

    const double eps = 1e-12;
    for (int ip = 0; ip < n; ++ip) {
        double px = xs[ip], py = ys[ip];
        // cavity: triangles whose circumcircle contains the point
        std::vector<std::array<int, 2>> edges;
        bool duplicate = false;
        for (auto& t : tris) {
            if (!t.alive) continue;
            for (int v : {t.a, t.b, t.c}) {
                double dx = xs[v] - px, dy = ys[v] - py;
                if (v < n && dx * dx + dy * dy < 1e-24) duplicate = true;
            }
        }
        if (duplicate) continue;  // coincident projections add nothing
        for (auto& t : tris) {
            if (!t.alive) continue;
            double dx = px - t.cx, dy = py - t.cy;
            if (dx * dx + dy * dy <= t.r2 * (1.0 + eps) + eps) {
                t.alive = false;
                edges.push_back({t.a, t.b});
                edges.push_back({t.b, t.c});
                edges.push_back({t.c, t.a});
            }
        }
        // boundary of the cavity: edges appearing exactly once
        std::vector<std::array<int, 2>> boundary;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            bool shared = false;
            for (std::size_t f = 0; f < edges.size(); ++f) {
                if (e == f) continue;
                if ((edges[e][0] == edges[f][1] && edges[e][1] == edges[f][0]) ||
                    (edges[e][0] == edges[f][0] && edges[e][1] == edges[f][1])) {
                    shared = true;
                    break;
                }
            }
            if (!shared) boundary.push_back(edges[e]);
        }
        for (const auto& e : boundary) {
            Tri t{e[0], e[1], ip, 0, 0, 0};
            if (!circumcircle(xs, ys, t.a, t.b, t.c, t.cx, t.cy, t.r2))
                continue;  // collinear sliver
            tris.push_back(t);
        }
    }

    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.a >= n || t.b >= n || t.c >= n) continue;
        std::array<int, 3> tri{t.a, t.b, t.c};
        std::sort(tri.begin(), tri.end());
        out.push_back(tri);
    }
    if (out.empty()) throw degenerate_input_error("collinear projected points");
    return out;
}

LocalMesh local_delaunay(const LocalFrame& frame) {
    if (frame.intrinsicDim != 2)
        throw invalid_input_error("local meshing requires intrinsic dimension 2");
    const int ell = static_cast<int>(frame.virtualCoords.rows());
    if (ell < 3) throw degenerate_input_error("need at least 3 points");

    Eigen::MatrixXd proj = frame.virtualCoords.leftCols(2);
    auto tris = delaunay_2d(proj);

    LocalMesh mesh;
    for (const auto& t : tris) {
        if (t[0] != frame.centerIndex && t[1] != frame.centerIndex &&
            t[2] != frame.centerIndex)
            continue;  // only the first ring is retained
        Eigen::VectorXd e1 =
            (frame.virtualCoords.row(t[1]) - frame.virtualCoords.row(t[0]))
                .transpose();
        Eigen::VectorXd e2 =
            (frame.virtualCoords.row(t[2]) - frame.virtualCoords.row(t[0]))
                .transpose();
        double g11 = e1.squaredNorm(), g22 = e2.squaredNorm(), g12 = e1.dot(e2);
        double area2 = g11 * g22 - g12 * g12;
        if (area2 <= 0.0) continue;
        mesh.triangles.push_back(t);
        mesh.areas.push_back(0.5 * std::sqrt(area2));
    }
    if (mesh.triangles.empty())
        throw degenerate_input_error("no first-ring triangles around center");
    return mesh;
}

} // namespace mfd
