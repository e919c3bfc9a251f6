#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace mfd {

// Per-point tangent/normal frame from PCA of the reconstructed neighborhood
// coordinates. Virtual coordinates are taken relative to the centroid in the
// eigenbasis; the first d columns are tangent (u), the rest normal (v).
struct LocalFrame {
    int centerIndex = 0;           // row of the center point
    Eigen::MatrixXd basis;         // p x p, orthonormal columns
    int intrinsicDim = 0;          // d
    Eigen::MatrixXd virtualCoords; // ell x p
    Eigen::VectorXd centroid;      // length p
    Eigen::VectorXd centerU;       // length d, u-coordinate of the center
    bool boundaryFlag = false;     // one-sided neighborhood heuristic
};

LocalFrame pca_frame(const Eigen::MatrixXd& coords, int centerIndex = 0,
                     int d = -1);

// Degree-2 moving least squares graph of the manifold over the tangent
// coordinates, expanded around the center's u-coordinate. coeffMap carries
// the weighted least-squares solve operator so that scalar samples over the
// neighborhood can be interpolated with the same basis and weights.
struct MlsSurface {
    int d = 0;
    int codim = 0;
    Eigen::VectorXd centerU;
    Eigen::MatrixXd coefficients;  // nBasis x codim
    Eigen::MatrixXd coeffMap;      // nBasis x ell: samples -> coefficients
    Eigen::VectorXd weights;       // ell
    double bandwidth = 0.0;        // h
    bool regularized = false;      // Tikhonov fallback engaged
    std::vector<std::vector<int>> exponents;  // multi-indices, |xi| <= 2

    double fitResidual = 0.0;

    int basisSize() const { return static_cast<int>(exponents.size()); }
    // Value of the fitted surface at tangent coordinate u (length d).
    Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const;
};

MlsSurface mls_fit(const LocalFrame& frame);

struct MetricTensor {
    Eigen::MatrixXd G;
    Eigen::MatrixXd Ginv;
    double det = 1.0;
};

MetricTensor metric_at(const MlsSurface& surface, const Eigen::VectorXd& u);

// Linear functionals over the ell neighborhood samples.
//   lb_row:         f samples        -> Laplace-Beltrami of f at the center
//   gradient_rows:  f samples        -> tangent-frame gradient components
//   divergence_rows: V^s samples     -> divergence (one row per component)
Eigen::VectorXd lb_row(const LocalFrame& frame, const MlsSurface& surface);
Eigen::MatrixXd gradient_rows(const LocalFrame& frame, const MlsSurface& surface);
Eigen::MatrixXd divergence_rows(const LocalFrame& frame, const MlsSurface& surface);

// First-ring Delaunay structure around the center, triangulated on the
// tangent-plane projection (d must be 2), areas from the full coordinates.
struct LocalMesh {
    std::vector<std::array<int, 3>> triangles;  // local indices
    std::vector<double> areas;
};

LocalMesh local_delaunay(const LocalFrame& frame);

// Plain 2D Bowyer-Watson triangulation of a planar point set.
std::vector<std::array<int, 3>> delaunay_2d(const Eigen::MatrixXd& pts);

} // namespace mfd
