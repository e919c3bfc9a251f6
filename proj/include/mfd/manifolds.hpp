#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfd/pde_solvers.hpp"

namespace mfd {

enum class ManifoldKind { Sphere, SwissRoll, FlatTorus2, FlatTorus3, File };

ManifoldKind manifold_kind_from_string(const std::string& name);
std::string manifold_kind_name(ManifoldKind kind);

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::Sphere;
    int n = 1002;
    bool uniform = true;
    std::uint64_t seed = 0;
    bool geodesicMetric = false;  // swiss-roll: pairwise geodesic distances
    std::string path;             // kind == File
};

// Sampled manifold together with whatever analytic structure the kind
// provides (LB spectrum clusters, geodesics, distinguished poles).
struct ManifoldSample {
    ManifoldKind kind = ManifoldKind::Sphere;
    Eigen::MatrixXd points;  // n x p
    int intrinsicDim = 0;
    Eigen::MatrixXd params;  // sampler parameters per point (angles, (t, s))
    int northIndex = -1;     // geodesic source where defined
    int southIndex = -1;     // geodesic target where defined
    bool geodesicMetric = false;
    double diameter = 0.0;

    bool hasAnalyticSpectrum() const;
    // Ascending clusters covering at least `count` eigenvalues (incl. 0).
    std::vector<AnalyticCluster> spectrumClusters(int count) const;

    bool hasAnalyticGeodesics() const;
    double geodesic(int i, int j) const;

    // Pairwise matrix of squared distances in the sample's metric.
    Eigen::MatrixXd squaredDistances() const;
};

ManifoldSample sample_manifold(const ManifoldSpec& spec);

std::vector<AnalyticCluster> sphere_spectrum_clusters(int count);
std::vector<AnalyticCluster> flat_torus_spectrum_clusters(int dim, int count);

// Arc length of the swiss-roll spiral r(t) = t + 0.1.
double swiss_roll_arclength(double t);

} // namespace mfd
