#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfd/gram_completion.hpp"
#include "mfd/manifolds.hpp"
#include "mfd/patch_stitching.hpp"
#include "mfd/pde_solvers.hpp"

namespace mfd {

// Deterministic sub-seed derivation so that fan-out across trials or points
// never depends on execution order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

// Seeded per-pair view of a dense squared-distance matrix reproducing the
// D_{gamma,ell} protocol: membership of a pair in the gamma-sample is a
// deterministic order-independent coin, the KNN mask restricts which rows are
// known, and local completion patches may query any sampled pair among their
// members. Optional per-pair Gaussian noise is applied consistently to every
// view of the same pair.
class MaskedMetric {
public:
    MaskedMetric(const Eigen::MatrixXd& D_squared, double gamma,
                 std::uint64_t seed);

    bool sampled(int i, int j) const;
    // Noisy squared distance if the pair is sampled.
    std::optional<double> squared(int i, int j) const;

    // Rows restricted to the true ell nearest others, gamma-sampled.
    IncompleteDistance knnMask(int ell) const;

    // Gaussian corruption of un-squared distances; sigma scales the maximum
    // available distance of the ell-mask (computed clean, per add_noise).
    void setNoise(double sigmaFraction, int ell, std::uint64_t noiseSeed);

    int pointCount() const { return static_cast<int>(D_->rows()); }

private:
    const Eigen::MatrixXd* D_;
    double gamma_;
    std::uint64_t seed_;
    double noiseScale_ = 0.0;
    double sigmaFraction_ = 0.0;
    std::uint64_t noiseSeed_ = 0;
};

// Exact nearest neighbors (ties by index) from a dense metric; each list
// holds k others, excluding the point itself.
std::vector<std::vector<int>> exact_knn_lists(const Eigen::MatrixXd& D_squared,
                                              int k);

double relative_frobenius_error(const Eigen::MatrixXd& approx,
                                const Eigen::MatrixXd& truth);

// ---------------------------------------------------------------------------
// Phase transition (success-rate grids)
// ---------------------------------------------------------------------------

enum class CompletionModel { Gram, Distance };

struct PhaseTransitionConfig {
    ManifoldSpec manifold;       // n is overridden by the grid
    std::vector<double> gammaGrid;
    std::vector<int> nGrid;
    int trials = 10;
    CompletionModel model = CompletionModel::Gram;
    CompletionParams completion;
    double successThreshold = 1e-3;  // relative Frobenius Gram error
    unsigned threads = 0;
};

struct PhaseCell {
    int n = 0;
    double gamma = 0.0;
    double rho = 0.0;
    double meanError = 0.0;
};

struct PhaseTransitionReport {
    PhaseTransitionConfig config;
    std::vector<PhaseCell> cells;

    const PhaseCell* cell(int n, double gamma) const;
    std::string csv() const;
    std::string json() const;
};

PhaseTransitionReport run_phase_transition(const PhaseTransitionConfig& config);

// ---------------------------------------------------------------------------
// Laplace-Beltrami eigenvalue experiments
// ---------------------------------------------------------------------------

struct LbExperimentConfig {
    ManifoldSpec manifold;
    double gamma = 1.0;
    int ell = 6;
    int K = 100;
    bool exactKnn = true;
    double noiseSigma = 0.0;
    CompletionParams completion;
    int d = -1;
    unsigned threads = 0;
};

struct LbExperimentReport {
    LbExperimentConfig config;
    EigenSystem eigs;
    std::vector<AnalyticCluster> clusters;      // empty if no analytic truth
    std::vector<double> clusterErrors;          // E_max per cluster
    AssemblyStats assembly;
    double maskSeconds = 0.0;
    double assemblySeconds = 0.0;
    double eigsSeconds = 0.0;

    // E_max for the cluster with analytic eigenvalue lambda.
    double errorFor(double lambda) const;
    std::string json() const;
};

LbExperimentReport run_lb_experiment(const LbExperimentConfig& config);

// ---------------------------------------------------------------------------
// Eikonal experiments
// ---------------------------------------------------------------------------

struct EikonalConfig {
    ManifoldSpec manifold;
    double gamma = 0.6;
    int ell = 20;
    CompletionParams completion;
    unsigned threads = 0;
};

struct EikonalReport {
    EikonalConfig config;
    DistanceMap fmm;
    DistanceMap dijkstraMap;
    double fmmEav = 0.0, fmmEse = 0.0;
    double dijkstraEav = 0.0, dijkstraEse = 0.0;
    int excludedBoundary = 0;
    std::string json() const;
};

EikonalReport run_eikonal_experiment(const EikonalConfig& config);

// ---------------------------------------------------------------------------
// Patch stitching experiments
// ---------------------------------------------------------------------------

struct StitchingConfig {
    ManifoldSpec manifold;
    int patches = 10;
    double localGamma = 0.5;
    int basisSize = 100;   // N
    int ellPhi = 30;       // KNN size for the spectral-basis pipeline
    int d = 3;             // stitching dimension (local coords padded to d)
    CompletionParams completion;
    StitchParams stitchParams;
    unsigned threads = 0;
};

struct StitchingReport {
    StitchingConfig config;
    PatchSet patchSet;
    StitchState state;
    Eigen::MatrixXd P;              // stitched coordinates
    double alignedRmsd = 0.0;       // Procrustes vs ground truth
    double rmsdOverDiameter = 0.0;
    Eigen::VectorXd singularValues; // of centered P
    bool energyMonotone = true;
    std::string json() const;
};

StitchingReport run_stitching_experiment(const StitchingConfig& config);

// Overlapping patch partition: k-means seeds grown by KNN-graph rings.
std::vector<std::vector<int>> partition_patches(const Eigen::MatrixXd& D_squared,
                                                int L, int growRings,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Local vs global timing comparison
// ---------------------------------------------------------------------------

struct TimingComparisonConfig {
    int n = 4002;
    double globalGamma = 0.03;
    double localGamma = 0.5;
    int localEll = 18;
    CompletionParams completion;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct TimingComparisonReport {
    TimingComparisonConfig config;
    double localSeconds = 0.0;
    double globalSeconds = 0.0;
    bool localSucceeded = false;
    bool globalSucceeded = false;
    double globalError = 0.0;
    std::string json() const;
};

TimingComparisonReport run_timing_comparison(const TimingComparisonConfig& config);

} // namespace mfd
