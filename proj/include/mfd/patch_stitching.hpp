#pragma once

#include <vector>

#include <Eigen/Core>

namespace mfd {

// Rigid alignment A*R + 1*b ~ B over orthogonal R (reflections allowed).
struct ProcrustesResult {
    Eigen::MatrixXd R;  // d x d orthogonal
    Eigen::RowVectorXd b;
    double rmsd = 0.0;
};

ProcrustesResult procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// L overlapping patches of a global point set plus a spectral basis: patch j
// covers global indices omega[j] with local coordinates Q[j] (n_j x d); Phi
// holds N basis vectors over all n points.
struct PatchSet {
    int n = 0;
    int d = 0;
    std::vector<std::vector<int>> omega;
    std::vector<Eigen::MatrixXd> Q;
    Eigen::MatrixXd Phi;  // n x N

    int patchCount() const { return static_cast<int>(omega.size()); }
};

struct StitchState {
    Eigen::MatrixXd alpha;               // N x d spectral coefficients
    std::vector<Eigen::MatrixXd> R;      // per-patch orthogonal d x d
    std::vector<Eigen::RowVectorXd> b;   // per-patch translations
    double energy = 0.0;
    int iteration = 0;
    bool converged = false;
    int lineSearchFailures = 0;
    bool alphaRegularized = false;
    std::vector<double> energyHistory;
};

struct StitchParams {
    double eps = 1e-8;        // relative energy-change stop
    int maxIter = 5000;
    double delta0 = 1.0;      // initial Cayley step
    double armijo = 1e-4;
    double deltaMin = 1e-12;
    int overlapMin = 0;       // 0: d + 1
};

// Patch-graph BFS initialization: R over connected patches composed from
// pairwise Procrustes estimates, identity elsewhere; alpha = 0, b = 0.
StitchState bfs_initialize(const PatchSet& patches, int overlapMin = 0);

double stitch_energy(const PatchSet& patches, const StitchState& state);

// Alternating minimization: exact Newton steps for alpha and b, Cayley
// transform steps with backtracking line search for the orthogonal factors.
StitchState stitch(const PatchSet& patches, StitchState init,
                   const StitchParams& params = {});

// P_i = average of Q_j R_j + 1 b_j over the patches containing i.
Eigen::MatrixXd assemble_global(const PatchSet& patches, const StitchState& state);

} // namespace mfd
