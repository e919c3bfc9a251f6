#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfd/distance_data.hpp"

namespace mfd {

// ---------------------------------------------------------------------------
// Half-vectorization: symmetric ell x ell matrices <-> R^{ell(ell+1)/2},
// lower triangle stacked column-major (b11, b21, ..., bl1, b22, ..., bll).
// ---------------------------------------------------------------------------

inline int half_vec_size(int ell) { return ell * (ell + 1) / 2; }

// Index of (i, j), i >= j, in the half vector.
inline int half_vec_index(int i, int j, int ell) {
    return j * ell - j * (j - 1) / 2 + (i - j);
}

Eigen::VectorXd half_vectorize(const Eigen::MatrixXd& B);
Eigen::MatrixXd half_unvectorize(const Eigen::VectorXd& hv);

// ---------------------------------------------------------------------------
// Gram / distance algebra
// ---------------------------------------------------------------------------

// B = -1/2 H D H with the centering matrix H = I - (1/l) 1 1^T. Row sums of
// the result vanish; D holds squared distances.
Eigen::MatrixXd gram_from_distance(const Eigen::MatrixXd& D_squared);

// Restriction operator: entry per pair (i, j) equals Bii + Bjj - Bij - Bji.
Eigen::VectorXd restrict_to_pairs(const Eigen::MatrixXd& B,
                                  const std::vector<std::pair<int, int>>& omega);

// Merged linear constraint operator acting on half vectors:
//   A(b) = (restrict(unvec(b), omega), unvec(b) * 1)
// together with its adjoint (assembled from the closed-form U and Q terms).
// Pairs are canonicalized to i > j.
class MergedOperator {
public:
    MergedOperator(int ell, std::vector<std::pair<int, int>> omega);

    int ell() const { return ell_; }
    int omegaSize() const { return static_cast<int>(omega_.size()); }
    const std::vector<std::pair<int, int>>& omega() const { return omega_; }

    void apply(const Eigen::VectorXd& hv, Eigen::VectorXd& outOmega,
               Eigen::VectorXd& outRowSums) const;
    void applyAdjoint(const Eigen::VectorXd& inOmega,
                      const Eigen::VectorXd& inRowSums,
                      Eigen::VectorXd& outHv) const;

    // Diagonal of (mu1 A*A + mu2 I); Jacobi preconditioner for the CG solve.
    Eigen::VectorXd normalDiagonal(double mu1, double mu2) const;

private:
    int ell_;
    std::vector<std::pair<int, int>> omega_;  // i > j
};

// Eigenvalue hard thresholding: projection onto the PSD cone keeping at most
// the m algebraically largest eigenpairs.
Eigen::MatrixXd evht(const Eigen::MatrixXd& X, int m);

// ---------------------------------------------------------------------------
// Completion solvers
// ---------------------------------------------------------------------------

struct CompletionParams {
    double mu1 = 10.0;
    double mu2 = 5.0;
    double eps = 1e-6;      // relative energy-change stopping threshold
    int maxIter = 2000;
    int m = 20;             // eigenpair cap in the thresholding step
    double cgTol = 1e-8;    // relative residual
    int cgMaxIter = 0;      // 0: 10 * dim
    bool cgWarmStart = false;
    double rankTol = 1e-6;  // relative eigenvalue cutoff for rank estimate
};

struct GramSolution {
    Eigen::MatrixXd B;             // completed PSD Gram matrix
    int iterations = 0;
    bool converged = false;
    double finalEnergy = 0.0;
    double residualFeasibility = 0.0;  // ||A(B) - D~_Omega||_2
    double rowSumResidual = 0.0;
    int rankEstimate = 0;
    bool cgWarnings = false;
    bool feasibilityMonotoneTail = true;  // last 10 iterations, 1e-6 slack
    std::vector<double> energyHistory;
    std::vector<double> feasibilityHistory;
};

// Algorithm: augmented-Lagrangian splitting with a CG inner solve and
// eigenvalue hard thresholding; stops on relative energy stagnation.
GramSolution complete_gram(const IncompleteDistance& D,
                           const CompletionParams& params = {});

struct DistanceSolution {
    Eigen::MatrixXd D;  // completed squared-distance matrix
    int iterations = 0;
    bool converged = false;
    double finalEnergy = 0.0;
    int rankEstimate = 0;
};

// Nuclear-norm completion of the distance matrix itself (no PSD cone, no
// centering): equality on the sampled entries is enforced by projection and
// the spectrum is soft-thresholded with a hard cap of m eigenpairs.
DistanceSolution complete_distance(const IncompleteDistance& D,
                                   const CompletionParams& params = {});

// Classical MDS extraction: X = U_p Lambda_p^{1/2}. p < 0 selects the count
// of eigenvalues above dimTol * lambda_max.
Eigen::MatrixXd mds_coordinates(const Eigen::MatrixXd& B, int p = -1,
                                double dimTol = 1e-6);

std::string gram_solution_json(const GramSolution& gs);

} // namespace mfd
