#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mfd {

struct SymEigsResult {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // matching columns
    bool converged = true;
    bool usedDenseFallback = false;
};

// Up to m algebraically largest eigenpairs of a dense symmetric matrix.
// Full decomposition for small matrices, thick Lanczos with dense fallback
// otherwise. Deterministic (fixed internal start vector). bestEffort trades
// the dense fallback for the current Ritz approximation, and only requires
// convergence of the pairs a PSD truncation would keep.
SymEigsResult largest_symmetric_eigs(const Eigen::MatrixXd& X, int m,
                                     int denseThreshold = 64,
                                     bool bestEffort = false);

struct ShiftInvertOptions {
    int k = 100;               // wanted eigenpairs (smallest real part)
    double sigma = -1e-8;      // shift
    double tol = 1e-10;        // Ritz residual tolerance (shift-invert scale)
    int maxSubspace = 0;       // 0: min(n, 3k + 150)
    std::uint64_t seed = 0x5DEECE66Dull;
};

struct ShiftInvertResult {
    Eigen::VectorXd values;          // accepted real eigenvalues, ascending
    Eigen::MatrixXd vectors;         // unit-norm columns, sign-fixed
    Eigen::VectorXd residuals;       // ||A x - lambda x|| per accepted pair
    std::vector<std::complex<double>> rejected;  // complex-pair residue
    int subspaceSize = 0;
    bool converged = true;
    std::string diagnostics;
};

// Shift-invert Arnoldi for the k eigenvalues of a sparse real nonsymmetric
// matrix nearest the shift (here: smallest real part of a near-PSD operator).
// Eigenvalues with relative imaginary residue are rejected and reported.
ShiftInvertResult smallest_real_eigs_shift_invert(
    const Eigen::SparseMatrix<double>& A, const ShiftInvertOptions& opts);

// Dense fallback path: full nonsymmetric eigendecomposition, same filtering.
ShiftInvertResult smallest_real_eigs_dense(const Eigen::MatrixXd& A, int k);

} // namespace mfd
