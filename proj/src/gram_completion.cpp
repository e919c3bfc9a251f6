// Low-rank positive-semidefinite Gram completion from incomplete squared
// distances, the direct distance-matrix completion variant, and classical
// MDS coordinate extraction.
//
// The Gram solver minimizes trace(B) over symmetric PSD B subject to
//   Bii + Bjj - 2 Bij = Dij  on the sampled pairs,   B 1 = 0,
// via an augmented-Lagrangian splitting: a CG solve for the unconstrained
// half-vector iterate, a PSD projection (eigenvalue hard thresholding) for
// the auxiliary variable, and plain dual ascent. Energies track
//   E = trace(B) + mu1/2 ||A B - d||^2 + mu2/2 ||B - C||^2
// and iteration stops once the relative energy change falls below eps.
#include "mfd/gram_completion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "mfd/eigs.hpp"
#include "mfd/errors.hpp"

namespace mfd {

Eigen::VectorXd half_vectorize(const Eigen::MatrixXd& B) {
    const int ell = static_cast<int>(B.rows());
    if (B.cols() != ell) throw invalid_input_error("matrix must be square");
    Eigen::VectorXd hv(half_vec_size(ell));
    int idx = 0;
    for (int j = 0; j < ell; ++j)
        for (int i = j; i < ell; ++i) hv[idx++] = B(i, j);
    return hv;
}

Eigen::MatrixXd half_unvectorize(const Eigen::VectorXd& hv) {
    const int m = static_cast<int>(hv.size());
    const int ell = static_cast<int>((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0 + 0.5);
    if (half_vec_size(ell) != m)
        throw invalid_input_error("half vector has non-triangular size");
    Eigen::MatrixXd B(ell, ell);
    int idx = 0;
    for (int j = 0; j < ell; ++j)
        for (int i = j; i < ell; ++i) {
            B(i, j) = hv[idx];
            B(j, i) = hv[idx];
            ++idx;
        }
    return B;
}

Eigen::MatrixXd gram_from_distance(const Eigen::MatrixXd& D_squared) {
    const int ell = static_cast<int>(D_squared.rows());
    if (D_squared.cols() != ell)
        throw invalid_input_error("distance matrix must be square");
    Eigen::VectorXd rowMean = D_squared.rowwise().mean();
    double totalMean = rowMean.mean();
    Eigen::MatrixXd B(ell, ell);
    for (int i = 0; i < ell; ++i)
        for (int j = 0; j < ell; ++j)
            B(i, j) = -0.5 * (D_squared(i, j) - rowMean[i] - rowMean[j] + totalMean);
    return B;
}

Eigen::VectorXd restrict_to_pairs(const Eigen::MatrixXd& B,
                                  const std::vector<std::pair<int, int>>& omega) {
    Eigen::VectorXd out(static_cast<int>(omega.size()));
    for (std::size_t k = 0; k < omega.size(); ++k) {
        auto [i, j] = omega[k];
        out[static_cast<int>(k)] = B(i, i) + B(j, j) - B(i, j) - B(j, i);
    }
    return out;
}

MergedOperator::MergedOperator(int ell, std::vector<std::pair<int, int>> omega)
    : ell_(ell), omega_(std::move(omega)) {
    for (auto& [i, j] : omega_) {
        if (i == j || i < 0 || j < 0 || i >= ell_ || j >= ell_)
            throw invalid_input_error("omega pair out of range");
        if (i < j) std::swap(i, j);
    }
}

void MergedOperator::apply(const Eigen::VectorXd& hv, Eigen::VectorXd& outOmega,
                           Eigen::VectorXd& outRowSums) const {
    outOmega.resize(omegaSize());
    for (int k = 0; k < omegaSize(); ++k) {
        auto [i, j] = omega_[k];
        outOmega[k] = hv[half_vec_index(i, i, ell_)] +
                      hv[half_vec_index(j, j, ell_)] -
                      2.0 * hv[half_vec_index(i, j, ell_)];
    }
    outRowSums.setZero(ell_);
    int idx = 0;
    for (int j = 0; j < ell_; ++j) {
        outRowSums[j] += hv[idx++];  // diagonal (j, j)
        for (int i = j + 1; i < ell_; ++i) {
            const double v = hv[idx++];
            outRowSums[i] += v;
            outRowSums[j] += v;
        }
    }
}

void MergedOperator::applyAdjoint(const Eigen::VectorXd& inOmega,
                                  const Eigen::VectorXd& inRowSums,
                                  Eigen::VectorXd& outHv) const {
    outHv.resize(half_vec_size(ell_));
    // Q part: Qii = qi, Qij = qi + qj for i > j.
    int idx = 0;
    for (int j = 0; j < ell_; ++j) {
        outHv[idx++] = inRowSums[j];
        for (int i = j + 1; i < ell_; ++i) outHv[idx++] = inRowSums[i] + inRowSums[j];
    }
    // U part: Uii accumulates every sampled pair touching i, Uij = -2 uij.
    for (int k = 0; k < omegaSize(); ++k) {
        auto [i, j] = omega_[k];
        const double u = inOmega[k];
        outHv[half_vec_index(i, i, ell_)] += u;
        outHv[half_vec_index(j, j, ell_)] += u;
        outHv[half_vec_index(i, j, ell_)] -= 2.0 * u;
    }
}

Eigen::VectorXd MergedOperator::normalDiagonal(double mu1, double mu2) const {
    std::vector<int> touch(ell_, 0);
    std::vector<char> sampled(half_vec_size(ell_), 0);
    for (const auto& [i, j] : omega_) {
        ++touch[i];
        ++touch[j];
        sampled[half_vec_index(i, j, ell_)] = 1;
    }
    Eigen::VectorXd diag(half_vec_size(ell_));
    int idx = 0;
    for (int j = 0; j < ell_; ++j) {
        diag[idx] = mu1 * (touch[j] + 1.0) + mu2;  // diagonal coordinate
        ++idx;
        for (int i = j + 1; i < ell_; ++i) {
            diag[idx] = mu1 * (4.0 * sampled[idx] + 2.0) + mu2;
            ++idx;
        }
    }
    return diag;
}

Eigen::MatrixXd evht(const Eigen::MatrixXd& X, int m) {
    const int n = static_cast<int>(X.rows());
    if (X.cols() != n) throw invalid_input_error("matrix must be square");
    SymEigsResult eig = largest_symmetric_eigs(X, std::min(m, n));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < eig.values.size(); ++k) {
        if (eig.values[k] <= 0.0) break;  // descending order
        out.selfadjointView<Eigen::Lower>().rankUpdate(eig.vectors.col(k),
                                                       eig.values[k]);
    }
    out.triangularView<Eigen::StrictlyUpper>() =
        out.triangularView<Eigen::StrictlyLower>().transpose();
    return out;
}

namespace {

// Jacobi-preconditioned CG on op(x) = mu1 A*A x + mu2 x.
struct NormalEquationCg {
    const MergedOperator& A;
    double mu1, mu2;
    Eigen::VectorXd invDiag;
    mutable Eigen::VectorXd tmpOmega, tmpRows, tmpHv;

    NormalEquationCg(const MergedOperator& a, double m1, double m2)
        : A(a), mu1(m1), mu2(m2) {
        invDiag = A.normalDiagonal(mu1, mu2).cwiseInverse();
    }

    void applyOp(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
        A.apply(x, tmpOmega, tmpRows);
        A.applyAdjoint(tmpOmega, tmpRows, tmpHv);
        out = mu1 * tmpHv + mu2 * x;
    }

    // Returns true on convergence to relative residual <= tol.
    bool solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double tol,
               int maxIter) const {
        const double rhsNorm = rhs.norm();
        if (rhsNorm == 0.0) {
            x.setZero(rhs.size());
            return true;
        }
        Eigen::VectorXd r(rhs.size()), z, p, Ap(rhs.size());
        if (x.size() != rhs.size()) {
            x.setZero(rhs.size());
            r = rhs;
        } else {
            applyOp(x, Ap);
            r = rhs - Ap;
        }
        z = invDiag.cwiseProduct(r);
        p = z;
        double rz = r.dot(z);
        for (int it = 0; it < maxIter; ++it) {
            if (r.norm() <= tol * rhsNorm) return true;
            applyOp(p, Ap);
            double alpha = rz / p.dot(Ap);
            x += alpha * p;
            r -= alpha * Ap;
            z = invDiag.cwiseProduct(r);
            double rzNew = r.dot(z);
            p = z + (rzNew / rz) * p;
            rz = rzNew;
        }
        return r.norm() <= tol * rhsNorm;
    }
};

std::vector<std::pair<int, int>> omega_from(const IncompleteDistance& D) {
    std::vector<std::pair<int, int>> omega;
    omega.reserve(D.entryCount());
    for (const auto& e : D.entries()) omega.emplace_back(e.j, e.i);  // i > j
    return omega;
}

int count_rank(const Eigen::VectorXd& descendingValues, double tol) {
    if (descendingValues.size() == 0) return 0;
    const double cutoff = tol * std::max(descendingValues[0], 0.0);
    int rank = 0;
    for (int i = 0; i < descendingValues.size(); ++i)
        if (descendingValues[i] > cutoff) ++rank;
        else break;
    return rank;
}

} // namespace

GramSolution complete_gram(const IncompleteDistance& D,
                           const CompletionParams& params) {
    const int ell = D.pointCount();
    if (ell < 2) throw invalid_input_error("need at least 2 points");
    if (D.entryCount() == 0) throw insufficient_data_error("no distance entries");

    const int dim = half_vec_size(ell);
    MergedOperator A(ell, omega_from(D));
    NormalEquationCg cg(A, params.mu1, params.mu2);
    const int cgMaxIter = params.cgMaxIter > 0 ? params.cgMaxIter : 10 * dim;

    // distances are normalized to unit mean internally; the penalty weights
    // then act at the scale the algorithm's default constants assume
    double scale = 0.0;
    for (const auto& e : D.entries()) scale += e.sq;
    scale /= double(D.entryCount());
    if (scale <= 0.0) scale = 1.0;

    Eigen::VectorXd dTilde(A.omegaSize());
    {
        int k = 0;
        for (const auto& e : D.entries()) dTilde[k++] = e.sq / scale;
    }

    Eigen::VectorXd traceGrad = Eigen::VectorXd::Zero(dim);  // zeta(I)
    for (int j = 0; j < ell; ++j) traceGrad[half_vec_index(j, j, ell)] = 1.0;

    Eigen::VectorXd bHat = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd cHat = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd h1Omega = Eigen::VectorXd::Zero(A.omegaSize());
    Eigen::VectorXd h1Rows = Eigen::VectorXd::Zero(ell);
    Eigen::VectorXd h2 = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd rhs(dim), adj(dim), aOmega, aRows;
    Eigen::MatrixXd Cdense;

    GramSolution sol;
    double ePrev = 2e10, eCur = 1e10;
    sol.energyHistory = {ePrev, eCur};

    int k = 0;
    for (; k < params.maxIter; ++k) {
        // 1. (mu1 A*A + mu2) b = mu1 A*(d - H1) + mu2 (c - H2) - zeta(I)
        A.applyAdjoint(dTilde - h1Omega, -h1Rows, adj);
        rhs = params.mu1 * adj + params.mu2 * (cHat - h2) - traceGrad;
        if (!params.cgWarmStart) bHat.setZero();
        if (!cg.solve(rhs, bHat, params.cgTol, cgMaxIter)) sol.cgWarnings = true;

        // 2. C = zeta(EVHT(unvec(B + H2))); inside the splitting loop the
        // partial eigensolver may return its best Ritz approximation
        {
            Eigen::MatrixXd Xc = half_unvectorize(bHat + h2);
            SymEigsResult eig = largest_symmetric_eigs(Xc, std::min(params.m, ell), 64, true);
            Cdense.setZero(ell, ell);
            for (int t = 0; t < eig.values.size(); ++t) {
                if (eig.values[t] <= 0.0) break;
                Cdense.selfadjointView<Eigen::Lower>().rankUpdate(eig.vectors.col(t),
                                                                  eig.values[t]);
            }
            Cdense.triangularView<Eigen::StrictlyUpper>() =
                Cdense.triangularView<Eigen::StrictlyLower>().transpose();
        }
        cHat = half_vectorize(Cdense);

        // 3. / 4. dual ascent
        A.apply(bHat, aOmega, aRows);
        h1Omega += aOmega - dTilde;
        h1Rows += aRows;
        h2 += bHat - cHat;

        // 5. energy and stopping
        const double feasSq = (aOmega - dTilde).squaredNorm() + aRows.squaredNorm();
        double energy = bHat.dot(traceGrad) + 0.5 * params.mu1 * feasSq +
                        0.5 * params.mu2 * (bHat - cHat).squaredNorm();
        sol.energyHistory.push_back(energy);
        sol.feasibilityHistory.push_back(std::sqrt(feasSq));
        ePrev = eCur;
        eCur = energy;
        if (std::abs(eCur - ePrev) / std::max(std::abs(eCur), 1e-300) < params.eps) {
            sol.converged = true;
            ++k;
            break;
        }
        // underdetermined instances can send the duals off to infinity;
        // bail out once the energy or feasibility leaves any plausible range
        if (!std::isfinite(energy) || energy > 1e9 * double(ell) ||
            (k > 50 && feasSq > 1e6 * dTilde.squaredNorm())) {
            ++k;
            break;
        }
    }

    sol.iterations = k;
    sol.finalEnergy = eCur;
    // Returned matrix is the PSD iterate from the projection step; at
    // convergence it coincides with the half-vector iterate.
    sol.B = Cdense * scale;
    {
        Eigen::VectorXd cOmega, cRows;
        A.apply(cHat, cOmega, cRows);
        sol.residualFeasibility =
            scale * std::sqrt((cOmega - dTilde).squaredNorm() + cRows.squaredNorm());
        sol.rowSumResidual = scale * cRows.cwiseAbs().maxCoeff();
    }
    SymEigsResult eig = largest_symmetric_eigs(sol.B, std::min(params.m, ell));
    sol.rankEstimate = count_rank(eig.values, params.rankTol);

    const int tail = std::min<std::size_t>(10, sol.feasibilityHistory.size());
    const double feasSlack = 1e-6 * std::max(dTilde.norm(), 1.0);
    for (int t = 1; t < tail; ++t) {
        const std::size_t base = sol.feasibilityHistory.size() - tail;
        double prev = sol.feasibilityHistory[base + t - 1];
        double cur = sol.feasibilityHistory[base + t];
        if (cur > prev + feasSlack) sol.feasibilityMonotoneTail = false;
    }
    return sol;
}

DistanceSolution complete_distance(const IncompleteDistance& D,
                                   const CompletionParams& params) {
    const int ell = D.pointCount();
    if (ell < 2) throw invalid_input_error("need at least 2 points");
    if (D.entryCount() == 0) throw insufficient_data_error("no distance entries");

    const double tau = 1.0 / params.mu2;  // soft threshold from the prox step
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(ell, ell);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(ell, ell);
    Eigen::MatrixXd X(ell, ell), Xprev;

    // spectral prox: soft threshold by magnitude, keep at most m eigenpairs;
    // both spectrum ends matter since distance matrices are indefinite
    auto spectralStep = [&](const Eigen::MatrixXd& M, double& nuclear, int& kept) {
        std::vector<std::pair<double, Eigen::VectorXd>> pairs;
        if (ell <= 64) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
            if (es.info() != Eigen::Success)
                throw numerical_error("distance completion eigendecomposition failed");
            for (int i = 0; i < ell; ++i)
                pairs.push_back({es.eigenvalues()[i], es.eigenvectors().col(i)});
        } else {
            SymEigsResult top = largest_symmetric_eigs(M, params.m, 64, true);
            SymEigsResult bottom =
                largest_symmetric_eigs((-M).eval(), params.m, 64, true);
            for (int i = 0; i < top.values.size(); ++i)
                pairs.push_back({top.values[i], top.vectors.col(i)});
            for (int i = 0; i < bottom.values.size(); ++i)
                pairs.push_back({-bottom.values[i], bottom.vectors.col(i)});
        }
        std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
            return std::abs(a.first) > std::abs(b.first);
        });
        C.setZero();
        nuclear = 0.0;
        kept = 0;
        for (const auto& [lam, vec] : pairs) {
            if (kept >= params.m) break;
            double shrunk = std::copysign(std::max(std::abs(lam) - tau, 0.0), lam);
            if (shrunk == 0.0) break;
            C.selfadjointView<Eigen::Lower>().rankUpdate(vec, shrunk);
            nuclear += std::abs(shrunk);
            ++kept;
        }
        C.triangularView<Eigen::StrictlyUpper>() =
            C.triangularView<Eigen::StrictlyLower>().transpose();
    };

    DistanceSolution sol;
    int k = 0;
    for (; k < params.maxIter; ++k) {
        // projection step: symmetric, zero diagonal, exact on sampled pairs
        X = C - H;
        X.diagonal().setZero();
        for (const auto& e : D.entries()) {
            X(e.i, e.j) = e.sq;
            X(e.j, e.i) = e.sq;
        }

        double nuclear = 0.0;
        int kept = 0;
        spectralStep(X + H, nuclear, kept);
        H += X - C;
        sol.rankEstimate = kept;
        sol.finalEnergy = nuclear + 0.5 * params.mu2 * (X - C).squaredNorm();

        // the energy stagnates long before the free entries settle, so the
        // stop rule tracks the iterate itself
        if (k > 0) {
            double change = (X - Xprev).norm() / std::max(X.norm(), 1e-300);
            if (change < params.eps) {
                sol.converged = true;
                Xprev = X;
                ++k;
                break;
            }
        }
        Xprev = X;
    }

    // final projection keeps sampled entries exact
    X = C;
    X.diagonal().setZero();
    for (const auto& e : D.entries()) {
        X(e.i, e.j) = e.sq;
        X(e.j, e.i) = e.sq;
    }
    X = 0.5 * (X + X.transpose()).eval();
    X = X.cwiseMax(0.0);

    sol.iterations = k;
    sol.D = X;
    return sol;
}

Eigen::MatrixXd mds_coordinates(const Eigen::MatrixXd& B, int p, double dimTol) {
    const int ell = static_cast<int>(B.rows());
    if (B.cols() != ell) throw invalid_input_error("Gram matrix must be square");
    const int want = p > 0 ? std::min(p, ell) : std::min(ell, 32);
    SymEigsResult eig = largest_symmetric_eigs(B, want);
    if (eig.values.size() == 0 || eig.values[0] <= 0.0)
        throw degenerate_input_error("Gram matrix has no positive eigenvalues");

    int cols;
    if (p > 0) {
        cols = std::min<int>(p, eig.values.size());
    } else {
        cols = count_rank(eig.values, dimTol);
        if (cols == 0)
            throw degenerate_input_error("all eigenvalues below dimension tolerance");
    }
    Eigen::MatrixXd X(ell, cols);
    for (int k = 0; k < cols; ++k) {
        double lam = std::max(eig.values[k], 0.0);
        X.col(k) = eig.vectors.col(k) * std::sqrt(lam);
    }
    return X;
}

std::string gram_solution_json(const GramSolution& gs) {
    std::ostringstream os;
    os << "{\"iterations\":" << gs.iterations
       << ",\"converged\":" << (gs.converged ? "true" : "false")
       << ",\"finalEnergy\":" << gs.finalEnergy
       << ",\"residualFeasibility\":" << gs.residualFeasibility
       << ",\"rowSumResidual\":" << gs.rowSumResidual
       << ",\"rankEstimate\":" << gs.rankEstimate
       << ",\"cgWarnings\":" << (gs.cgWarnings ? "true" : "false") << "}";
    return os.str();
}

} // namespace mfd
