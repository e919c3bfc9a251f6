// Partial eigensolvers: thick Lanczos for symmetric hard thresholding and a
// shift-invert Arnoldi for the discretized operator spectra. Both are plain
// full-reorthogonalization Krylov methods; subspaces grow until the wanted
// pairs converge, with dense decompositions as the safety net.
#include "mfd/eigs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

Eigen::VectorXd deterministic_start(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    double norm = v.norm();
    if (norm == 0.0) v.setConstant(1.0 / std::sqrt(double(n)));
    else v /= norm;
    return v;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int idx = 0;
    double best = 0.0;
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            idx = i;
        }
    if (v[idx] < 0.0) v = -v;
}

SymEigsResult dense_largest(const Eigen::MatrixXd& X, int m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
    if (es.info() != Eigen::Success)
        throw numerical_error("dense symmetric eigendecomposition failed");
    const int n = static_cast<int>(X.rows());
    const int keep = std::min(m, n);
    SymEigsResult out;
    out.values.resize(keep);
    out.vectors.resize(n, keep);
    for (int k = 0; k < keep; ++k) {
        out.values[k] = es.eigenvalues()[n - 1 - k];  // ascending -> descending
        out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    out.usedDenseFallback = true;
    return out;
}

} // namespace

SymEigsResult largest_symmetric_eigs(const Eigen::MatrixXd& X, int m,
                                     int denseThreshold, bool bestEffort) {
    const int n = static_cast<int>(X.rows());
    if (n != X.cols()) throw invalid_input_error("matrix must be square");
    if (m < 1) throw invalid_input_error("m must be positive");
    if (n <= denseThreshold || m >= n / 2) return dense_largest(X, m);

    const double scale = std::max(X.cwiseAbs().maxCoeff(), 1e-300);
    int dim = std::min(n, std::max(2 * m + 10, bestEffort ? 60 : 40));
    const int maxDim =
        bestEffort ? std::min(n, dim + dim / 2)
                   : std::min(n, std::max(4 * m + 40, 120));

    while (true) {
        Eigen::MatrixXd V(n, dim + 1);
        Eigen::VectorXd alpha(dim), beta(dim);
        V.col(0) = deterministic_start(n, 0x9E3779B97F4A7C15ull);
        int built = 0;
        for (int j = 0; j < dim; ++j) {
            Eigen::VectorXd w = X.selfadjointView<Eigen::Lower>() * V.col(j);
            alpha[j] = V.col(j).dot(w);
            w -= alpha[j] * V.col(j);
            if (j > 0) w -= beta[j - 1] * V.col(j - 1);
            // full reorthogonalization, twice
            for (int pass = 0; pass < 2; ++pass)
                w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            beta[j] = w.norm();
            built = j + 1;
            if (beta[j] <= 1e-14 * scale) break;  // invariant subspace
            V.col(j + 1) = w / beta[j];
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
        for (int j = 0; j < built; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < built) {
                T(j, j + 1) = beta[j];
                T(j + 1, j) = beta[j];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success) return dense_largest(X, m);

        const int keep = std::min(m, built);
        bool ok = built == n;
        if (!ok) {
            ok = true;
            double lastBeta = beta[built - 1];
            for (int k = 0; k < keep; ++k) {
                // only the pairs a PSD truncation keeps need to be resolved
                if (bestEffort && es.eigenvalues()[built - 1 - k] <= 1e-12 * scale)
                    continue;
                double resid =
                    std::abs(lastBeta * es.eigenvectors()(built - 1, built - 1 - k));
                if (resid > (bestEffort ? 1e-9 : 1e-10) * scale) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok || (bestEffort && dim >= maxDim)) {
            SymEigsResult out;
            out.values.resize(keep);
            out.vectors.resize(n, keep);
            for (int k = 0; k < keep; ++k) {
                out.values[k] = es.eigenvalues()[built - 1 - k];
                out.vectors.col(k) =
                    V.leftCols(built) * es.eigenvectors().col(built - 1 - k);
                out.vectors.col(k).normalize();
            }
            return out;
        }
        if (dim >= maxDim) return dense_largest(X, m);
        dim = std::min(maxDim, dim + dim / 2 + 10);
    }
}

namespace {

struct RitzCandidate {
    std::complex<double> lambda;  // original-problem eigenvalue
    double siResidual;            // shift-invert Ritz residual estimate
    int index;                    // column in the Schur-vector basis
};

ShiftInvertResult select_and_package(
    const std::vector<std::complex<double>>& lambdas,
    const Eigen::MatrixXcd& vectors, int k,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& applyA,
    int subspaceSize) {
    // Order by real part. Degenerate eigenvalues of a nonsymmetric
    // discretization split into conjugate pairs whose imaginary parts sit at
    // the discretization-error scale; such a pair contributes its real part
    // twice, through the real and imaginary components of its eigenvector.
    // Pairs with a large imaginary residue are the genuinely spurious ones
    // and get rejected.
    std::vector<int> order(lambdas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return lambdas[a].real() != lambdas[b].real()
                   ? lambdas[a].real() < lambdas[b].real()
                   : lambdas[a].imag() > lambdas[b].imag();
    });
    double scaleRef = 0.0;
    for (const auto& l : lambdas) scaleRef = std::max(scaleRef, std::abs(l.real()));
    const double imagFloor = 1e-9 * std::max(scaleRef, 1e-30);

    ShiftInvertResult out;
    std::vector<Eigen::VectorXd> keptVecs;
    std::vector<double> keptVals;
    for (int idx : order) {
        const auto& l = lambdas[idx];
        if (std::abs(l.imag()) > std::max(0.05 * std::abs(l.real()), imagFloor)) {
            out.rejected.push_back(l);
            continue;
        }
        // conjugate twin carries the imaginary component of the pair
        Eigen::VectorXd v = l.imag() >= 0.0 ? vectors.col(idx).real().eval()
                                            : vectors.col(idx).imag().eval();
        double norm = v.norm();
        if (norm <= 1e-14) {
            v = l.imag() >= 0.0 ? vectors.col(idx).imag().eval()
                                : vectors.col(idx).real().eval();
            norm = v.norm();
        }
        if (norm <= 1e-14) continue;
        v /= norm;
        keptVals.push_back(l.real());
        keptVecs.push_back(std::move(v));
        if (static_cast<int>(keptVals.size()) == k) break;
    }
    out.converged = static_cast<int>(keptVals.size()) == k;
    const int got = static_cast<int>(keptVals.size());
    out.values.resize(got);
    out.residuals.resize(got);
    const int n = got > 0 ? static_cast<int>(keptVecs[0].size()) : 0;
    out.vectors.resize(n, got);
    for (int i = 0; i < got; ++i) {
        out.values[i] = keptVals[i];
        fix_sign(keptVecs[i]);
        out.vectors.col(i) = keptVecs[i];
        out.residuals[i] = (applyA(keptVecs[i]) - keptVals[i] * keptVecs[i]).norm();
    }
    out.subspaceSize = subspaceSize;
    if (!out.rejected.empty())
        out.diagnostics = std::to_string(out.rejected.size()) +
                          " eigenvalue(s) rejected for complex residue";
    return out;
}

} // namespace

ShiftInvertResult smallest_real_eigs_shift_invert(
    const Eigen::SparseMatrix<double>& A, const ShiftInvertOptions& opts) {
    const int n = static_cast<int>(A.rows());
    if (n != A.cols()) throw invalid_input_error("matrix must be square");
    if (opts.k < 1 || opts.k >= n)
        throw invalid_input_error("need 1 <= k < n eigenpairs");

    Eigen::SparseMatrix<double> shifted = A;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= opts.sigma;
    shifted.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success)
        throw numerical_error("sparse LU factorization of shifted operator failed");

    auto applyOp = [&](const Eigen::VectorXd& x) { return lu.solve(x).eval(); };
    auto applyA = [&](const Eigen::VectorXd& x) { return (A * x).eval(); };

    const int maxDim =
        opts.maxSubspace > 0 ? std::min(opts.maxSubspace, n)
                             : std::min(n, 3 * opts.k + 150);
    int dim = std::min(maxDim, std::max(2 * opts.k + 20, 60));

    Eigen::MatrixXd V(n, maxDim + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(maxDim + 1, maxDim);
    V.col(0) = deterministic_start(n, opts.seed);
    int built = 0;
    std::string notes;

    while (true) {
        for (int j = built; j < dim; ++j) {
            Eigen::VectorXd w = applyOp(V.col(j));
            // modified Gram-Schmidt with one refinement pass
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    double h = V.col(i).dot(w);
                    w -= h * V.col(i);
                    if (pass == 0) H(i, j) = h;
                    else H(i, j) += h;
                }
            }
            double norm = w.norm();
            H(j + 1, j) = norm;
            if (norm <= 1e-12) {
                // invariant subspace found; restart direction
                Eigen::VectorXd r = deterministic_start(n, opts.seed + j + 1);
                r -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * r);
                double rn = r.norm();
                if (rn <= 1e-12) {
                    dim = j + 1;
                    break;
                }
                V.col(j + 1) = r / rn;
                H(j + 1, j) = 0.0;
                notes += "restarted at step " + std::to_string(j) + "; ";
            } else {
                V.col(j + 1) = w / norm;
            }
        }
        built = dim;

        Eigen::MatrixXd Hm = H.topLeftCorner(built, built);
        Eigen::EigenSolver<Eigen::MatrixXd> es(Hm);
        if (es.info() != Eigen::Success)
            throw numerical_error("Arnoldi Hessenberg eigendecomposition failed");

        // Ritz pairs of the inverted operator; want the largest magnitudes.
        std::vector<int> order(built);
        for (int i = 0; i < built; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
        });

        const double hext = H(built, built - 1);
        int wantScan = std::min(built, opts.k + opts.k / 2 + 10);
        int convergedReal = 0;
        std::vector<std::complex<double>> lambdas;
        Eigen::MatrixXcd vecs(n, wantScan);
        int kept = 0;
        bool allConverged = true;
        for (int t = 0; t < wantScan; ++t) {
            int idx = order[t];
            std::complex<double> theta = es.eigenvalues()[idx];
            double resid = std::abs(hext * es.eigenvectors()(built - 1, idx));
            if (std::abs(theta) <= 1e-300) continue;
            if (resid > opts.tol * std::abs(theta)) {
                allConverged = false;
                continue;
            }
            std::complex<double> lambda = opts.sigma + 1.0 / theta;
            lambdas.push_back(lambda);
            vecs.col(kept) = V.leftCols(built) * es.eigenvectors().col(idx);
            ++kept;
            if (std::abs(lambda.imag()) <= 0.05 * std::abs(lambda.real()) ||
                std::abs(lambda.imag()) <= 1e-12)
                ++convergedReal;
        }

        if ((convergedReal >= opts.k && kept >= opts.k) || built >= maxDim) {
            auto out = select_and_package(
                lambdas, vecs.leftCols(kept), opts.k, applyA, built);
            out.diagnostics = notes + out.diagnostics;
            if (!out.converged && built >= maxDim) {
                out.diagnostics += "; subspace limit " + std::to_string(maxDim) +
                                   " reached with " +
                                   std::to_string(out.values.size()) +
                                   " accepted pairs";
            }
            (void)allConverged;
            return out;
        }
        dim = std::min(maxDim, dim + std::max(20, dim / 2));
    }
}

ShiftInvertResult smallest_real_eigs_dense(const Eigen::MatrixXd& A, int k) {
    const int n = static_cast<int>(A.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success)
        throw numerical_error("dense nonsymmetric eigendecomposition failed");
    std::vector<std::complex<double>> lambdas(n);
    for (int i = 0; i < n; ++i) lambdas[i] = es.eigenvalues()[i];
    auto applyA = [&](const Eigen::VectorXd& x) { return (A * x).eval(); };
    auto out = select_and_package(lambdas, es.eigenvectors(), k, applyA, n);
    out.diagnostics = "dense fallback; " + out.diagnostics;
    return out;
}

} // namespace mfd
