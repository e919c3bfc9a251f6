// Global coordinates from per-patch local coordinates by alignment in the
// spectral domain: minimize  1/2 sum_j || Q_j - Phi_j alpha R_j - 1 b_j ||_F^2
// over spectral coefficients alpha, per-patch orthogonal R_j and shifts b_j.
// R_j steps stay on the orthogonal group via the Cayley transform of the
// skew part of the gradient; a backtracking line search keeps the energy
// non-increasing.
#include "mfd/patch_stitching.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Dense>

#include "mfd/errors.hpp"

namespace mfd {

ProcrustesResult procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw invalid_input_error("point sets must have matching shapes");
    const int m = static_cast<int>(A.rows());
    const int d = static_cast<int>(A.cols());
    if (m < d) throw invalid_input_error("need at least d points for alignment");

    Eigen::RowVectorXd ca = A.colwise().mean();
    Eigen::RowVectorXd cb = B.colwise().mean();
    Eigen::MatrixXd Ac = A.rowwise() - ca;
    Eigen::MatrixXd Bc = B.rowwise() - cb;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ac.transpose() * Bc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult out;
    out.R = svd.matrixU() * svd.matrixV().transpose();
    out.b = cb - ca * out.R;
    out.rmsd = std::sqrt((Ac * out.R - Bc).squaredNorm() / m);
    return out;
}

namespace {

Eigen::MatrixXd patch_rows(const Eigen::MatrixXd& Phi, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<int>(idx.size()), Phi.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(r) = Phi.row(idx[r]);
    return out;
}

std::vector<int> shared_positions(const std::vector<int>& a,
                                  const std::vector<int>& b,
                                  std::vector<int>& posA, std::vector<int>& posB) {
    posA.clear();
    posB.clear();
    std::vector<std::pair<int, int>> sa, sb;
    for (std::size_t k = 0; k < a.size(); ++k) sa.emplace_back(a[k], k);
    for (std::size_t k = 0; k < b.size(); ++k) sb.emplace_back(b[k], k);
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<int> shared;
    std::size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
        if (sa[i].first == sb[j].first) {
            shared.push_back(sa[i].first);
            posA.push_back(sa[i].second);
            posB.push_back(sb[j].second);
            ++i;
            ++j;
        } else if (sa[i].first < sb[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    return shared;
}

} // namespace

StitchState bfs_initialize(const PatchSet& patches, int overlapMin) {
    const int L = patches.patchCount();
    const int d = patches.d;
    if (overlapMin <= 0) overlapMin = d + 1;

    StitchState st;
    st.alpha = Eigen::MatrixXd::Zero(patches.Phi.cols(), d);
    st.R.assign(L, Eigen::MatrixXd::Identity(d, d));
    st.b.assign(L, Eigen::RowVectorXd::Zero(d));

    // patch graph on sufficient overlap
    std::vector<std::vector<int>> adj(L);
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            std::vector<int> pa, pb;
            auto shared = shared_positions(patches.omega[i], patches.omega[j], pa, pb);
            if (static_cast<int>(shared.size()) >= overlapMin) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }

    std::vector<char> visited(L, 0);
    std::queue<int> queue;
    if (L > 0) {
        queue.push(0);
        visited[0] = 1;
    }
    while (!queue.empty()) {
        int i = queue.front();
        queue.pop();
        for (int j : adj[i]) {
            if (visited[j]) continue;
            visited[j] = 1;
            std::vector<int> pa, pb;
            shared_positions(patches.omega[i], patches.omega[j], pa, pb);
            Eigen::MatrixXd Qi(static_cast<int>(pa.size()), d);
            Eigen::MatrixXd Qj(static_cast<int>(pb.size()), d);
            for (std::size_t k = 0; k < pa.size(); ++k) {
                Qi.row(k) = patches.Q[i].row(pa[k]);
                Qj.row(k) = patches.Q[j].row(pb[k]);
            }
            // model convention: Q_j ~ Phi_j alpha R_j, so the pairwise
            // transform M with Q_i M ~ Q_j composes as R_j = R_i M
            st.R[j] = st.R[i] * procrustes(Qi, Qj).R;
            queue.push(j);
        }
        // isolated components restart from identity
        if (queue.empty())
            for (int j = 0; j < L; ++j)
                if (!visited[j]) {
                    visited[j] = 1;
                    queue.push(j);
                    break;
                }
    }
    st.energy = stitch_energy(patches, st);
    return st;
}

double stitch_energy(const PatchSet& patches, const StitchState& state) {
    double e = 0.0;
    for (int j = 0; j < patches.patchCount(); ++j) {
        Eigen::MatrixXd PhiJ = patch_rows(patches.Phi, patches.omega[j]);
        Eigen::MatrixXd resid = patches.Q[j] - PhiJ * state.alpha * state.R[j];
        resid.rowwise() -= state.b[j];
        e += 0.5 * resid.squaredNorm();
    }
    return e;
}

StitchState stitch(const PatchSet& patches, StitchState st,
                   const StitchParams& params) {
    const int L = patches.patchCount();
    const int d = patches.d;
    const int N = static_cast<int>(patches.Phi.cols());

    std::vector<Eigen::MatrixXd> PhiJ(L);
    Eigen::MatrixXd gramSum = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < L; ++j) {
        PhiJ[j] = patch_rows(patches.Phi, patches.omega[j]);
        gramSum.noalias() += PhiJ[j].transpose() * PhiJ[j];
    }
    Eigen::LDLT<Eigen::MatrixXd> gramSolver(gramSum);
    if (gramSolver.info() != Eigen::Success ||
        gramSolver.rcond() < 1e-14) {
        st.alphaRegularized = true;
        gramSum.diagonal().array() += 1e-10 * gramSum.trace();
        gramSolver.compute(gramSum);
        if (gramSolver.info() != Eigen::Success)
            throw numerical_error("spectral normal matrix is singular");
    }

    auto residual = [&](int j) {
        Eigen::MatrixXd r = patches.Q[j] - PhiJ[j] * st.alpha * st.R[j];
        r.rowwise() -= st.b[j];
        return r;
    };
    auto patchEnergy = [&](int j, const Eigen::MatrixXd& R) {
        Eigen::MatrixXd r = patches.Q[j] - PhiJ[j] * st.alpha * R;
        r.rowwise() -= st.b[j];
        return 0.5 * r.squaredNorm();
    };

    double ePrev = st.energy > 0.0 ? st.energy : stitch_energy(patches, st);
    st.energyHistory.push_back(ePrev);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

    int k = 0;
    for (; k < params.maxIter; ++k) {
        // alpha step: exact minimizer given (R, b)
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, d);
        for (int j = 0; j < L; ++j)
            rhs.noalias() += PhiJ[j].transpose() * residual(j) * st.R[j].transpose();
        st.alpha += gramSolver.solve(rhs);

        // R step: Cayley update of the skew gradient part, per patch
        for (int j = 0; j < L; ++j) {
            Eigen::MatrixXd G =
                -st.alpha.transpose() * (PhiJ[j].transpose() * residual(j));
            Eigen::MatrixXd S = G * st.R[j].transpose() - st.R[j] * G.transpose();
            double s2 = 0.5 * S.squaredNorm();
            if (s2 <= 1e-300) continue;
            double e0 = patchEnergy(j, st.R[j]);
            double delta = params.delta0;
            bool accepted = false;
            while (delta >= params.deltaMin) {
                Eigen::MatrixXd num = I - 0.5 * delta * S;
                Eigen::MatrixXd den = I + 0.5 * delta * S;
                Eigen::MatrixXd Rtrial = den.partialPivLu().solve(num * st.R[j]);
                if (patchEnergy(j, Rtrial) <= e0 - params.armijo * delta * s2) {
                    st.R[j] = Rtrial;
                    accepted = true;
                    break;
                }
                delta *= 0.5;
            }
            if (!accepted) ++st.lineSearchFailures;
        }

        // b step: exact minimizer given (alpha, R)
        for (int j = 0; j < L; ++j) {
            const double nj = static_cast<double>(patches.omega[j].size());
            st.b[j] += residual(j).colwise().sum() / nj;
        }

        double e = stitch_energy(patches, st);
        st.energyHistory.push_back(e);
        double denom = std::max(std::abs(e), 1e-300);
        if (std::abs(e - ePrev) / denom < params.eps) {
            st.converged = true;
            st.energy = e;
            ++k;
            break;
        }
        ePrev = e;
        st.energy = e;
    }
    st.iteration = k;
    return st;
}

Eigen::MatrixXd assemble_global(const PatchSet& patches, const StitchState& state) {
    // At the optimum Q_j = Phi_j alpha R_j + 1 b_j, so the patch contribution
    // to the global coordinates is (Q_j - 1 b_j) R_j^T.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(patches.n, patches.d);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(patches.n);
    for (int j = 0; j < patches.patchCount(); ++j) {
        Eigen::MatrixXd mapped = patches.Q[j];
        mapped.rowwise() -= state.b[j];
        mapped = mapped * state.R[j].transpose();
        for (std::size_t r = 0; r < patches.omega[j].size(); ++r) {
            P.row(patches.omega[j][r]) += mapped.row(static_cast<int>(r));
            count[patches.omega[j][r]] += 1.0;
        }
    }
    for (int i = 0; i < patches.n; ++i)
        if (count[i] > 0.0) P.row(i) /= count[i];
    return P;
}

} // namespace mfd
