#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "mfd/errors.hpp"
#include "mfd/patch_stitching.hpp"

using namespace mfd;

namespace {

Eigen::MatrixXd random_gaussian(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    return M;
}

Eigen::MatrixXd rotation2d(double angle) {
    Eigen::MatrixXd R(2, 2);
    R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return R;
}

// orthonormal basis functions on a disc-like sample: low-order polynomials,
// orthonormalized, serve as a stand-in spectral basis
Eigen::MatrixXd poly_basis(const Eigen::MatrixXd& pts, int N) {
    const int n = static_cast<int>(pts.rows());
    Eigen::MatrixXd raw(n, N);
    int col = 0;
    for (int deg = 0; col < N && deg <= 4; ++deg)
        for (int dx = 0; dx <= deg && col < N; ++dx) {
            int dy = deg - dx;
            for (int i = 0; i < n; ++i)
                raw(i, col) = std::pow(pts(i, 0), dx) * std::pow(pts(i, 1), dy);
            ++col;
        }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, N);
    return Q;
}

double numeric_gradient_alpha(const PatchSet& patches, StitchState state,
                              int r, int c, double eps) {
    auto perturbed = [&](double delta) {
        StitchState s = state;
        s.alpha(r, c) += delta;
        return stitch_energy(patches, s);
    };
    return (perturbed(eps) - perturbed(-eps)) / (2.0 * eps);
}

} // namespace

TEST_SUITE("patch-stitching") {

TEST_CASE("procrustes identity and exact rotations") {
    Eigen::MatrixXd A = random_gaussian(12, 3, 3);
    auto same = procrustes(A, A);
    CHECK((same.R - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK(same.b.norm() < 1e-12);
    CHECK(same.rmsd < 1e-12);

    Eigen::MatrixXd A2 = random_gaussian(10, 2, 5);
    Eigen::MatrixXd R = rotation2d(M_PI / 2.0);
    Eigen::MatrixXd B = A2 * R;
    B.rowwise() += Eigen::RowVector2d(3.0, -1.0);
    auto fit = procrustes(A2, B);
    CHECK((fit.R - R).norm() < 1e-10);
    CHECK(fit.rmsd < 1e-10);
}

TEST_CASE("procrustes rmsd scales with the noise level") {
    const double sigma = 0.01;
    Eigen::MatrixXd A = random_gaussian(60, 3, 7);
    Eigen::MatrixXd R = Eigen::Quaterniond(1.0, 0.3, -0.2, 0.5)
                            .normalized()
                            .toRotationMatrix();
    Eigen::MatrixXd B = A * R + sigma * random_gaussian(60, 3, 8);
    auto fit = procrustes(A, B);
    CHECK(fit.rmsd > 0.3 * sigma);
    CHECK(fit.rmsd < 3.0 * sigma);
}

TEST_CASE("procrustes rejects underdetermined input") {
    CHECK_THROWS_AS(procrustes(random_gaussian(2, 3, 9), random_gaussian(2, 3, 10)),
                    invalid_input_error);
}

TEST_CASE("bfs initialization recovers pairwise rotations") {
    // two patches sharing points under a known rotation
    Eigen::MatrixXd common = random_gaussian(8, 2, 11);
    Eigen::MatrixXd onlyA = random_gaussian(4, 2, 12);
    Eigen::MatrixXd onlyB = random_gaussian(4, 2, 13);
    Eigen::MatrixXd R = rotation2d(0.8);

    PatchSet patches;
    patches.n = 16;
    patches.d = 2;
    patches.Phi = poly_basis(random_gaussian(16, 2, 14), 6);
    // patch 0: identity orientation on indices 0..11
    patches.omega.push_back({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    Eigen::MatrixXd Q0(12, 2);
    Q0 << common, onlyA;
    patches.Q.push_back(Q0);
    // patch 1: shares 0..7; in the model convention Q_1 = global * R^T
    // corresponds to R_1 = R^T
    patches.omega.push_back({0, 1, 2, 3, 4, 5, 6, 7, 12, 13, 14, 15});
    Eigen::MatrixXd Q1(12, 2);
    Q1 << common, onlyB;
    Q1 *= R.transpose();
    patches.Q.push_back(Q1);

    auto st = bfs_initialize(patches);
    CHECK((st.R[0] - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK((st.R[1] - R.transpose()).norm() < 1e-6);

    // chain of three composes the pairwise transforms
    PatchSet chain;
    chain.n = 24;
    chain.d = 2;
    chain.Phi = poly_basis(random_gaussian(24, 2, 15), 6);
    Eigen::MatrixXd base = random_gaussian(24, 2, 16);
    Eigen::MatrixXd R1 = rotation2d(0.5), R2 = rotation2d(-1.1);
    std::vector<std::vector<int>> omegas = {
        {0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
        {6, 7, 8, 9, 10, 11, 12, 13, 14, 15},
        {12, 13, 14, 15, 16, 17, 18, 19, 20, 21}};
    std::vector<Eigen::MatrixXd> rots = {Eigen::MatrixXd::Identity(2, 2), R1, R2};
    for (int p = 0; p < 3; ++p) {
        Eigen::MatrixXd Q(10, 2);
        for (int r = 0; r < 10; ++r) Q.row(r) = base.row(omegas[p][r]);
        chain.omega.push_back(omegas[p]);
        chain.Q.push_back(Q * rots[p].transpose());
    }
    auto cst = bfs_initialize(chain);
    CHECK((cst.R[1] - R1.transpose()).norm() < 1e-6);
    CHECK((cst.R[2] - R2.transpose()).norm() < 1e-6);

    // single patch stays at the identity
    PatchSet single;
    single.n = 8;
    single.d = 2;
    single.Phi = poly_basis(random_gaussian(8, 2, 17), 4);
    single.omega.push_back({0, 1, 2, 3, 4, 5, 6, 7});
    single.Q.push_back(random_gaussian(8, 2, 18));
    auto sst = bfs_initialize(single);
    CHECK((sst.R[0] - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(sst.b[0].norm() < 1e-12);
}

TEST_CASE("algorithm gradients match finite differences") {
    // validates the sign convention: the update adds the residual form
    PatchSet patches;
    patches.n = 20;
    patches.d = 2;
    Eigen::MatrixXd pts = random_gaussian(20, 2, 21);
    patches.Phi = poly_basis(pts, 5);
    patches.omega.push_back({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    patches.omega.push_back({8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
    patches.Q.push_back(random_gaussian(12, 2, 22));
    patches.Q.push_back(random_gaussian(12, 2, 23));

    StitchState st;
    st.alpha = random_gaussian(5, 2, 24) * 0.3;
    st.R = {rotation2d(0.4), rotation2d(-0.9)};
    st.b = {Eigen::RowVector2d(0.1, -0.2), Eigen::RowVector2d(0.0, 0.3)};

    // analytic alpha gradient: -sum Phi_j^T (residual) R_j^T
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(5, 2);
    for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd PhiJ(12, 5);
        for (int r = 0; r < 12; ++r)
            PhiJ.row(r) = patches.Phi.row(patches.omega[j][r]);
        Eigen::MatrixXd resid = patches.Q[j] - PhiJ * st.alpha * st.R[j];
        resid.rowwise() -= st.b[j];
        grad -= PhiJ.transpose() * resid * st.R[j].transpose();
    }
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 2; ++c) {
            double fd = numeric_gradient_alpha(patches, st, r, c, 1e-6);
            CHECK(grad(r, c) == doctest::Approx(fd).epsilon(1e-5));
        }

    // analytic R gradient: -alpha^T Phi_j^T (residual)
    const int j = 0;
    Eigen::MatrixXd PhiJ(12, 5);
    for (int r = 0; r < 12; ++r) PhiJ.row(r) = patches.Phi.row(patches.omega[j][r]);
    Eigen::MatrixXd resid = patches.Q[j] - PhiJ * st.alpha * st.R[j];
    resid.rowwise() -= st.b[j];
    Eigen::MatrixXd gradR = -st.alpha.transpose() * PhiJ.transpose() * resid;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            auto perturbed = [&](double delta) {
                StitchState s = st;
                s.R[j](r, c) += delta;
                return stitch_energy(patches, s);
            };
            double fd = (perturbed(1e-6) - perturbed(-1e-6)) / 2e-6;
            CHECK(gradR(r, c) == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("stitch solves an exactly representable single patch") {
    PatchSet patches;
    patches.n = 30;
    patches.d = 2;
    Eigen::MatrixXd pts = random_gaussian(30, 2, 31);
    patches.Phi = poly_basis(pts, 8);
    Eigen::MatrixXd alphaStar = random_gaussian(8, 2, 32);
    std::vector<int> omega(30);
    for (int i = 0; i < 30; ++i) omega[i] = i;
    patches.omega.push_back(omega);
    patches.Q.push_back(patches.Phi * alphaStar);

    StitchState init;
    init.alpha = Eigen::MatrixXd::Zero(8, 2);
    init.R = {Eigen::MatrixXd::Identity(2, 2)};
    init.b = {Eigen::RowVector2d::Zero()};
    StitchParams params;
    params.eps = 1e-14;
    auto st = stitch(patches, init, params);
    CHECK(st.energy < 1e-10);
    CHECK((st.alpha - alphaStar).norm() < 1e-5);
}

TEST_CASE("stitch recovers the relative rotation of two disc patches") {
    // disc sample, exact basis, second patch pre-rotated by a known R*
    const int n = 60;
    Eigen::MatrixXd pts = random_gaussian(n, 2, 41);
    Eigen::MatrixXd Phi = poly_basis(pts, 10);
    Eigen::MatrixXd Rstar = rotation2d(0.7);

    PatchSet patches;
    patches.n = n;
    patches.d = 2;
    patches.Phi = Phi;
    std::vector<int> omega0, omega1;
    for (int i = 0; i < 40; ++i) omega0.push_back(i);
    for (int i = 20; i < 60; ++i) omega1.push_back(i);
    patches.omega = {omega0, omega1};
    Eigen::MatrixXd Q0(40, 2), Q1(40, 2);
    for (int r = 0; r < 40; ++r) Q0.row(r) = pts.row(omega0[r]);
    for (int r = 0; r < 40; ++r) Q1.row(r) = pts.row(omega1[r]);
    patches.Q = {Q0, Q1 * Rstar.transpose()};

    auto st = stitch(patches, bfs_initialize(patches), {});
    // model convention: patch 1 carries R_1 = Rstar^T relative to patch 0
    Eigen::MatrixXd rel = st.R[0].transpose() * st.R[1];
    CHECK((rel - Rstar.transpose()).norm() < 1e-3);

    // energies never increase along the iteration
    for (std::size_t i = 1; i < st.energyHistory.size(); ++i)
        CHECK(st.energyHistory[i] <=
              st.energyHistory[i - 1] * (1.0 + 1e-9) + 1e-12);

    // Cayley updates preserve orthogonality
    for (const auto& R : st.R)
        CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("stitch energy is gauge invariant") {
    const int n = 50;
    Eigen::MatrixXd pts = random_gaussian(n, 2, 51);
    PatchSet patches;
    patches.n = n;
    patches.d = 2;
    patches.Phi = poly_basis(pts, 6);
    std::vector<int> omega0, omega1;
    for (int i = 0; i < 32; ++i) omega0.push_back(i);
    for (int i = 18; i < 50; ++i) omega1.push_back(i);
    patches.omega = {omega0, omega1};
    Eigen::MatrixXd Q0(32, 2), Q1(32, 2);
    for (int r = 0; r < 32; ++r) Q0.row(r) = pts.row(omega0[r]);
    for (int r = 0; r < 32; ++r) Q1.row(r) = pts.row(omega1[r]);
    patches.Q = {Q0, Q1};

    StitchParams params;
    params.maxIter = 400;
    auto st = stitch(patches, bfs_initialize(patches), params);

    PatchSet rotated = patches;
    Eigen::MatrixXd G = rotation2d(1.3);
    for (auto& Q : rotated.Q) Q = Q * G;
    auto st2 = stitch(rotated, bfs_initialize(rotated), params);
    CHECK(st.energy ==
          doctest::Approx(st2.energy).epsilon(1e-6).scale(1.0 + st.energy));
}

TEST_CASE("assemble_global averages overlapping patches") {
    PatchSet patches;
    patches.n = 6;
    patches.d = 2;
    patches.Phi = Eigen::MatrixXd::Identity(6, 3);
    patches.omega = {{0, 1, 2, 3}, {2, 3, 4, 5}};
    Eigen::MatrixXd base = random_gaussian(6, 2, 61);
    Eigen::MatrixXd Q0(4, 2), Q1(4, 2);
    for (int r = 0; r < 4; ++r) Q0.row(r) = base.row(patches.omega[0][r]);
    for (int r = 0; r < 4; ++r) Q1.row(r) = base.row(patches.omega[1][r]);
    patches.Q = {Q0, Q1};

    StitchState st;
    st.alpha = Eigen::MatrixXd::Zero(3, 2);
    st.R = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    st.b = {Eigen::RowVector2d::Zero(), Eigen::RowVector2d::Zero()};

    auto P = assemble_global(patches, st);
    CHECK((P - base).norm() < 1e-12);  // consistent overlaps average to themselves

    // a rotated patch contributes through R^T: reconstructs the same globals
    PatchSet rot = patches;
    Eigen::MatrixXd G = rotation2d(0.9);
    rot.Q[1] = patches.Q[1] * G.transpose();
    StitchState strot = st;
    strot.R[1] = G.transpose();
    CHECK((assemble_global(rot, strot) - base).norm() < 1e-10);

    // single-patch identity
    PatchSet single;
    single.n = 4;
    single.d = 2;
    single.Phi = Eigen::MatrixXd::Identity(4, 2);
    single.omega = {{0, 1, 2, 3}};
    single.Q = {random_gaussian(4, 2, 62)};
    StitchState sid;
    sid.alpha = Eigen::MatrixXd::Zero(2, 2);
    sid.R = {Eigen::MatrixXd::Identity(2, 2)};
    sid.b = {Eigen::RowVector2d::Zero()};
    CHECK((assemble_global(single, sid) - single.Q[0]).norm() < 1e-12);
}

} // TEST_SUITE
