#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mfd/distance_data.hpp"
#include "mfd/errors.hpp"
#include "mfd/experiments.hpp"
#include "mfd/gram_completion.hpp"
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

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
    Eigen::MatrixXd M = random_gaussian(n, n, seed);
    return 0.5 * (M + M.transpose());
}

Eigen::MatrixXd pairwise_squared(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) D(i, j) = (X.row(i) - X.row(j)).squaredNorm();
    return D;
}

Eigen::MatrixXd line_points_gram() {
    Eigen::MatrixXd D(3, 3);
    D << 0, 1, 4, 1, 0, 1, 4, 1, 0;
    return gram_from_distance(D);
}

// Dense matrix of the merged operator, columns = images of basis vectors.
Eigen::MatrixXd assemble_operator_matrix(const MergedOperator& A) {
    const int dim = half_vec_size(A.ell());
    const int out = A.omegaSize() + A.ell();
    Eigen::MatrixXd M(out, dim);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim), u, q;
    for (int c = 0; c < dim; ++c) {
        e[c] = 1.0;
        A.apply(e, u, q);
        M.col(c).head(A.omegaSize()) = u;
        M.col(c).tail(A.ell()) = q;
        e[c] = 0.0;
    }
    return M;
}

} // namespace

TEST_SUITE("gram-completion") {

TEST_CASE("half vectorization round trips") {
    auto B = random_symmetric(7, 3);
    CHECK((half_unvectorize(half_vectorize(B)) - B).norm() ==
          doctest::Approx(0.0));
    Eigen::VectorXd hv = random_gaussian(half_vec_size(5), 1, 4);
    CHECK((half_vectorize(half_unvectorize(hv)) - hv).norm() ==
          doctest::Approx(0.0));
}

TEST_CASE("gram_from_distance on collinear points") {
    Eigen::MatrixXd expected(3, 3);
    expected << 1, 0, -1, 0, 0, 0, -1, 0, 1;
    CHECK((line_points_gram() - expected).norm() < 1e-12);
}

TEST_CASE("gram_from_distance inverts the pairwise map for centered points") {
    Eigen::MatrixXd X = random_gaussian(8, 3, 7);
    X.rowwise() -= X.colwise().mean().eval();
    auto B = gram_from_distance(pairwise_squared(X));
    CHECK((B - X * X.transpose()).norm() < 1e-10);
}

TEST_CASE("gram_from_distance of a single point") {
    Eigen::MatrixXd D(1, 1);
    D << 0.0;
    auto B = gram_from_distance(D);
    CHECK(B(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("restriction operator") {
    auto B = line_points_gram();
    auto r = restrict_to_pairs(B, {{2, 0}});
    CHECK(r[0] == doctest::Approx(4.0));
    auto id = restrict_to_pairs(Eigen::MatrixXd::Identity(3, 3), {{1, 0}});
    CHECK(id[0] == doctest::Approx(2.0));
    auto R = random_symmetric(9, 13);
    std::vector<std::pair<int, int>> omega = {{3, 1}, {8, 0}, {5, 4}};
    auto vals = restrict_to_pairs(R, omega);
    for (std::size_t k = 0; k < omega.size(); ++k) {
        auto [i, j] = omega[k];
        CHECK(vals[k] ==
              doctest::Approx(R(i, i) + R(j, j) - R(i, j) - R(j, i)));
    }
}

TEST_CASE("merged operator is linear and matches the dense assembly") {
    MergedOperator A(6, {{3, 0}, {5, 2}, {4, 1}, {1, 0}});
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(half_vec_size(6)), u, q;
    A.apply(zero, u, q);
    CHECK(u.norm() == doctest::Approx(0.0));
    CHECK(q.norm() == doctest::Approx(0.0));

    auto M = assemble_operator_matrix(A);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd hv = random_gaussian(half_vec_size(6), 1, 100 + trial);
        A.apply(hv, u, q);
        Eigen::VectorXd stacked(u.size() + q.size());
        stacked << u, q;
        CHECK((stacked - M * hv).norm() < 1e-12);
    }
}

TEST_CASE("merged operator on a zero-row-sum Gram matrix") {
    auto B = line_points_gram();
    MergedOperator A(3, {{2, 0}});
    Eigen::VectorXd u, q;
    A.apply(half_vectorize(B), u, q);
    CHECK(u[0] == doctest::Approx(4.0));
    CHECK(q.norm() < 1e-12);
}

TEST_CASE("adjoint entries follow the closed form") {
    MergedOperator A(2, {{1, 0}});
    Eigen::VectorXd u(1), q = Eigen::VectorXd::Zero(2), hv;
    u << 1.0;
    A.applyAdjoint(u, q, hv);
    Eigen::MatrixXd U = half_unvectorize(hv);
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -2, -2, 1;
    CHECK((U - expected).norm() < 1e-14);

    // zero input -> zero output
    A.applyAdjoint(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2), hv);
    CHECK(hv.norm() == doctest::Approx(0.0));
}

TEST_CASE("adjoint identity <A b, u> == <b, A* u>") {
    MergedOperator A(6, {{2, 0}, {5, 1}, {3, 2}, {4, 0}, {5, 4}});
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd hv = random_gaussian(half_vec_size(6), 1, 1000 + trial);
        Eigen::VectorXd uIn = random_gaussian(A.omegaSize(), 1, 2000 + trial);
        Eigen::VectorXd qIn = random_gaussian(6, 1, 3000 + trial);
        Eigen::VectorXd u, q, adj;
        A.apply(hv, u, q);
        A.applyAdjoint(uIn, qIn, adj);
        double lhs = u.dot(uIn) + q.dot(qIn);
        double rhs = hv.dot(adj);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
    // transpose of the dense assembly is the adjoint
    auto M = assemble_operator_matrix(A);
    Eigen::VectorXd uIn = random_gaussian(A.omegaSize(), 1, 71);
    Eigen::VectorXd qIn = random_gaussian(6, 1, 72);
    Eigen::VectorXd stacked(uIn.size() + qIn.size()), adj;
    stacked << uIn, qIn;
    A.applyAdjoint(uIn, qIn, adj);
    CHECK((adj - M.transpose() * stacked).norm() < 1e-12);
}

TEST_CASE("evht projects onto the PSD cone") {
    // diagonal case
    Eigen::MatrixXd X = Eigen::Vector2d(2.0, -3.0).asDiagonal();
    Eigen::MatrixXd T = evht(X, 2);
    CHECK(T(0, 0) == doctest::Approx(2.0));
    CHECK(T(1, 1) == doctest::Approx(0.0));

    // PSD with rank <= m is a fixed point
    Eigen::MatrixXd L = random_gaussian(12, 3, 91);
    Eigen::MatrixXd psd = L * L.transpose();
    CHECK((evht(psd, 5) - psd).norm() / psd.norm() < 1e-10);

    // full-cap threshold equals dense truncation
    Eigen::MatrixXd S = random_symmetric(20, 93);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(20, 20);
    for (int k = 0; k < 20; ++k) {
        double lam = es.eigenvalues()[k];
        if (lam > 0.0)
            expected += lam * es.eigenvectors().col(k) *
                        es.eigenvectors().col(k).transpose();
    }
    CHECK((evht(S, 20) - expected).norm() < 1e-9);

    // idempotence and PSD-ness of the output
    Eigen::MatrixXd once = evht(S, 8);
    CHECK((evht(once, 8) - once).norm() / std::max(once.norm(), 1e-12) < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(once);
    CHECK(check.eigenvalues().minCoeff() > -1e-10 * check.eigenvalues().maxCoeff());
}

TEST_CASE("complete_gram recovers a full small configuration") {
    Eigen::MatrixXd X = random_gaussian(10, 3, 101);
    X.rowwise() -= X.colwise().mean().eval();
    Eigen::MatrixXd truth = X * X.transpose();
    auto mask = sample_mask(pairwise_squared(X), 1.0, 0);
    auto sol = complete_gram(mask);
    CHECK(sol.converged);
    CHECK(relative_frobenius_error(sol.B, truth) < 1e-3);
    CHECK(sol.rankEstimate == 3);
    // solution invariants
    CHECK((sol.B - sol.B.transpose()).norm() <= 1e-12 * sol.B.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.B);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * es.eigenvalues().maxCoeff());
    CHECK(sol.feasibilityMonotoneTail);
}

TEST_CASE("complete_gram recovers from a partial mask") {
    Eigen::MatrixXd X = random_gaussian(20, 3, 103);
    X.rowwise() -= X.colwise().mean().eval();
    Eigen::MatrixXd truth = X * X.transpose();
    auto mask = sample_mask(pairwise_squared(X), 0.7, 1);
    auto sol = complete_gram(mask);
    CHECK(relative_frobenius_error(sol.B, truth) < 1e-3);
}

TEST_CASE("complete_gram requires data") {
    CHECK_THROWS_AS(complete_gram(IncompleteDistance(5, {})),
                    insufficient_data_error);
}

TEST_CASE("complete_distance keeps sampled entries and low rank") {
    Eigen::MatrixXd X = random_gaussian(12, 3, 107);
    Eigen::MatrixXd D = pairwise_squared(X);
    auto full = sample_mask(D, 1.0, 0);
    auto sol = complete_distance(full);
    for (const auto& e : full.entries())
        CHECK(sol.D(e.i, e.j) == doctest::Approx(e.sq));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.D);
    int rank = 0;
    for (int i = 0; i < 12; ++i)
        if (std::abs(es.eigenvalues()[i]) > 1e-6 * es.eigenvalues().cwiseAbs().maxCoeff())
            ++rank;
    CHECK(rank <= 3 + 2);  // rank(D) <= rank(B) + 2
}

TEST_CASE("complete_distance fills a partial mask") {
    Eigen::MatrixXd X = random_gaussian(20, 3, 109);
    Eigen::MatrixXd D = pairwise_squared(X);
    auto mask = sample_mask(D, 0.9, 2);
    auto sol = complete_distance(mask);
    CHECK(relative_frobenius_error(sol.D, D) < 1e-3);
}

TEST_CASE("distance model needs more samples than the Gram model") {
    // at small n the PSD + centering constraints make the difference
    Eigen::MatrixXd X = random_gaussian(14, 3, 113);
    X.rowwise() -= X.colwise().mean().eval();
    Eigen::MatrixXd D = pairwise_squared(X);
    auto mask = sample_mask(D, 0.7, 6);
    double gramErr =
        relative_frobenius_error(complete_gram(mask).B, X * X.transpose());
    double distErr = relative_frobenius_error(complete_distance(mask).D, D);
    CHECK(gramErr < 1e-3);
    CHECK(distErr > gramErr);
}

TEST_CASE("mds recovers collinear points up to sign") {
    auto X = mds_coordinates(line_points_gram());
    REQUIRE(X.cols() == 1);
    Eigen::Vector3d expected(-1.0, 0.0, 1.0);
    double err = std::min((X.col(0) - expected).norm(),
                          (X.col(0) + expected).norm());
    CHECK(err < 1e-10);
}

TEST_CASE("mds reproduces the unit square up to rigid motion") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 1, 0, 1, 1, 0, 1;
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean().eval();
    auto coords = mds_coordinates(Xc * Xc.transpose());
    REQUIRE(coords.cols() == 2);
    CHECK(procrustes(coords, X).rmsd < 1e-8);
}

TEST_CASE("mds round trip is a rigid motion") {
    for (int trial = 0; trial < 4; ++trial) {
        int n = 10 + 10 * trial;
        Eigen::MatrixXd X = random_gaussian(n, 3, 900 + trial);
        auto coords = mds_coordinates(gram_from_distance(pairwise_squared(X)));
        REQUIRE(coords.cols() == 3);
        CHECK(procrustes(coords, X).rmsd < 1e-8);
        // pairwise distances are reproduced
        CHECK((pairwise_squared(coords) - pairwise_squared(X)).norm() < 1e-8);
    }
}

TEST_CASE("mds rejects degenerate input") {
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 4);
    CHECK_THROWS_AS(mds_coordinates(zeros), degenerate_input_error);
}

} // TEST_SUITE
