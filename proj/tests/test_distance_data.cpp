#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "mfd/distance_data.hpp"
#include "mfd/errors.hpp"
#include "mfd/experiments.hpp"
#include "mfd/manifolds.hpp"

using namespace mfd;

namespace {

Eigen::MatrixXd line_points_distance() {
    Eigen::MatrixXd D(3, 3);
    D << 0, 1, 4, 1, 0, 1, 4, 1, 0;
    return D;
}

Eigen::MatrixXd random_point_distances(int n, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd X(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) X(i, j) = gauss(rng);
    Eigen::MatrixXd D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) D(i, j) = (X.row(i) - X.row(j)).squaredNorm();
    return D;
}

// brute-force KNN over available entries only
std::vector<int> brute_force_knn(const IncompleteDistance& D, int center, int k) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < D.pointCount(); ++j) {
        if (j == center) continue;
        if (auto sq = D.squared(center, j)) cand.push_back({*sq, j});
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> out;
    for (int t = 0; t < k && t < static_cast<int>(cand.size()); ++t)
        out.push_back(cand[t].second);
    return out;
}

} // namespace

TEST_SUITE("distance-data") {

TEST_CASE("sample_mask keeps everything at gamma one") {
    auto D = line_points_distance();
    auto mask = sample_mask(D, 1.0, 7);
    CHECK(mask.entryCount() == 3);
    CHECK(mask.squared(0, 2).value() == doctest::Approx(4.0));
    // dense round trip
    CHECK((mask.toDense() - D).norm() == doctest::Approx(0.0));
}

TEST_CASE("sample_mask count follows the ceil formula") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 1002;
    auto sphere = sample_manifold(spec);
    auto D = sphere.squaredDistances();
    auto mask = sample_mask(D, 0.03, 42);
    // ceil(0.03 * 1002 * 1001 / 2) = ceil(15045.03)
    CHECK(mask.entryCount() == 15046);
}

TEST_CASE("sample_mask is deterministic per seed") {
    auto D = random_point_distances(40, 3, 5);
    auto a = sample_mask(D, 0.4, 123);
    auto b = sample_mask(D, 0.4, 123);
    auto c = sample_mask(D, 0.4, 124);
    REQUIRE(a.entryCount() == b.entryCount());
    for (std::size_t k = 0; k < a.entryCount(); ++k) {
        CHECK(a.entries()[k].i == b.entries()[k].i);
        CHECK(a.entries()[k].j == b.entries()[k].j);
    }
    bool identical = a.entryCount() == c.entryCount();
    if (identical)
        for (std::size_t k = 0; k < a.entryCount(); ++k)
            identical = identical && a.entries()[k].i == c.entries()[k].i &&
                        a.entries()[k].j == c.entries()[k].j;
    CHECK_FALSE(identical);
}

TEST_CASE("sample_mask rejects bad input") {
    Eigen::MatrixXd bad(2, 2);
    bad << 0, -1, -1, 0;
    CHECK_THROWS_AS(sample_mask(bad, 0.5, 0), invalid_input_error);
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(sample_mask(asym, 0.5, 0), invalid_input_error);
}

TEST_CASE("symmetric queries agree") {
    auto D = random_point_distances(20, 3, 11);
    auto mask = sample_mask(D, 0.5, 3);
    for (const auto& e : mask.entries()) {
        CHECK(mask.squared(e.i, e.j).value() ==
              doctest::Approx(mask.squared(e.j, e.i).value()));
    }
}

TEST_CASE("sample_local_mask with no restriction is the full matrix") {
    auto D = random_point_distances(12, 3, 17);
    auto mask = sample_local_mask(D, 1.0, 11, 9);
    CHECK(mask.entryCount() == 12 * 11 / 2);
}

TEST_CASE("sample_local_mask restricts to nearest neighbors") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 200;
    auto sphere = sample_manifold(spec);
    auto D = sphere.squaredDistances();
    const int ell = 6;
    auto mask = sample_local_mask(D, 1.0, ell, 5);
    auto knn = exact_knn_lists(D, ell);
    for (const auto& e : mask.entries()) {
        bool iNearJ = std::find(knn[e.j].begin(), knn[e.j].end(), e.i) !=
                      knn[e.j].end();
        bool jNearI = std::find(knn[e.i].begin(), knn[e.i].end(), e.j) !=
                      knn[e.i].end();
        CHECK((iNearJ || jNearI));
    }
    // every row must be able to see its ell nearest others at gamma = 1
    for (int i = 0; i < 200; ++i) CHECK(mask.row(i).size() >= ell);
}

TEST_CASE("sample_local_mask entry count tracks gamma times candidates") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 200;
    auto sphere = sample_manifold(spec);
    auto D = sphere.squaredDistances();
    const int ell = 18;
    const double gamma = 0.5;
    const double candidates =
        static_cast<double>(sample_local_mask(D, 1.0, ell, 0).entryCount());
    double total = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s)
        total += static_cast<double>(sample_local_mask(D, gamma, ell, s).entryCount());
    double meanKept = total / seeds;
    CHECK(meanKept / (gamma * candidates) == doctest::Approx(1.0).epsilon(0.05));
    // per-row availability scales like gamma * ell
    auto mask = sample_local_mask(D, gamma, ell, 1);
    double rowMean = 0.0;
    for (int i = 0; i < 200; ++i) rowMean += mask.row(i).size();
    rowMean /= 200;
    CHECK(rowMean > 0.8 * gamma * ell);
    CHECK(rowMean < 2.2 * gamma * ell);
}

TEST_CASE("estimate_knn equals exact KNN on full distances") {
    auto D = random_point_distances(50, 3, 23);
    auto full = sample_mask(D, 1.0, 0);
    auto exact = exact_knn_lists(D, 7);
    for (int i = 0; i < 50; ++i) {
        auto nb = estimate_knn(full, i, 8);
        REQUIRE(nb.members.size() == 8);
        CHECK(nb.members[0] == i);
        std::set<int> got(nb.members.begin() + 1, nb.members.end());
        std::set<int> want(exact[i].begin(), exact[i].end());
        CHECK(got == want);
    }
}

TEST_CASE("estimate_knn matches brute force on masked data") {
    auto D = random_point_distances(10, 3, 31);
    auto mask = sample_mask(D, 0.7, 2);
    for (int i = 0; i < 10; ++i) {
        if (mask.row(i).size() < 5) continue;
        auto nb = estimate_knn(mask, i, 5);
        auto brute = brute_force_knn(mask, i, 4);
        std::vector<int> got(nb.members.begin() + 1, nb.members.end());
        std::sort(got.begin(), got.end());
        std::sort(brute.begin(), brute.end());
        CHECK(got == brute);
    }
}

TEST_CASE("estimate_knn reports insufficient rows") {
    std::vector<DistanceEntry> entries = {{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}};
    IncompleteDistance D(6, entries);
    CHECK_THROWS_AS(estimate_knn(D, 0, 5), insufficient_data_error);
    CHECK_THROWS_AS(estimate_knn(D, 4, 3), insufficient_data_error);
}

TEST_CASE("neighborhood local distances are reindexed and complete") {
    auto D = random_point_distances(30, 3, 37);
    auto full = sample_mask(D, 1.0, 0);
    auto nb = estimate_knn(full, 4, 6);
    CHECK(nb.localDistances.pointCount() == 6);
    CHECK(nb.localDistances.entryCount() == 15);
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b)
            CHECK(nb.localDistances.squared(a, b).value() ==
                  doctest::Approx(D(nb.members[a], nb.members[b])));
}

TEST_CASE("add_noise with zero sigma is the identity") {
    auto D = random_point_distances(15, 3, 41);
    auto mask = sample_mask(D, 0.8, 4);
    auto noisy = add_noise(mask, 0.0, 9);
    REQUIRE(noisy.entryCount() == mask.entryCount());
    for (std::size_t k = 0; k < mask.entryCount(); ++k)
        CHECK(noisy.entries()[k].sq == mask.entries()[k].sq);
}

TEST_CASE("add_noise is centered") {
    // ~1e4 entries; sample mean of (noisy - clean) within 3 standard errors
    auto D = random_point_distances(150, 3, 43);
    auto mask = sample_mask(D, 0.9, 6);
    const double sigma = 0.01;
    auto noisy = add_noise(mask, sigma, 10);
    const double scale = sigma * mask.maxDistance();
    double sum = 0.0;
    for (std::size_t k = 0; k < mask.entryCount(); ++k)
        sum += std::sqrt(noisy.entries()[k].sq) - std::sqrt(mask.entries()[k].sq);
    double mean = sum / mask.entryCount();
    double se = scale / std::sqrt(double(mask.entryCount()));
    CHECK(std::abs(mean) < 3.0 * se);
    CHECK(noisy.meta().sigma.value() == doctest::Approx(sigma));
}

TEST_CASE("add_noise rejects negative sigma") {
    auto D = random_point_distances(5, 2, 47);
    auto mask = sample_mask(D, 1.0, 0);
    CHECK_THROWS_AS(add_noise(mask, -0.1, 0), invalid_input_error);
}

} // TEST_SUITE
