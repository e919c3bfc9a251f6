#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "mfd/experiments.hpp"
#include "mfd/io.hpp"
#include "mfd/manifolds.hpp"

using namespace mfd;

TEST_SUITE("manifolds") {

TEST_CASE("sphere samples live on the unit sphere and include the poles") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 1002;
    auto s = sample_manifold(spec);
    REQUIRE(s.points.rows() == 1002);
    for (int i = 0; i < s.points.rows(); ++i)
        CHECK(std::abs(s.points.row(i).norm() - 1.0) < 1e-12);
    CHECK((s.points.row(s.northIndex) - Eigen::RowVector3d(0, 0, 1)).norm() == 0.0);
    CHECK((s.points.row(s.southIndex) - Eigen::RowVector3d(0, 0, -1)).norm() == 0.0);
    CHECK(s.geodesic(s.northIndex, s.southIndex) == doctest::Approx(M_PI));
}

TEST_CASE("nonuniform sphere sampling biases toward the north") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 2000;
    spec.uniform = false;
    spec.seed = 5;
    auto s = sample_manifold(spec);
    double meanZ = s.points.col(2).mean();
    CHECK(meanZ > 0.2);  // density (1 + z)/2 has mean z = 1/3
    CHECK(meanZ < 0.45);
}

TEST_CASE("swiss roll arc length matches quadrature") {
    // trapezoid-rule oracle for the closed form
    auto speed = [](double t) {
        double r = t + 0.1;
        return std::sqrt(1.0 + r * r);
    };
    const int steps = 200000;
    const double tMax = 4.0 * M_PI;
    double acc = 0.0;
    for (int k = 0; k < steps; ++k) {
        double a = tMax * k / steps, b = tMax * (k + 1) / steps;
        acc += 0.5 * (speed(a) + speed(b)) * (b - a);
    }
    double closedForm = swiss_roll_arclength(tMax) - swiss_roll_arclength(0.0);
    CHECK(closedForm == doctest::Approx(acc).epsilon(1e-8));
}

TEST_CASE("swiss roll geodesics agree with short chords") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::SwissRoll;
    spec.n = 2048;
    auto s = sample_manifold(spec);
    auto D = s.squaredDistances();
    auto knn = exact_knn_lists(D, 4);
    const int n = static_cast<int>(s.points.rows());
    for (int i = 0; i < n; i += 97) {
        int j = knn[i][0];
        double chord = (s.points.row(i) - s.points.row(j)).norm();
        double geo = s.geodesic(i, j);
        CHECK(geo >= chord - 1e-12);  // geodesics dominate chords everywhere
        // away from the tightly wound core, neighbor chords are nearly straight
        if (s.params(i, 0) > M_PI && s.params(j, 0) > M_PI)
            CHECK(geo <= chord * 1.02);
    }
}

TEST_CASE("swiss roll corners are the geodesic endpoints") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::SwissRoll;
    spec.n = 2048;
    auto s = sample_manifold(spec);
    CHECK(s.params(s.northIndex, 0) == doctest::Approx(0.0));
    CHECK(s.params(s.northIndex, 1) == doctest::Approx(0.0));
    CHECK(s.params(s.southIndex, 0) == doctest::Approx(4.0 * M_PI));
    CHECK(s.params(s.southIndex, 1) == doctest::Approx(1.0));
}

TEST_CASE("flat torus grids") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::FlatTorus2;
    spec.n = 2500;
    auto t2 = sample_manifold(spec);
    CHECK(t2.points.rows() == 2500);  // 50 x 50
    CHECK(t2.points.cols() == 4);
    for (int i = 0; i < 2500; i += 131) {
        CHECK(t2.points.row(i).head(2).norm() == doctest::Approx(1.0));
        CHECK(t2.points.row(i).tail(2).norm() == doctest::Approx(1.0));
    }
    spec.kind = ManifoldKind::FlatTorus3;
    spec.n = 1000;
    auto t3 = sample_manifold(spec);
    CHECK(t3.points.rows() == 1000);  // 10^3
    CHECK(t3.points.cols() == 6);
}

TEST_CASE("sphere spectrum clusters") {
    auto clusters = sphere_spectrum_clusters(100);
    REQUIRE(clusters.size() == 10);
    for (int k = 0; k < 10; ++k) {
        CHECK(clusters[k].lambda == doctest::Approx(double(k) * (k + 1)));
        CHECK(clusters[k].multiplicity == 2 * k + 1);
    }
}

TEST_CASE("flat torus lattice spectrum") {
    auto clusters = flat_torus_spectrum_clusters(2, 21);
    // values 0, 1, 2, 4, 5 with multiplicities 1, 4, 4, 4, 8
    REQUIRE(clusters.size() >= 5);
    CHECK(clusters[0].lambda == 0.0);
    CHECK(clusters[0].multiplicity == 1);
    CHECK(clusters[1].lambda == 1.0);
    CHECK(clusters[1].multiplicity == 4);
    CHECK(clusters[2].lambda == 2.0);
    CHECK(clusters[2].multiplicity == 4);
    CHECK(clusters[3].lambda == 4.0);
    CHECK(clusters[3].multiplicity == 4);
    CHECK(clusters[4].lambda == 5.0);
    CHECK(clusters[4].multiplicity == 8);

    auto c3 = flat_torus_spectrum_clusters(3, 10);
    CHECK(c3[1].lambda == 1.0);
    CHECK(c3[1].multiplicity == 6);
}

TEST_CASE("exact knn lists match a brute-force scan") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 100;
    auto s = sample_manifold(spec);
    auto D = s.squaredDistances();
    auto lists = exact_knn_lists(D, 6);
    for (int i = 0; i < 100; i += 13) {
        std::vector<std::pair<double, int>> cand;
        for (int j = 0; j < 100; ++j)
            if (j != i) cand.push_back({D(i, j), j});
        std::sort(cand.begin(), cand.end());
        for (int k = 0; k < 6; ++k) CHECK(lists[i][k] == cand[k].second);
    }
}

TEST_CASE("patch partition covers the point set with overlaps") {
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 300;
    auto s = sample_manifold(spec);
    auto D = s.squaredDistances();
    auto patches = partition_patches(D, 6, 2, 9);
    REQUIRE(patches.size() == 6);
    std::vector<int> covered(300, 0);
    for (const auto& p : patches)
        for (int i : p) ++covered[i];
    for (int i = 0; i < 300; ++i) CHECK(covered[i] >= 1);
    // at least one point is shared between patches
    int shared = 0;
    for (int i = 0; i < 300; ++i)
        if (covered[i] > 1) ++shared;
    CHECK(shared > 0);
}

TEST_CASE("file round trips") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "mfd_io_test";
    fs::create_directories(dir);

    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = 40;
    auto s = sample_manifold(spec);
    auto D = s.squaredDistances();
    auto mask = sample_mask(D, 0.5, 3);

    auto distPath = (dir / "d.txt").string();
    write_distance_file(distPath, mask);
    auto loaded = read_distance_file(distPath);
    REQUIRE(loaded.entryCount() == mask.entryCount());
    for (std::size_t k = 0; k < mask.entryCount(); ++k) {
        CHECK(loaded.entries()[k].i == mask.entries()[k].i);
        CHECK(loaded.entries()[k].j == mask.entries()[k].j);
        CHECK(loaded.entries()[k].sq ==
              doctest::Approx(mask.entries()[k].sq).epsilon(1e-12));
    }

    auto xyzPath = (dir / "p.xyz").string();
    write_xyz(xyzPath, s.points);
    auto pts = read_xyz(xyzPath);
    CHECK((pts - s.points).cwiseAbs().maxCoeff() < 1e-12);

    // OFF with a face line; faces are ignored
    write_text_file((dir / "m.off").string(),
                    "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    auto off = read_points((dir / "m.off").string());
    CHECK(off.rows() == 3);
    CHECK(off(1, 0) == doctest::Approx(1.0));

    Eigen::MatrixXd M = Eigen::MatrixXd::Random(7, 3);
    auto csvPath = (dir / "m.csv").string();
    write_csv_matrix(csvPath, M);
    CHECK((read_csv_matrix(csvPath) - M).cwiseAbs().maxCoeff() < 1e-12);

    // patch-set JSON round trip
    PatchSet patches;
    patches.n = 6;
    patches.d = 2;
    patches.omega = {{0, 1, 2, 3}, {2, 3, 4, 5}};
    patches.Q = {Eigen::MatrixXd::Random(4, 2), Eigen::MatrixXd::Random(4, 2)};
    patches.Phi = Eigen::MatrixXd::Random(6, 3);
    write_csv_matrix((dir / "phi.csv").string(), patches.Phi);
    write_patch_set((dir / "patches.json").string(), patches, "phi.csv");
    auto loadedPatches = read_patch_set((dir / "patches.json").string());
    CHECK(loadedPatches.n == 6);
    CHECK(loadedPatches.omega == patches.omega);
    CHECK((loadedPatches.Q[1] - patches.Q[1]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((loadedPatches.Phi - patches.Phi).cwiseAbs().maxCoeff() < 1e-9);
}

} // TEST_SUITE
