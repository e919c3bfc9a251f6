// Analytic test manifolds: unit sphere (Fibonacci lattice or latitude-biased
// sampling, poles always included), swiss roll (uniform in arc length or in
// parameter), and flat tori in R^4 / R^6 on regular angle grids.
#include "mfd/manifolds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi (3 - sqrt 5)

double point_set_diameter(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    if (n > 3000) {
        Eigen::RowVectorXd lo = pts.colwise().minCoeff();
        Eigen::RowVectorXd hi = pts.colwise().maxCoeff();
        return (hi - lo).norm();
    }
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            best = std::max(best, (pts.row(i) - pts.row(j)).squaredNorm());
    return std::sqrt(best);
}

// Subdivided icosahedron with antipodal vertices on the poles; vertex count
// is 10 freq^2 + 2. Hexagonal mesh regularity matters for the stability of
// the collocation operator rows.
Eigen::MatrixXd icosphere_points(int freq) {
    std::vector<Eigen::Vector3d> base;
    base.push_back({0.0, 0.0, 1.0});
    const double zRing = 1.0 / std::sqrt(5.0);
    const double rRing = 2.0 / std::sqrt(5.0);
    for (int k = 0; k < 5; ++k) {
        double a = 2.0 * M_PI * k / 5.0;
        base.push_back({rRing * std::cos(a), rRing * std::sin(a), zRing});
    }
    for (int k = 0; k < 5; ++k) {
        double a = 2.0 * M_PI * k / 5.0 + M_PI / 5.0;
        base.push_back({rRing * std::cos(a), rRing * std::sin(a), -zRing});
    }
    base.push_back({0.0, 0.0, -1.0});

    // faces by proximity: triples of mutually nearest vertices
    std::vector<std::array<int, 3>> faces;
    const double edge = (base[1] - base[2]).norm();
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j)
            for (int k = j + 1; k < 12; ++k)
                if ((base[i] - base[j]).norm() < edge * 1.1 &&
                    (base[i] - base[k]).norm() < edge * 1.1 &&
                    (base[j] - base[k]).norm() < edge * 1.1)
                    faces.push_back({i, j, k});

    std::map<std::array<long, 3>, int> seen;
    std::vector<Eigen::Vector3d> verts;
    auto add = [&](Eigen::Vector3d v) {
        v.normalize();
        std::array<long, 3> key{static_cast<long>(std::llround(v.x() * 1e9)),
                                static_cast<long>(std::llround(v.y() * 1e9)),
                                static_cast<long>(std::llround(v.z() * 1e9))};
        auto it = seen.find(key);
        if (it != seen.end()) return it->second;
        seen.emplace(key, static_cast<int>(verts.size()));
        verts.push_back(v);
        return static_cast<int>(verts.size()) - 1;
    };
    add(base[0]);   // poles first for stable indexing
    add(base[11]);
    for (const auto& f : faces)
        for (int r = 0; r <= freq; ++r)
            for (int c = 0; c <= freq - r; ++c)
                add((base[f[0]] * (freq - r - c) + base[f[1]] * r +
                     base[f[2]] * c) /
                    freq);
    Eigen::MatrixXd out(static_cast<int>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) out.row(static_cast<int>(i)) = verts[i];
    return out;
}

ManifoldSample sample_sphere(const ManifoldSpec& spec) {
    const int n = spec.n;
    if (n < 10) throw invalid_input_error("need at least 10 points");
    ManifoldSample out;
    out.kind = ManifoldKind::Sphere;
    out.intrinsicDim = 2;
    out.northIndex = 0;
    out.southIndex = 1;
    out.diameter = 2.0;

    if (spec.uniform) {
        // icosphere when the count allows it, Fibonacci lattice otherwise
        int freq = static_cast<int>(std::lround(std::sqrt((n - 2) / 10.0)));
        if (freq >= 1 && 10 * freq * freq + 2 == n) {
            out.points = icosphere_points(freq);
            out.params.resize(n, 2);
            for (int i = 0; i < n; ++i)
                out.params.row(i) << out.points(i, 2),
                    std::atan2(out.points(i, 1), out.points(i, 0));
            return out;
        }
    }

    out.points.resize(n, 3);
    out.params.resize(n, 2);  // (z, azimuth)
    out.points.row(0) << 0.0, 0.0, 1.0;
    out.points.row(1) << 0.0, 0.0, -1.0;
    out.params.row(0) << 1.0, 0.0;
    out.params.row(1) << -1.0, 0.0;

    const int m = n - 2;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < m; ++i) {
        double z, phi;
        if (spec.uniform) {
            z = 1.0 - 2.0 * (i + 0.5) / m;
            phi = kGoldenAngle * i;
        } else {
            // density proportional to (1 + z)/2: clusters toward the north
            z = 2.0 * std::sqrt(unit(rng)) - 1.0;
            phi = 2.0 * M_PI * unit(rng);
        }
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.points.row(i + 2) << r * std::cos(phi), r * std::sin(phi), z;
        out.params.row(i + 2) << z, phi;
    }
    return out;
}

ManifoldSample sample_swiss_roll(const ManifoldSpec& spec) {
    if (spec.n < 10) throw invalid_input_error("need at least 10 points");
    const double tMax = 4.0 * M_PI;
    const double width = 8.0 * M_PI;
    const double lenG = swiss_roll_arclength(tMax) - swiss_roll_arclength(0.0);
    const double aspect = lenG / width;

    int ns = std::max(2, static_cast<int>(std::lround(std::sqrt(spec.n / aspect))));
    int na = std::max(2, static_cast<int>(std::lround(double(spec.n) / ns)));
    const int n = na * ns;

    ManifoldSample out;
    out.kind = ManifoldKind::SwissRoll;
    out.intrinsicDim = 2;
    out.geodesicMetric = spec.geodesicMetric;
    out.points.resize(n, 3);
    out.params.resize(n, 2);  // (t, s)

    auto invertArclength = [&](double target) {
        double lo = 0.0, hi = tMax;
        double base = swiss_roll_arclength(0.0);
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (swiss_roll_arclength(mid) - base < target) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    int idx = 0;
    for (int a = 0; a < na; ++a) {
        double frac = na == 1 ? 0.0 : double(a) / (na - 1);
        double t = spec.uniform ? invertArclength(frac * lenG) : frac * tMax;
        for (int b = 0; b < ns; ++b) {
            double s = ns == 1 ? 0.0 : double(b) / (ns - 1);
            double r = t + 0.1;
            out.points.row(idx) << r * std::cos(t), r * std::sin(t), width * s;
            out.params.row(idx) << t, s;
            ++idx;
        }
    }
    out.northIndex = 0;          // (t = 0, s = 0) corner
    out.southIndex = n - 1;      // (t = tMax, s = 1) corner
    out.diameter = point_set_diameter(out.points);
    if (spec.geodesicMetric)
        out.diameter = std::sqrt(lenG * lenG + width * width);
    return out;
}

ManifoldSample sample_flat_torus(const ManifoldSpec& spec, int dim) {
    const int m = std::max(
        2, static_cast<int>(std::lround(std::pow(double(spec.n), 1.0 / dim))));
    int n = 1;
    for (int k = 0; k < dim; ++k) n *= m;

    ManifoldSample out;
    out.kind = dim == 2 ? ManifoldKind::FlatTorus2 : ManifoldKind::FlatTorus3;
    out.intrinsicDim = dim;
    out.points.resize(n, 2 * dim);
    out.params.resize(n, dim);
    std::vector<int> counter(dim, 0);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < dim; ++k) {
            double theta = 2.0 * M_PI * counter[k] / m;
            out.points(i, 2 * k) = std::cos(theta);
            out.points(i, 2 * k + 1) = std::sin(theta);
            out.params(i, k) = theta;
        }
        for (int k = dim - 1; k >= 0; --k) {
            if (++counter[k] < m) break;
            counter[k] = 0;
        }
    }
    out.diameter = 2.0 * std::sqrt(double(dim));
    return out;
}

} // namespace

double swiss_roll_arclength(double t) {
    double r = t + 0.1;
    double root = std::sqrt(1.0 + r * r);
    return 0.5 * (r * root + std::log(std::abs(root + r)));
}

ManifoldKind manifold_kind_from_string(const std::string& name) {
    if (name == "sphere") return ManifoldKind::Sphere;
    if (name == "swiss-roll") return ManifoldKind::SwissRoll;
    if (name == "flat-torus-2") return ManifoldKind::FlatTorus2;
    if (name == "flat-torus-3") return ManifoldKind::FlatTorus3;
    if (name == "file") return ManifoldKind::File;
    throw usage_error("unknown manifold kind: " + name);
}

std::string manifold_kind_name(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::Sphere: return "sphere";
        case ManifoldKind::SwissRoll: return "swiss-roll";
        case ManifoldKind::FlatTorus2: return "flat-torus-2";
        case ManifoldKind::FlatTorus3: return "flat-torus-3";
        case ManifoldKind::File: return "file";
    }
    return "unknown";
}

ManifoldSample sample_manifold(const ManifoldSpec& spec) {
    switch (spec.kind) {
        case ManifoldKind::Sphere: return sample_sphere(spec);
        case ManifoldKind::SwissRoll: return sample_swiss_roll(spec);
        case ManifoldKind::FlatTorus2: return sample_flat_torus(spec, 2);
        case ManifoldKind::FlatTorus3: return sample_flat_torus(spec, 3);
        case ManifoldKind::File:
            throw usage_error("file manifolds are loaded through io helpers");
    }
    throw usage_error("invalid manifold kind");
}

bool ManifoldSample::hasAnalyticSpectrum() const {
    return kind == ManifoldKind::Sphere || kind == ManifoldKind::FlatTorus2 ||
           kind == ManifoldKind::FlatTorus3;
}

std::vector<AnalyticCluster> ManifoldSample::spectrumClusters(int count) const {
    if (kind == ManifoldKind::Sphere) return sphere_spectrum_clusters(count);
    if (kind == ManifoldKind::FlatTorus2)
        return flat_torus_spectrum_clusters(2, count);
    if (kind == ManifoldKind::FlatTorus3)
        return flat_torus_spectrum_clusters(3, count);
    throw invalid_input_error("no analytic spectrum for this manifold");
}

bool ManifoldSample::hasAnalyticGeodesics() const {
    return kind == ManifoldKind::Sphere || kind == ManifoldKind::SwissRoll;
}

double ManifoldSample::geodesic(int i, int j) const {
    if (kind == ManifoldKind::Sphere) {
        double c = points.row(i).dot(points.row(j));
        return std::acos(std::clamp(c, -1.0, 1.0));
    }
    if (kind == ManifoldKind::SwissRoll) {
        double dg = swiss_roll_arclength(params(i, 0)) -
                    swiss_roll_arclength(params(j, 0));
        double ds = 8.0 * M_PI * (params(i, 1) - params(j, 1));
        return std::sqrt(dg * dg + ds * ds);
    }
    throw invalid_input_error("no analytic geodesic for this manifold");
}

Eigen::MatrixXd ManifoldSample::squaredDistances() const {
    const int n = static_cast<int>(points.rows());
    Eigen::MatrixXd D(n, n);
    if (kind == ManifoldKind::SwissRoll && geodesicMetric) {
        for (int i = 0; i < n; ++i) {
            D(i, i) = 0.0;
            for (int j = i + 1; j < n; ++j) {
                double g = geodesic(i, j);
                D(i, j) = g * g;
                D(j, i) = D(i, j);
            }
        }
        return D;
    }
    for (int i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            D(i, j) = (points.row(i) - points.row(j)).squaredNorm();
            D(j, i) = D(i, j);
        }
    }
    return D;
}

std::vector<AnalyticCluster> sphere_spectrum_clusters(int count) {
    std::vector<AnalyticCluster> clusters;
    int covered = 0;
    for (int k = 0; covered < count; ++k) {
        clusters.push_back({double(k) * (k + 1), 2 * k + 1});
        covered += 2 * k + 1;
    }
    return clusters;
}

std::vector<AnalyticCluster> flat_torus_spectrum_clusters(int dim, int count) {
    // |k|^2 lattice values with multiplicities, k in Z^dim
    const int radius = 16;
    std::map<int, int> mult;
    std::vector<int> k(dim, -radius);
    while (true) {
        int norm2 = 0;
        for (int c : k) norm2 += c * c;
        ++mult[norm2];
        int axis = dim - 1;
        while (axis >= 0 && ++k[axis] > radius) k[axis--] = -radius;
        if (axis < 0) break;
    }
    std::vector<AnalyticCluster> clusters;
    int covered = 0;
    for (const auto& [value, m] : mult) {
        clusters.push_back({double(value), m});
        covered += m;
        if (covered >= count) break;
    }
    if (covered < count)
        throw invalid_input_error("lattice enumeration radius too small");
    return clusters;
}

} // namespace mfd
