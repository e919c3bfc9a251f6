// Experiment drivers: seeded, reproducible runs of the completion, spectrum,
// geodesic, and stitching pipelines with the error metrics used for
// reporting (success rate rho, E_B, E_max per cluster, E_av, E_se).
#include "mfd/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "mfd/errors.hpp"
#include "mfd/parallel.hpp"

namespace mfd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

MaskedMetric::MaskedMetric(const Eigen::MatrixXd& D_squared, double gamma,
                           std::uint64_t seed)
    : D_(&D_squared), gamma_(gamma), seed_(seed) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw invalid_input_error("gamma must be in (0, 1]");
}

bool MaskedMetric::sampled(int i, int j) const {
    if (gamma_ >= 1.0) return true;
    if (i == j) return false;
    std::uint64_t key =
        (std::uint64_t(std::min(i, j)) << 32) | std::uint64_t(std::max(i, j));
    std::uint64_t coin = derive_seed(seed_, key);
    return double(coin) < gamma_ * 18446744073709551616.0;  // 2^64
}

std::optional<double> MaskedMetric::squared(int i, int j) const {
    if (i == j || !sampled(i, j)) return std::nullopt;
    double value = (*D_)(i, j);
    if (noiseScale_ > 0.0) {
        std::uint64_t key =
            (std::uint64_t(std::min(i, j)) << 32) | std::uint64_t(std::max(i, j));
        std::mt19937_64 rng(derive_seed(noiseSeed_, key));
        std::normal_distribution<double> gauss(0.0, noiseScale_);
        double d = std::sqrt(value) + gauss(rng);
        if (d < 0.0) d = 0.0;
        value = d * d;
    }
    return value;
}

IncompleteDistance MaskedMetric::knnMask(int ell) const {
    const int n = pointCount();
    if (ell >= n) throw invalid_input_error("ell must be smaller than n");
    std::vector<DistanceEntry> entries;
    std::vector<int> order(n - 1);
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < n; ++i) {
        int m = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) order[m++] = j;
        std::nth_element(order.begin(), order.begin() + ell, order.end(),
                         [&](int a, int b) {
                             return (*D_)(i, a) != (*D_)(i, b)
                                        ? (*D_)(i, a) < (*D_)(i, b)
                                        : a < b;
                         });
        for (int k = 0; k < ell; ++k) {
            int j = order[k];
            auto key = std::minmax(i, j);
            if (seen.count({key.first, key.second})) continue;
            if (auto sq = squared(i, j)) {
                entries.push_back({key.first, key.second, *sq});
                seen.insert({key.first, key.second});
            }
        }
    }
    SamplingMeta meta;
    meta.gamma = gamma_;
    meta.ell = ell;
    if (noiseScale_ > 0.0) meta.sigma = sigmaFraction_;
    return IncompleteDistance(n, std::move(entries), meta);
}

void MaskedMetric::setNoise(double sigmaFraction, int ell,
                            std::uint64_t noiseSeed) {
    if (sigmaFraction < 0.0) throw invalid_input_error("sigma must be nonnegative");
    sigmaFraction_ = sigmaFraction;
    if (sigmaFraction == 0.0) {
        noiseScale_ = 0.0;
        return;
    }
    noiseScale_ = 0.0;  // d_max from the clean mask
    double dMax = knnMask(ell).maxDistance();
    noiseScale_ = sigmaFraction * dMax;
    noiseSeed_ = noiseSeed;
}

std::vector<std::vector<int>> exact_knn_lists(const Eigen::MatrixXd& D_squared,
                                              int k) {
    const int n = static_cast<int>(D_squared.rows());
    if (k >= n) throw invalid_input_error("k must be smaller than n");
    std::vector<std::vector<int>> lists(n);
    std::vector<int> order(n - 1);
    for (int i = 0; i < n; ++i) {
        int m = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) order[m++] = j;
        std::nth_element(order.begin(), order.begin() + k, order.end(),
                         [&](int a, int b) {
                             return D_squared(i, a) != D_squared(i, b)
                                        ? D_squared(i, a) < D_squared(i, b)
                                        : a < b;
                         });
        std::sort(order.begin(), order.begin() + k, [&](int a, int b) {
            return D_squared(i, a) != D_squared(i, b)
                       ? D_squared(i, a) < D_squared(i, b)
                       : a < b;
        });
        lists[i].assign(order.begin(), order.begin() + k);
    }
    return lists;
}

double relative_frobenius_error(const Eigen::MatrixXd& approx,
                                const Eigen::MatrixXd& truth) {
    double denom = truth.norm();
    if (denom == 0.0) return approx.norm();
    return (approx - truth).norm() / denom;
}

// ---------------------------------------------------------------------------
// Phase transition
// ---------------------------------------------------------------------------

const PhaseCell* PhaseTransitionReport::cell(int n, double gamma) const {
    for (const auto& c : cells)
        if (c.n == n && std::abs(c.gamma - gamma) < 1e-12) return &c;
    return nullptr;
}

std::string PhaseTransitionReport::csv() const {
    std::ostringstream os;
    os << "n,gamma,rho,mean_error\n";
    for (const auto& c : cells)
        os << c.n << "," << c.gamma << "," << c.rho << "," << c.meanError << "\n";
    return os.str();
}

std::string PhaseTransitionReport::json() const {
    std::ostringstream os;
    os << "{\"model\":\""
       << (config.model == CompletionModel::Gram ? "gram" : "distance")
       << "\",\"trials\":" << config.trials << ",\"seed\":" << config.manifold.seed
       << ",\"cells\":[";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        os << (i ? "," : "") << "{\"n\":" << c.n << ",\"gamma\":" << c.gamma
           << ",\"rho\":" << c.rho << ",\"mean_error\":" << c.meanError << "}";
    }
    os << "]}";
    return os.str();
}

PhaseTransitionReport run_phase_transition(const PhaseTransitionConfig& config) {
    PhaseTransitionReport report;
    report.config = config;

    struct Task {
        int n;
        double gamma;
        int trial;
        double error;
    };
    std::vector<Task> tasks;
    for (int n : config.nGrid)
        for (double gamma : config.gammaGrid)
            for (int t = 0; t < config.trials; ++t)
                tasks.push_back({n, gamma, t, 0.0});

    // Samples are reused across gammas and trials of the same n.
    std::map<int, ManifoldSample> samples;
    std::map<int, Eigen::MatrixXd> denseD, truthB;
    for (int n : config.nGrid) {
        ManifoldSpec spec = config.manifold;
        spec.n = n;
        samples.emplace(n, sample_manifold(spec));
        denseD.emplace(n, samples.at(n).squaredDistances());
        truthB.emplace(n, gram_from_distance(denseD.at(n)));
    }

    parallel_for(
        tasks.size(),
        [&](std::size_t idx) {
            Task& task = tasks[idx];
            std::uint64_t seed = derive_seed(
                config.manifold.seed,
                (std::uint64_t(task.n) << 32) ^
                    std::uint64_t(task.gamma * 1e6) ^ std::uint64_t(task.trial));
            IncompleteDistance mask =
                sample_mask(denseD.at(task.n), task.gamma, seed);
            Eigen::MatrixXd B;
            if (config.model == CompletionModel::Gram) {
                B = complete_gram(mask, config.completion).B;
            } else {
                B = gram_from_distance(
                    complete_distance(mask, config.completion).D);
            }
            task.error = relative_frobenius_error(B, truthB.at(task.n));
        },
        config.threads);

    for (int n : config.nGrid)
        for (double gamma : config.gammaGrid) {
            PhaseCell cell;
            cell.n = n;
            cell.gamma = gamma;
            int successes = 0;
            double sum = 0.0;
            for (const auto& task : tasks) {
                if (task.n != n || task.gamma != gamma) continue;
                sum += task.error;
                if (task.error < config.successThreshold) ++successes;
            }
            cell.rho = double(successes) / config.trials;
            cell.meanError = sum / config.trials;
            report.cells.push_back(cell);
        }
    return report;
}

// ---------------------------------------------------------------------------
// LB eigenvalue experiment
// ---------------------------------------------------------------------------

double LbExperimentReport::errorFor(double lambda) const {
    for (std::size_t i = 0; i < clusters.size(); ++i)
        if (std::abs(clusters[i].lambda - lambda) < 1e-9) return clusterErrors[i];
    throw invalid_input_error("no cluster at requested eigenvalue");
}

std::string LbExperimentReport::json() const {
    std::ostringstream os;
    os << "{\"manifold\":\"" << manifold_kind_name(config.manifold.kind)
       << "\",\"n\":" << config.manifold.n << ",\"gamma\":" << config.gamma
       << ",\"ell\":" << config.ell << ",\"K\":" << config.K
       << ",\"knn\":\"" << (config.exactKnn ? "exact" : "estimated")
       << "\",\"noise_sigma\":" << config.noiseSigma
       << ",\"seed\":" << config.manifold.seed
       << ",\"mask_seconds\":" << maskSeconds
       << ",\"assembly_seconds\":" << assemblySeconds
       << ",\"completion_seconds\":" << assembly.completionSeconds
       << ",\"fit_seconds\":" << assembly.fitSeconds
       << ",\"eigs_seconds\":" << eigsSeconds
       << ",\"failed_rows\":" << assembly.failed
       << ",\"boundary_rows\":" << assembly.boundaryFlagged << ",\"clusters\":[";
    for (std::size_t i = 0; i < clusters.size(); ++i)
        os << (i ? "," : "") << "{\"lambda\":" << clusters[i].lambda
           << ",\"multiplicity\":" << clusters[i].multiplicity
           << ",\"e_max\":" << clusterErrors[i] << "}";
    os << "],\"eigenvalues\":[";
    for (int i = 0; i < eigs.values.size(); ++i)
        os << (i ? "," : "") << eigs.values[i];
    os << "]}";
    return os.str();
}

LbExperimentReport run_lb_experiment(const LbExperimentConfig& config) {
    LbExperimentReport report;
    report.config = config;

    ManifoldSample sample = sample_manifold(config.manifold);
    const int n = static_cast<int>(sample.points.rows());

    auto t0 = Clock::now();
    Eigen::MatrixXd D_full = sample.squaredDistances();
    MaskedMetric metric(D_full, config.gamma, derive_seed(config.manifold.seed, 1));
    if (config.noiseSigma > 0.0)
        metric.setNoise(config.noiseSigma, config.ell,
                        derive_seed(config.manifold.seed, 2));
    IncompleteDistance mask = metric.knnMask(config.ell);
    report.maskSeconds = seconds_since(t0);

    AssemblyParams ap;
    ap.ell = config.ell;
    ap.d = config.d;
    ap.completion = config.completion;
    ap.threads = config.threads;
    if (config.exactKnn) {
        auto lists = exact_knn_lists(D_full, config.ell - 1);
        ap.neighborhoods = std::move(lists);
    }
    ap.localPairSource = [&metric](int i, int j) { return metric.squared(i, j); };

    t0 = Clock::now();
    AssemblyResult assembly = assemble_lb(mask, ap);
    report.assemblySeconds = seconds_since(t0);
    report.assembly = assembly.stats;

    t0 = Clock::now();
    report.eigs = lb_eigs(assembly.op, std::min(config.K, n - 1));
    report.eigsSeconds = seconds_since(t0);

    if (sample.hasAnalyticSpectrum()) {
        report.clusters = sample.spectrumClusters(
            static_cast<int>(report.eigs.values.size()));
        // keep only clusters fully covered by the computed spectrum
        int covered = 0;
        std::vector<AnalyticCluster> usable;
        for (const auto& c : report.clusters) {
            if (covered + c.multiplicity >
                static_cast<int>(report.eigs.values.size()))
                break;
            usable.push_back(c);
            covered += c.multiplicity;
        }
        report.clusters = usable;
        report.clusterErrors = eigenvalue_error(report.eigs.values, report.clusters);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Eikonal experiment
// ---------------------------------------------------------------------------

std::string EikonalReport::json() const {
    std::ostringstream os;
    os << "{\"manifold\":\"" << manifold_kind_name(config.manifold.kind)
       << "\",\"n\":" << config.manifold.n
       << ",\"uniform\":" << (config.manifold.uniform ? "true" : "false")
       << ",\"gamma\":" << config.gamma << ",\"ell\":" << config.ell
       << ",\"seed\":" << config.manifold.seed
       << ",\"fmm_e_av\":" << fmmEav << ",\"fmm_e_se\":" << fmmEse
       << ",\"dijkstra_e_av\":" << dijkstraEav
       << ",\"dijkstra_e_se\":" << dijkstraEse
       << ",\"fmm_monotone\":" << (fmm.monotoneAcceptance ? "true" : "false")
       << ",\"excluded_boundary\":" << excludedBoundary << "}";
    return os.str();
}

EikonalReport run_eikonal_experiment(const EikonalConfig& config) {
    EikonalReport report;
    report.config = config;

    ManifoldSample sample = sample_manifold(config.manifold);
    if (!sample.hasAnalyticGeodesics() || sample.northIndex < 0)
        throw invalid_input_error("eikonal experiment needs analytic geodesics");
    const int n = static_cast<int>(sample.points.rows());
    const int source = sample.northIndex;
    const int target = sample.southIndex;

    Eigen::MatrixXd D_full = sample.squaredDistances();
    MaskedMetric metric(D_full, config.gamma, derive_seed(config.manifold.seed, 11));
    IncompleteDistance mask = metric.knnMask(config.ell);

    AssemblyParams ap;
    ap.ell = config.ell;
    ap.d = 2;
    ap.completion = config.completion;
    ap.threads = config.threads;
    ap.neighborhoods = exact_knn_lists(D_full, config.ell - 1);
    ap.localPairSource = [&metric](int i, int j) { return metric.squared(i, j); };

    MeshAssemblyResult meshes = assemble_local_meshes(mask, ap);
    report.fmm = fast_march(meshes.mesh, {source});
    report.dijkstraMap = dijkstra(edges_from_distance(mask), {source});

    // boundary points are excluded from the averaged error
    std::vector<char> excluded(n, 0);
    if (sample.kind == ManifoldKind::SwissRoll) {
        const double tMax = 4.0 * M_PI;
        for (int i = 0; i < n; ++i) {
            double t = sample.params(i, 0), s = sample.params(i, 1);
            if (t <= 1e-9 || t >= tMax - 1e-9 || s <= 1e-9 || s >= 1.0 - 1e-9)
                excluded[i] = 1;
        }
    }

    // E_av: relative error of the whole distance map (2-norm aggregate),
    // E_se: relative error of the single source-to-end distance
    auto relativeErrors = [&](const DistanceMap& map, double& eav, double& ese) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == source || !map.reached[i]) continue;
            double truth = sample.geodesic(source, i);
            if (truth <= 1e-12) continue;
            if (excluded[i] && i != target) continue;
            double diff = map.values[i] - truth;
            num += diff * diff;
            den += truth * truth;
        }
        eav = den > 0.0 ? std::sqrt(num / den) : 0.0;
        double truthSe = sample.geodesic(source, target);
        ese = std::abs(map.values[target] - truthSe) / truthSe;
    };
    relativeErrors(report.fmm, report.fmmEav, report.fmmEse);
    relativeErrors(report.dijkstraMap, report.dijkstraEav, report.dijkstraEse);
    report.excludedBoundary =
        static_cast<int>(std::count(excluded.begin(), excluded.end(), 1));
    return report;
}

// ---------------------------------------------------------------------------
// Patch partition and stitching experiment
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> partition_patches(const Eigen::MatrixXd& D_squared,
                                                int L, int growRings,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(D_squared.rows());
    if (L < 1 || L > n) throw invalid_input_error("bad patch count");

    // k-means++ style seeding on the metric, then Lloyd assignment by
    // distance to medoid-like centers (centers are points, not centroids).
    std::mt19937_64 rng(seed);
    std::vector<int> centers;
    std::uniform_int_distribution<int> first(0, n - 1);
    centers.push_back(first(rng));
    Eigen::VectorXd minDist = D_squared.col(centers[0]);
    for (int c = 1; c < L; ++c) {
        std::discrete_distribution<int> pick(minDist.data(), minDist.data() + n);
        int chosen = pick(rng);
        centers.push_back(chosen);
        minDist = minDist.cwiseMin(D_squared.col(chosen));
    }
    std::vector<int> assign(n, 0);
    for (int sweep = 0; sweep < 8; ++sweep) {
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = D_squared(i, centers[0]);
            for (int c = 1; c < L; ++c)
                if (D_squared(i, centers[c]) < bd) {
                    bd = D_squared(i, centers[c]);
                    best = c;
                }
            assign[i] = best;
        }
        // medoid update: the member minimizing total squared distance
        bool changed = false;
        for (int c = 0; c < L; ++c) {
            double best = -1.0;
            int bestIdx = centers[c];
            for (int i = 0; i < n; ++i) {
                if (assign[i] != c) continue;
                double total = 0.0;
                for (int j = 0; j < n; ++j)
                    if (assign[j] == c) total += D_squared(i, j);
                if (best < 0.0 || total < best) {
                    best = total;
                    bestIdx = i;
                }
            }
            if (bestIdx != centers[c]) changed = true;
            centers[c] = bestIdx;
        }
        if (!changed) break;
    }

    auto knn = exact_knn_lists(D_squared, std::min(10, n - 1));
    std::vector<std::set<int>> patches(L);
    for (int i = 0; i < n; ++i) patches[assign[i]].insert(i);
    for (int ring = 0; ring < growRings; ++ring) {
        for (int c = 0; c < L; ++c) {
            std::set<int> grown = patches[c];
            for (int i : patches[c])
                for (int j : knn[i]) grown.insert(j);
            patches[c] = std::move(grown);
        }
    }
    std::vector<std::vector<int>> out(L);
    for (int c = 0; c < L; ++c) out[c].assign(patches[c].begin(), patches[c].end());
    return out;
}

std::string StitchingReport::json() const {
    std::ostringstream os;
    os << "{\"manifold\":\"" << manifold_kind_name(config.manifold.kind)
       << "\",\"n\":" << patchSet.n << ",\"patches\":" << config.patches
       << ",\"local_gamma\":" << config.localGamma
       << ",\"basis\":" << config.basisSize
       << ",\"seed\":" << config.manifold.seed
       << ",\"iterations\":" << state.iteration
       << ",\"energy\":" << state.energy
       << ",\"aligned_rmsd\":" << alignedRmsd
       << ",\"rmsd_over_diameter\":" << rmsdOverDiameter
       << ",\"energy_monotone\":" << (energyMonotone ? "true" : "false")
       << ",\"singular_values\":[";
    for (int i = 0; i < singularValues.size(); ++i)
        os << (i ? "," : "") << singularValues[i];
    os << "]}";
    return os.str();
}

StitchingReport run_stitching_experiment(const StitchingConfig& config) {
    StitchingReport report;
    report.config = config;

    ManifoldSample sample = sample_manifold(config.manifold);
    const int n = static_cast<int>(sample.points.rows());
    Eigen::MatrixXd D_full = sample.squaredDistances();

    auto omega = partition_patches(D_full, config.patches, 2,
                                   derive_seed(config.manifold.seed, 21));

    // Per-patch masked completion -> local coordinates (padded to d columns).
    PatchSet patches;
    patches.n = n;
    patches.d = config.d;
    patches.omega = omega;
    patches.Q.resize(omega.size());
    std::vector<DistanceEntry> unionEntries;
    std::set<std::pair<int, int>> seen;
    for (std::size_t p = 0; p < omega.size(); ++p) {
        const auto& idx = omega[p];
        const int m = static_cast<int>(idx.size());
        Eigen::MatrixXd Dp(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) Dp(a, b) = D_full(idx[a], idx[b]);
        IncompleteDistance maskP = sample_mask(
            Dp, config.localGamma, derive_seed(config.manifold.seed, 100 + p));
        for (const auto& e : maskP.entries()) {
            int gi = idx[e.i], gj = idx[e.j];
            if (gi > gj) std::swap(gi, gj);
            if (seen.insert({gi, gj}).second)
                unionEntries.push_back({gi, gj, e.sq});
        }
        GramSolution gs = complete_gram(maskP, config.completion);
        Eigen::MatrixXd coords = mds_coordinates(gs.B);
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, config.d);
        const int take = std::min<int>(config.d, coords.cols());
        Q.leftCols(take) = coords.leftCols(take);
        patches.Q[p] = std::move(Q);
    }

    // Spectral basis from the union of the patch masks.
    SamplingMeta meta;
    meta.gamma = config.localGamma;
    IncompleteDistance unionMask(n, std::move(unionEntries), meta);
    AssemblyParams ap;
    ap.ell = config.ellPhi;
    ap.completion = config.completion;
    ap.threads = config.threads;
    AssemblyResult assembly = assemble_lb(unionMask, ap);
    EigenSystem eigs = lb_eigs(assembly.op, config.basisSize + 1);
    const int nEigs = static_cast<int>(eigs.values.size());
    patches.Phi = eigs.vectors.rightCols(nEigs - 1);  // drop the constant mode

    StitchState init = bfs_initialize(patches);
    report.state = stitch(patches, std::move(init), config.stitchParams);
    report.P = assemble_global(patches, report.state);
    report.patchSet = std::move(patches);

    for (std::size_t i = 1; i < report.state.energyHistory.size(); ++i)
        if (report.state.energyHistory[i] >
            report.state.energyHistory[i - 1] * (1.0 + 1e-9) + 1e-12)
            report.energyMonotone = false;

    // Ground truth in the stitching dimension: ambient points for Euclidean
    // metrics, the flat parametrization for geodesic swiss rolls.
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(n, config.d);
    if (sample.kind == ManifoldKind::SwissRoll && sample.geodesicMetric) {
        for (int i = 0; i < n; ++i) {
            truth(i, 0) = swiss_roll_arclength(sample.params(i, 0));
            truth(i, 1) = 8.0 * M_PI * sample.params(i, 1);
        }
    } else {
        const int take = std::min<int>(config.d, sample.points.cols());
        truth.leftCols(take) = sample.points.leftCols(take);
    }
    report.alignedRmsd = procrustes(report.P, truth).rmsd;
    report.rmsdOverDiameter = report.alignedRmsd / sample.diameter;

    Eigen::MatrixXd centered = report.P.rowwise() - report.P.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    report.singularValues = svd.singularValues();
    return report;
}

// ---------------------------------------------------------------------------
// Timing comparison
// ---------------------------------------------------------------------------

std::string TimingComparisonReport::json() const {
    std::ostringstream os;
    os << "{\"n\":" << config.n << ",\"global_gamma\":" << config.globalGamma
       << ",\"local_gamma\":" << config.localGamma
       << ",\"local_ell\":" << config.localEll
       << ",\"local_seconds\":" << localSeconds
       << ",\"global_seconds\":" << globalSeconds
       << ",\"local_succeeded\":" << (localSucceeded ? "true" : "false")
       << ",\"global_succeeded\":" << (globalSucceeded ? "true" : "false")
       << ",\"global_error\":" << globalError << "}";
    return os.str();
}

TimingComparisonReport run_timing_comparison(const TimingComparisonConfig& config) {
    TimingComparisonReport report;
    report.config = config;

    ManifoldSpec spec;
    spec.kind = ManifoldKind::Sphere;
    spec.n = config.n;
    spec.seed = config.seed;
    ManifoldSample sample = sample_manifold(spec);
    Eigen::MatrixXd D_full = sample.squaredDistances();

    // local path: per-point reconstruction through to the operator rows
    {
        MaskedMetric metric(D_full, config.localGamma, derive_seed(config.seed, 31));
        IncompleteDistance mask = metric.knnMask(config.localEll);
        AssemblyParams ap;
        ap.ell = config.localEll;
        ap.completion = config.completion;
        ap.threads = config.threads;
        ap.neighborhoods = exact_knn_lists(D_full, config.localEll - 1);
        ap.localPairSource = [&metric](int i, int j) { return metric.squared(i, j); };
        auto t0 = Clock::now();
        AssemblyResult assembly = assemble_lb(mask, ap);
        report.localSeconds = seconds_since(t0);
        report.localSucceeded = assembly.stats.failed == 0;
    }

    // global path: one completion of the whole Gram matrix
    {
        IncompleteDistance mask =
            sample_mask(D_full, config.globalGamma, derive_seed(config.seed, 32));
        Eigen::MatrixXd truth = gram_from_distance(D_full);
        auto t0 = Clock::now();
        GramSolution gs = complete_gram(mask, config.completion);
        report.globalSeconds = seconds_since(t0);
        report.globalError = relative_frobenius_error(gs.B, truth);
        report.globalSucceeded = report.globalError < 1e-3;
    }
    return report;
}

} // namespace mfd
