// Command-line harness: manifold samplers, distance masking, completion,
// Laplace-Beltrami spectra, geodesic distance maps, patch stitching, and
// phase-transition sweeps. Outputs land as CSV/JSON files in --out.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfd/distance_data.hpp"
#include "mfd/errors.hpp"
#include "mfd/experiments.hpp"
#include "mfd/gram_completion.hpp"
#include "mfd/io.hpp"
#include "mfd/manifolds.hpp"
#include "mfd/patch_stitching.hpp"
#include "mfd/pde_solvers.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mfd;

struct CommonOpts {
    std::string manifold = "sphere";
    int n = 1002;
    std::string sampling = "uniform";
    double gamma = 1.0;
    int ell = 6;
    std::string knn = "exact";
    double noiseSigma = 0.0;
    std::uint64_t seed = 0;
    int trials = 10;
    std::string out = "out";
    std::string format = "csv";
    std::string inputPath;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool wantMask = true) {
    cmd->add_option("--manifold", o.manifold,
                    "sphere | swiss-roll | flat-torus-2 | flat-torus-3 | file");
    cmd->add_option("--n", o.n, "point count");
    cmd->add_option("--sampling", o.sampling, "uniform | nonuniform");
    if (wantMask) {
        cmd->add_option("--gamma", o.gamma, "sampling fraction in (0, 1]");
        cmd->add_option("--ell", o.ell, "KNN size");
        cmd->add_option("--knn", o.knn, "exact | estimated");
        cmd->add_option("--noise-sigma", o.noiseSigma,
                        "Gaussian noise std dev, fraction of max distance");
    }
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--trials", o.trials, "trial count");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--format", o.format, "csv | json");
    cmd->add_option("--input", o.inputPath, "input file (points or distances)");
}

ManifoldSpec spec_from(const CommonOpts& o) {
    ManifoldSpec spec;
    spec.kind = manifold_kind_from_string(o.manifold);
    spec.n = o.n;
    spec.uniform = o.sampling == "uniform";
    spec.seed = o.seed;
    spec.path = o.inputPath;
    return spec;
}

Eigen::MatrixXd points_from(const CommonOpts& o) {
    if (o.manifold == "file") {
        if (o.inputPath.empty()) throw usage_error("--input required for file manifolds");
        return read_points(o.inputPath);
    }
    return sample_manifold(spec_from(o)).points;
}

void ensure_out(const CommonOpts& o) { fs::create_directories(o.out); }

int run_sample(const CommonOpts& o) {
    ensure_out(o);
    auto sample = sample_manifold(spec_from(o));
    write_xyz((fs::path(o.out) / "points.xyz").string(), sample.points);
    std::string meta = "{\"manifold\":\"" + manifold_kind_name(sample.kind) +
                       "\",\"n\":" + std::to_string(sample.points.rows()) +
                       ",\"intrinsic_dim\":" + std::to_string(sample.intrinsicDim) +
                       ",\"seed\":" + std::to_string(o.seed) +
                       ",\"north_index\":" + std::to_string(sample.northIndex) +
                       ",\"south_index\":" + std::to_string(sample.southIndex) + "}\n";
    write_text_file((fs::path(o.out) / "meta.json").string(), meta);
    std::cout << "wrote " << sample.points.rows() << " points to " << o.out << "\n";
    return 0;
}

int run_mask(const CommonOpts& o) {
    ensure_out(o);
    Eigen::MatrixXd pts = points_from(o);
    Eigen::MatrixXd D(pts.rows(), pts.rows());
    for (int i = 0; i < pts.rows(); ++i)
        for (int j = 0; j < pts.rows(); ++j)
            D(i, j) = (pts.row(i) - pts.row(j)).squaredNorm();
    IncompleteDistance mask =
        o.ell > 0 && o.ell < pts.rows()
            ? sample_local_mask(D, o.gamma, o.ell, o.seed)
            : sample_mask(D, o.gamma, o.seed);
    if (o.noiseSigma > 0.0) mask = add_noise(mask, o.noiseSigma, o.seed + 1);
    write_distance_file((fs::path(o.out) / "distances.txt").string(), mask);
    std::cout << "wrote " << mask.entryCount() << " entries to " << o.out
              << "/distances.txt\n";
    return 0;
}

int run_complete(const CommonOpts& o, const std::string& model,
                 const CompletionParams& params) {
    ensure_out(o);
    if (o.inputPath.empty()) throw usage_error("--input distance file required");
    IncompleteDistance mask = read_distance_file(o.inputPath);
    if (model == "gram") {
        auto sol = complete_gram(mask, params);
        write_csv_matrix((fs::path(o.out) / "gram.csv").string(), sol.B);
        auto coords = mds_coordinates(sol.B);
        write_xyz((fs::path(o.out) / "coords.xyz").string(), coords);
        write_text_file((fs::path(o.out) / "diagnostics.json").string(),
                        gram_solution_json(sol) + "\n");
        std::cout << "completed Gram matrix: " << gram_solution_json(sol) << "\n";
        return sol.converged ? 0 : 3;
    }
    auto sol = complete_distance(mask, params);
    Eigen::MatrixXd plain = sol.D.cwiseSqrt();
    write_csv_matrix((fs::path(o.out) / "distance_completed.csv").string(), plain);
    std::cout << "completed distance matrix: iterations=" << sol.iterations
              << " converged=" << sol.converged << "\n";
    return sol.converged ? 0 : 3;
}

int run_lb(const CommonOpts& o, int K) {
    ensure_out(o);
    LbExperimentConfig cfg;
    cfg.manifold = spec_from(o);
    cfg.gamma = o.gamma;
    cfg.ell = o.ell;
    cfg.K = K;
    cfg.exactKnn = o.knn == "exact";
    cfg.noiseSigma = o.noiseSigma;
    auto report = run_lb_experiment(cfg);
    write_csv_series((fs::path(o.out) / "eigenvalues.csv").string(), "lambda",
                     report.eigs.values);
    write_csv_matrix((fs::path(o.out) / "eigenvectors.csv").string(),
                     report.eigs.vectors);
    write_text_file((fs::path(o.out) / "eigensystem.json").string(),
                    eigen_system_json(report.eigs) + "\n");
    write_text_file((fs::path(o.out) / "report.json").string(), report.json() + "\n");
    std::cout << report.json() << "\n";
    return 0;
}

int run_eikonal(const CommonOpts& o) {
    ensure_out(o);
    EikonalConfig cfg;
    cfg.manifold = spec_from(o);
    cfg.gamma = o.gamma;
    cfg.ell = o.ell;
    auto report = run_eikonal_experiment(cfg);
    write_csv_series((fs::path(o.out) / "distance_map.csv").string(), "distance",
                     report.fmm.values);
    write_csv_series((fs::path(o.out) / "distance_map_dijkstra.csv").string(),
                     "distance", report.dijkstraMap.values);
    write_text_file((fs::path(o.out) / "distance_map.json").string(),
                    distance_map_json(report.fmm) + "\n");
    write_text_file((fs::path(o.out) / "report.json").string(), report.json() + "\n");
    std::cout << report.json() << "\n";
    return 0;
}

int run_stitch(const CommonOpts& o, int patches, double localGamma, int basis) {
    ensure_out(o);
    if (!o.inputPath.empty()) {
        // patch-set file route: stitch exactly what was given
        PatchSet ps = read_patch_set(o.inputPath);
        StitchState st = stitch(ps, bfs_initialize(ps), {});
        Eigen::MatrixXd P = assemble_global(ps, st);
        write_xyz((fs::path(o.out) / "stitched.xyz").string(), P);
        Eigen::VectorXd energy(st.energyHistory.size());
        for (std::size_t i = 0; i < st.energyHistory.size(); ++i)
            energy[i] = st.energyHistory[i];
        write_csv_series((fs::path(o.out) / "energy.csv").string(), "energy", energy);
        std::cout << "{\"iterations\":" << st.iteration
                  << ",\"energy\":" << st.energy << "}\n";
        return 0;
    }
    StitchingConfig cfg;
    cfg.manifold = spec_from(o);
    cfg.manifold.geodesicMetric = cfg.manifold.kind == ManifoldKind::SwissRoll;
    cfg.patches = patches;
    cfg.localGamma = localGamma;
    cfg.basisSize = basis;
    auto report = run_stitching_experiment(cfg);
    write_xyz((fs::path(o.out) / "stitched.xyz").string(), report.P);
    Eigen::VectorXd energy(report.state.energyHistory.size());
    for (std::size_t i = 0; i < report.state.energyHistory.size(); ++i)
        energy[i] = report.state.energyHistory[i];
    write_csv_series((fs::path(o.out) / "energy.csv").string(), "energy", energy);
    write_csv_matrix((fs::path(o.out) / "phi.csv").string(), report.patchSet.Phi);
    write_patch_set((fs::path(o.out) / "patches.json").string(), report.patchSet,
                    "phi.csv");
    write_text_file((fs::path(o.out) / "report.json").string(), report.json() + "\n");
    std::cout << report.json() << "\n";
    return 0;
}

int run_phase(const CommonOpts& o, const std::string& model,
              std::vector<double> gammaGrid, std::vector<int> nGrid) {
    ensure_out(o);
    PhaseTransitionConfig cfg;
    cfg.manifold = spec_from(o);
    cfg.gammaGrid = std::move(gammaGrid);
    cfg.nGrid = std::move(nGrid);
    cfg.trials = o.trials;
    cfg.model = model == "distance" ? CompletionModel::Distance : CompletionModel::Gram;
    cfg.completion.eps = 1e-10;
    cfg.completion.maxIter = 600;
    cfg.completion.cgWarmStart = true;
    if (cfg.model == CompletionModel::Distance) {
        cfg.completion.eps = 1e-6;
        cfg.completion.maxIter = 1500;
    }
    auto report = run_phase_transition(cfg);
    write_text_file((fs::path(o.out) / "rho.csv").string(), report.csv());
    write_text_file((fs::path(o.out) / "report.json").string(), report.json() + "\n");
    std::cout << report.json() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDEs on manifolds from incomplete inter-point distances"};
    app.require_subcommand(1);

    CommonOpts o;
    CompletionParams completion;
    std::string model = "gram";
    int K = 100;
    int patches = 10;
    double localGamma = 0.5;
    int basis = 100;
    std::vector<double> gammaGrid = {0.01, 0.02, 0.03, 0.05, 0.10, 0.20};
    std::vector<int> nGrid = {200, 400, 800};

    auto* sample = app.add_subcommand("sample", "sample an analytic manifold");
    add_common(sample, o, false);

    auto* mask = app.add_subcommand("mask", "sample + mask pairwise distances");
    add_common(mask, o);

    auto* complete = app.add_subcommand("complete", "complete a distance file");
    add_common(complete, o, false);
    complete->add_option("--model", model, "gram | distance");
    complete->add_option("--mu1", completion.mu1);
    complete->add_option("--mu2", completion.mu2);
    complete->add_option("--eps", completion.eps);
    complete->add_option("--max-iter", completion.maxIter);
    complete->add_option("--m", completion.m, "eigenpair cap");

    auto* lb = app.add_subcommand("lb-eigs", "Laplace-Beltrami spectrum pipeline");
    add_common(lb, o);
    lb->add_option("--k", K, "eigenpair count");

    auto* eik = app.add_subcommand("eikonal", "geodesic distance maps");
    add_common(eik, o);

    auto* stitchCmd = app.add_subcommand("stitch", "spectral patch stitching");
    add_common(stitchCmd, o);
    stitchCmd->add_option("--patches", patches, "patch count");
    stitchCmd->add_option("--local-gamma", localGamma, "per-patch sampling rate");
    stitchCmd->add_option("--basis", basis, "spectral basis size");

    auto* phase = app.add_subcommand("phase", "success-rate phase transition");
    add_common(phase, o);
    phase->add_option("--model", model, "gram | distance");
    phase->add_option("--gamma-grid", gammaGrid, "gamma values");
    phase->add_option("--n-grid", nGrid, "point counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sample->parsed()) return run_sample(o);
        if (mask->parsed()) return run_mask(o);
        if (complete->parsed()) return run_complete(o, model, completion);
        if (lb->parsed()) return run_lb(o, K);
        if (eik->parsed()) return run_eikonal(o);
        if (stitchCmd->parsed()) return run_stitch(o, patches, localGamma, basis);
        if (phase->parsed()) return run_phase(o, model, gammaGrid, nGrid);
        throw usage_error("no subcommand given");
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const invalid_input_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
