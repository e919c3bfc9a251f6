#include "mfd/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write file: " + path);
    out << std::setprecision(17);
    return out;
}

} // namespace

void write_distance_file(const std::string& path, const IncompleteDistance& D) {
    auto out = open_output(path);
    out << "n " << D.pointCount() << "\n";
    for (const auto& e : D.entries())
        out << e.i << " " << e.j << " " << std::sqrt(e.sq) << "\n";
}

IncompleteDistance read_distance_file(const std::string& path) {
    auto in = open_input(path);
    std::string tag;
    int n = 0;
    if (!(in >> tag >> n) || tag != "n")
        throw invalid_input_error("distance file must start with 'n <count>'");
    std::vector<DistanceEntry> entries;
    int i, j;
    double d;
    while (in >> i >> j >> d) {
        if (d < 0.0) throw invalid_input_error("negative distance in file");
        entries.push_back({i, j, d * d});
    }
    return IncompleteDistance(n, std::move(entries));
}

Eigen::MatrixXd read_xyz(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (row.empty()) continue;
        if (!rows.empty() && rows.front().size() != row.size())
            throw invalid_input_error("inconsistent column count in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw invalid_input_error("no points in " + path);
    Eigen::MatrixXd pts(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            pts(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return pts;
}

void write_xyz(const std::string& path, const Eigen::MatrixXd& points) {
    auto out = open_output(path);
    for (int i = 0; i < points.rows(); ++i) {
        for (int j = 0; j < points.cols(); ++j)
            out << points(i, j) << (j + 1 < points.cols() ? " " : "");
        out << "\n";
    }
}

Eigen::MatrixXd read_off(const std::string& path) {
    auto in = open_input(path);
    std::string header;
    in >> header;
    if (header != "OFF" && header != "off")
        throw invalid_input_error("not an OFF file: " + path);
    long nv = 0, nf = 0, ne = 0;
    if (!(in >> nv >> nf >> ne)) throw invalid_input_error("bad OFF header");
    Eigen::MatrixXd pts(nv, 3);
    for (long i = 0; i < nv; ++i)
        if (!(in >> pts(i, 0) >> pts(i, 1) >> pts(i, 2)))
            throw invalid_input_error("truncated OFF vertex list");
    return pts;  // faces ignored
}

Eigen::MatrixXd read_points(const std::string& path) {
    auto ext = std::filesystem::path(path).extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".off") return read_off(path);
    return read_xyz(path);
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& M) {
    auto out = open_output(path);
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j)
            out << M(i, j) << (j + 1 < M.cols() ? "," : "");
        out << "\n";
    }
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && rows.front().size() != row.size())
            throw invalid_input_error("ragged CSV in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw invalid_input_error("empty CSV: " + path);
    Eigen::MatrixXd M(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            M(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return M;
}

void write_csv_series(const std::string& path, const std::string& valueName,
                      const Eigen::VectorXd& values) {
    auto out = open_output(path);
    out << "index," << valueName << "\n";
    for (int i = 0; i < values.size(); ++i) out << i << "," << values[i] << "\n";
}

void write_patch_set(const std::string& path, const PatchSet& patches,
                     const std::string& phiCsvPath) {
    nlohmann::json j;
    j["n"] = patches.n;
    j["d"] = patches.d;
    j["phi_csv"] = phiCsvPath;
    j["patches"] = nlohmann::json::array();
    for (int p = 0; p < patches.patchCount(); ++p) {
        nlohmann::json pj;
        pj["indices"] = patches.omega[p];
        std::vector<std::vector<double>> coords;
        for (int r = 0; r < patches.Q[p].rows(); ++r) {
            std::vector<double> row(patches.d);
            for (int c = 0; c < patches.d; ++c) row[c] = patches.Q[p](r, c);
            coords.push_back(std::move(row));
        }
        pj["coords"] = coords;
        j["patches"].push_back(std::move(pj));
    }
    auto out = open_output(path);
    out << j.dump(1) << "\n";
}

PatchSet read_patch_set(const std::string& path) {
    auto in = open_input(path);
    nlohmann::json j;
    in >> j;
    PatchSet patches;
    patches.n = j.at("n").get<int>();
    patches.d = j.at("d").get<int>();
    for (const auto& pj : j.at("patches")) {
        std::vector<int> idx = pj.at("indices").get<std::vector<int>>();
        const auto& coords = pj.at("coords");
        Eigen::MatrixXd Q(coords.size(), patches.d);
        for (std::size_t r = 0; r < coords.size(); ++r)
            for (int c = 0; c < patches.d; ++c)
                Q(static_cast<int>(r), c) = coords[r][c].get<double>();
        if (static_cast<int>(idx.size()) != Q.rows())
            throw invalid_input_error("patch index/coordinate size mismatch");
        patches.omega.push_back(std::move(idx));
        patches.Q.push_back(std::move(Q));
    }
    std::string phiPath = j.at("phi_csv").get<std::string>();
    if (!phiPath.empty()) {
        auto base = std::filesystem::path(path).parent_path();
        auto full = std::filesystem::path(phiPath);
        if (full.is_relative()) full = base / full;
        patches.Phi = read_csv_matrix(full.string());
    }
    return patches;
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_output(path);
    out << content;
}

std::string eigen_system_json(const EigenSystem& sys) {
    nlohmann::json j;
    j["count"] = sys.values.size();
    j["diagnostics"] = sys.diagnostics;
    j["eigenvalues"] = std::vector<double>(sys.values.data(),
                                           sys.values.data() + sys.values.size());
    j["residuals"] = std::vector<double>(
        sys.residuals.data(), sys.residuals.data() + sys.residuals.size());
    return j.dump();
}

std::string distance_map_json(const DistanceMap& map) {
    nlohmann::json j;
    j["sources"] = map.sources;
    j["unreachable"] = map.unreachable;
    j["monotone_acceptance"] = map.monotoneAcceptance;
    j["values"] = std::vector<double>(map.values.data(),
                                      map.values.data() + map.values.size());
    return j.dump();
}

} // namespace mfd
