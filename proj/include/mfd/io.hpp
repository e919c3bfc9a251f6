#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfd/distance_data.hpp"
#include "mfd/patch_stitching.hpp"
#include "mfd/pde_solvers.hpp"

namespace mfd {

// Sparse-distance text format: header "n <count>", then "i j d" per entry
// with 0-based i < j and d a plain (un-squared) distance. LF line endings.
void write_distance_file(const std::string& path, const IncompleteDistance& D);
IncompleteDistance read_distance_file(const std::string& path);

// XYZ: one point per line, whitespace-separated; dimension from column count.
Eigen::MatrixXd read_xyz(const std::string& path);
void write_xyz(const std::string& path, const Eigen::MatrixXd& points);

// OFF: vertices only, faces ignored.
Eigen::MatrixXd read_off(const std::string& path);

// Point-cloud loader dispatching on extension (.xyz / .off).
Eigen::MatrixXd read_points(const std::string& path);

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd read_csv_matrix(const std::string& path);

// Two-column (index, value) CSV with a header line.
void write_csv_series(const std::string& path, const std::string& valueName,
                      const Eigen::VectorXd& values);

// Patch-set JSON: global n, d, patch index lists + local coordinates, and a
// path to the spectral basis CSV.
void write_patch_set(const std::string& path, const PatchSet& patches,
                     const std::string& phiCsvPath);
PatchSet read_patch_set(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

// JSON renderings: metadata plus the value arrays.
std::string eigen_system_json(const EigenSystem& sys);
std::string distance_map_json(const DistanceMap& map);

} // namespace mfd
