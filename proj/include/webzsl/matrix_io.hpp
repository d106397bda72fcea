#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace webzsl {

// Dense-matrix text format: "rows cols" header, then one whitespace-separated
// row per line.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);
void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

// One id per line (labels, seen/unseen/validation class lists).
void save_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::vector<std::string> load_lines(const std::filesystem::path& path);

}  // namespace webzsl
