#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

namespace lowsnr {

/// Matrix CSV: first line "n,p", then n rows of p values (%.17g).
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

Eigen::VectorXd read_vector_csv(const std::string& path);

/// Experiment table: '#' comment line carrying config hash and seed, then a
/// header row, then data rows.
class CsvTable {
 public:
  CsvTable(const std::string& path, const std::string& comment,
           const std::vector<std::string>& columns);
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t n_cols_;
};

std::string format_double(double x);  // %.17g

/// FNV-1a 64-bit over a string, hex-encoded; used as the config hash.
std::string fnv1a_hex(const std::string& text);

}  // namespace lowsnr
