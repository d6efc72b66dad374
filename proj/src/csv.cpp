#include "lowsnr/csv.hpp"

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lowsnr {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  out << m.rows() << "," << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("csv: write failed for '" + path + "'");
}

namespace {

std::vector<double> split_doubles(const std::string& line) {
  std::vector<double> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::runtime_error("csv: bad numeric cell '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
  const auto dims = split_doubles(line);
  if (dims.size() != 2) throw std::runtime_error("csv: first line must be 'n,p'");
  const auto n = static_cast<Eigen::Index>(dims[0]);
  const auto p = static_cast<Eigen::Index>(dims[1]);
  if (n < 1 || p < 1) throw std::runtime_error("csv: bad dimensions");
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("csv: truncated matrix");
    const auto row = split_doubles(line);
    if (static_cast<Eigen::Index>(row.size()) != p)
      throw std::runtime_error("csv: row has wrong width");
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = row[j];
  }
  return m;
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error("csv: expected a vector in '" + path + "'");
}

CsvTable::CsvTable(const std::string& path, const std::string& comment,
                   const std::vector<std::string>& columns)
    : path_(path), out_(path), n_cols_(columns.size()) {
  if (!out_) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  out_ << "# " << comment << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw std::logic_error("csv: row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

void CsvTable::add_row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  add_row(s);
}

}  // namespace lowsnr
