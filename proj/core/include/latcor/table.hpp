#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace latcor {

/// A delimiter-separated text table. The delimiter (comma or tab) is
/// autodetected on read from the header line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  char delimiter = ',';

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return header.size(); }
};

Table read_table(const std::filesystem::path& path);

/// Parse a cell as double; throws ParseError naming row/column on failure
/// or when the value is not finite.
double parse_numeric(const std::string& cell, std::size_t line_no,
                     const std::string& column);

/// Format a double with 17 significant digits (lossless round-trip).
std::string format_full(double value);

/// Write a labelled square matrix: header row of `names`, one labelled row
/// per entry, all values at full precision.
void write_labelled_matrix(const std::filesystem::path& path,
                           const Eigen::MatrixXd& m,
                           const std::vector<std::string>& names);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace latcor
