#include "latcor/table.hpp"

#include "latcor/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace latcor {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // trim surrounding whitespace and a trailing CR from DOS line endings
    auto begin = field.find_first_not_of(" \t\r");
    auto end = field.find_last_not_of(" \t\r");
    out.push_back(begin == std::string::npos
                      ? std::string{}
                      : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

char detect_delimiter(const std::string& header) {
  auto commas = std::count(header.begin(), header.end(), ',');
  auto tabs = std::count(header.begin(), header.end(), '\t');
  return tabs > commas ? '\t' : ',';
}

} // namespace

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());

  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    if (t.header.empty()) {
      t.delimiter = detect_delimiter(line);
      t.header = split_line(line, t.delimiter);
      continue;
    }
    auto row = split_line(line, t.delimiter);
    if (row.size() != t.header.size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(t.header.size()) +
                       " fields, got " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty())
    throw ParseError(path.string() + ": empty file");
  return t;
}

double parse_numeric(const std::string& cell, std::size_t line_no,
                     const std::string& column) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != cell.size() || cell.empty())
    throw ParseError("line " + std::to_string(line_no) + ", column '" +
                     column + "': not a number: '" + cell + "'");
  if (!std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ", column '" +
                     column + "': non-finite value");
  return v;
}

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_labelled_matrix(const std::filesystem::path& path,
                           const Eigen::MatrixXd& m,
                           const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "name";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << ',' << format_full(m(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path.string());
  out << text;
  if (!out) throw ParseError("write failed: " + path.string());
}

} // namespace latcor
