#include "latcor/samples.hpp"

#include "latcor/errors.hpp"
#include "latcor/table.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace latcor {

SampleMatrix::SampleMatrix(Eigen::MatrixXd values, std::vector<std::string> names,
                           bool center)
    : values_(std::move(values)), names_(std::move(names)), centered_(center) {
  if (values_.rows() < 2)
    throw ValidationError("need at least 2 samples, got " + std::to_string(values_.rows()));
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
    throw ValidationError("sample matrix column-name count does not match shape");
  if (!values_.allFinite())
    throw ValidationError("sample matrix contains non-finite values");
  col_means_ = values_.colwise().mean();
  if (center)
    values_.rowwise() -= col_means_.transpose();
}

SampleMatrix SampleMatrix::subset_rows(const std::vector<int>& keep) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), values_.cols());
  for (std::size_t r = 0; r < keep.size(); ++r)
    sub.row(static_cast<Eigen::Index>(r)) = values_.row(keep[r]);
  // values are passed through untouched; the split inherits the parent's
  // centering state rather than re-centering on its own means
  SampleMatrix out(std::move(sub), names_, false);
  out.centered_ = centered_;
  return out;
}

SampleMatrix SampleMatrix::subset_columns(const std::vector<int>& keep) const {
  Eigen::MatrixXd sub(values_.rows(), static_cast<Eigen::Index>(keep.size()));
  Eigen::VectorXd means(static_cast<Eigen::Index>(keep.size()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    sub.col(static_cast<Eigen::Index>(c)) = values_.col(keep[c]);
    means(static_cast<Eigen::Index>(c)) = col_means_(keep[c]);
    names.push_back(names_[static_cast<std::size_t>(keep[c])]);
  }
  SampleMatrix out(std::move(sub), std::move(names), false);
  out.centered_ = centered_;
  out.col_means_ = std::move(means);
  return out;
}

SampleMatrix load_samples(const std::filesystem::path& path, const BindingMap& map,
                          bool center) {
  Table t = read_table(path);
  std::size_t first_col = 0;
  std::string lead = t.header.empty() ? "" : t.header[0];
  for (auto& c : lead) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lead == "sample_id" || lead == "sample" || lead == "id") first_col = 1;

  std::map<std::string, std::size_t> col_of;
  for (std::size_t c = first_col; c < t.header.size(); ++c) {
    if (!col_of.emplace(t.header[c], c).second)
      throw ParseError("duplicate sample column '" + t.header[c] + "'");
  }

  std::vector<std::string> missing;
  for (const auto& name : map.lower_names())
    if (!col_of.count(name)) missing.push_back(name);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "sample table lacks " << missing.size() << " binding-map column(s):";
    for (const auto& m : missing) msg << ' ' << m;
    throw ValidationError(msg.str());
  }
  if (col_of.size() != static_cast<std::size_t>(map.q())) {
    std::ostringstream msg;
    msg << "sample table has columns absent from the binding map:";
    for (const auto& [name, c] : col_of) {
      bool known = false;
      for (const auto& n : map.lower_names())
        if (n == name) { known = true; break; }
      if (!known) msg << ' ' << name;
    }
    throw ValidationError(msg.str());
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(t.n_rows()), map.q());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    for (int j = 0; j < map.q(); ++j) {
      const auto& name = map.lower_names()[static_cast<std::size_t>(j)];
      const auto& cell = t.rows[r][col_of.at(name)];
      values(static_cast<Eigen::Index>(r), j) = parse_numeric(cell, r + 2, name);
    }
  }
  return SampleMatrix(std::move(values), map.lower_names(), center);
}

} // namespace latcor
