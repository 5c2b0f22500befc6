#include "latcor/binding.hpp"

#include "latcor/errors.hpp"
#include "latcor/table.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace latcor {

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty())
      throw ValidationError(std::string(what) + ": empty name");
    if (!seen.insert(n).second)
      throw ValidationError(std::string(what) + ": duplicate name '" + n + "'");
  }
}

std::string join(const std::vector<std::string>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out << (i ? ", " : "") << v[i];
  return out.str();
}

} // namespace

BindingMap::BindingMap(Eigen::MatrixXi entries,
                       std::vector<std::string> lower_names,
                       std::vector<std::string> higher_names)
    : entries_(std::move(entries)),
      lower_names_(std::move(lower_names)),
      higher_names_(std::move(higher_names)) {
  if (entries_.rows() == 0 || entries_.cols() == 0)
    throw ValidationError("binding map must have at least one row and one column");
  if (static_cast<Eigen::Index>(lower_names_.size()) != entries_.rows() ||
      static_cast<Eigen::Index>(higher_names_.size()) != entries_.cols())
    throw ValidationError("binding map name counts do not match matrix shape");
  require_unique(lower_names_, "lower-level variables");
  require_unique(higher_names_, "higher-level variables");

  row_degree_.assign(static_cast<std::size_t>(entries_.rows()), 0);
  std::vector<int> col_degree(static_cast<std::size_t>(entries_.cols()), 0);
  for (Eigen::Index j = 0; j < entries_.rows(); ++j) {
    for (Eigen::Index l = 0; l < entries_.cols(); ++l) {
      int v = entries_(j, l);
      if (v != 0 && v != 1)
        throw ValidationError("non-binary entry at (" + lower_names_[static_cast<std::size_t>(j)] +
                              ", " + higher_names_[static_cast<std::size_t>(l)] + "): " +
                              std::to_string(v));
      row_degree_[static_cast<std::size_t>(j)] += v;
      col_degree[static_cast<std::size_t>(l)] += v;
    }
  }
  std::vector<std::string> orphans;
  for (Eigen::Index j = 0; j < entries_.rows(); ++j)
    if (row_degree_[static_cast<std::size_t>(j)] == 0)
      orphans.push_back(lower_names_[static_cast<std::size_t>(j)]);
  if (!orphans.empty())
    throw ValidationError("orphan lower-level variable (no memberships): " + join(orphans));
  std::vector<std::string> empty_cols;
  for (Eigen::Index l = 0; l < entries_.cols(); ++l)
    if (col_degree[static_cast<std::size_t>(l)] == 0)
      empty_cols.push_back(higher_names_[static_cast<std::size_t>(l)]);
  if (!empty_cols.empty())
    throw ValidationError("higher-level variable with no members: " + join(empty_cols));
}

std::vector<int> BindingMap::members_of(int higher) const {
  std::vector<int> out;
  for (int j = 0; j < q(); ++j)
    if (entries_(j, higher) != 0) out.push_back(j);
  return out;
}

bool UniqueSets::uvc_holds() const { return uvc_violations().empty(); }

std::vector<int> UniqueSets::uvc_violations() const {
  std::vector<int> bad;
  for (int l = 0; l < p(); ++l)
    if (size_of(l) < 2) bad.push_back(l);
  return bad;
}

UniqueSets derive_unique_sets(const BindingMap& map) {
  UniqueSets out;
  out.sets.assign(static_cast<std::size_t>(map.p()), {});
  for (int j = 0; j < map.q(); ++j) {
    if (map.row_degree(j) >= 2) {
      out.shared.push_back(j);
      continue;
    }
    for (int l = 0; l < map.p(); ++l) {
      if (map.bound(j, l)) {
        out.sets[static_cast<std::size_t>(l)].push_back(j);
        break;
      }
    }
  }
  return out;
}

UvcResult check_uvc(const BindingMap& map, const UniqueSets& sets, UvcPolicy policy) {
  auto violations = sets.uvc_violations();
  if (violations.empty())
    return UvcResult{map, sets, {}, {}};

  std::vector<std::string> bad_names;
  for (int l : violations)
    bad_names.push_back(map.higher_names()[static_cast<std::size_t>(l)]);

  if (policy == UvcPolicy::strict)
    throw ValidationError("UVC violated: fewer than two unique members for: " + join(bad_names));

  // drop: remove offending columns, then rows left without any membership
  std::vector<int> keep_cols;
  for (int l = 0; l < map.p(); ++l)
    if (!std::binary_search(violations.begin(), violations.end(), l))
      keep_cols.push_back(l);
  if (keep_cols.empty())
    throw ValidationError("UVC drop policy removed every higher-level variable");

  std::vector<int> keep_rows;
  std::vector<std::string> dropped_lower;
  for (int j = 0; j < map.q(); ++j) {
    bool has_membership = false;
    for (int l : keep_cols)
      if (map.bound(j, l)) { has_membership = true; break; }
    if (has_membership)
      keep_rows.push_back(j);
    else
      dropped_lower.push_back(map.lower_names()[static_cast<std::size_t>(j)]);
  }

  Eigen::MatrixXi entries(keep_rows.size(), keep_cols.size());
  std::vector<std::string> lower, higher;
  for (std::size_t r = 0; r < keep_rows.size(); ++r) {
    lower.push_back(map.lower_names()[static_cast<std::size_t>(keep_rows[r])]);
    for (std::size_t c = 0; c < keep_cols.size(); ++c)
      entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          map.entries()(keep_rows[r], keep_cols[c]);
  }
  for (int l : keep_cols)
    higher.push_back(map.higher_names()[static_cast<std::size_t>(l)]);

  BindingMap reduced(std::move(entries), std::move(lower), std::move(higher));
  UniqueSets reduced_sets = derive_unique_sets(reduced);
  // Removing columns can only grow the unique sets of retained columns, so a
  // single pass suffices; re-check defensively all the same.
  if (!reduced_sets.uvc_holds())
    throw ValidationError("UVC still violated after drop; binding map is degenerate");
  return UvcResult{std::move(reduced), std::move(reduced_sets), std::move(bad_names),
                   std::move(dropped_lower)};
}

namespace {

BindingMap from_sparse(const Table& t) {
  // preserve first-appearance order of names
  std::vector<std::string> lower, higher;
  std::map<std::string, int> lower_idx, higher_idx;
  std::vector<std::pair<int, int>> memberships;
  std::set<std::pair<int, int>> seen;
  for (const auto& row : t.rows) {
    const auto& lo = row[0];
    const auto& hi = row[1];
    if (lo.empty() || hi.empty())
      throw ParseError("sparse binding list: empty name");
    auto [it_l, fresh_l] = lower_idx.try_emplace(lo, static_cast<int>(lower.size()));
    if (fresh_l) lower.push_back(lo);
    auto [it_h, fresh_h] = higher_idx.try_emplace(hi, static_cast<int>(higher.size()));
    if (fresh_h) higher.push_back(hi);
    if (seen.emplace(it_l->second, it_h->second).second)
      memberships.emplace_back(it_l->second, it_h->second);
  }
  Eigen::MatrixXi entries = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(lower.size()),
                                                  static_cast<Eigen::Index>(higher.size()));
  for (auto [j, l] : memberships) entries(j, l) = 1;
  return BindingMap(std::move(entries), std::move(lower), std::move(higher));
}

BindingMap from_dense(const Table& t) {
  if (t.n_cols() < 2)
    throw ParseError("dense binding table needs a name column and at least one higher-level column");
  std::vector<std::string> higher(t.header.begin() + 1, t.header.end());
  std::vector<std::string> lower;
  Eigen::MatrixXi entries(static_cast<Eigen::Index>(t.n_rows()),
                          static_cast<Eigen::Index>(higher.size()));
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    lower.push_back(t.rows[r][0]);
    for (std::size_t c = 1; c < t.n_cols(); ++c) {
      const auto& cell = t.rows[r][c];
      if (cell == "0")
        entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = 0;
      else if (cell == "1")
        entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = 1;
      else
        throw ParseError("dense binding table row " + std::to_string(r + 2) +
                         ", column '" + t.header[c] + "': expected 0 or 1, got '" + cell + "'");
    }
  }
  return BindingMap(std::move(entries), std::move(lower), std::move(higher));
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

} // namespace

BindingMap load_binding_map(const std::filesystem::path& path) {
  Table t = read_table(path);
  if (t.n_cols() == 2 && lowercase(t.header[0]) == "lower" && lowercase(t.header[1]) == "higher")
    return from_sparse(t);
  return from_dense(t);
}

void write_binding_map_sparse(const std::filesystem::path& path, const BindingMap& map) {
  std::ostringstream out;
  out << "lower,higher\n";
  for (int j = 0; j < map.q(); ++j)
    for (int l = 0; l < map.p(); ++l)
      if (map.bound(j, l))
        out << map.lower_names()[static_cast<std::size_t>(j)] << ','
            << map.higher_names()[static_cast<std::size_t>(l)] << '\n';
  write_text(path, out.str());
}

} // namespace latcor
