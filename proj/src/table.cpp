#include "bayesrake/table.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "bayesrake/error.hpp"

namespace bayesrake {

void RakingVariable::validate() const {
  if (levels.size() < 2)
    throw Error("variable '" + name + "' needs at least 2 levels");
  std::set<std::string> seen(levels.begin(), levels.end());
  if (seen.size() != levels.size())
    throw Error("variable '" + name + "' has duplicate level labels");
}

CellTable::CellTable(std::vector<RakingVariable> variables,
                     std::vector<long> counts)
    : vars_(std::move(variables)), counts_(std::move(counts)) {
  if (vars_.empty()) throw Error("cell table needs at least one variable");
  for (const auto& v : vars_) v.validate();

  const int K = static_cast<int>(vars_.size());
  dims_.resize(K);
  block_offsets_.resize(K);
  D_ = 0;
  J_ = 1;
  for (int k = 0; k < K; ++k) {
    dims_[k] = static_cast<int>(vars_[k].levels.size());
    block_offsets_[k] = D_;
    D_ += dims_[k];
    J_ *= dims_[k];
  }
  strides_.assign(K, 1);
  for (int k = K - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * dims_[k + 1];

  if (static_cast<int>(counts_.size()) != J_)
    throw Error("cell count vector has wrong length");
  n_total_ = 0;
  for (long c : counts_) {
    if (c < 0) throw Error("negative cell count");
    n_total_ += c;
  }
}

CellTable CellTable::empty(std::vector<RakingVariable> variables) {
  int J = 1;
  for (const auto& v : variables) J *= static_cast<int>(v.levels.size());
  return CellTable(std::move(variables), std::vector<long>(J, 0));
}

CellTable CellTable::build(const std::vector<RakingVariable>& variables,
                           const std::vector<std::vector<std::string>>& units) {
  if (variables.empty()) throw Error("cell table needs at least one variable");
  CellTable t = CellTable::empty(variables);
  std::vector<long> counts(t.J(), 0);
  std::vector<int> levels(t.K());
  for (size_t i = 0; i < units.size(); ++i) {
    const auto& row = units[i];
    if (row.size() != variables.size())
      throw ParseError("row " + std::to_string(i) + ": expected " +
                       std::to_string(variables.size()) + " values, got " +
                       std::to_string(row.size()));
    for (int k = 0; k < t.K(); ++k) {
      const int c = t.level_index(k, row[k]);
      if (c < 0)
        throw ParseError("row " + std::to_string(i) + ": unknown level '" +
                         row[k] + "' for variable '" + variables[k].name + "'");
      levels[k] = c;
    }
    ++counts[t.cell_index(levels)];
  }
  return CellTable(variables, std::move(counts));
}

Eigen::VectorXd CellTable::counts_vec() const {
  Eigen::VectorXd v(J_);
  for (int j = 0; j < J_; ++j) v[j] = static_cast<double>(counts_[j]);
  return v;
}

int CellTable::cell_index(const std::vector<int>& levels) const {
  int j = 0;
  for (int k = 0; k < K(); ++k) j += levels[k] * strides_[k];
  return j;
}

std::vector<int> CellTable::cell_levels(int j) const {
  std::vector<int> out(K());
  for (int k = 0; k < K(); ++k) out[k] = level_of(j, k);
  return out;
}

Eigen::VectorXd CellTable::indicator(int j) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(D_);
  for (int k = 0; k < K(); ++k) x[indicator_offset(k, level_of(j, k))] = 1.0;
  return x;
}

int CellTable::variable_index(const std::string& name) const {
  for (int k = 0; k < K(); ++k)
    if (vars_[k].name == name) return k;
  return -1;
}

int CellTable::level_index(int k, const std::string& label) const {
  const auto& lv = vars_[k].levels;
  auto it = std::find(lv.begin(), lv.end(), label);
  return it == lv.end() ? -1 : static_cast<int>(it - lv.begin());
}

int CellTable::cell_of(const std::vector<std::string>& labels) const {
  if (static_cast<int>(labels.size()) != K())
    throw ParseError("expected one label per variable");
  std::vector<int> levels(K());
  for (int k = 0; k < K(); ++k) {
    const int c = level_index(k, labels[k]);
    if (c < 0)
      throw ParseError("unknown level '" + labels[k] + "' for variable '" +
                       vars_[k].name + "'");
    levels[k] = c;
  }
  return cell_index(levels);
}

std::string CellTable::cell_label(int j) const {
  std::ostringstream os;
  for (int k = 0; k < K(); ++k) {
    if (k) os << '|';
    os << vars_[k].name << '=' << vars_[k].levels[level_of(j, k)];
  }
  return os.str();
}

int MarginSet::rows() const {
  int r = 0;
  for (const auto& v : values) r += static_cast<int>(v.size());
  return r;
}

Eigen::VectorXd MarginSet::stacked() const {
  Eigen::VectorXd out(rows());
  int at = 0;
  for (const auto& v : values) {
    out.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  }
  return out;
}

MarginSet MarginSet::singletons(const CellTable& table,
                                const std::vector<Eigen::VectorXd>& per_variable,
                                double N) {
  if (static_cast<int>(per_variable.size()) != table.K())
    throw Error("need one margin vector per variable");
  MarginSet m;
  m.N = N;
  for (int k = 0; k < table.K(); ++k) {
    if (per_variable[k].size() != table.levels(k))
      throw Error("margin vector length mismatch for variable '" +
                  table.variable(k).name + "'");
    if ((per_variable[k].array() < 0).any())
      throw Error("negative margin entry for variable '" +
                  table.variable(k).name + "'");
    m.terms.push_back(MarginTerm{{k}});
    m.values.push_back(per_variable[k]);
  }
  return m;
}

MarginConsistency check_margin_consistency(const MarginSet& margins) {
  MarginConsistency rep;
  rep.degenerate = margins.N == 0.0;
  const double tol = 1e-8 * std::max(margins.N, 1.0);
  for (const auto& v : margins.values) {
    const double total = v.sum();
    rep.term_totals.push_back(total);
    rep.max_abs_deviation =
        std::max(rep.max_abs_deviation, std::abs(total - margins.N));
  }
  rep.consistent = rep.max_abs_deviation <= tol;
  return rep;
}

namespace {

// Row index of cell j within term t's block (levels of the term's variables,
// lexicographic) and the block's level count.
int term_levels(const CellTable& table, const MarginTerm& term) {
  int d = 1;
  for (int k : term.vars) d *= table.levels(k);
  return d;
}

int term_row_of_cell(const CellTable& table, const MarginTerm& term, int j) {
  int r = 0;
  for (int k : term.vars) r = r * table.levels(k) + table.level_of(j, k);
  return r;
}

std::string term_name(const CellTable& table, const MarginTerm& term) {
  std::string s;
  for (size_t i = 0; i < term.vars.size(); ++i) {
    if (i) s += ':';
    s += table.variable(term.vars[i]).name;
  }
  return s;
}

std::string term_level_label(const CellTable& table, const MarginTerm& term,
                             int row) {
  std::vector<int> idx(term.vars.size());
  for (int i = static_cast<int>(term.vars.size()) - 1; i >= 0; --i) {
    const int d = table.levels(term.vars[i]);
    idx[i] = row % d;
    row /= d;
  }
  std::string s;
  for (size_t i = 0; i < term.vars.size(); ++i) {
    if (i) s += ':';
    s += table.variable(term.vars[i]).levels[idx[i]];
  }
  return s;
}

}  // namespace

LoadingMatrix LoadingMatrix::build(const CellTable& table) {
  std::vector<MarginTerm> terms;
  for (int k = 0; k < table.K(); ++k) terms.push_back(MarginTerm{{k}});
  return build(table, terms);
}

LoadingMatrix LoadingMatrix::build(const CellTable& table,
                                   const std::vector<MarginTerm>& terms) {
  if (terms.empty()) throw Error("loading matrix needs at least one term");
  for (const auto& t : terms) {
    if (t.vars.empty()) throw Error("empty margin term");
    for (int k : t.vars)
      if (k < 0 || k >= table.K()) throw Error("margin term variable out of range");
  }
  LoadingMatrix L;
  L.cols_ = table.J();
  L.n_terms_ = static_cast<int>(terms.size());

  std::vector<int> term_offset(terms.size());
  int at = 0;
  for (size_t t = 0; t < terms.size(); ++t) {
    term_offset[t] = at;
    const int d = term_levels(table, terms[t]);
    for (int r = 0; r < d; ++r)
      L.row_labels_.push_back(term_name(table, terms[t]) + "=" +
                              term_level_label(table, terms[t], r));
    at += d;
  }
  L.rows_ = at;

  L.col_rows_.resize(table.J());
  for (int j = 0; j < table.J(); ++j) {
    auto& rows = L.col_rows_[j];
    rows.reserve(terms.size());
    for (size_t t = 0; t < terms.size(); ++t)
      rows.push_back(term_offset[t] + term_row_of_cell(table, terms[t], j));
  }
  return L;
}

Eigen::VectorXd LoadingMatrix::apply(const Eigen::VectorXd& cells) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows_);
  for (int j = 0; j < cols_; ++j)
    for (int r : col_rows_[j]) out[r] += cells[j];
  return out;
}

Eigen::VectorXd LoadingMatrix::apply_transpose(
    const Eigen::VectorXd& margin) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cols_);
  for (int j = 0; j < cols_; ++j)
    for (int r : col_rows_[j]) out[j] += margin[r];
  return out;
}

Eigen::MatrixXd LoadingMatrix::dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int j = 0; j < cols_; ++j)
    for (int r : col_rows_[j]) M(r, j) = 1.0;
  return M;
}

Eigen::VectorXd independence_init(const MarginSet& margins,
                                  const CellTable& table) {
  if (margins.N <= 0.0) throw Error("independence init needs N > 0");
  Eigen::VectorXd out(table.J());
  for (int j = 0; j < table.J(); ++j) {
    double share = 1.0;
    for (size_t t = 0; t < margins.terms.size(); ++t) {
      const int r = term_row_of_cell(table, margins.terms[t], j);
      share *= margins.values[t][r] / margins.N;
    }
    out[j] = margins.N * share;
  }
  // Overlapping composite terms break the product-measure normalization;
  // rescale so the total is N in that case.
  bool overlapping = false;
  std::set<int> used;
  for (const auto& t : margins.terms)
    for (int k : t.vars)
      if (!used.insert(k).second) overlapping = true;
  if (overlapping) {
    const double total = out.sum();
    if (total <= 0.0) throw Error("degenerate composite margins");
    out *= margins.N / total;
  }
  return out;
}

}  // namespace bayesrake
