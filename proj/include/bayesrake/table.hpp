#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bayesrake {

// One raking variable: a name plus an ordered list of level labels. The first
// level is the reference level in regression designs.
struct RakingVariable {
  std::string name;
  std::vector<std::string> levels;

  void validate() const;  // throws on duplicate labels or fewer than 2 levels
};

// A margin term identifies the cross-classification a control total refers
// to: a single variable for classical raking, or several variables when the
// control totals are joint counts (e.g. raking on a two-way interaction).
struct MarginTerm {
  std::vector<int> vars;  // indices into the table's variable list

  bool operator==(const MarginTerm&) const = default;
};

// Full cross-tabulation of the raking variables. Cells are ordered
// lexicographically in level indices (last variable fastest), empty cells are
// materialized with count zero, and the layout is immutable once built.
class CellTable {
 public:
  CellTable(std::vector<RakingVariable> variables, std::vector<long> counts);

  // Cross-tabulate per-unit level labels. Each row carries one label per
  // variable, in variable order. Unknown labels are rejected with the
  // offending row index.
  static CellTable build(const std::vector<RakingVariable>& variables,
                         const std::vector<std::vector<std::string>>& units);

  // All-zero table with the same layout machinery.
  static CellTable empty(std::vector<RakingVariable> variables);

  int K() const { return static_cast<int>(vars_.size()); }
  int J() const { return J_; }
  int D() const { return D_; }  // sum of level counts
  long n() const { return n_total_; }

  const std::vector<RakingVariable>& variables() const { return vars_; }
  const RakingVariable& variable(int k) const { return vars_[k]; }
  int levels(int k) const { return static_cast<int>(vars_[k].levels.size()); }

  long count(int j) const { return counts_[j]; }
  const std::vector<long>& counts() const { return counts_; }
  Eigen::VectorXd counts_vec() const;

  // Level index of variable k in cell j.
  int level_of(int j, int k) const { return (j / strides_[k]) % dims_[k]; }
  // Cell index from level indices (one per variable).
  int cell_index(const std::vector<int>& levels) const;
  std::vector<int> cell_levels(int j) const;

  // Offset of (variable k, level c) in the stacked D-vector of indicators.
  int indicator_offset(int k, int c) const { return block_offsets_[k] + c; }
  // 0/1 indicator vector X^(j), length D, one 1 per variable block.
  Eigen::VectorXd indicator(int j) const;

  int variable_index(const std::string& name) const;  // -1 if absent
  int level_index(int k, const std::string& label) const;  // -1 if absent
  // Cell index from one label per variable; throws on unknown labels.
  int cell_of(const std::vector<std::string>& labels) const;
  std::string cell_label(int j) const;

 private:
  std::vector<RakingVariable> vars_;
  std::vector<long> counts_;
  std::vector<int> dims_;
  std::vector<int> strides_;        // lexicographic: last variable fastest
  std::vector<int> block_offsets_;  // start of each variable's indicator block
  int J_ = 0;
  int D_ = 0;
  long n_total_ = 0;
};

// Known control totals. One vector per margin term (levels of the term's
// cross-classification, lexicographic), plus the population total N.
struct MarginSet {
  std::vector<MarginTerm> terms;
  std::vector<Eigen::VectorXd> values;  // values[t] has prod_k d_k entries
  double N = 0.0;

  int rows() const;                 // total number of margin rows
  Eigen::VectorXd stacked() const;  // all terms concatenated

  // Classical margins: one singleton term per table variable.
  static MarginSet singletons(const CellTable& table,
                              const std::vector<Eigen::VectorXd>& per_variable,
                              double N);
};

// Per-term totals and deviations from N; inconsistent control totals are
// flagged, not repaired.
struct MarginConsistency {
  std::vector<double> term_totals;
  double max_abs_deviation = 0.0;
  bool consistent = true;
  bool degenerate = false;  // N == 0
};

MarginConsistency check_margin_consistency(const MarginSet& margins);

// Sparse 0/1 matrix mapping the J-vector of cell counts to the stacked margin
// vector. Each column has exactly one nonzero row per margin term.
class LoadingMatrix {
 public:
  static LoadingMatrix build(const CellTable& table);  // singleton terms
  static LoadingMatrix build(const CellTable& table,
                             const std::vector<MarginTerm>& terms);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int terms() const { return n_terms_; }

  // Row indices hit by cell j (one per term).
  const std::vector<int>& column_rows(int j) const { return col_rows_[j]; }
  const std::string& row_label(int r) const { return row_labels_[r]; }

  Eigen::VectorXd apply(const Eigen::VectorXd& cells) const;            // L v
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& margin) const; // L'm
  Eigen::MatrixXd dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int n_terms_ = 0;
  std::vector<std::vector<int>> col_rows_;  // per cell, one row per term
  std::vector<std::string> row_labels_;
};

// Product-of-margins initial table: N * prod_t (margin share of cell j in
// term t). Satisfies every single-variable margin by construction; for
// overlapping composite terms it is only approximate.
Eigen::VectorXd independence_init(const MarginSet& margins,
                                  const CellTable& table);

}  // namespace bayesrake
