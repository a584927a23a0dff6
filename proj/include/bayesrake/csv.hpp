#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bayesrake/sampler.hpp"
#include "bayesrake/table.hpp"

namespace bayesrake {

// Microdata CSV: header of variable names (plus an optional `outcome`
// column), one row of level labels per unit.
struct Microdata {
  std::vector<std::string> columns;  // outcome column excluded
  std::vector<std::vector<std::string>> rows;
  bool has_outcome = false;
  Eigen::VectorXd outcome;
};

Microdata read_microdata_csv(const std::string& path);

// Margins CSV: variable,level,count. Composite control totals name their
// term as "var1:var2" with levels "l1:l2". Variable and level order follow
// first appearance; combinations absent from the file count as zero.
struct MarginFile {
  std::vector<RakingVariable> variables;
  std::vector<std::vector<std::string>> term_names;  // per term, variable names
  // raw rows per term: (level label, count)
  std::vector<std::vector<std::pair<std::string, double>>> term_rows;
};

MarginFile read_margins_csv(const std::string& path);

// Resolve a margin file against a concrete table layout.
MarginSet assemble_margins(const MarginFile& file, const CellTable& table);

void write_draws_csv(const std::string& path, const Draws& draws);
Draws read_draws_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace bayesrake
