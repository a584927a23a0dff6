#include "bayesrake/csv.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "bayesrake/error.hpp"

namespace bayesrake {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  return in;
}

}  // namespace

Microdata read_microdata_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty microdata file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);

  Microdata md;
  int outcome_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "outcome") {
      outcome_col = static_cast<int>(i);
      md.has_outcome = true;
    } else {
      md.columns.push_back(header[i]);
    }
  }

  std::vector<double> ys;
  size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(row_index) + " of '" + path +
                       "': expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    std::vector<std::string> values;
    for (size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<int>(i) == outcome_col) {
        try {
          ys.push_back(std::stod(fields[i]));
        } catch (const std::exception&) {
          throw ParseError("row " + std::to_string(row_index) +
                           ": non-numeric outcome '" + fields[i] + "'");
        }
      } else {
        values.push_back(fields[i]);
      }
    }
    md.rows.push_back(std::move(values));
    ++row_index;
  }
  if (md.has_outcome)
    md.outcome = Eigen::Map<Eigen::VectorXd>(
        ys.data(), static_cast<Eigen::Index>(ys.size()));
  return md;
}

MarginFile read_margins_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty margins file '" + path + "'");
  const auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "variable" || header[1] != "level" ||
      header[2] != "count")
    throw ParseError("margins file '" + path +
                     "' must have header variable,level,count");

  MarginFile mf;
  std::map<std::string, int> var_index;
  std::map<std::string, int> term_index;

  size_t row_idx = 1;
  while (std::getline(in, line)) {
    ++row_idx;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError("margins row " + std::to_string(row_idx) +
                       ": want 3 fields");
    const std::string term_label = fields[0];
    const std::string level_label = fields[1];
    double count = 0.0;
    try {
      count = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("margins row " + std::to_string(row_idx) +
                       ": non-numeric count '" + fields[2] + "'");
    }

    const auto var_names = split_on(term_label, ':');
    const auto level_parts = split_on(level_label, ':');
    if (var_names.size() != level_parts.size())
      throw ParseError("margins row " + std::to_string(row_idx) + ": level '" +
                       level_label + "' does not match term '" + term_label +
                       "'");

    for (size_t i = 0; i < var_names.size(); ++i) {
      auto it = var_index.find(var_names[i]);
      if (it == var_index.end()) {
        var_index.emplace(var_names[i], static_cast<int>(mf.variables.size()));
        mf.variables.push_back(RakingVariable{var_names[i], {level_parts[i]}});
      } else {
        auto& levels = mf.variables[it->second].levels;
        if (std::find(levels.begin(), levels.end(), level_parts[i]) ==
            levels.end())
          levels.push_back(level_parts[i]);
      }
    }

    auto it = term_index.find(term_label);
    if (it == term_index.end()) {
      term_index.emplace(term_label, static_cast<int>(mf.term_names.size()));
      mf.term_names.push_back(var_names);
      mf.term_rows.emplace_back();
      it = term_index.find(term_label);
    }
    mf.term_rows[it->second].emplace_back(level_label, count);
  }
  if (mf.variables.empty())
    throw ParseError("margins file '" + path + "' has no rows");
  return mf;
}

MarginSet assemble_margins(const MarginFile& file, const CellTable& table) {
  MarginSet m;
  for (size_t t = 0; t < file.term_names.size(); ++t) {
    MarginTerm term;
    int rows = 1;
    for (const auto& name : file.term_names[t]) {
      const int k = table.variable_index(name);
      if (k < 0) throw ParseError("margin variable '" + name + "' not in table");
      term.vars.push_back(k);
      rows *= table.levels(k);
    }
    Eigen::VectorXd value = Eigen::VectorXd::Zero(rows);
    for (const auto& [label, count] : file.term_rows[t]) {
      const auto parts = split_on(label, ':');
      int r = 0;
      for (size_t i = 0; i < term.vars.size(); ++i) {
        const int c = table.level_index(term.vars[i], parts[i]);
        if (c < 0)
          throw ParseError("margin level '" + label + "' has unknown label '" +
                           parts[i] + "'");
        r = r * table.levels(term.vars[i]) + c;
      }
      value[r] += count;
    }
    if ((value.array() < 0).any())
      throw ParseError("negative margin count");
    m.terms.push_back(std::move(term));
    m.values.push_back(std::move(value));
  }
  m.N = m.values.front().sum();
  return m;
}

void write_draws_csv(const std::string& path, const Draws& draws) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "chain,iter";
  for (int k = 0; k < draws.dim; ++k) {
    out << ',';
    out << (k < static_cast<int>(draws.names.size()) ? draws.names[k]
                                                     : "x" + std::to_string(k));
  }
  out << '\n';
  out << std::setprecision(17);
  for (int c = 0; c < draws.chains; ++c)
    for (int i = 0; i < draws.iters; ++i) {
      out << c << ',' << i;
      for (int k = 0; k < draws.dim; ++k) out << ',' << draws.chain_draws[c](i, k);
      out << '\n';
    }
}

Draws read_draws_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty draws file '" + path + "'");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iter")
    throw ParseError("draws file must start with chain,iter columns");

  Draws d;
  d.dim = static_cast<int>(header.size()) - 2;
  d.names.assign(header.begin() + 2, header.end());
  std::vector<std::vector<Eigen::VectorXd>> rows_by_chain;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != d.dim + 2)
      throw ParseError("draws row width mismatch");
    const int chain = std::stoi(fields[0]);
    if (chain < 0 || chain > 100000) throw ParseError("bad chain index");
    if (chain >= static_cast<int>(rows_by_chain.size()))
      rows_by_chain.resize(chain + 1);
    Eigen::VectorXd x(d.dim);
    for (int k = 0; k < d.dim; ++k) x[k] = std::stod(fields[k + 2]);
    rows_by_chain[chain].push_back(std::move(x));
  }
  if (rows_by_chain.empty()) throw ParseError("draws file has no rows");
  d.chains = static_cast<int>(rows_by_chain.size());
  d.iters = static_cast<int>(rows_by_chain.front().size());
  for (const auto& rows : rows_by_chain)
    if (static_cast<int>(rows.size()) != d.iters)
      throw ParseError("chains have unequal lengths");
  for (const auto& rows : rows_by_chain) {
    Eigen::MatrixXd m(d.iters, d.dim);
    for (int i = 0; i < d.iters; ++i) m.row(i) = rows[i];
    d.chain_draws.push_back(std::move(m));
  }
  d.stats.assign(d.chains, ChainStats{});
  return d;
}

}  // namespace bayesrake
