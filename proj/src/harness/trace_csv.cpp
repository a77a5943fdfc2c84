#include "klrl/harness/trace_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace klrl::harness {

namespace {

const std::vector<std::string>& base_columns() {
  static const std::vector<std::string> cols{"t",           "per_round_gap",       "cumulative_regret",
                                             "bonus_at_play", "uncertainty_at_play", "eluder_sum",
                                             "optimism_violated"};
  return cols;
}

std::vector<std::string> columns_for(bool episodic) {
  std::vector<std::string> cols = base_columns();
  if (episodic) cols.emplace_back("sum_sq_bellman_error");
  return cols;
}

void append_number(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<size_t>(n));
}

std::string table_to_csv(const TraceTable& table) {
  std::string out;
  for (size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      append_number(out, row[c]);
    }
    out += '\n';
  }
  return out;
}

TraceTable trace_to_table(const RegretTrace& trace, bool episodic) {
  if (episodic && trace.sum_sq_bellman_error.size() != trace.per_round_gap.size()) {
    throw InvalidInput("episodic trace lacks Bellman error entries");
  }
  TraceTable table;
  table.columns = columns_for(episodic);
  table.rows.reserve(trace.per_round_gap.size());
  for (size_t i = 0; i < trace.per_round_gap.size(); ++i) {
    std::vector<double> row{static_cast<double>(i + 1),      trace.per_round_gap[i],
                            trace.cumulative[i],             trace.bonus_at_play[i],
                            trace.uncertainty_at_play[i],    trace.eluder_sum_curve[i],
                            static_cast<double>(trace.optimism_flags[i])};
    if (episodic) row.push_back(trace.sum_sq_bellman_error[i]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

TraceTable mean_table(const std::vector<TraceTable>& tables) {
  if (tables.empty()) throw InvalidInput("aggregate: no traces");
  TraceTable out;
  out.columns = tables.front().columns;
  size_t length = tables.front().rows.size();
  for (const TraceTable& t : tables) {
    if (t.columns != out.columns) throw InvalidInput("aggregate: traces have different columns");
    length = std::min(length, t.rows.size());
  }
  const auto n = static_cast<double>(tables.size());
  for (size_t r = 0; r < length; ++r) {
    std::vector<double> row(out.columns.size(), 0.0);
    for (size_t c = 0; c < row.size(); ++c) {
      double total = 0.0;
      for (const TraceTable& t : tables) total += t.rows[r][c];
      row[c] = c == 0 ? tables.front().rows[r][0] : total / n;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Index TraceTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<Index>(it - columns.begin());
}

std::vector<double> TraceTable::values(const std::string& name) const {
  const Index c = column(name);
  if (c < 0) throw InvalidInput("trace has no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[static_cast<size_t>(c)]);
  return out;
}

std::string trace_header(bool episodic) {
  std::string out;
  for (const std::string& c : columns_for(episodic)) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string trace_to_csv(const RegretTrace& trace, bool episodic) {
  return table_to_csv(trace_to_table(trace, episodic));
}

std::string aggregate_to_csv(const std::vector<RegretTrace>& traces, bool episodic) {
  std::vector<TraceTable> tables;
  tables.reserve(traces.size());
  for (const RegretTrace& t : traces) tables.push_back(trace_to_table(t, episodic));
  return table_to_csv(mean_table(tables));
}

std::string aggregate_tables_to_csv(const std::vector<TraceTable>& tables) {
  return table_to_csv(mean_table(tables));
}

TraceTable parse_trace_csv(const std::string& text) {
  TraceTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trace CSV is empty");
  std::istringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc() || res.ptr != comma) {
        throw InvalidInput("trace CSV line " + std::to_string(line_no) + ": malformed number");
      }
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != table.columns.size()) {
      throw InvalidInput("trace CSV line " + std::to_string(line_no) + ": wrong column count");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

TraceTable read_trace_csv(const std::string& path) { return parse_trace_csv(read_file(path)); }

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace klrl::harness
