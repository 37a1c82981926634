#pragma once

// Zone x position accuracy breakdowns, accuracy gaps, clause gaps and
// one-sided Fisher-Pitman permutation tests over probe correctness.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "scope_probe/dataset.hpp"
#include "scope_probe/probe.hpp"
#include "scope_probe/scope.hpp"

namespace scope_probe {

// One evaluated piece from one probe run.
struct EvalRecord {
  std::size_t run = 0;
  std::string sentence_id;
  std::size_t piece = 0;
  std::optional<Zone> zone;
  int position = 0;
  bool correct = false;
  bool flagged = false;
  std::optional<bool> in_clause;

  nlohmann::json to_json() const;
  static EvalRecord from_json(const nlohmann::json& j);
};

// Pairs evaluated examples with their correctness bits.
std::vector<EvalRecord> make_records(std::span<const ProbeExample> examples,
                                     const EvalResult& result, std::size_t run);

void write_records(std::ostream& out, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records(std::istream& in);

struct Cell {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
  bool operator==(const Cell&) const = default;
};

using CellKey = std::pair<int, Zone>;  // (position, zone)

struct BreakdownReport {
  int window = 8;
  // (position, zone) -> run -> cell; empty cells are absent.
  std::map<CellKey, std::map<std::size_t, Cell>> cells;
  std::size_t counted = 0;           // records inside the window
  std::size_t outside_window = 0;
  std::size_t excluded_flagged = 0;

  std::vector<std::size_t> runs() const;
  // Mean of per-run accuracies, over the runs where the cell exists.
  std::optional<double> mean_accuracy(int position, Zone zone) const;
  std::optional<Cell> cell(int position, Zone zone, std::size_t run) const;

  nlohmann::json to_json() const;
};

// Throws ValidationError on a record without a zone, a zone inconsistent
// with the sign of its position, or a non-IN record at position 1 or 2.
BreakdownReport breakdown(std::span<const EvalRecord> records, int window = 8);

struct GapResult {
  double mean = 0.0;   // accuracy points
  double stdev = 0.0;  // population stdev over runs
  std::vector<double> per_run;
  std::vector<int> covered;  // canonical positions with both cells in every run
  std::vector<int> missing;
  std::size_t coverage() const { return covered.size(); }
  std::string coverage_note() const;

  nlohmann::json to_json() const;
};

// PRE_IN - PRE at -8..-1 and IN - POST at 3..8.
std::vector<int> canonical_positions();

// Mean over the covered canonical positions per run, then mean and stdev
// over runs. Throws DataError if no canonical position is covered.
GapResult accuracy_gap(const BreakdownReport& report);

struct PermTestResult {
  std::string comparison;
  double statistic = 0.0;  // mean(a) - mean(b)
  double p_value = 1.0;
  std::size_t permutations = 5000;
  double alpha = 0.001;
  std::size_t n_a = 0;
  std::size_t n_b = 0;

  bool significant() const { return p_value < alpha; }
  nlohmann::json to_json() const;
};

// One-sided: p is the share of random reassignments of the pooled values
// with a statistic at least the observed one. Throws DataError on an
// empty vector.
PermTestResult perm_test(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                         std::size_t n_perm = 5000, std::uint64_t seed = 0,
                         std::string comparison = "", double alpha = 0.001);

// Per run and canonical position: PRE_IN vs PRE, IN vs POST. Each test
// draws from its own stream derived from `seed`.
std::vector<PermTestResult> zone_tests(std::span<const EvalRecord> records,
                                       int window = 8, std::size_t n_perm = 5000,
                                       std::uint64_t seed = 0, double alpha = 0.001);

struct ClauseGap {
  double in_accuracy = 0.0;
  double out_accuracy = 0.0;
  double gap = 0.0;
  std::size_t n_in = 0;
  std::size_t n_out = 0;

  nlohmann::json to_json() const;
};

// Records within |position| <= window; throws DataError "no records in
// window" when none remain, ValidationError without an in/out flag.
ClauseGap clause_gap(std::span<const EvalRecord> records, int window = 8);

// CSV "position,zone,accuracy,n,run", one row per cell per run.
void emit_plot_data(const BreakdownReport& report, std::ostream& out);
void emit_plot_data(const BreakdownReport& report, const std::string& path);
// Rebuilds the cells of a report from its CSV.
BreakdownReport read_plot_data(std::istream& in, int window = 8);

}  // namespace scope_probe
