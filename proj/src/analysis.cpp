#include "scope_probe/analysis.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "scope_probe/errors.hpp"
#include "scope_probe/random.hpp"

namespace scope_probe {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_stdev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

// Zone pairs compared at each canonical position: (higher, lower).
std::pair<Zone, Zone> compared_zones(int position) {
  return position < 0 ? std::pair{Zone::PreIn, Zone::Pre} : std::pair{Zone::In, Zone::Post};
}

void check_record(const EvalRecord& r) {
  if (!r.zone)
    throw ValidationError("record for " + r.sentence_id + " piece " +
                          std::to_string(r.piece) + " has no zone");
  const auto z = *r.zone;
  const bool left = z == Zone::Pre || z == Zone::PreIn;
  const bool right = z == Zone::In || z == Zone::Post;
  if ((left && r.position >= 0) || (right && r.position <= 0) ||
      (z == Zone::Not && r.position != 0))
    throw ValidationError("zone " + std::string(to_string(z)) + " at position " +
                          std::to_string(r.position) + " in " + r.sentence_id);
  if ((r.position == 1 || r.position == 2) && z != Zone::In)
    throw ValidationError("position " + std::to_string(r.position) + " must be IN, found " +
                          std::string(to_string(z)) + " in " + r.sentence_id);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json EvalRecord::to_json() const {
  json j = {{"run", run}, {"sentence_id", sentence_id}, {"piece", piece},
            {"position", position}, {"correct", correct}};
  if (zone) j["zone"] = scope_probe::to_string(*zone);
  if (flagged) j["flagged"] = true;
  if (in_clause) j["in_clause"] = *in_clause;
  return j;
}

EvalRecord EvalRecord::from_json(const json& j) {
  EvalRecord r;
  r.run = j.at("run").get<std::size_t>();
  r.sentence_id = j.value("sentence_id", "");
  r.piece = j.value("piece", std::size_t{0});
  r.position = j.at("position").get<int>();
  r.correct = j.at("correct").get<bool>();
  if (j.contains("zone")) r.zone = zone_from_string(j["zone"].get<std::string>());
  r.flagged = j.value("flagged", false);
  if (j.contains("in_clause")) r.in_clause = j["in_clause"].get<bool>();
  return r;
}

std::vector<EvalRecord> make_records(std::span<const ProbeExample> examples,
                                     const EvalResult& result, std::size_t run) {
  if (examples.size() != result.correct.size())
    throw ValidationError("evaluated " + std::to_string(result.correct.size()) +
                          " examples, expected " + std::to_string(examples.size()));
  std::vector<EvalRecord> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    out.push_back({run, ex.sentence_id, ex.piece, ex.zone, ex.position.value_or(0),
                   result.correct[i] != 0, ex.flagged, ex.in_clause});
  }
  return out;
}

void write_records(std::ostream& out, std::span<const EvalRecord> records) {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<EvalRecord> read_records(std::istream& in) {
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(EvalRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

// --- breakdown -------------------------------------------------------------

std::vector<std::size_t> BreakdownReport::runs() const {
  std::set<std::size_t> rs;
  for (const auto& [key, by_run] : cells)
    for (const auto& [run, cell] : by_run) rs.insert(run);
  return {rs.begin(), rs.end()};
}

std::optional<double> BreakdownReport::mean_accuracy(int position, Zone zone) const {
  auto it = cells.find({position, zone});
  if (it == cells.end() || it->second.empty()) return std::nullopt;
  std::vector<double> accs;
  for (const auto& [run, cell] : it->second) accs.push_back(cell.accuracy());
  return mean_of(accs);
}

std::optional<Cell> BreakdownReport::cell(int position, Zone zone, std::size_t run) const {
  auto it = cells.find({position, zone});
  if (it == cells.end()) return std::nullopt;
  auto c = it->second.find(run);
  if (c == it->second.end()) return std::nullopt;
  return c->second;
}

json BreakdownReport::to_json() const {
  json rows = json::array();
  for (const auto& [key, by_run] : cells) {
    json per_run = json::object();
    for (const auto& [run, cell] : by_run)
      per_run[std::to_string(run)] = {{"n", cell.n}, {"correct", cell.correct},
                                      {"accuracy", cell.accuracy()}};
    rows.push_back({{"position", key.first},
                    {"zone", scope_probe::to_string(key.second)},
                    {"accuracy", *mean_accuracy(key.first, key.second)},
                    {"runs", per_run}});
  }
  return {{"window", window},
          {"counted", counted},
          {"outside_window", outside_window},
          {"excluded_flagged", excluded_flagged},
          {"cells", rows}};
}

BreakdownReport breakdown(std::span<const EvalRecord> records, int window) {
  if (window < 1) throw ValidationError("window must be positive");
  BreakdownReport report;
  report.window = window;
  for (const auto& r : records) {
    check_record(r);
    if (r.flagged) {
      ++report.excluded_flagged;
      continue;
    }
    if (std::abs(r.position) > window) {
      ++report.outside_window;
      continue;
    }
    auto& cell = report.cells[{r.position, *r.zone}][r.run];
    ++cell.n;
    cell.correct += r.correct ? 1 : 0;
    ++report.counted;
  }
  return report;
}

// --- accuracy gap ----------------------------------------------------------

std::vector<int> canonical_positions() {
  std::vector<int> out;
  for (int p = -8; p <= -1; ++p) out.push_back(p);
  for (int p = 3; p <= 8; ++p) out.push_back(p);
  return out;
}

std::string GapResult::coverage_note() const {
  std::string note = std::to_string(covered.size()) + " of 14 canonical positions covered";
  if (!missing.empty()) {
    note += "; missing";
    for (int p : missing) note += " " + std::to_string(p);
  }
  return note;
}

json GapResult::to_json() const {
  return {{"gap", mean},         {"stdev", stdev},
          {"per_run", per_run},  {"covered", covered},
          {"missing", missing},  {"coverage", coverage()},
          {"note", coverage_note()}};
}

GapResult accuracy_gap(const BreakdownReport& report) {
  GapResult g;
  const auto runs = report.runs();
  for (int p : canonical_positions()) {
    if (std::abs(p) > report.window) {
      g.missing.push_back(p);
      continue;
    }
    const auto [hi, lo] = compared_zones(p);
    bool all = !runs.empty();
    for (auto run : runs)
      all = all && report.cell(p, hi, run) && report.cell(p, lo, run);
    (all ? g.covered : g.missing).push_back(p);
  }
  if (g.covered.empty()) throw DataError("no canonical position has both zones populated");
  for (auto run : runs) {
    double sum = 0.0;
    for (int p : g.covered) {
      const auto [hi, lo] = compared_zones(p);
      sum += report.cell(p, hi, run)->accuracy() - report.cell(p, lo, run)->accuracy();
    }
    g.per_run.push_back(100.0 * sum / static_cast<double>(g.covered.size()));
  }
  g.mean = mean_of(g.per_run);
  g.stdev = population_stdev(g.per_run);
  return g;
}

// --- permutation test ------------------------------------------------------

json PermTestResult::to_json() const {
  return {{"comparison", comparison}, {"statistic", statistic},
          {"p_value", p_value},       {"permutations", permutations},
          {"alpha", alpha},           {"significant", significant()},
          {"n_a", n_a},               {"n_b", n_b}};
}

PermTestResult perm_test(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                         std::size_t n_perm, std::uint64_t seed, std::string comparison,
                         double alpha) {
  if (a.empty() || b.empty()) throw DataError("permutation test needs non-empty samples");
  if (n_perm == 0) throw DataError("permutation count must be positive");
  PermTestResult res;
  res.comparison = std::move(comparison);
  res.permutations = n_perm;
  res.alpha = alpha;
  res.n_a = a.size();
  res.n_b = b.size();

  std::vector<std::uint8_t> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::size_t ones_a = 0, ones = 0;
  for (auto v : a) ones_a += v ? 1 : 0;
  for (auto v : pooled) ones += v ? 1 : 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  res.statistic = ones_a / na - static_cast<double>(ones - ones_a) / nb;

  // mean(a) - mean(b) increases with the number of ones drawn into a, so
  // comparing that count is exact.
  Rng rng(seed);
  std::size_t hits = 0;
  const auto n = pooled.size();
  for (std::size_t k = 0; k < n_perm; ++k) {
    std::size_t drawn = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::swap(pooled[i], pooled[i + rng.below(n - i)]);
      drawn += pooled[i] ? 1 : 0;
    }
    if (drawn >= ones_a) ++hits;
  }
  res.p_value = static_cast<double>(hits) / static_cast<double>(n_perm);
  return res;
}

std::vector<PermTestResult> zone_tests(std::span<const EvalRecord> records, int window,
                                       std::size_t n_perm, std::uint64_t seed, double alpha) {
  std::map<std::tuple<std::size_t, int, Zone>, std::vector<std::uint8_t>> groups;
  for (const auto& r : records) {
    check_record(r);
    if (r.flagged || std::abs(r.position) > window) continue;
    groups[{r.run, r.position, *r.zone}].push_back(r.correct ? 1 : 0);
  }
  std::set<std::size_t> runs;
  for (const auto& [key, v] : groups) runs.insert(std::get<0>(key));
  std::vector<PermTestResult> out;
  std::uint64_t task = 0;
  for (auto run : runs) {
    for (int p : canonical_positions()) {
      ++task;
      if (std::abs(p) > window) continue;
      const auto [hi, lo] = compared_zones(p);
      auto a = groups.find({run, p, hi});
      auto b = groups.find({run, p, lo});
      if (a == groups.end() || b == groups.end()) continue;
      auto name = "run " + std::to_string(run) + " position " + std::to_string(p) + ": " +
                  std::string(to_string(hi)) + " vs " + std::string(to_string(lo));
      out.push_back(perm_test(a->second, b->second, n_perm, derive_seed(seed, task),
                              std::move(name), alpha));
    }
  }
  return out;
}

// --- clause gap ------------------------------------------------------------

json ClauseGap::to_json() const {
  return {{"in_accuracy", in_accuracy}, {"out_accuracy", out_accuracy}, {"gap", gap},
          {"n_in", n_in}, {"n_out", n_out}};
}

ClauseGap clause_gap(std::span<const EvalRecord> records, int window) {
  std::size_t in_ok = 0, out_ok = 0;
  ClauseGap g;
  for (const auto& r : records) {
    if (!r.in_clause)
      throw ValidationError("record for " + r.sentence_id + " has no clause flag");
    if (std::abs(r.position) > window || r.position == 0) continue;
    if (*r.in_clause) {
      ++g.n_in;
      in_ok += r.correct ? 1 : 0;
    } else {
      ++g.n_out;
      out_ok += r.correct ? 1 : 0;
    }
  }
  if (g.n_in + g.n_out == 0) throw DataError("no records in window");
  if (g.n_in) g.in_accuracy = static_cast<double>(in_ok) / g.n_in;
  if (g.n_out) g.out_accuracy = static_cast<double>(out_ok) / g.n_out;
  g.gap = g.in_accuracy - g.out_accuracy;
  return g;
}

// --- plot data -------------------------------------------------------------

void emit_plot_data(const BreakdownReport& report, std::ostream& out) {
  out << "position,zone,accuracy,n,run\n";
  for (const auto& [key, by_run] : report.cells)
    for (const auto& [run, cell] : by_run)
      out << key.first << ',' << to_string(key.second) << ','
          << format_double(cell.accuracy()) << ',' << cell.n << ',' << run << '\n';
}

void emit_plot_data(const BreakdownReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  emit_plot_data(report, out);
  if (!out) throw Error("write failed: " + path);
}

BreakdownReport read_plot_data(std::istream& in, int window) {
  BreakdownReport report;
  report.window = window;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "position,zone,accuracy,n,run")
    throw ParseError("expected header position,zone,accuracy,n,run", 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) f.push_back(field);
    if (f.size() != 5) throw ParseError("expected 5 fields", line_no);
    try {
      const int position = std::stoi(f[0]);
      const Zone zone = zone_from_string(f[1]);
      const double acc = std::stod(f[2]);
      const auto n = static_cast<std::size_t>(std::stoull(f[3]));
      const auto run = static_cast<std::size_t>(std::stoull(f[4]));
      Cell c{n, static_cast<std::size_t>(std::llround(acc * static_cast<double>(n)))};
      report.cells[{position, zone}][run] = c;
      report.counted += n;
    } catch (const std::logic_error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return report;
}

}  // namespace scope_probe
