#include "scope_probe/scope.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "scope_probe/errors.hpp"

namespace scope_probe {

using nlohmann::json;

namespace {

constexpr std::array<PatternSpec, 3> kPatterns = {{
    {PatternId::P12, true, true, {"VP", "", ""}, "VP"},
    {PatternId::P3, true, false, {"NP", "PP", "ADJP"}, "VP"},
    {PatternId::P5, false, false, {"VP", "", ""}, "S"},
}};

bool contains_sorted(const std::vector<std::size_t>& v, std::size_t x) {
  return std::binary_search(v.begin(), v.end(), x);
}

bool is_negation_leaf(const ConstTree& node) {
  return node.is_preterminal() && node.label == "RB" && is_negation(node.word);
}

void match_node(const ConstTree& node, std::vector<PatternMatch>& out) {
  if (node.is_preterminal()) return;
  const auto& kids = node.children;
  for (const auto& spec : kPatterns) {
    if (node.label != spec.frame) continue;
    if (spec.has_verb) {
      for (std::size_t i = 0; i + 2 < kids.size(); ++i) {
        if (kids[i].is_preterminal() && spec.accepts_verb(kids[i].label) &&
            is_negation_leaf(kids[i + 1]) &&
            spec.accepts_scope(kids[i + 2].label))
          out.push_back({spec.id, *kids[i + 1].leaf,
                         {kids[i + 2].begin, kids[i + 2].end}});
      }
    } else {
      for (std::size_t i = 0; i + 1 < kids.size(); ++i) {
        if (is_negation_leaf(kids[i]) && spec.accepts_scope(kids[i + 1].label))
          out.push_back({spec.id, *kids[i].leaf,
                         {kids[i + 1].begin, kids[i + 1].end}});
      }
    }
  }
  for (const auto& child : kids) match_node(child, out);
}

}  // namespace

std::string_view to_string(PatternId id) {
  switch (id) {
    case PatternId::P12: return "P12";
    case PatternId::P3: return "P3";
    case PatternId::P5: return "P5";
  }
  return "?";
}

PatternId pattern_from_string(std::string_view name) {
  for (const auto& spec : kPatterns)
    if (to_string(spec.id) == name) return spec.id;
  throw FormatError("unknown pattern id '" + std::string(name) + "'");
}

bool PatternSpec::accepts_verb(std::string_view pos) const {
  if (!has_verb) return false;
  return pos.starts_with("VB") || (verb_allows_modal && pos == "MD");
}

bool PatternSpec::accepts_scope(std::string_view label) const {
  return std::find(scope_cats.begin(), scope_cats.end(), label) !=
             scope_cats.end() &&
         !label.empty();
}

const PatternSpec& pattern_spec(PatternId id) {
  return kPatterns[static_cast<std::size_t>(id)];
}

std::span<const PatternSpec> all_patterns() { return kPatterns; }

std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::Pre: return "PRE";
    case Zone::PreIn: return "PRE_IN";
    case Zone::Not: return "NOT";
    case Zone::In: return "IN";
    case Zone::Post: return "POST";
  }
  return "?";
}

Zone zone_from_string(std::string_view name) {
  for (auto z : {Zone::Pre, Zone::PreIn, Zone::Not, Zone::In, Zone::Post})
    if (to_string(z) == name) return z;
  throw FormatError("unknown zone '" + std::string(name) + "'");
}

bool is_negation(std::string_view surface) {
  auto w = lowercase(normalize_surface(surface));
  return w == "not" || w == "n't";
}

bool is_npi(std::string_view surface) {
  static const std::set<std::string, std::less<>> npis = {
      "any", "anybody", "anyone", "anything", "anytime", "anywhere"};
  return npis.contains(lowercase(surface));
}

bool is_negatable_auxiliary(std::string_view surface) {
  static const std::set<std::string, std::less<>> aux = {
      "be",    "am",    "is",     "are",   "was",  "were", "do",    "does",
      "did",   "have",  "has",    "had",   "can",  "could", "will", "would",
      "shall", "should", "may",   "might", "must", "need", "dare",  "ought",
      "ai",    "wo",    "ca",     "sha",   "'m",   "'re",  "'s",    "'ve",
      "'d",    "'ll"};
  return aux.contains(lowercase(normalize_surface(surface)));
}

bool is_verbal_pos(std::string_view pos) {
  return pos.starts_with("VB") || pos == "MD" || pos == "VERB" || pos == "AUX";
}

std::vector<PatternMatch> match_neg_patterns(const ParsedSentence& s) {
  std::vector<PatternMatch> out;
  if (!s.consttree) return out;
  match_node(*s.consttree, out);
  std::stable_sort(out.begin(), out.end(),
                   [](const PatternMatch& a, const PatternMatch& b) {
                     return a.not_index < b.not_index;
                   });
  return out;
}

std::vector<std::size_t> negation_complex(const ParsedSentence& s,
                                          std::size_t not_index) {
  std::vector<std::size_t> out;
  if (not_index > 0 && is_negatable_auxiliary(s.tokens[not_index - 1].surface))
    out.push_back(not_index - 1);
  out.push_back(not_index);
  return out;
}

std::vector<std::size_t> neg_scope(const ParsedSentence& s,
                                   std::size_t not_index) {
  if (not_index >= s.size() || !is_negation(s.tokens[not_index].surface))
    throw ValidationError("token " + std::to_string(not_index) + " of " + s.id +
                          " is not a negation word");
  const auto& neg = s.tokens[not_index];
  if (neg.is_root())
    throw ValidationError("negation word in " + s.id + " has no head");
  const auto head = static_cast<std::size_t>(neg.head);
  const auto children = dependents(s);
  const auto excluded = negation_complex(s, not_index);

  std::set<std::size_t> scope{head};
  for (auto child : children[head]) {
    auto rel = base_deprel(s.tokens[child].deprel);
    if (rel == "conj" || rel == "parataxis" || rel == "mark" ||
        rel == "discourse")
      continue;
    for (auto i : subtree(children, child)) scope.insert(i);
  }
  for (auto i : excluded) scope.erase(i);
  return {scope.begin(), scope.end()};
}

std::optional<ScopeAnnotation> annotate(const ParsedSentence& s) {
  auto matches = match_neg_patterns(s);
  if (matches.empty()) return std::nullopt;
  ScopeAnnotation ann;
  ann.pattern = matches.front().pattern;
  ann.not_index = matches.front().not_index;
  ann.licensing_span = matches.front().licensing_span;
  ann.secondary.assign(matches.begin() + 1, matches.end());
  ann.neg_complex = negation_complex(s, ann.not_index);
  ann.neg_scope = neg_scope(s, ann.not_index);
  for (auto i = ann.licensing_span.begin; i < ann.licensing_span.end; ++i)
    if (is_npi(s.tokens[i].surface)) ann.npi_indices.push_back(i);
  return ann;
}

WordZones zone_labels(const ParsedSentence& s, const ScopeAnnotation& ann) {
  const auto n = s.size();
  if (ann.licensing_span.end > n || ann.neg_complex.empty())
    throw std::logic_error("annotation does not belong to sentence " + s.id);
  WordZones out{std::vector<Zone>(n, Zone::Pre), std::vector<bool>(n, false)};
  const auto first_complex = ann.neg_complex.front();
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_scope = contains_sorted(ann.neg_scope, i);
    if (contains_sorted(ann.neg_complex, i)) {
      out.zones[i] = Zone::Not;
    } else if (ann.licensing_span.contains(i)) {
      out.zones[i] = Zone::In;
    } else if (i >= ann.licensing_span.end) {
      out.zones[i] = Zone::Post;
      out.flagged[i] = in_scope;
    } else if (i < first_complex) {
      out.zones[i] = in_scope ? Zone::PreIn : Zone::Pre;
    } else {
      throw std::logic_error("token " + std::to_string(i) + " of " + s.id +
                             " lies between the negation and its licensing "
                             "span");
    }
  }
  bool seen_prein = false;
  for (std::size_t i = 0; i < first_complex; ++i) {
    if (out.zones[i] == Zone::PreIn)
      seen_prein = true;
    else if (seen_prein)
      out.flagged[i] = true;
  }
  return out;
}

bool licensing_within_scope(const ScopeAnnotation& ann) {
  for (auto i = ann.licensing_span.begin; i < ann.licensing_span.end; ++i) {
    if (contains_sorted(ann.neg_complex, i)) continue;
    if (!contains_sorted(ann.neg_scope, i)) return false;
  }
  return true;
}

std::vector<std::size_t> clause_of(const ParsedSentence& s, std::size_t target) {
  if (target >= s.size())
    throw std::out_of_range("target index out of range in " + s.id);
  std::size_t cur = target;
  while (!is_verbal_pos(s.tokens[cur].pos) && !s.tokens[cur].is_root())
    cur = static_cast<std::size_t>(s.tokens[cur].head);
  return subtree(dependents(s), cur);
}

NpiZoneCounts count_prein_npi(std::span<const ParsedSentence> corpus) {
  NpiZoneCounts counts;
  for (const auto& s : corpus) {
    auto ann = annotate(s);
    if (!ann) continue;
    ++counts.total;
    auto zones = zone_labels(s, *ann);
    bool in = false, prein = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!is_npi(s.tokens[i].surface)) continue;
      in = in || zones.zones[i] == Zone::In;
      prein = prein || zones.zones[i] == Zone::PreIn;
    }
    if (in && prein)
      ++counts.both;
    else if (in)
      ++counts.in_only;
    else if (prein)
      ++counts.prein_only;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// ann.db

json annotation_to_json(const AnnotatedRecord& rec) {
  const auto& a = rec.annotation;
  json zones = json::array();
  for (auto z : rec.zones.zones) zones.push_back(to_string(z));
  json flagged = json::array();
  for (std::size_t i = 0; i < rec.zones.flagged.size(); ++i)
    if (rec.zones.flagged[i]) flagged.push_back(i);
  json secondary = json::array();
  for (const auto& m : a.secondary)
    secondary.push_back({{"pattern", to_string(m.pattern)},
                         {"not_index", m.not_index},
                         {"licensing_span",
                          {m.licensing_span.begin, m.licensing_span.end}}});
  return {{"id", rec.id},
          {"pattern", to_string(a.pattern)},
          {"not_index", a.not_index},
          {"licensing_span", {a.licensing_span.begin, a.licensing_span.end}},
          {"neg_scope", a.neg_scope},
          {"neg_complex", a.neg_complex},
          {"zones", zones},
          {"npi_indices", a.npi_indices},
          {"flagged", flagged},
          {"secondary", secondary}};
}

AnnotatedRecord annotation_from_json(const json& j) {
  AnnotatedRecord rec;
  rec.id = j.at("id").get<std::string>();
  auto& a = rec.annotation;
  a.pattern = pattern_from_string(j.at("pattern").get<std::string>());
  a.not_index = j.at("not_index").get<std::size_t>();
  a.licensing_span = {j.at("licensing_span").at(0).get<std::size_t>(),
                      j.at("licensing_span").at(1).get<std::size_t>()};
  a.neg_scope = j.at("neg_scope").get<std::vector<std::size_t>>();
  a.neg_complex = j.at("neg_complex").get<std::vector<std::size_t>>();
  a.npi_indices = j.value("npi_indices", std::vector<std::size_t>{});
  for (const auto& m : j.value("secondary", json::array()))
    a.secondary.push_back({pattern_from_string(m.at("pattern").get<std::string>()),
                           m.at("not_index").get<std::size_t>(),
                           {m.at("licensing_span").at(0).get<std::size_t>(),
                            m.at("licensing_span").at(1).get<std::size_t>()}});
  for (const auto& z : j.at("zones"))
    rec.zones.zones.push_back(zone_from_string(z.get<std::string>()));
  rec.zones.flagged.assign(rec.zones.zones.size(), false);
  for (const auto& f : j.value("flagged", json::array())) {
    auto i = f.get<std::size_t>();
    if (i >= rec.zones.flagged.size())
      throw FormatError("flagged index out of range in " + rec.id);
    rec.zones.flagged[i] = true;
  }
  return rec;
}

std::vector<AnnotatedRecord> annotate_corpus(
    std::span<const ParsedSentence> corpus) {
  std::vector<AnnotatedRecord> out;
  for (const auto& s : corpus) {
    auto ann = annotate(s);
    if (!ann) continue;
    auto zones = zone_labels(s, *ann);
    out.push_back({s.id, std::move(*ann), std::move(zones)});
  }
  return out;
}

void write_annotations(std::ostream& out,
                       std::span<const AnnotatedRecord> records) {
  for (const auto& r : records) out << annotation_to_json(r).dump() << '\n';
}

std::vector<AnnotatedRecord> read_annotations(std::istream& in) {
  std::vector<AnnotatedRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(annotation_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace scope_probe
