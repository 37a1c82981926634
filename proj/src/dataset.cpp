#include "scope_probe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include "scope_probe/corpus.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/random.hpp"

namespace scope_probe {

using nlohmann::json;

namespace {

constexpr std::array<PolarityPair, 6> kPairs = {{
    {"any", "some"},
    {"anywhere", "somewhere"},
    {"anyone", "someone"},
    {"anybody", "somebody"},
    {"anything", "something"},
    {"anytime", "sometime"},
}};

// Sub-stream ids for derive_seed, one per sampling decision.
enum Stream : std::uint64_t {
  kPositives = 1,
  kNegatives = 2,
  kPieces = 3,
  kSplit = 4,
  kStrata = 100,
};

std::vector<std::size_t> negation_indices(const ParsedSentence& s) {
  std::vector<std::size_t> out;
  for (const auto& t : s.tokens)
    if (is_negation(t.surface)) out.push_back(t.index);
  return out;
}

std::vector<std::size_t> word_occurrences(const ParsedSentence& s,
                                          const std::string& word) {
  std::vector<std::size_t> out;
  const auto w = lowercase(word);
  for (const auto& t : s.tokens)
    if (lowercase(t.surface) == w) out.push_back(t.index);
  return out;
}

// Negatable auxiliaries and modals of a sentence without negation.
std::vector<std::size_t> auxiliary_words(const ParsedSentence& s) {
  std::vector<std::size_t> out;
  for (const auto& t : s.tokens) {
    if (!is_negatable_auxiliary(t.surface)) continue;
    auto rel = base_deprel(t.deprel);
    if (rel == "aux" || rel == "cop" || t.pos == "MD") out.push_back(t.index);
  }
  return out;
}

// Eligible pieces of a sentence without an anchor, minus those of `words`.
std::vector<ZonedToken> unanchored_eligible(const SubwordSentence& sub,
                                            const std::vector<std::size_t>& words = {}) {
  auto tokens = mark_eligible(anchor_pieces(sub, {}));
  std::erase_if(tokens, [&](const ZonedToken& t) {
    return !t.eligible || std::find(words.begin(), words.end(), t.word) != words.end();
  });
  return tokens;
}

struct Candidate {
  const ParsedSentence* sentence;
  const SubwordSentence* pieces;
  std::vector<ZonedToken> tokens;  // eligible pieces only
  std::string target;
};

std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

void check_fraction(const SplitConfig& split) {
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw DataError("train fraction must lie strictly between 0 and 1");
}

ProbeExample make_example(const Candidate& c, const ZonedToken& tok, int label,
                          const std::string& split) {
  ProbeExample ex;
  ex.sentence_id = c.sentence->id;
  ex.piece = tok.piece;
  ex.label = label;
  ex.split = split;
  ex.zone = tok.zone;
  if (tok.zone || tok.position != 0) ex.position = tok.position;
  ex.flagged = tok.flagged;
  ex.target = c.target;
  ex.genre = c.sentence->genre();
  return ex;
}

void count_labels(Dataset& d) {
  d.manifest.label_counts.clear();
  for (const auto& ex : d.examples)
    ++d.manifest.label_counts[ex.split][static_cast<std::size_t>(ex.label)];
}

// Shared by neg and target: balanced classes, one random eligible piece
// per sentence, per-label train/test split.
Dataset balanced_family(Family family, const Corpus& corpus,
                        std::vector<Candidate> positives,
                        std::vector<Candidate> negatives, std::size_t per_label,
                        std::uint64_t seed, SplitConfig split, json params) {
  check_fraction(split);
  Dataset d;
  d.manifest.family = family;
  d.manifest.seed = seed;
  d.manifest.source_hash = corpus.hash();
  const auto n = std::min({per_label, positives.size(), negatives.size()});
  if (n == 0)
    throw DataError(std::string("cannot balance ") + std::string(to_string(family)) +
                    " dataset: " + std::to_string(positives.size()) +
                    " positive and " + std::to_string(negatives.size()) +
                    " negative sentences available");
  if (n < per_label)
    d.manifest.warnings.push_back("requested " + std::to_string(per_label) +
                                  " sentences per label, only " + std::to_string(n) +
                                  " available");
  Rng(derive_seed(seed, kPositives)).shuffle(std::span(positives));
  Rng(derive_seed(seed, kNegatives)).shuffle(std::span(negatives));
  const auto n_train = train_count(n, split.train_fraction);
  Rng pick(derive_seed(seed, kPieces));
  for (int label : {1, 0}) {
    auto& pool = label == 1 ? positives : negatives;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = pool[i];
      const auto& tok = c.tokens[pick.below(c.tokens.size())];
      d.examples.push_back(make_example(c, tok, label, i < n_train ? "train" : "test"));
    }
  }
  params["per_label_requested"] = per_label;
  params["per_label"] = n;
  params["train_fraction"] = split.train_fraction;
  params["available"] = {{"positive", positives.size()}, {"negative", negatives.size()}};
  d.manifest.params = std::move(params);
  count_labels(d);
  return d;
}

const SubwordSentence* aligned_pieces(const Corpus& corpus, const ParsedSentence& s,
                                      std::size_t& skipped) {
  const auto* sub = corpus.tokenization(s.id);
  if (!sub) {
    ++skipped;
    return nullptr;
  }
  try {
    validate_alignment(s, *sub);
  } catch (const AlignmentError&) {
    ++skipped;
    return nullptr;
  }
  return sub;
}

std::vector<ZonedToken> only_eligible(std::vector<ZonedToken> tokens) {
  std::erase_if(tokens, [](const ZonedToken& t) { return !t.eligible; });
  return tokens;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Neg: return "NEG";
    case Family::Pol: return "POL";
    case Family::NotNpi: return "NOTNPI";
    case Family::Target: return "TARGET";
    case Family::Clause: return "CLAUSE";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  auto upper = std::string(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (auto f : {Family::Neg, Family::Pol, Family::NotNpi, Family::Target, Family::Clause})
    if (to_string(f) == upper) return f;
  throw FormatError("unknown dataset family '" + std::string(name) + "'");
}

json ProbeExample::to_json() const {
  json j = {{"sentence_id", sentence_id}, {"piece", piece}, {"label", label},
            {"split", split}};
  if (zone) j["zone"] = scope_probe::to_string(*zone);
  if (position) j["position"] = *position;
  if (flagged) j["flagged"] = true;
  if (in_clause) j["in_clause"] = *in_clause;
  if (!target.empty()) j["target"] = target;
  if (!genre.empty()) j["genre"] = genre;
  return j;
}

ProbeExample ProbeExample::from_json(const json& j) {
  ProbeExample ex;
  ex.sentence_id = j.at("sentence_id").get<std::string>();
  ex.piece = j.at("piece").get<std::size_t>();
  ex.label = j.at("label").get<int>();
  if (ex.label != 0 && ex.label != 1) throw FormatError("label must be 0 or 1");
  ex.split = j.at("split").get<std::string>();
  if (j.contains("zone")) ex.zone = zone_from_string(j["zone"].get<std::string>());
  if (j.contains("position")) ex.position = j["position"].get<int>();
  ex.flagged = j.value("flagged", false);
  if (j.contains("in_clause")) ex.in_clause = j["in_clause"].get<bool>();
  ex.target = j.value("target", "");
  ex.genre = j.value("genre", "");
  return ex;
}

json DatasetManifest::to_json() const {
  json counts = json::object();
  for (const auto& [split, c] : label_counts) counts[split] = {{"0", c[0]}, {"1", c[1]}};
  json sizes = json::object();
  for (const auto& [split, c] : label_counts) sizes[split] = c[0] + c[1];
  return {{"family", scope_probe::to_string(family)},
          {"label_counts", counts},
          {"split_sizes", sizes},
          {"seed", seed},
          {"source_hash", source_hash},
          {"params", params},
          {"warnings", warnings}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  DatasetManifest m;
  m.family = family_from_string(j.at("family").get<std::string>());
  for (const auto& [split, c] : j.at("label_counts").items())
    m.label_counts[split] = {c.at("0").get<std::size_t>(), c.at("1").get<std::size_t>()};
  m.seed = j.at("seed").get<std::uint64_t>();
  m.source_hash = j.at("source_hash").get<std::string>();
  m.params = j.value("params", json::object());
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

Corpus::Corpus(std::span<const ParsedSentence> sentences,
               std::span<const SubwordSentence> tokenization)
    : sentences_(sentences) {
  for (const auto& t : tokenization) tokens_.emplace(t.id, &t);
  std::vector<ParsedSentence> copy(sentences.begin(), sentences.end());
  hash_ = hex64(corpus_hash(copy));
}

const SubwordSentence* Corpus::tokenization(const std::string& id) const {
  auto it = tokens_.find(id);
  return it == tokens_.end() ? nullptr : it->second;
}

std::span<const PolarityPair> polarity_pairs() { return kPairs; }

namespace {

struct PolarityItem {
  std::size_t word;
  std::size_t pair;
  bool negative;
};

std::optional<PolarityItem> first_polarity_item(const ParsedSentence& s) {
  for (const auto& t : s.tokens) {
    const auto w = lowercase(t.surface);
    for (std::size_t p = 0; p < kPairs.size(); ++p) {
      if (w == kPairs[p].npi) return PolarityItem{t.index, p, true};
      if (w == kPairs[p].ppi) return PolarityItem{t.index, p, false};
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<MaskInstruction> pol_masks(std::span<const ParsedSentence> corpus) {
  std::vector<MaskInstruction> out;
  for (const auto& s : corpus)
    if (auto pi = first_polarity_item(s)) out.push_back({s.id, pi->word});
  return out;
}

std::vector<MaskInstruction> notnpi_masks(std::span<const ParsedSentence> corpus) {
  std::vector<MaskInstruction> out;
  for (const auto& s : corpus) {
    auto ann = annotate(s);
    if (ann && !ann->npi_indices.empty()) out.push_back({s.id, ann->npi_indices.front()});
  }
  return out;
}

json masks_to_json(std::span<const MaskInstruction> masks) {
  json out = json::array();
  for (const auto& m : masks) out.push_back({{"id", m.id}, {"word", m.word}});
  return out;
}

std::vector<MaskInstruction> masks_from_json(const json& j) {
  std::vector<MaskInstruction> out;
  for (const auto& m : j) out.push_back({m.at("id").get<std::string>(), m.at("word").get<std::size_t>()});
  return out;
}

// ---------------------------------------------------------------------------

Dataset build_neg(const Corpus& corpus, std::size_t per_label, std::uint64_t seed,
                  SplitConfig split) {
  std::vector<Candidate> positives, negatives;
  std::size_t skipped = 0, multi = 0, no_eligible = 0;
  for (const auto& s : corpus.sentences()) {
    const auto nots = negation_indices(s);
    if (nots.size() > 1) {
      ++multi;
      continue;
    }
    const auto* sub = aligned_pieces(corpus, s, skipped);
    if (!sub) continue;
    Candidate c{&s, sub, {}, "not"};
    if (nots.size() == 1) {
      c.tokens = only_eligible(
          mark_eligible(anchor_pieces(*sub, negation_complex(s, nots.front()))));
    } else {
      c.tokens = unanchored_eligible(*sub, auxiliary_words(s));
    }
    if (c.tokens.empty()) {
      ++no_eligible;
      continue;
    }
    (nots.empty() ? negatives : positives).push_back(std::move(c));
  }
  json params = {{"skipped_unaligned", skipped},
                 {"skipped_multiple_not", multi},
                 {"skipped_no_eligible_piece", no_eligible}};
  return balanced_family(Family::Neg, corpus, std::move(positives), std::move(negatives),
                         per_label, seed, split, std::move(params));
}

Dataset build_target(const Corpus& corpus, const std::string& target,
                     std::size_t per_label, std::uint64_t seed, SplitConfig split) {
  if (is_negation(target))
    throw DataError("target word must not be a negation; use the neg family");
  if (target.empty()) throw DataError("empty target word");
  std::vector<Candidate> positives, negatives;
  std::size_t skipped = 0, no_eligible = 0;
  for (const auto& s : corpus.sentences()) {
    const auto* sub = aligned_pieces(corpus, s, skipped);
    if (!sub) continue;
    const auto occurrences = word_occurrences(s, target);
    Candidate c{&s, sub, {}, lowercase(target)};
    if (occurrences.empty()) {
      c.tokens = unanchored_eligible(*sub);
    } else {
      std::array<std::size_t, 1> anchor{occurrences.front()};
      auto tokens = mark_eligible(anchor_pieces(*sub, anchor));
      for (auto& t : tokens)
        if (std::find(occurrences.begin(), occurrences.end(), t.word) != occurrences.end())
          t.eligible = false;
      c.tokens = only_eligible(std::move(tokens));
    }
    if (c.tokens.empty()) {
      ++no_eligible;
      continue;
    }
    (occurrences.empty() ? negatives : positives).push_back(std::move(c));
  }
  json params = {{"target", lowercase(target)},
                 {"skipped_unaligned", skipped},
                 {"skipped_no_eligible_piece", no_eligible}};
  return balanced_family(Family::Target, corpus, std::move(positives),
                         std::move(negatives), per_label, seed, split, std::move(params));
}

Dataset build_pol(const Corpus& corpus, std::size_t per_pair_cap, std::uint64_t seed,
                  SplitConfig split) {
  check_fraction(split);
  Dataset d;
  d.manifest.family = Family::Pol;
  d.manifest.seed = seed;
  d.manifest.source_hash = corpus.hash();

  // genre -> pair -> (npi, ppi) candidates
  std::map<std::string, std::array<std::array<std::vector<Candidate>, 2>, kPairs.size()>>
      strata;
  std::size_t skipped = 0, unmasked = 0;
  for (const auto& s : corpus.sentences()) {
    auto pi = first_polarity_item(s);
    if (!pi) continue;
    const auto* sub = aligned_pieces(corpus, s, skipped);
    if (!sub) continue;
    if (sub->masked_word() != pi->word) {
      ++unmasked;
      continue;
    }
    Candidate c{&s, sub, unanchored_eligible(*sub),
                std::string(kPairs[pi->pair].npi) + "/" + std::string(kPairs[pi->pair].ppi)};
    if (c.tokens.empty()) continue;
    strata[s.genre()][pi->pair][pi->negative ? 1 : 0].push_back(std::move(c));
  }
  if (strata.empty()) throw DataError("cannot balance POL dataset: no polarity items");

  std::array<std::vector<Candidate>, 2> selected;
  json taken = json::object();
  std::uint64_t stratum = 0;
  for (auto& [genre, pairs] : strata) {
    for (std::size_t p = 0; p < kPairs.size(); ++p, ++stratum) {
      auto& [ppis, npis] = pairs[p];
      const auto n = std::min({per_pair_cap, npis.size(), ppis.size()});
      const auto name = std::string(kPairs[p].npi) + "/" + std::string(kPairs[p].ppi);
      taken[genre][name] = n;
      if (n == 0) {
        d.manifest.warnings.push_back("genre " + genre + ": pair " + name + " has " +
                                      std::to_string(npis.size()) + " NPI and " +
                                      std::to_string(ppis.size()) +
                                      " PPI sentences; taking none");
        continue;
      }
      Rng rng(derive_seed(seed, kStrata + stratum));
      rng.shuffle(std::span(npis));
      rng.shuffle(std::span(ppis));
      for (std::size_t i = 0; i < n; ++i) {
        selected[1].push_back(std::move(npis[i]));
        selected[0].push_back(std::move(ppis[i]));
      }
    }
  }
  const auto n = selected[1].size();
  if (n == 0) throw DataError("cannot balance POL dataset: no pair has both polarities");
  const auto n_train = train_count(n, split.train_fraction);
  Rng pick(derive_seed(seed, kPieces));
  for (int label : {1, 0}) {
    auto& pool = selected[static_cast<std::size_t>(label)];
    Rng(derive_seed(seed, kSplit + static_cast<std::uint64_t>(label))).shuffle(std::span(pool));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = pool[i];
      d.examples.push_back(make_example(c, c.tokens[pick.below(c.tokens.size())], label,
                                        i < n_train ? "train" : "test"));
    }
  }
  d.manifest.params = {{"per_pair_cap", per_pair_cap},
                       {"train_fraction", split.train_fraction},
                       {"taken", taken},
                       {"skipped_unaligned", skipped},
                       {"skipped_mask_mismatch", unmasked}};
  count_labels(d);
  return d;
}

Dataset build_notnpi(const Corpus& corpus, NotNpiMode mode) {
  Dataset d;
  d.manifest.family = Family::NotNpi;
  d.manifest.source_hash = corpus.hash();
  std::map<std::string, std::size_t> patterns;
  std::size_t skipped = 0, short_span = 0, unmasked = 0, sentences = 0;
  for (const auto& s : corpus.sentences()) {
    auto ann = annotate(s);
    if (!ann || ann->npi_indices.empty()) continue;
    if (ann->licensing_span.size() < 2) {
      ++short_span;
      d.manifest.warnings.push_back("sentence " + s.id + ": licensing span of " +
                                    std::to_string(ann->licensing_span.size()) +
                                    " token(s); excluded");
      continue;
    }
    const auto* sub = aligned_pieces(corpus, s, skipped);
    if (!sub) continue;
    const auto masked = sub->masked_word();
    if (mode == NotNpiMode::Pol ? masked != ann->npi_indices.front() : masked.has_value()) {
      ++unmasked;
      continue;
    }
    const auto zones = zone_labels(s, *ann);
    Candidate c{&s, sub, {}, std::string(to_string(ann->pattern))};
    ++sentences;
    ++patterns[std::string(to_string(ann->pattern))];
    for (const auto& t : mark_eligible(project_zones(s, zones, *ann, *sub)))
      if (t.eligible) d.examples.push_back(make_example(c, t, 1, "eval"));
  }
  d.manifest.params = {{"mode", mode == NotNpiMode::Pol ? "pol" : "neg"},
                       {"sentences", sentences},
                       {"patterns", patterns},
                       {"skipped_short_licensing_span", short_span},
                       {"skipped_unaligned", skipped},
                       {"skipped_mask_mismatch", unmasked}};
  count_labels(d);
  return d;
}

Dataset build_clause_study(const Corpus& corpus, const std::string& target,
                           std::size_t limit) {
  Dataset d;
  d.manifest.family = Family::Clause;
  d.manifest.source_hash = corpus.hash();
  std::size_t skipped = 0, sentences = 0;
  for (const auto& s : corpus.sentences()) {
    if (sentences >= limit) break;
    const auto occurrences = word_occurrences(s, target);
    if (occurrences.empty()) continue;
    const auto* sub = aligned_pieces(corpus, s, skipped);
    if (!sub) continue;
    ++sentences;
    const auto clause = clause_of(s, occurrences.front());
    std::array<std::size_t, 1> anchor{occurrences.front()};
    Candidate c{&s, sub, {}, lowercase(target)};
    for (const auto& t : mark_eligible(anchor_pieces(*sub, anchor))) {
      if (!t.eligible ||
          std::find(occurrences.begin(), occurrences.end(), t.word) != occurrences.end())
        continue;
      auto ex = make_example(c, t, 1, "eval");
      ex.in_clause = std::binary_search(clause.begin(), clause.end(), t.word);
      d.examples.push_back(std::move(ex));
    }
  }
  d.manifest.params = {{"target", lowercase(target)},
                       {"limit", limit},
                       {"sentences", sentences},
                       {"skipped_unaligned", skipped}};
  count_labels(d);
  return d;
}

// ---------------------------------------------------------------------------

void write_dataset(const std::string& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw Error("cannot write " + dir + "/manifest.json");
    out << dataset.manifest.to_json().dump(2) << '\n';
  }
  std::ofstream out(dir + "/examples.jsonl");
  if (!out) throw Error("cannot write " + dir + "/examples.jsonl");
  for (const auto& ex : dataset.examples) out << ex.to_json().dump() << '\n';
}

Dataset read_dataset(const std::string& dir) {
  Dataset d;
  {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw Error("cannot open " + dir + "/manifest.json");
    d.manifest = DatasetManifest::from_json(json::parse(in));
  }
  std::ifstream in(dir + "/examples.jsonl");
  if (!in) throw Error("cannot open " + dir + "/examples.jsonl");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      d.examples.push_back(ProbeExample::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return d;
}

bool strictly_balanced(const DatasetManifest& manifest) {
  auto it = manifest.label_counts.find("train");
  if (it == manifest.label_counts.end()) return true;
  return it->second[0] == it->second[1];
}

bool splits_disjoint(std::span<const ProbeExample> examples) {
  std::unordered_set<std::string> train, test;
  for (const auto& ex : examples) {
    if (ex.split == "train") train.insert(ex.sentence_id);
    if (ex.split == "test") test.insert(ex.sentence_id);
  }
  return std::none_of(test.begin(), test.end(),
                      [&](const std::string& id) { return train.contains(id); });
}

ProbeData attach_embeddings(std::span<const ProbeExample> examples,
                            const EmbeddingStore& store, const std::string& split) {
  std::vector<const ProbeExample*> chosen;
  for (const auto& ex : examples)
    if (split.empty() || ex.split == split) chosen.push_back(&ex);
  ProbeData data;
  data.inputs.resize(static_cast<Eigen::Index>(store.dim()),
                     static_cast<Eigen::Index>(chosen.size()));
  data.labels.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    auto v = store.get(chosen[i]->sentence_id, chosen[i]->piece);
    data.inputs.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
    data.labels.push_back(chosen[i]->label);
  }
  return data;
}

}  // namespace scope_probe
