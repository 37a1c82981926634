#pragma once

// Probing dataset families: neg, pol, not+NPI, alternative target and
// clause study sets, built from a parsed corpus and its tokenization.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "scope_probe/embedding_io.hpp"
#include "scope_probe/probe.hpp"
#include "scope_probe/scope.hpp"
#include "scope_probe/subword.hpp"
#include "scope_probe/treebank.hpp"

namespace scope_probe {

enum class Family { Neg, Pol, NotNpi, Target, Clause };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

struct ProbeExample {
  std::string sentence_id;
  std::size_t piece = 0;
  int label = 0;
  std::string split;  // "train", "test" or "eval"
  std::optional<Zone> zone;
  std::optional<int> position;
  bool flagged = false;
  std::optional<bool> in_clause;
  std::string target;  // target word, or PI pair such as "any/some"
  std::string genre;

  nlohmann::json to_json() const;
  static ProbeExample from_json(const nlohmann::json& j);
};

struct DatasetManifest {
  Family family = Family::Neg;
  std::map<std::string, std::array<std::size_t, 2>> label_counts;  // per split
  std::uint64_t seed = 0;
  std::string source_hash;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ProbeExample> examples;
};

// Sentences, indexed by id, paired with their model tokenization.
class Corpus {
 public:
  Corpus(std::span<const ParsedSentence> sentences,
         std::span<const SubwordSentence> tokenization);

  std::span<const ParsedSentence> sentences() const { return sentences_; }
  const SubwordSentence* tokenization(const std::string& id) const;
  const std::string& hash() const { return hash_; }

 private:
  std::span<const ParsedSentence> sentences_;
  std::unordered_map<std::string, const SubwordSentence*> tokens_;
  std::string hash_;
};

// Word to replace by a single mask piece before running the model.
struct MaskInstruction {
  std::string id;
  std::size_t word;
  bool operator==(const MaskInstruction&) const = default;
};

struct PolarityPair {
  std::string_view npi;
  std::string_view ppi;
};
std::span<const PolarityPair> polarity_pairs();

// First polarity item of each PI-bearing sentence.
std::vector<MaskInstruction> pol_masks(std::span<const ParsedSentence> corpus);
// First any* inside the licensing span of each not+NPI sentence.
std::vector<MaskInstruction> notnpi_masks(std::span<const ParsedSentence> corpus);
nlohmann::json masks_to_json(std::span<const MaskInstruction> masks);
std::vector<MaskInstruction> masks_from_json(const nlohmann::json& j);

struct SplitConfig {
  double train_fraction = 0.8;
};

// Balanced presence/absence of exactly one "not"; one random eligible
// piece per sentence.
Dataset build_neg(const Corpus& corpus, std::size_t per_label, std::uint64_t seed,
                  SplitConfig split = {});

// Per genre and PI pair, up to `per_pair_cap` NPI and as many PPI
// sentences. Requires a tokenization with the pol_masks() word masked.
Dataset build_pol(const Corpus& corpus, std::size_t per_pair_cap, std::uint64_t seed,
                  SplitConfig split = {});

enum class NotNpiMode { Neg, Pol };

// Every eligible piece of every not+NPI sentence, with zone and position.
// In Pol mode the tokenization must mask the notnpi_masks() word.
Dataset build_notnpi(const Corpus& corpus, NotNpiMode mode);

Dataset build_target(const Corpus& corpus, const std::string& target,
                     std::size_t per_label, std::uint64_t seed, SplitConfig split = {});

// Every eligible piece of the first `limit` sentences containing
// `target`, with piece distance to the target and same-clause flag.
Dataset build_clause_study(const Corpus& corpus, const std::string& target,
                           std::size_t limit);

void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset read_dataset(const std::string& dir);

// Equal label counts in every training split.
bool strictly_balanced(const DatasetManifest& manifest);
// No sentence contributes to both train and test.
bool splits_disjoint(std::span<const ProbeExample> examples);

// Gathers embeddings for the examples whose split is `split` (all
// examples when empty).
ProbeData attach_embeddings(std::span<const ProbeExample> examples,
                            const EmbeddingStore& store,
                            const std::string& split = "");

}  // namespace scope_probe
