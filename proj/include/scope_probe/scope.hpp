#pragma once

// Negation-pattern matching over constituency trees, dependency-based
// negation scope, licensing zones, and target-token clauses.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scope_probe/treebank.hpp"

namespace scope_probe {

enum class PatternId { P12, P3, P5 };

std::string_view to_string(PatternId id);
PatternId pattern_from_string(std::string_view name);

// One of the three licensing templates. For P12/P3 the frame node has
// consecutive children (verb, RB not|n't, scope); for P5 it has
// (RB not, scope).
struct PatternSpec {
  PatternId id;
  bool has_verb;
  bool verb_allows_modal;
  std::array<std::string_view, 3> scope_cats;
  std::string_view frame;

  bool accepts_verb(std::string_view pos) const;
  bool accepts_scope(std::string_view label) const;
};

const PatternSpec& pattern_spec(PatternId id);
std::span<const PatternSpec> all_patterns();

// Half-open word span.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(std::size_t i) const { return i >= begin && i < end; }
  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct PatternMatch {
  PatternId pattern;
  std::size_t not_index;
  Span licensing_span;
  bool operator==(const PatternMatch&) const = default;
};

struct ScopeAnnotation {
  PatternId pattern = PatternId::P12;
  std::size_t not_index = 0;
  Span licensing_span;
  std::vector<std::size_t> neg_scope;    // ascending
  std::vector<std::size_t> neg_complex;  // ascending, contains not_index
  std::vector<std::size_t> npi_indices;  // any* inside licensing_span
  std::vector<PatternMatch> secondary;   // further matches, linear order
};

enum class Zone { Pre, PreIn, Not, In, Post };

std::string_view to_string(Zone z);
Zone zone_from_string(std::string_view name);

// Word-level zones. `flagged[i]` marks tokens whose zone is a fallback:
// negation-scope tokens right of the licensing span (labelled POST) and
// PRE tokens that follow a PRE_IN token.
struct WordZones {
  std::vector<Zone> zones;
  std::vector<bool> flagged;
};

bool is_negation(std::string_view surface);
bool is_npi(std::string_view surface);
// Closed class of auxiliaries and modals that can host a contracted
// negation, including clitic and contraction-stem spellings.
bool is_negatable_auxiliary(std::string_view surface);
bool is_verbal_pos(std::string_view pos);

// All template matches, ordered by position of the negation word.
std::vector<PatternMatch> match_neg_patterns(const ParsedSentence& s);

// The negation word plus an immediately preceding auxiliary/modal.
std::vector<std::size_t> negation_complex(const ParsedSentence& s,
                                          std::size_t not_index);

// Head of the negation word plus the subtrees of its dependents, except
// dependents attached by conj, parataxis, mark or discourse; minus the
// negation complex. Throws ValidationError if `not_index` is not a
// negation word or has no head.
std::vector<std::size_t> neg_scope(const ParsedSentence& s,
                                   std::size_t not_index);

// Annotation for the linearly first match, or nullopt without a match.
std::optional<ScopeAnnotation> annotate(const ParsedSentence& s);

WordZones zone_labels(const ParsedSentence& s, const ScopeAnnotation& ann);

// Licensing-span tokens outside the negation complex all lie in the
// negation scope.
bool licensing_within_scope(const ScopeAnnotation& ann);

// Dependency subtree of the nearest verbal ancestor-or-self of `target`
// (the root if there is none).
std::vector<std::size_t> clause_of(const ParsedSentence& s, std::size_t target);

struct NpiZoneCounts {
  std::size_t total = 0;  // sentences matching a pattern
  std::size_t in_only = 0;
  std::size_t prein_only = 0;
  std::size_t both = 0;
  bool operator==(const NpiZoneCounts&) const = default;
};

NpiZoneCounts count_prein_npi(std::span<const ParsedSentence> corpus);

// ann.db records: {id, pattern, not_index, licensing_span, neg_scope,
// neg_complex, zones, npi_indices, flagged, secondary}.
struct AnnotatedRecord {
  std::string id;
  ScopeAnnotation annotation;
  WordZones zones;
};

nlohmann::json annotation_to_json(const AnnotatedRecord& rec);
AnnotatedRecord annotation_from_json(const nlohmann::json& j);
std::vector<AnnotatedRecord> annotate_corpus(
    std::span<const ParsedSentence> corpus);
void write_annotations(std::ostream& out,
                       std::span<const AnnotatedRecord> records);
std::vector<AnnotatedRecord> read_annotations(std::istream& in);

}  // namespace scope_probe
