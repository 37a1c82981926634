#pragma once

// Projection of word-level zones onto model subword pieces, with signed
// piece distances to an anchor (the negation complex or a target word).

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scope_probe/scope.hpp"
#include "scope_probe/treebank.hpp"

namespace scope_probe {

struct Piece {
  std::string text;
  std::size_t word = 0;  // for the mask piece: the masked word
  bool mask = false;
};

struct SubwordSentence {
  std::string id;
  std::vector<Piece> pieces;
  std::string model_tag;

  std::optional<std::size_t> masked_word() const;
};

struct ZonedToken {
  std::size_t piece = 0;
  std::size_t word = 0;
  std::optional<Zone> zone;
  int position = 0;
  bool eligible = true;
  bool mask = false;
  bool flagged = false;
  bool anchor = false;  // piece of the negation complex or target word
};

// Tokenization file: one JSON object per line,
//   {"id", "model_tag", "pieces": [{"text", "word", "mask"?}]}
// where "word" may be null on the mask piece (the uncovered word is used).
SubwordSentence tokenization_from_json(const nlohmann::json& j);
nlohmann::json tokenization_to_json(const SubwordSentence& s);
std::vector<SubwordSentence> read_tokenization(std::istream& in);
std::vector<SubwordSentence> read_tokenization_file(const std::string& path);
void write_tokenization(std::ostream& out,
                        std::span<const SubwordSentence> sentences);

// One piece per word; `masked_word` becomes a single "[MASK]" piece.
SubwordSentence word_level_tokenization(
    const ParsedSentence& s, std::optional<std::size_t> masked_word = {});

// Piece text with scheme markers removed ("##", U+0120, U+2581, spaces).
std::string strip_piece_markers(std::string_view text);

// Checks that the pieces spell out the sentence's words in order (mask
// excepted) and that each piece's word index is the word holding its
// first character. Throws AlignmentError naming the offending piece.
void validate_alignment(const ParsedSentence& s, const SubwordSentence& sub);

// Signed piece offsets to the contiguous block of pieces whose word is in
// `anchor_words`: 0 on the block, -1, -2, ... leftward, 1, 2, ... rightward.
std::vector<int> relative_positions(const SubwordSentence& sub,
                                    std::span<const std::size_t> anchor_words);

// Each piece inherits its word's zone; positions are relative to the
// negation complex.
std::vector<ZonedToken> project_zones(const ParsedSentence& s,
                                      const WordZones& zones,
                                      const ScopeAnnotation& ann,
                                      const SubwordSentence& sub);

// Zone-free variant for target-word anchors. With no anchor words, every
// piece is unanchored and positions are left at 0.
std::vector<ZonedToken> anchor_pieces(const SubwordSentence& sub,
                                      std::span<const std::size_t> anchor_words);

// Anchor pieces and the mask piece become ineligible.
std::vector<ZonedToken> mark_eligible(std::vector<ZonedToken> tokens);

}  // namespace scope_probe
