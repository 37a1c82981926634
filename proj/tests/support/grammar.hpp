#pragma once

// Synthetic English corpus with consistent dependency and constituency
// parses, plus toy subword tokenizers mimicking WordPiece and byte-level
// BPE piece boundaries. Used as a stand-in for parser output in tests.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scope_probe/dataset.hpp"
#include "scope_probe/subword.hpp"
#include "scope_probe/treebank.hpp"

namespace scope_probe::testing {

std::vector<ParsedSentence> generate_corpus(std::size_t n, std::uint64_t seed,
                                            const std::string& id_prefix = "g");

enum class PieceStyle { Word, Bert, Roberta };

SubwordSentence tokenize(const ParsedSentence& s, PieceStyle style,
                         std::optional<std::size_t> mask = {});
std::vector<SubwordSentence> tokenize_all(std::span<const ParsedSentence> corpus,
                                          PieceStyle style,
                                          std::span<const MaskInstruction> masks = {});

std::string to_conllu(std::span<const ParsedSentence> corpus);
std::string to_ptb(std::span<const ParsedSentence> corpus);

std::string fixture_path(const std::string& name);
// golden.conllu + golden.ptb, ingested.
std::vector<ParsedSentence> golden_sentences();
const ParsedSentence& golden(const std::string& id);

}  // namespace scope_probe::testing
