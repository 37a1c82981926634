#pragma once

// corpus.db: one JSON object per line with fields
//   id        sentence id
//   tokens    [{"form": str, "pos": str}]
//   deptree   [{"head": int, "deprel": str}]   head is 0-based, -1 = ROOT
//   consttree bracketed tree string, or null
//   meta      {"genre": ..., "source": ..., "mwt": [{"first","last","form"}]}

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scope_probe/treebank.hpp"

namespace scope_probe {

nlohmann::json sentence_to_json(const ParsedSentence& s);
ParsedSentence sentence_from_json(const nlohmann::json& j);

void write_corpus(std::ostream& out, const std::vector<ParsedSentence>& corpus);
void write_corpus_file(const std::string& path,
                       const std::vector<ParsedSentence>& corpus);

// Validates dependencies, tree/token agreement and id uniqueness.
std::vector<ParsedSentence> read_corpus(std::istream& in);
std::vector<ParsedSentence> read_corpus_file(const std::string& path);

// Pairs CoNLL-U sentences with PTB trees in order and validates them.
std::vector<ParsedSentence> ingest(std::vector<ParsedSentence> dep,
                                   std::vector<ConstTree> trees);

// FNV-1a over the canonical serialization; stable across runs and hosts.
std::uint64_t corpus_hash(const std::vector<ParsedSentence>& corpus);
std::string hex64(std::uint64_t value);

}  // namespace scope_probe
