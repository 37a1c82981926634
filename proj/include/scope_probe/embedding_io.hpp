#pragma once

// Contextual-embedding interchange format.
//
// Binary layout, all integers and floats little-endian:
//   "SPEM" | u32 version=1 | u32 dim | u64 count | u32 tag_len | tag bytes
//   count x ( u32 id_len | id bytes | u32 piece_count | piece_count*dim f32 )
//   optional trailing index:
//   count x ( u32 id_len | id bytes | u64 record_offset ) | u64 index_offset | "SPIX"
//
// JSON-lines fallback: a header object {"magic","version","model_tag","dim",
// "count"} followed by one {"id","piece_count","values"} object per record.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scope_probe/subword.hpp"
#include "scope_probe/treebank.hpp"

namespace scope_probe {

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::string model_tag, std::size_t dim);

  const std::string& model_tag() const { return model_tag_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  const std::vector<std::string>& ids() const { return order_; }

  bool contains(const std::string& id) const { return index_.contains(id); }
  std::size_t piece_count(const std::string& id) const;

  // dim-length vector of one piece; NotFoundError for unknown id/piece.
  std::span<const float> get(const std::string& id, std::size_t piece) const;

  // Appends one sentence; values.size() must equal dim * pieces.
  void add(const std::string& id, std::size_t pieces, std::span<const float> values);

 private:
  struct Entry {
    std::size_t offset;
    std::size_t pieces;
  };
  std::string model_tag_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::unordered_map<std::string, Entry> index_;
  std::vector<std::string> order_;
};

enum class EmbeddingFormat { Binary, JsonLines };

void write_embeddings(const std::string& path, const EmbeddingStore& store,
                      EmbeddingFormat format = EmbeddingFormat::Binary);

// Detects the format from the first bytes. Throws FormatError on a bad
// magic or version, a truncated record, or an inconsistent dimension.
EmbeddingStore read_embeddings(const std::string& path);

// --- synthetic embeddings ---------------------------------------------------

struct SynthItem {
  std::string id;
  std::vector<bool> signal;  // one flag per piece
};

struct SignalSpec {
  double magnitude = 0.0;  // length of the planted direction
  double noise = 1.0;      // per-coordinate Gaussian standard deviation
};

// Gaussian noise per piece plus `magnitude` times a fixed unit direction on
// flagged pieces. Each sentence's noise depends only on (seed, id).
EmbeddingStore synth_embeddings(std::span<const SynthItem> items,
                                std::size_t dim, const SignalSpec& spec,
                                std::uint64_t seed,
                                const std::string& model_tag = "synthetic");

// Which pieces carry the planted signal.
enum class SignalScope {
  None,
  NegSentence,  // every piece of a sentence containing a negation word
  NegScope,     // pieces whose word lies in some negation word's scope
};

SignalScope signal_scope_from_string(std::string_view name);

std::vector<SynthItem> synth_items(std::span<const ParsedSentence> corpus,
                                   std::span<const SubwordSentence> tokenization,
                                   SignalScope scope);

}  // namespace scope_probe
