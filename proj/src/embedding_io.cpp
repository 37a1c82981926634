#include "scope_probe/embedding_io.hpp"

#include <bit>
#include <cctype>
#include <optional>
#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bytes.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/random.hpp"
#include "scope_probe/scope.hpp"

namespace scope_probe {

using nlohmann::json;
using detail::ByteReader;
using detail::ByteWriter;

namespace {

constexpr char kMagic[4] = {'S', 'P', 'E', 'M'};
constexpr char kIndexMagic[4] = {'S', 'P', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

EmbeddingStore read_binary(std::vector<char> raw) {
  ByteReader r(std::move(raw));
  if (r.bytes(4, "magic") != std::string_view(kMagic, 4))
    throw FormatError("bad embedding magic");
  auto version = r.u32("version");
  if (version != kVersion)
    throw FormatError("unsupported embedding version " + std::to_string(version));
  auto dim = r.u32("dim");
  if (dim == 0) throw FormatError("embedding dim must be positive");
  auto count = r.u64("count");
  auto tag = r.bytes(r.u32("model tag length"), "model tag");
  EmbeddingStore store(tag, dim);
  std::vector<float> values;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto rec = "record " + std::to_string(k);
    auto id = r.bytes(r.u32(rec.c_str()), rec.c_str());
    auto pieces = r.u32(rec.c_str());
    if (!r.has(static_cast<std::size_t>(pieces) * dim * 4))
      throw FormatError("truncated embedding file: " + rec + " (" + id + ")");
    values.resize(static_cast<std::size_t>(pieces) * dim);
    for (auto& v : values) v = r.f32(rec.c_str());
    store.add(id, pieces, values);
  }
  if (r.remaining() > 0) {
    // Trailing index: skip entries, check the footer.
    for (std::uint64_t k = 0; k < count; ++k) {
      r.bytes(r.u32("index"), "index");
      r.u64("index");
    }
    r.u64("index footer");
    if (r.bytes(4, "index footer") != std::string_view(kIndexMagic, 4))
      throw FormatError("bad embedding index footer");
    if (r.remaining() != 0) throw FormatError("trailing bytes after embedding index");
  }
  return store;
}

EmbeddingStore read_jsonl(const std::vector<char>& raw) {
  std::string_view text(raw.data(), raw.size());
  std::size_t start = 0, line_no = 0;
  std::optional<EmbeddingStore> store;
  std::size_t expected = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!store) {
      if (j.value("magic", "") != "SPEM") throw FormatError("bad embedding magic");
      if (j.value("version", 0u) != kVersion)
        throw FormatError("unsupported embedding version");
      auto dim = j.value("dim", std::size_t{0});
      if (dim == 0) throw FormatError("embedding dim must be positive");
      store.emplace(j.value("model_tag", ""), dim);
      expected = j.value("count", std::size_t{0});
      continue;
    }
    auto values = j.at("values").get<std::vector<float>>();
    store->add(j.at("id").get<std::string>(), j.at("piece_count").get<std::size_t>(),
               values);
  }
  if (!store) throw FormatError("empty embedding file");
  if (store->size() != expected)
    throw FormatError("embedding header announces " + std::to_string(expected) +
                      " records, found " + std::to_string(store->size()));
  return std::move(*store);
}

std::uint64_t id_hash(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::string model_tag, std::size_t dim)
    : model_tag_(std::move(model_tag)), dim_(dim) {
  if (dim == 0) throw FormatError("embedding dim must be positive");
}

std::size_t EmbeddingStore::piece_count(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("no embeddings for sentence " + id);
  return it->second.pieces;
}

std::span<const float> EmbeddingStore::get(const std::string& id,
                                           std::size_t piece) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("no embeddings for sentence " + id);
  if (piece >= it->second.pieces)
    throw NotFoundError("sentence " + id + " has no piece " + std::to_string(piece));
  return {data_.data() + it->second.offset + piece * dim_, dim_};
}

void EmbeddingStore::add(const std::string& id, std::size_t pieces,
                         std::span<const float> values) {
  if (values.size() != pieces * dim_)
    throw FormatError("record " + id + " has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(pieces * dim_));
  if (index_.contains(id)) throw FormatError("duplicate embedding id " + id);
  index_.emplace(id, Entry{data_.size(), pieces});
  data_.insert(data_.end(), values.begin(), values.end());
  order_.push_back(id);
}

void write_embeddings(const std::string& path, const EmbeddingStore& store,
                      EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  if (format == EmbeddingFormat::JsonLines) {
    out << json{{"magic", "SPEM"},
                {"version", kVersion},
                {"model_tag", store.model_tag()},
                {"dim", store.dim()},
                {"count", store.size()}}
               .dump()
        << '\n';
    for (const auto& id : store.ids()) {
      const auto n = store.piece_count(id);
      json values = json::array();
      for (std::size_t p = 0; p < n; ++p)
        for (float v : store.get(id, p)) values.push_back(v);
      out << json{{"id", id}, {"piece_count", n}, {"values", values}}.dump() << '\n';
    }
    return;
  }
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u64(store.size());
  w.u32(static_cast<std::uint32_t>(store.model_tag().size()));
  w.bytes(store.model_tag());
  std::vector<std::uint64_t> offsets;
  for (const auto& id : store.ids()) {
    offsets.push_back(w.size());
    const auto n = store.piece_count(id);
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.bytes(id);
    w.u32(static_cast<std::uint32_t>(n));
    for (std::size_t p = 0; p < n; ++p)
      for (float v : store.get(id, p)) w.f32(v);
  }
  const auto index_offset = w.size();
  for (std::size_t k = 0; k < store.size(); ++k) {
    w.u32(static_cast<std::uint32_t>(store.ids()[k].size()));
    w.bytes(store.ids()[k]);
    w.u64(offsets[k]);
  }
  w.u64(index_offset);
  w.bytes(std::string_view(kIndexMagic, 4));
  out.write(w.data().data(), static_cast<std::streamsize>(w.size()));
}

EmbeddingStore read_embeddings(const std::string& path) {
  auto raw = slurp(path);
  if (raw.size() >= 4 && std::string_view(raw.data(), 4) == std::string_view(kMagic, 4))
    return read_binary(std::move(raw));
  std::size_t i = 0;
  while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
  if (i < raw.size() && raw[i] == '{') return read_jsonl(raw);
  throw FormatError("bad embedding magic in " + path);
}

EmbeddingStore synth_embeddings(std::span<const SynthItem> items, std::size_t dim,
                                const SignalSpec& spec, std::uint64_t seed,
                                const std::string& model_tag) {
  EmbeddingStore store(model_tag, dim);
  Rng dir_rng(derive_seed(seed, 0));
  std::vector<double> direction(dim);
  double norm = 0.0;
  for (auto& d : direction) {
    d = dir_rng.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  for (auto& d : direction) d /= norm;

  std::vector<float> values;
  for (const auto& item : items) {
    Rng rng(derive_seed(seed, id_hash(item.id)));
    values.resize(item.signal.size() * dim);
    for (std::size_t p = 0; p < item.signal.size(); ++p) {
      for (std::size_t k = 0; k < dim; ++k) {
        double v = spec.noise * rng.normal();
        if (item.signal[p]) v += spec.magnitude * direction[k];
        values[p * dim + k] = static_cast<float>(v);
      }
    }
    store.add(item.id, item.signal.size(), values);
  }
  return store;
}

SignalScope signal_scope_from_string(std::string_view name) {
  if (name == "none") return SignalScope::None;
  if (name == "neg-sentence") return SignalScope::NegSentence;
  if (name == "neg-scope") return SignalScope::NegScope;
  throw FormatError("unknown signal scope '" + std::string(name) + "'");
}

std::vector<SynthItem> synth_items(std::span<const ParsedSentence> corpus,
                                   std::span<const SubwordSentence> tokenization,
                                   SignalScope scope) {
  std::unordered_map<std::string, const ParsedSentence*> by_id;
  for (const auto& s : corpus) by_id.emplace(s.id, &s);
  std::vector<SynthItem> items;
  items.reserve(tokenization.size());
  for (const auto& sub : tokenization) {
    SynthItem item{sub.id, std::vector<bool>(sub.pieces.size(), false)};
    auto it = by_id.find(sub.id);
    if (scope != SignalScope::None && it != by_id.end()) {
      const auto& s = *it->second;
      std::vector<bool> words(s.size(), false);
      for (const auto& t : s.tokens) {
        if (!is_negation(t.surface)) continue;
        if (scope == SignalScope::NegSentence) {
          words.assign(s.size(), true);
          break;
        }
        if (t.is_root()) continue;
        for (auto w : neg_scope(s, t.index)) words[w] = true;
      }
      for (std::size_t p = 0; p < sub.pieces.size(); ++p)
        item.signal[p] = sub.pieces[p].word < words.size() && words[sub.pieces[p].word];
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace scope_probe
