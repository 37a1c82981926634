#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "grammar.hpp"
#include "scope_probe/embedding_io.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/random.hpp"

namespace sp = scope_probe;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "scope_probe_unit";
  fs::create_directories(dir);
  return dir / name;
}

sp::EmbeddingStore random_store(std::size_t count, std::size_t dim, std::uint64_t seed) {
  sp::Rng rng(seed);
  sp::EmbeddingStore store("toy-model", dim);
  for (std::size_t i = 0; i < count; ++i) {
    const auto pieces = 1 + rng.below(12);
    std::vector<float> values(pieces * dim);
    for (auto& v : values) v = static_cast<float>(rng.normal());
    store.add("s" + std::to_string(i), pieces, values);
  }
  return store;
}

void expect_same(const sp::EmbeddingStore& a, const sp::EmbeddingStore& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.dim(), b.dim());
  EXPECT_EQ(a.model_tag(), b.model_tag());
  EXPECT_EQ(a.ids(), b.ids());
  for (const auto& id : a.ids()) {
    ASSERT_EQ(a.piece_count(id), b.piece_count(id));
    for (std::size_t p = 0; p < a.piece_count(id); ++p) {
      auto x = a.get(id, p);
      auto y = b.get(id, p);
      ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    }
  }
}

}  // namespace

TEST(EmbeddingIo, BinaryRoundTripIsExact) {
  auto store = random_store(1000, 16, 3);
  auto path = temp_file("rt.spem").string();
  sp::write_embeddings(path, store);
  expect_same(store, sp::read_embeddings(path));
}

TEST(EmbeddingIo, JsonLinesRoundTripIsExact) {
  auto store = random_store(1000, 8, 4);
  auto path = temp_file("rt.jsonl").string();
  sp::write_embeddings(path, store, sp::EmbeddingFormat::JsonLines);
  expect_same(store, sp::read_embeddings(path));
}

TEST(EmbeddingIo, RejectsBadMagic) {
  auto path = temp_file("bad.spem").string();
  std::ofstream(path, std::ios::binary) << "NOPE and then some bytes";
  EXPECT_THROW(sp::read_embeddings(path), sp::FormatError);
}

TEST(EmbeddingIo, RejectsTruncation) {
  auto store = random_store(20, 4, 5);
  auto path = temp_file("trunc.spem").string();
  sp::write_embeddings(path, store);
  const auto size = fs::file_size(path);
  for (auto cut : {size / 2, size / 3, std::uintmax_t{12}}) {
    fs::resize_file(path, cut);
    EXPECT_THROW(sp::read_embeddings(path), sp::FormatError) << cut;
    sp::write_embeddings(path, store);
  }
}

TEST(EmbeddingIo, MissingFileAndUnknownIds) {
  EXPECT_THROW(sp::read_embeddings(temp_file("does-not-exist").string()), sp::Error);
  auto store = random_store(3, 4, 6);
  EXPECT_THROW(store.get("nope", 0), sp::NotFoundError);
  EXPECT_THROW(store.get("s0", 99), sp::NotFoundError);
  std::vector<float> wrong(5);
  EXPECT_THROW(store.add("x", 2, wrong), sp::FormatError);
}

TEST(SynthEmbeddings, DeterministicPerSentence) {
  std::vector<sp::SynthItem> items{{"a", {true, false}}, {"b", {false, false, true}}};
  auto one = sp::synth_embeddings(items, 10, {3.0, 1.0}, 42);
  auto two = sp::synth_embeddings(items, 10, {3.0, 1.0}, 42);
  expect_same(one, two);
  // Noise of "b" does not depend on which sentences precede it.
  std::vector<sp::SynthItem> only_b{items[1]};
  auto three = sp::synth_embeddings(only_b, 10, {3.0, 1.0}, 42);
  for (std::size_t p = 0; p < 3; ++p) {
    auto x = one.get("b", p);
    auto y = three.get("b", p);
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
  auto other = sp::synth_embeddings(items, 10, {3.0, 1.0}, 43);
  EXPECT_NE(one.get("a", 0)[0], other.get("a", 0)[0]);
}

TEST(SynthEmbeddings, PlantedDirectionShiftsFlaggedPieces) {
  std::vector<sp::SynthItem> items;
  for (int i = 0; i < 400; ++i) items.push_back({"s" + std::to_string(i), {true, false}});
  auto store = sp::synth_embeddings(items, 6, {5.0, 1.0}, 1);
  // The flagged-minus-unflagged mean difference has norm close to 5.
  std::vector<double> diff(6, 0.0);
  for (const auto& it : items)
    for (std::size_t d = 0; d < 6; ++d)
      diff[d] += (store.get(it.id, 0)[d] - store.get(it.id, 1)[d]) / 400.0;
  double norm = 0.0;
  for (double v : diff) norm += v * v;
  EXPECT_NEAR(std::sqrt(norm), 5.0, 0.4);
}

TEST(SynthItems, ScopeSignalFollowsAnnotation) {
  const auto& s = sp::testing::golden("know-anyone");
  std::vector<sp::ParsedSentence> corpus{s};
  std::vector<sp::SubwordSentence> toks{sp::word_level_tokenization(s)};
  auto none = sp::synth_items(corpus, toks, sp::SignalScope::None);
  auto sent = sp::synth_items(corpus, toks, sp::SignalScope::NegSentence);
  auto scope = sp::synth_items(corpus, toks, sp::SignalScope::NegScope);
  ASSERT_EQ(scope.size(), 1u);
  EXPECT_EQ(std::count(none[0].signal.begin(), none[0].signal.end(), true), 0);
  EXPECT_EQ(std::count(sent[0].signal.begin(), sent[0].signal.end(), true),
            static_cast<long>(s.size()));
  // I know anyone here ,
  std::vector<bool> expected(s.size(), false);
  for (std::size_t w : {2, 5, 6, 7, 8}) expected[w] = true;
  EXPECT_EQ(scope[0].signal, expected);
  EXPECT_EQ(sp::signal_scope_from_string("neg-scope"), sp::SignalScope::NegScope);
}
