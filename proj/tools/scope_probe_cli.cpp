// scope-probe: command-line front end for the probing pipeline.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scope_probe/analysis.hpp"
#include "scope_probe/corpus.hpp"
#include "scope_probe/dataset.hpp"
#include "scope_probe/embedding_io.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/probe.hpp"
#include "scope_probe/scope.hpp"
#include "scope_probe/subword.hpp"
#include "scope_probe/treebank.hpp"

namespace sp = scope_probe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sp::Error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sp::Error("cannot write " + path);
  return out;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  open_out(path) << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  auto in = open_in(path);
  return json::parse(in);
}

std::vector<sp::EvalRecord> load_records(const std::string& path) {
  auto in = open_in(path);
  return sp::read_records(in);
}

std::vector<sp::MaskInstruction> load_masks(const std::string& path) {
  if (path.empty()) return {};
  return sp::masks_from_json(read_json(path));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_stdev(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// --- ingest / annotate / masks / wordtok --------------------------------------

struct IngestArgs {
  std::string conllu, ptb, out;
};

void run_ingest(const IngestArgs& a) {
  auto in = open_in(a.conllu);
  auto dep = sp::read_conllu(in);
  std::vector<sp::ConstTree> trees;
  if (!a.ptb.empty()) {
    auto pin = open_in(a.ptb);
    trees = sp::read_ptb(pin);
  }
  auto corpus = sp::ingest(std::move(dep), std::move(trees));
  sp::write_corpus_file(a.out, corpus);
  std::cerr << "ingested " << corpus.size() << " sentences, hash "
            << sp::hex64(sp::corpus_hash(corpus)) << "\n";
}

struct AnnotateArgs {
  std::string corpus, out;
};

void run_annotate(const AnnotateArgs& a) {
  const auto corpus = sp::read_corpus_file(a.corpus);
  const auto records = sp::annotate_corpus(corpus);
  auto out = open_out(a.out);
  sp::write_annotations(out, records);
  const auto counts = sp::count_prein_npi(corpus);
  std::cerr << "annotated " << records.size() << " of " << corpus.size()
            << " sentences; NPI in IN only " << counts.in_only << ", PRE_IN only "
            << counts.prein_only << ", both " << counts.both << "\n";
}

struct MasksArgs {
  std::string kind = "pol", corpus, out;
};

void run_masks(const MasksArgs& a) {
  const auto corpus = sp::read_corpus_file(a.corpus);
  const auto masks = a.kind == "pol" ? sp::pol_masks(corpus) : sp::notnpi_masks(corpus);
  write_json(a.out, sp::masks_to_json(masks));
  std::cerr << masks.size() << " mask instructions\n";
}

struct WordTokArgs {
  std::string corpus, mask, out;
};

void run_wordtok(const WordTokArgs& a) {
  const auto corpus = sp::read_corpus_file(a.corpus);
  std::map<std::string, std::size_t> masked;
  for (const auto& m : load_masks(a.mask)) masked[m.id] = m.word;
  std::vector<sp::SubwordSentence> toks;
  toks.reserve(corpus.size());
  for (const auto& s : corpus) {
    auto it = masked.find(s.id);
    toks.push_back(sp::word_level_tokenization(
        s, it == masked.end() ? std::nullopt : std::optional<std::size_t>(it->second)));
  }
  auto out = open_out(a.out);
  sp::write_tokenization(out, toks);
}

// --- synth ---------------------------------------------------------------------

struct SynthArgs {
  std::string corpus, tok, out, signal = "neg-scope", format = "binary", tag = "synthetic";
  std::size_t dim = 64;
  double magnitude = 4.0, noise = 1.0;
  std::uint64_t seed = 0;
};

void run_synth(const SynthArgs& a) {
  const auto corpus = sp::read_corpus_file(a.corpus);
  const auto toks = sp::read_tokenization_file(a.tok);
  const auto items = sp::synth_items(corpus, toks, sp::signal_scope_from_string(a.signal));
  const auto store = sp::synth_embeddings(items, a.dim, {a.magnitude, a.noise}, a.seed, a.tag);
  sp::write_embeddings(a.out, store,
                       a.format == "jsonl" ? sp::EmbeddingFormat::JsonLines
                                           : sp::EmbeddingFormat::Binary);
  std::cerr << "wrote " << store.size() << " sentences of dim " << store.dim() << "\n";
}

// --- build -------------------------------------------------------------------------

struct BuildArgs {
  std::string family, corpus, tok, emb, out, target, mode = "neg";
  std::uint64_t seed = 0;
  std::size_t per_label = 32000, cap = 2000, limit = 40000;
  double train_fraction = 0.8;
};

void run_build(const BuildArgs& a) {
  const auto sentences = sp::read_corpus_file(a.corpus);
  const auto toks = a.tok.empty() ? std::vector<sp::SubwordSentence>{}
                                  : sp::read_tokenization_file(a.tok);
  std::vector<sp::SubwordSentence> word_level;
  if (toks.empty())
    for (const auto& s : sentences) word_level.push_back(sp::word_level_tokenization(s));
  const sp::Corpus corpus(sentences, toks.empty() ? word_level : toks);
  const sp::SplitConfig split{a.train_fraction};

  sp::Dataset d;
  switch (sp::family_from_string(a.family)) {
    case sp::Family::Neg:
      d = sp::build_neg(corpus, a.per_label, a.seed, split);
      break;
    case sp::Family::Pol:
      d = sp::build_pol(corpus, a.cap, a.seed, split);
      break;
    case sp::Family::NotNpi:
      d = sp::build_notnpi(corpus, a.mode == "pol" ? sp::NotNpiMode::Pol : sp::NotNpiMode::Neg);
      break;
    case sp::Family::Target:
      d = sp::build_target(corpus, a.target, a.per_label, a.seed, split);
      break;
    case sp::Family::Clause:
      d = sp::build_clause_study(corpus, a.target, a.limit);
      break;
  }
  if (!a.emb.empty()) {
    const auto store = sp::read_embeddings(a.emb);
    for (const auto& ex : d.examples)
      if (ex.piece >= store.piece_count(ex.sentence_id))
        throw sp::NotFoundError("embedding file lacks piece " + std::to_string(ex.piece) +
                                " of " + ex.sentence_id);
    d.manifest.params["embeddings"] = {{"model_tag", store.model_tag()}, {"dim", store.dim()}};
  }
  sp::write_dataset(a.out, d);
  for (const auto& w : d.manifest.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << sp::to_string(d.manifest.family) << ": " << d.examples.size() << " examples\n";
}

// --- train / evaluate -------------------------------------------------------------

struct TrainArgs {
  std::string family, data, eval, emb, config, out;
  std::size_t runs = 3;
  std::optional<std::uint64_t> seed;
};

void run_train(const TrainArgs& a) {
  const auto dataset = sp::read_dataset(a.data);
  if (!a.family.empty() && sp::family_from_string(a.family) != dataset.manifest.family)
    throw sp::DataError("dataset " + a.data + " is a " +
                        std::string(sp::to_string(dataset.manifest.family)) +
                        " dataset, not " + a.family);
  auto config = a.config.empty() ? sp::ProbeConfig{} : sp::ProbeConfig::from_json(read_json(a.config));
  if (a.seed) config.seed = *a.seed;
  const auto store = sp::read_embeddings(a.emb);
  const auto train_data = sp::attach_embeddings(dataset.examples, store, "train");
  const auto test_data = sp::attach_embeddings(dataset.examples, store, "test");

  std::optional<sp::Dataset> eval_set;
  if (!a.eval.empty()) eval_set = sp::read_dataset(a.eval);
  const auto& eval_examples = eval_set ? eval_set->examples : dataset.examples;
  const auto eval_split = eval_set ? std::string() : std::string("test");
  std::vector<sp::ProbeExample> selected;
  for (const auto& ex : eval_examples)
    if (eval_split.empty() || ex.split == eval_split) selected.push_back(ex);
  const auto eval_data = sp::attach_embeddings(selected, store);

  const auto runs = sp::run_suite(config, train_data, test_data, a.runs);
  fs::create_directories(a.out);
  std::vector<sp::EvalRecord> records;
  std::vector<double> test_acc, eval_acc;
  json per_run = json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    sp::write_checkpoint((fs::path(a.out) / ("model-" + std::to_string(r) + ".spmd")).string(),
                         runs[r].model);
    const auto ev = sp::evaluate(runs[r].model, eval_data);
    auto recs = sp::make_records(selected, ev, r);
    records.insert(records.end(), recs.begin(), recs.end());
    test_acc.push_back(100.0 * runs[r].eval.accuracy);
    eval_acc.push_back(100.0 * ev.accuracy);
    per_run.push_back({{"run", r},
                       {"seed", runs[r].seed},
                       {"test_accuracy", test_acc.back()},
                       {"eval_accuracy", eval_acc.back()},
                       {"final_loss", runs[r].model.epoch_losses.empty()
                                          ? 0.0
                                          : runs[r].model.epoch_losses.back()}});
  }
  auto rec_out = open_out((fs::path(a.out) / "records.jsonl").string());
  sp::write_records(rec_out, records);
  const json summary = {{"family", sp::to_string(dataset.manifest.family)},
                        {"config", config.to_json()},
                        {"runs", per_run},
                        {"test_accuracy", {{"mean", mean_of(test_acc)}, {"stdev", pop_stdev(test_acc)}}},
                        {"eval_accuracy", {{"mean", mean_of(eval_acc)}, {"stdev", pop_stdev(eval_acc)}}},
                        {"eval_set", a.eval.empty() ? a.data + " (test)" : a.eval}};
  write_json((fs::path(a.out) / "summary.json").string(), summary);
  std::printf("test accuracy %.1f (%.1f)\n", mean_of(test_acc), pop_stdev(test_acc));
}

struct EvaluateArgs {
  std::string model, data, emb, split, out;
  std::size_t run = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  const auto model = sp::read_checkpoint(a.model);
  const auto dataset = sp::read_dataset(a.data);
  const auto store = sp::read_embeddings(a.emb);
  std::vector<sp::ProbeExample> selected;
  for (const auto& ex : dataset.examples)
    if (a.split.empty() || ex.split == a.split) selected.push_back(ex);
  const auto result = sp::evaluate(model, sp::attach_embeddings(selected, store));
  auto out = open_out(a.out);
  sp::write_records(out, sp::make_records(selected, result, a.run));
  std::printf("accuracy %.1f over %zu examples\n", 100.0 * result.accuracy, selected.size());
}

// --- reports ------------------------------------------------------------------------

struct BreakdownArgs {
  std::string records, out, csv;
  int window = 8;
};

void run_breakdown(const BreakdownArgs& a) {
  const auto records = load_records(a.records);
  const auto report = sp::breakdown(records, a.window);
  json j = report.to_json();
  try {
    const auto gap = sp::accuracy_gap(report);
    j["gap"] = gap.to_json();
    std::printf("gap %.1f (%.1f); %s\n", gap.mean, gap.stdev, gap.coverage_note().c_str());
  } catch (const sp::DataError& e) {
    j["gap"] = nullptr;
    std::cerr << "warning: " << e.what() << "\n";
  }
  write_json(a.out, j);
  if (!a.csv.empty()) sp::emit_plot_data(report, a.csv);
}

struct PermArgs {
  std::string records, out;
  int window = 8;
  std::size_t n_perm = 5000;
  std::uint64_t seed = 0;
  double alpha = 0.001;
};

void run_permtest(const PermArgs& a) {
  const auto tests = sp::zone_tests(load_records(a.records), a.window, a.n_perm, a.seed, a.alpha);
  json j = json::array();
  std::size_t significant = 0;
  for (const auto& t : tests) {
    j.push_back(t.to_json());
    significant += t.significant();
  }
  write_json(a.out, {{"tests", j}, {"significant", significant}, {"total", tests.size()}});
  std::printf("%zu of %zu comparisons significant at alpha %g\n", significant, tests.size(),
              a.alpha);
}

struct ClauseArgs {
  std::string records, out;
  int window = 8;
};

void run_clause_gap(const ClauseArgs& a) {
  const auto g = sp::clause_gap(load_records(a.records), a.window);
  write_json(a.out, g.to_json());
  std::printf("in %.1f out %.1f gap %.1f\n", 100 * g.in_accuracy, 100 * g.out_accuracy,
              100 * g.gap);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negation-scope probing pipeline"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Merge CoNLL-U and PTB parses into corpus.db");
  c_ingest->add_option("--conllu", ingest.conllu, "CoNLL-U file")->required();
  c_ingest->add_option("--ptb", ingest.ptb, "PTB bracketed trees, same order");
  c_ingest->add_option("--out", ingest.out, "corpus.db output")->required();

  AnnotateArgs annotate;
  auto* c_annotate = app.add_subcommand("annotate", "Pattern, scope and zone annotation");
  c_annotate->add_option("--corpus", annotate.corpus)->required();
  c_annotate->add_option("--out", annotate.out)->required();

  MasksArgs masks;
  auto* c_masks = app.add_subcommand("masks", "Write masks.json for the extractor");
  c_masks->add_option("kind", masks.kind, "pol or notnpi")
      ->check(CLI::IsMember({"pol", "notnpi"}));
  c_masks->add_option("--corpus", masks.corpus)->required();
  c_masks->add_option("--out", masks.out)->required();

  WordTokArgs wordtok;
  auto* c_wordtok = app.add_subcommand("wordtok", "Word-level tokenization file");
  c_wordtok->add_option("--corpus", wordtok.corpus)->required();
  c_wordtok->add_option("--mask", wordtok.mask, "masks.json");
  c_wordtok->add_option("--out", wordtok.out)->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Synthetic embeddings with a planted signal");
  c_synth->add_option("--corpus", synth.corpus)->required();
  c_synth->add_option("--tok", synth.tok)->required();
  c_synth->add_option("--out", synth.out)->required();
  c_synth->add_option("--signal", synth.signal)
      ->check(CLI::IsMember({"none", "neg-sentence", "neg-scope"}));
  c_synth->add_option("--dim", synth.dim);
  c_synth->add_option("--magnitude", synth.magnitude);
  c_synth->add_option("--noise", synth.noise);
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--format", synth.format)->check(CLI::IsMember({"binary", "jsonl"}));
  c_synth->add_option("--model-tag", synth.tag);

  BuildArgs build;
  auto* c_build = app.add_subcommand("build", "Build a probing dataset");
  c_build->add_option("family", build.family, "neg, pol, notnpi, target or clause")->required();
  c_build->add_option("--corpus", build.corpus)->required();
  c_build->add_option("--tok", build.tok, "tokenization file (word level if absent)");
  c_build->add_option("--emb", build.emb, "embedding file to check coverage against");
  c_build->add_option("--seed", build.seed);
  c_build->add_option("--out", build.out)->required();
  c_build->add_option("--per-label", build.per_label);
  c_build->add_option("--cap", build.cap, "per genre and pair cap for pol");
  c_build->add_option("--target", build.target);
  c_build->add_option("--limit", build.limit, "sentence limit for clause");
  c_build->add_option("--mode", build.mode, "notnpi mode")->check(CLI::IsMember({"neg", "pol"}));
  c_build->add_option("--train-fraction", build.train_fraction);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train probes and record per-piece correctness");
  c_train->add_option("--family", train.family);
  c_train->add_option("--data", train.data, "dataset directory")->required();
  c_train->add_option("--eval", train.eval, "evaluation dataset directory");
  c_train->add_option("--emb", train.emb)->required();
  c_train->add_option("--config", train.config, "probe config JSON");
  c_train->add_option("--runs", train.runs);
  c_train->add_option("--seed", train.seed);
  c_train->add_option("--out", train.out)->required();

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  c_eval->add_option("--model", evaluate.model)->required();
  c_eval->add_option("--data", evaluate.data)->required();
  c_eval->add_option("--emb", evaluate.emb)->required();
  c_eval->add_option("--split", evaluate.split);
  c_eval->add_option("--run", evaluate.run);
  c_eval->add_option("--out", evaluate.out)->required();

  BreakdownArgs bd;
  auto* c_bd = app.add_subcommand("breakdown", "Zone x position accuracy and gap");
  c_bd->add_option("--records", bd.records)->required();
  c_bd->add_option("--window", bd.window);
  c_bd->add_option("--out", bd.out);
  c_bd->add_option("--csv", bd.csv, "plot data");

  PermArgs perm;
  auto* c_perm = app.add_subcommand("permtest", "Per-position permutation tests");
  c_perm->add_option("--records", perm.records)->required();
  c_perm->add_option("--window", perm.window);
  c_perm->add_option("--permutations", perm.n_perm);
  c_perm->add_option("--seed", perm.seed);
  c_perm->add_option("--alpha", perm.alpha);
  c_perm->add_option("--out", perm.out);

  ClauseArgs clause;
  auto* c_clause = app.add_subcommand("clause-gap", "In-clause vs out-of-clause accuracy");
  c_clause->add_option("--records", clause.records)->required();
  c_clause->add_option("--window", clause.window);
  c_clause->add_option("--out", clause.out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_ingest) run_ingest(ingest);
    else if (*c_annotate) run_annotate(annotate);
    else if (*c_masks) run_masks(masks);
    else if (*c_wordtok) run_wordtok(wordtok);
    else if (*c_synth) run_synth(synth);
    else if (*c_build) run_build(build);
    else if (*c_train) run_train(train);
    else if (*c_eval) run_evaluate(evaluate);
    else if (*c_bd) run_breakdown(bd);
    else if (*c_perm) run_permtest(perm);
    else if (*c_clause) run_clause_gap(clause);
  } catch (const sp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
