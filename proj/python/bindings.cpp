#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scope_probe/analysis.hpp"
#include "scope_probe/corpus.hpp"
#include "scope_probe/dataset.hpp"
#include "scope_probe/embedding_io.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/probe.hpp"
#include "scope_probe/scope.hpp"
#include "scope_probe/subword.hpp"
#include "scope_probe/treebank.hpp"

namespace py = pybind11;
namespace sp = scope_probe;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<sp::ParsedSentence> parse_conllu_text(const std::string& text) {
  std::istringstream in(text);
  return sp::read_conllu(in);
}

std::vector<sp::ParsedSentence> ingest_text(const std::string& conllu, const std::string& ptb) {
  std::istringstream dep(conllu), trees(ptb);
  return sp::ingest(sp::read_conllu(dep),
                    ptb.empty() ? std::vector<sp::ConstTree>{} : sp::read_ptb(trees));
}

py::object annotate(const sp::ParsedSentence& s) {
  auto ann = sp::annotate(s);
  if (!ann) return py::none();
  return to_py(sp::annotation_to_json({s.id, *ann, sp::zone_labels(s, *ann)}));
}

py::list project(const sp::ParsedSentence& s, const sp::SubwordSentence& sub) {
  auto ann = sp::annotate(s);
  if (!ann) throw sp::DataError("sentence " + s.id + " matches no negation pattern");
  py::list out;
  for (const auto& t : sp::mark_eligible(sp::project_zones(s, sp::zone_labels(s, *ann), *ann, sub))) {
    py::dict d;
    d["piece"] = t.piece;
    d["word"] = t.word;
    d["zone"] = t.zone ? py::cast(std::string(sp::to_string(*t.zone))) : py::none();
    d["position"] = t.position;
    d["eligible"] = t.eligible;
    d["flagged"] = t.flagged;
    out.append(d);
  }
  return out;
}

sp::ProbeData probe_data(const Eigen::MatrixXf& rows, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(rows.rows()) != labels.size())
    throw sp::ValidationError("inputs have " + std::to_string(rows.rows()) + " rows but " +
                              std::to_string(labels.size()) + " labels");
  return {rows.transpose(), labels};
}

std::vector<sp::EvalRecord> records_from_py(const py::list& records) {
  std::vector<sp::EvalRecord> out;
  for (const auto& r : records) out.push_back(sp::EvalRecord::from_json(from_py(py::reinterpret_borrow<py::object>(r))));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Negation-scope probing core";

  auto base = py::register_exception<sp::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<sp::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<sp::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<sp::AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<sp::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<sp::NotFoundError>(m, "NotFoundError", base.ptr());
  py::register_exception<sp::DataError>(m, "DataError", base.ptr());

  py::class_<sp::ParsedSentence>(m, "Sentence")
      .def_readonly("id", &sp::ParsedSentence::id)
      .def_property_readonly("words",
                             [](const sp::ParsedSentence& s) {
                               std::vector<std::string> w;
                               for (const auto& t : s.tokens) w.push_back(t.surface);
                               return w;
                             })
      .def_property_readonly("genre", &sp::ParsedSentence::genre)
      .def("to_json", [](const sp::ParsedSentence& s) { return to_py(sp::sentence_to_json(s)); })
      .def("__len__", &sp::ParsedSentence::size)
      .def("__repr__", [](const sp::ParsedSentence& s) { return "<Sentence " + s.id + ">"; });

  py::class_<sp::SubwordSentence>(m, "Tokenization")
      .def_readonly("id", &sp::SubwordSentence::id)
      .def_property_readonly("pieces",
                             [](const sp::SubwordSentence& s) {
                               std::vector<std::pair<std::string, std::size_t>> p;
                               for (const auto& x : s.pieces) p.emplace_back(x.text, x.word);
                               return p;
                             })
      .def_property_readonly("masked_word", &sp::SubwordSentence::masked_word);

  m.def("parse_conllu", &parse_conllu_text, py::arg("text"));
  m.def("ingest", &ingest_text, py::arg("conllu"), py::arg("ptb") = "");
  m.def("read_corpus", &sp::read_corpus_file, py::arg("path"));
  m.def("write_corpus", &sp::write_corpus_file, py::arg("path"), py::arg("corpus"));
  m.def("corpus_hash", [](const std::vector<sp::ParsedSentence>& c) { return sp::hex64(sp::corpus_hash(c)); });

  m.def("annotate", &annotate, py::arg("sentence"));
  m.def("neg_scope", &sp::neg_scope, py::arg("sentence"), py::arg("not_index"));
  m.def("clause_of", &sp::clause_of, py::arg("sentence"), py::arg("target"));

  m.def("word_level_tokenization", &sp::word_level_tokenization, py::arg("sentence"),
        py::arg("masked_word") = py::none());
  m.def("read_tokenization", &sp::read_tokenization_file, py::arg("path"));
  m.def("project_zones", &project, py::arg("sentence"), py::arg("tokenization"));

  m.def("pol_masks", [](const std::vector<sp::ParsedSentence>& c) { return to_py(sp::masks_to_json(sp::pol_masks(c))); });
  m.def("notnpi_masks", [](const std::vector<sp::ParsedSentence>& c) { return to_py(sp::masks_to_json(sp::notnpi_masks(c))); });

  m.def(
      "build_dataset",
      [](const std::string& family, const std::vector<sp::ParsedSentence>& sentences,
         const std::vector<sp::SubwordSentence>& tokens, std::uint64_t seed, std::size_t per_label,
         const std::string& target, std::size_t limit, const std::string& mode) {
        const sp::Corpus corpus(sentences, tokens);
        sp::Dataset d;
        switch (sp::family_from_string(family)) {
          case sp::Family::Neg: d = sp::build_neg(corpus, per_label, seed); break;
          case sp::Family::Pol: d = sp::build_pol(corpus, per_label, seed); break;
          case sp::Family::NotNpi:
            d = sp::build_notnpi(corpus, mode == "pol" ? sp::NotNpiMode::Pol : sp::NotNpiMode::Neg);
            break;
          case sp::Family::Target: d = sp::build_target(corpus, target, per_label, seed); break;
          case sp::Family::Clause: d = sp::build_clause_study(corpus, target, limit); break;
        }
        py::list examples;
        for (const auto& ex : d.examples) examples.append(to_py(ex.to_json()));
        return py::make_tuple(to_py(d.manifest.to_json()), examples);
      },
      py::arg("family"), py::arg("sentences"), py::arg("tokenizations"), py::arg("seed") = 0,
      py::arg("per_label") = 32000, py::arg("target") = "", py::arg("limit") = 40000,
      py::arg("mode") = "neg");

  m.def(
      "synth_embeddings",
      [](const std::vector<sp::ParsedSentence>& sentences,
         const std::vector<sp::SubwordSentence>& tokens, const std::string& signal,
         std::size_t dim, double magnitude, double noise, std::uint64_t seed,
         const std::string& path) {
        const auto items = sp::synth_items(sentences, tokens, sp::signal_scope_from_string(signal));
        sp::write_embeddings(path, sp::synth_embeddings(items, dim, {magnitude, noise}, seed));
      },
      py::arg("sentences"), py::arg("tokenizations"), py::arg("signal"), py::arg("dim"),
      py::arg("magnitude"), py::arg("noise"), py::arg("seed"), py::arg("path"));
  m.def(
      "read_embeddings",
      [](const std::string& path) {
        const auto store = sp::read_embeddings(path);
        py::dict out;
        for (const auto& id : store.ids()) {
          Eigen::MatrixXf mat(store.piece_count(id), store.dim());
          for (std::size_t p = 0; p < store.piece_count(id); ++p) {
            auto v = store.get(id, p);
            for (std::size_t k = 0; k < store.dim(); ++k)
              mat(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = v[k];
          }
          out[py::str(id)] = mat;
        }
        return out;
      },
      py::arg("path"));

  py::class_<sp::ProbeModel>(m, "ProbeModel")
      .def_property_readonly("config", [](const sp::ProbeModel& p) { return to_py(p.config.to_json()); })
      .def_readonly("epoch_losses", &sp::ProbeModel::epoch_losses)
      .def("predict",
           [](const sp::ProbeModel& p, const Eigen::MatrixXf& rows) {
             return p.network.predict(rows.transpose());
           })
      .def("save", [](const sp::ProbeModel& p, const std::string& path) { sp::write_checkpoint(path, p); });
  m.def("load_probe", &sp::read_checkpoint, py::arg("path"));

  m.def(
      "train_probe",
      [](const Eigen::MatrixXf& inputs, const std::vector<int>& labels, const py::dict& config) {
        const auto cfg = sp::ProbeConfig::from_json(from_py(config));
        py::gil_scoped_release release;
        return sp::train(cfg, probe_data(inputs, labels));
      },
      py::arg("inputs"), py::arg("labels"), py::arg("config") = py::dict());
  m.def(
      "evaluate",
      [](const sp::ProbeModel& model, const Eigen::MatrixXf& inputs, const std::vector<int>& labels) {
        const auto res = sp::evaluate(model, probe_data(inputs, labels));
        return py::make_tuple(res.accuracy, res.correct);
      },
      py::arg("model"), py::arg("inputs"), py::arg("labels"));

  m.def(
      "perm_test",
      [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, std::size_t n_perm,
         std::uint64_t seed, double alpha) {
        return to_py(sp::perm_test(a, b, n_perm, seed, "", alpha).to_json());
      },
      py::arg("a"), py::arg("b"), py::arg("n_perm") = 5000, py::arg("seed") = 0,
      py::arg("alpha") = 0.001);
  m.def(
      "breakdown",
      [](const py::list& records, int window) {
        const auto report = sp::breakdown(records_from_py(records), window);
        auto j = report.to_json();
        try {
          j["gap"] = sp::accuracy_gap(report).to_json();
        } catch (const sp::DataError&) {
          j["gap"] = nullptr;
        }
        return to_py(j);
      },
      py::arg("records"), py::arg("window") = 8);
  m.def(
      "clause_gap",
      [](const py::list& records, int window) {
        return to_py(sp::clause_gap(records_from_py(records), window).to_json());
      },
      py::arg("records"), py::arg("window") = 8);
}
