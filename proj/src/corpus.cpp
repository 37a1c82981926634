#include "scope_probe/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "scope_probe/errors.hpp"

namespace scope_probe {

using nlohmann::json;

json sentence_to_json(const ParsedSentence& s) {
  json tokens = json::array();
  json deptree = json::array();
  for (const auto& t : s.tokens) {
    tokens.push_back({{"form", t.surface}, {"pos", t.pos}});
    deptree.push_back({{"head", t.head}, {"deprel", t.deprel}});
  }
  json meta = json::object();
  for (const auto& [k, v] : s.meta) meta[k] = v;
  if (!s.multiword.empty()) {
    json mwt = json::array();
    for (const auto& m : s.multiword)
      mwt.push_back({{"first", m.first}, {"last", m.last}, {"form", m.surface}});
    meta["mwt"] = std::move(mwt);
  }
  json j;
  j["id"] = s.id;
  j["tokens"] = std::move(tokens);
  j["deptree"] = std::move(deptree);
  j["consttree"] = s.consttree ? json(print_ptb(*s.consttree)) : json(nullptr);
  j["meta"] = std::move(meta);
  return j;
}

ParsedSentence sentence_from_json(const json& j) {
  ParsedSentence s;
  s.id = j.at("id").get<std::string>();
  const auto& tokens = j.at("tokens");
  const auto& deptree = j.at("deptree");
  if (tokens.size() != deptree.size())
    throw FormatError("sentence " + s.id + ": tokens and deptree differ in length");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Token t;
    t.index = i;
    t.surface = tokens[i].at("form").get<std::string>();
    t.pos = tokens[i].value("pos", "");
    t.head = deptree[i].at("head").get<int>();
    t.deprel = deptree[i].at("deprel").get<std::string>();
    s.tokens.push_back(std::move(t));
  }
  if (j.contains("consttree") && !j["consttree"].is_null())
    s.consttree = parse_ptb(j["consttree"].get<std::string>());
  if (j.contains("meta")) {
    for (const auto& [k, v] : j["meta"].items()) {
      if (k == "mwt") {
        for (const auto& m : v)
          s.multiword.push_back({m.at("first").get<std::size_t>(),
                                 m.at("last").get<std::size_t>(),
                                 m.at("form").get<std::string>()});
      } else if (v.is_string()) {
        s.meta[k] = v.get<std::string>();
      }
    }
  }
  return s;
}

void write_corpus(std::ostream& out, const std::vector<ParsedSentence>& corpus) {
  for (const auto& s : corpus) out << sentence_to_json(s).dump() << '\n';
}

void write_corpus_file(const std::string& path,
                       const std::vector<ParsedSentence>& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_corpus(out, corpus);
}

namespace {

void validate_sentence(const ParsedSentence& s) {
  validate_dependencies(s.tokens);
  if (!s.consttree) return;
  auto words = leaves(*s.consttree);
  if (words.size() != s.tokens.size())
    throw ValidationError("sentence " + s.id + ": tree has " +
                          std::to_string(words.size()) + " leaves for " +
                          std::to_string(s.tokens.size()) + " tokens");
  for (std::size_t i = 0; i < words.size(); ++i)
    if (normalize_surface(words[i]) != normalize_surface(s.tokens[i].surface))
      throw ValidationError("sentence " + s.id + ": leaf " + std::to_string(i) +
                            " does not match its token");
}

}  // namespace

std::vector<ParsedSentence> read_corpus(std::istream& in) {
  std::vector<ParsedSentence> corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ParsedSentence s;
    try {
      s = sentence_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      validate_sentence(s);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate sentence id " + s.id);
    corpus.push_back(std::move(s));
  }
  return corpus;
}

std::vector<ParsedSentence> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_corpus(in);
}

std::vector<ParsedSentence> ingest(std::vector<ParsedSentence> dep,
                                   std::vector<ConstTree> trees) {
  if (dep.size() != trees.size())
    throw AlignmentError(std::to_string(dep.size()) + " CoNLL-U sentences vs " +
                             std::to_string(trees.size()) + " trees",
                         std::min(dep.size(), trees.size()));
  std::unordered_set<std::string> ids;
  std::vector<ParsedSentence> out;
  out.reserve(dep.size());
  for (std::size_t i = 0; i < dep.size(); ++i) {
    if (!ids.insert(dep[i].id).second)
      throw ValidationError("duplicate sentence id " + dep[i].id);
    out.push_back(align_parses(std::move(dep[i]), std::move(trees[i])));
  }
  return out;
}

std::uint64_t corpus_hash(const std::vector<ParsedSentence>& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : corpus) {
    auto text = sentence_to_json(s).dump();
    for (unsigned char c : text) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace scope_probe
