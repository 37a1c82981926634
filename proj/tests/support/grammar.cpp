#include "grammar.hpp"

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "scope_probe/corpus.hpp"
#include "scope_probe/random.hpp"

namespace scope_probe::testing {

namespace {

struct Verb {
  const char* base;
  const char* past;
  const char* third;
  const char* ger;
};

constexpr std::array<Verb, 20> kTransitive = {{
    {"know", "knew", "knows", "knowing"},     {"see", "saw", "sees", "seeing"},
    {"like", "liked", "likes", "liking"},     {"need", "needed", "needs", "needing"},
    {"find", "found", "finds", "finding"},    {"want", "wanted", "wants", "wanting"},
    {"read", "read", "reads", "reading"},     {"buy", "bought", "buys", "buying"},
    {"meet", "met", "meets", "meeting"},      {"call", "called", "calls", "calling"},
    {"visit", "visited", "visits", "visiting"}, {"trust", "trusted", "trusts", "trusting"},
    {"hear", "heard", "hears", "hearing"},    {"watch", "watched", "watches", "watching"},
    {"write", "wrote", "writes", "writing"},  {"remember", "remembered", "remembers", "remembering"},
    {"notice", "noticed", "notices", "noticing"}, {"follow", "followed", "follows", "following"},
    {"help", "helped", "helps", "helping"},   {"understand", "understood", "understands", "understanding"},
}};

constexpr std::array<Verb, 10> kIntransitive = {{
    {"leave", "left", "leaves", "leaving"},   {"go", "went", "goes", "going"},
    {"sleep", "slept", "sleeps", "sleeping"}, {"arrive", "arrived", "arrives", "arriving"},
    {"wait", "waited", "waits", "waiting"},   {"stay", "stayed", "stays", "staying"},
    {"laugh", "laughed", "laughs", "laughing"}, {"fall", "fell", "falls", "falling"},
    {"work", "worked", "works", "working"},   {"complain", "complained", "complains", "complaining"},
}};

constexpr std::array<const char*, 24> kNouns = {
    "teacher", "house",   "book",     "letter",   "garden", "student", "car",
    "doctor",  "window",  "neighbor", "question", "river",  "village", "station",
    "painting", "company", "problem", "city",     "road",   "friend",  "child",
    "manager", "story",   "table"};
constexpr std::array<const char*, 12> kPluralNouns = {
    "books", "letters", "questions", "friends", "students", "houses",
    "problems", "stories", "pictures", "answers", "reasons", "tickets"};
constexpr std::array<const char*, 14> kAdjectives = {
    "big", "old", "small", "new", "quiet", "strange", "young", "red",
    "beautiful", "famous", "empty", "careful", "difficult", "important"};
constexpr std::array<const char*, 8> kNames = {"Kim", "Sam", "Maria", "Jack",
                                               "Anna", "Peter", "Lucy", "Omar"};
constexpr std::array<const char*, 8> kAdverbs = {"here", "today", "again", "there",
                                                 "yesterday", "often", "quickly", "early"};
constexpr std::array<const char*, 6> kPreps = {"in", "at", "near", "with", "from", "behind"};
constexpr std::array<const char*, 5> kGenres = {"news", "fiction", "spoken", "academic",
                                                "magazine"};

struct Node {
  ConstTree tree;
  std::size_t head = 0;
};

struct Np {
  Node node;
  bool third_singular = true;
  bool first_singular = false;
};

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  template <typename C>
  auto pick(const C& items) -> decltype(items[0]) {
    return items[rng_.below(items.size())];
  }
  bool chance(double p) { return rng_.uniform() < p; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }

  Node leaf(const std::string& word, const std::string& pos) {
    const auto idx = s_.tokens.size();
    s_.tokens.push_back({idx, word, pos, kRoot, ""});
    ConstTree t;
    t.label = pos;
    t.word = word;
    t.leaf = idx;
    return {std::move(t), idx};
  }

  static Node node(const std::string& label, std::vector<Node> kids, std::size_t head_kid) {
    Node n;
    n.tree.label = label;
    n.head = kids.at(head_kid).head;
    for (auto& k : kids) n.tree.children.push_back(std::move(k.tree));
    return n;
  }

  void dep(std::size_t d, std::size_t h, const std::string& rel) {
    s_.tokens[d].head = static_cast<int>(h);
    s_.tokens[d].deprel = rel;
  }

  ParsedSentence finish(Node top, std::size_t root, std::string id, std::string genre) {
    s_.tokens[root].head = kRoot;
    s_.tokens[root].deprel = "root";
    compute_spans(top.tree);
    s_.consttree = std::move(top.tree);
    s_.id = std::move(id);
    s_.meta["genre"] = std::move(genre);
    return std::move(s_);
  }

  // --- noun phrases --------------------------------------------------------

  Np pronoun() {
    static constexpr std::array<const char*, 7> kPro = {"I", "you", "we", "they", "he", "she", "it"};
    const std::string w = pick(kPro);
    Np np{node("NP", {leaf(w, "PRP")}, 0), w == "he" || w == "she" || w == "it", w == "I"};
    return np;
  }

  Np name() { return {node("NP", {leaf(pick(kNames), "NNP")}, 0), true, false}; }

  // Determiner + up to two adjectives + noun, optionally with an "of"
  // complement or a relative clause.
  Np noun_phrase(std::size_t max_adjectives = 2, bool allow_modifier = true) {
    std::vector<Node> kids;
    const bool plural = chance(0.25);
    static constexpr std::array<const char*, 5> kDet = {"the", "a", "this", "my", "his"};
    std::string det = plural ? (chance(0.5) ? "the" : "my") : pick(kDet);
    const bool poss = det == "my" || det == "his";
    kids.push_back(leaf(det, poss ? "PRP$" : "DT"));
    const auto n_adj = between(0, max_adjectives);
    for (std::size_t i = 0; i < n_adj; ++i) kids.push_back(leaf(pick(kAdjectives), "JJ"));
    kids.push_back(leaf(plural ? pick(kPluralNouns) : pick(kNouns), plural ? "NNS" : "NN"));
    const auto noun = kids.back().head;
    dep(kids.front().head, noun, poss ? "nmod:poss" : "det");
    for (std::size_t i = 1; i + 1 < kids.size(); ++i) dep(kids[i].head, noun, "amod");
    Node base = node("NP", std::move(kids), n_adj + 1);
    if (allow_modifier && chance(0.2)) {
      auto prep = leaf("of", "IN");
      auto d = leaf("the", "DT");
      auto n = leaf(pick(kNouns), "NN");
      dep(prep.head, n.head, "case");
      dep(d.head, n.head, "det");
      dep(n.head, noun, "nmod");
      auto inner = node("NP", {std::move(d), std::move(n)}, 1);
      auto pp = node("PP", {std::move(prep), std::move(inner)}, 1);
      base = node("NP", {std::move(base), std::move(pp)}, 0);
    } else if (allow_modifier && chance(0.12)) {
      auto that = leaf("that", "WDT");
      auto subj = chance(0.5) ? name() : pronoun();
      const auto& v = pick(kTransitive);
      auto verb = leaf(v.past, "VBD");
      dep(that.head, verb.head, "obj");
      dep(subj.node.head, verb.head, "nsubj");
      dep(verb.head, noun, "acl:relcl");
      auto wh = node("WHNP", {std::move(that)}, 0);
      auto vp = node("VP", {std::move(verb)}, 0);
      auto s = node("S", {std::move(subj.node), std::move(vp)}, 1);
      auto sbar = node("SBAR", {std::move(wh), std::move(s)}, 1);
      base = node("NP", {std::move(base), std::move(sbar)}, 0);
    }
    return {std::move(base), !plural, false};
  }

  Np subject() {
    const double r = rng_.uniform();
    if (r < 0.4) return pronoun();
    if (r < 0.55) return name();
    return noun_phrase();
  }

  // NPI-bearing object: anyone/anything/anybody, or "any" + noun.
  Node npi_object() {
    if (chance(0.5)) {
      static constexpr std::array<const char*, 3> kPro = {"anyone", "anything", "anybody"};
      return node("NP", {leaf(pick(kPro), "NN")}, 0);
    }
    auto d = leaf("any", "DT");
    auto n = chance(0.5) ? leaf(pick(kPluralNouns), "NNS") : leaf(pick(kNouns), "NN");
    dep(d.head, n.head, "det");
    return node("NP", {std::move(d), std::move(n)}, 1);
  }

  Node ppi_object() {
    if (chance(0.5)) {
      static constexpr std::array<const char*, 3> kPro = {"someone", "something", "somebody"};
      return node("NP", {leaf(pick(kPro), "NN")}, 0);
    }
    auto d = leaf("some", "DT");
    auto n = leaf(pick(kPluralNouns), "NNS");
    dep(d.head, n.head, "det");
    return node("NP", {std::move(d), std::move(n)}, 1);
  }

  enum class Polarity { Plain, Npi, Ppi };

  // Verb phrase headed by `form`, with optional object, adverb and PP.
  Node verb_phrase(const std::string& form, const std::string& pos, bool transitive,
                   Polarity pi, bool allow_pp = true) {
    std::vector<Node> kids;
    kids.push_back(leaf(form, pos));
    const auto verb = kids.front().head;
    bool pi_placed = pi == Polarity::Plain;
    if (transitive) {
      Node obj;
      if (pi == Polarity::Npi && chance(0.8)) {
        obj = npi_object();
        pi_placed = true;
      } else if (pi == Polarity::Ppi && chance(0.8)) {
        obj = ppi_object();
        pi_placed = true;
      } else {
        obj = chance(0.3) ? name().node : noun_phrase().node;
      }
      dep(obj.head, verb, "obj");
      kids.push_back(std::move(obj));
    }
    if (!pi_placed) {
      static constexpr std::array<const char*, 2> kNpiAdv = {"anywhere", "anytime"};
      static constexpr std::array<const char*, 2> kPpiAdv = {"somewhere", "sometime"};
      auto adv = leaf(pi == Polarity::Npi ? pick(kNpiAdv) : pick(kPpiAdv), "RB");
      dep(adv.head, verb, "advmod");
      kids.push_back(node("ADVP", {std::move(adv)}, 0));
    } else if (chance(0.35)) {
      auto adv = leaf(pick(kAdverbs), "RB");
      dep(adv.head, verb, "advmod");
      kids.push_back(node("ADVP", {std::move(adv)}, 0));
    }
    if (allow_pp && chance(0.3)) {
      auto prep = leaf(pick(kPreps), "IN");
      auto d = leaf("the", "DT");
      auto n = leaf(pick(kNouns), "NN");
      dep(prep.head, n.head, "case");
      dep(d.head, n.head, "det");
      dep(n.head, verb, "obl");
      auto np = node("NP", {std::move(d), std::move(n)}, 1);
      kids.push_back(node("PP", {std::move(prep), std::move(np)}, 1));
    }
    return node("VP", std::move(kids), 0);
  }

  const Verb& verb(bool& transitive) {
    transitive = chance(0.7);
    return transitive ? pick(kTransitive) : pick(kIntransitive);
  }

  // --- clauses ---------------------------------------------------------------

  struct Aux {
    std::string surface;
    std::string pos;
  };

  Aux auxiliary(const Np& subj, bool contracted) {
    const double r = rng_.uniform();
    if (r < 0.4) return {"did", "VBD"};
    if (r < 0.6) return {subj.third_singular ? "does" : "do", subj.third_singular ? "VBZ" : "VBP"};
    static constexpr std::array<const char*, 7> kModals = {"will", "would", "could", "should",
                                                           "can", "must", "might"};
    std::string m = pick(kModals);
    if (contracted && m == "will") m = "wo";
    if (contracted && m == "can") m = "ca";
    return {m, "MD"};
  }

  // SUBJ AUX not VP (the P12 frame).
  Node negated_clause(Polarity pi) {
    auto subj = subject();
    const bool contracted = chance(0.5);
    auto aux_word = auxiliary(subj, contracted);
    auto aux = leaf(aux_word.surface, aux_word.pos);
    auto neg = leaf(contracted ? "n't" : "not", "RB");
    bool transitive = false;
    const auto& v = verb(transitive);
    auto vp = verb_phrase(v.base, "VB", transitive, pi);
    dep(subj.node.head, vp.head, "nsubj");
    dep(aux.head, vp.head, "aux");
    dep(neg.head, vp.head, "advmod");
    auto outer = node("VP", {std::move(aux), std::move(neg), std::move(vp)}, 2);
    return node("S", {std::move(subj.node), std::move(outer)}, 1);
  }

  Node positive_clause(Polarity pi) {
    auto subj = subject();
    bool transitive = false;
    const auto& v = verb(transitive);
    if (chance(0.35)) {
      static constexpr std::array<const char*, 5> kModals = {"will", "could", "should", "can",
                                                             "might"};
      auto aux = leaf(pick(kModals), "MD");
      auto vp = verb_phrase(v.base, "VB", transitive, pi);
      dep(subj.node.head, vp.head, "nsubj");
      dep(aux.head, vp.head, "aux");
      auto outer = node("VP", {std::move(aux), std::move(vp)}, 1);
      return node("S", {std::move(subj.node), std::move(outer)}, 1);
    }
    if (chance(0.15)) {
      auto adv = leaf("often", "RB");
      auto vp = verb_phrase(subj.third_singular ? v.third : v.base,
                            subj.third_singular ? "VBZ" : "VBP", transitive, pi);
      dep(subj.node.head, vp.head, "nsubj");
      dep(adv.head, vp.head, "advmod");
      auto advp = node("ADVP", {std::move(adv)}, 0);
      return node("S", {std::move(subj.node), std::move(advp), std::move(vp)}, 2);
    }
    auto vp = verb_phrase(v.past, "VBD", transitive, pi);
    dep(subj.node.head, vp.head, "nsubj");
    return node("S", {std::move(subj.node), std::move(vp)}, 1);
  }

  // Existential or copular "be not NP/PP/ADJP" (the P3 frame).
  Node copular_clause(bool negated, Polarity pi) {
    const double r = rng_.uniform();
    const bool contracted = chance(0.5);
    auto neg_word = contracted ? "n't" : "not";
    if (r < 0.45) {
      auto ex = leaf("There", "EX");
      const bool plural = chance(0.5);
      auto be = leaf(plural ? "were" : "was", "VBD");
      std::optional<Node> neg;
      if (negated) neg = leaf(neg_word, "RB");
      std::vector<Node> np_kids;
      if (pi == Polarity::Npi) np_kids.push_back(leaf("any", "DT"));
      else if (pi == Polarity::Ppi) np_kids.push_back(leaf("some", "DT"));
      else np_kids.push_back(leaf(plural ? "many" : "much", "JJ"));
      if (chance(0.4)) np_kids.push_back(leaf(pick(kAdjectives), "JJ"));
      np_kids.push_back(plural ? leaf(pick(kPluralNouns), "NNS") : leaf("water", "NN"));
      const auto noun = np_kids.back().head;
      dep(np_kids.front().head, noun, pi == Polarity::Plain ? "amod" : "det");
      for (std::size_t i = 1; i + 1 < np_kids.size(); ++i) dep(np_kids[i].head, noun, "amod");
      const auto nk = np_kids.size() - 1;
      auto np = node("NP", std::move(np_kids), nk);
      dep(ex.head, be.head, "expl");
      dep(noun, be.head, "nsubj");
      if (neg) dep(neg->head, be.head, "advmod");
      std::vector<Node> vp_kids;
      vp_kids.push_back(std::move(be));
      if (neg) vp_kids.push_back(std::move(*neg));
      vp_kids.push_back(std::move(np));
      if (chance(0.5)) {
        auto prep = leaf(pick(kPreps), "IN");
        auto d = leaf("the", "DT");
        auto n = leaf(pick(kNouns), "NN");
        dep(prep.head, n.head, "case");
        dep(d.head, n.head, "det");
        dep(n.head, vp_kids.front().head, "obl");
        auto inner = node("NP", {std::move(d), std::move(n)}, 1);
        vp_kids.push_back(node("PP", {std::move(prep), std::move(inner)}, 1));
      }
      auto vp = node("VP", std::move(vp_kids), 0);
      return node("S", {std::move(ex), std::move(vp)}, 1);
    }
    auto subj = subject();
    auto be = leaf(subj.first_singular ? "was" : (subj.third_singular ? "is" : "are"),
                   subj.first_singular ? "VBD" : (subj.third_singular ? "VBZ" : "VBP"));
    std::optional<Node> neg;
    if (negated) neg = leaf(neg_word, "RB");
    Node pred;
    if (r < 0.75) {
      std::vector<Node> kids;
      if (pi == Polarity::Npi) kids.push_back(leaf("any", "RB"));
      else if (chance(0.4)) kids.push_back(leaf("very", "RB"));
      if (pi == Polarity::Npi) kids.push_back(leaf("better", "JJR"));
      else kids.push_back(leaf(pick(kAdjectives), "JJ"));
      const auto adj = kids.back().head;
      const auto last = kids.size() - 1;
      if (last == 1) dep(kids.front().head, adj, "advmod");
      pred = node("ADJP", std::move(kids), last);
    } else {
      auto prep = leaf("in", "IN");
      std::vector<Node> np_kids;
      if (pi == Polarity::Npi) np_kids.push_back(leaf("any", "DT"));
      else if (pi == Polarity::Ppi) np_kids.push_back(leaf("some", "DT"));
      else np_kids.push_back(leaf("the", "DT"));
      np_kids.push_back(leaf(pick(kNouns), "NN"));
      const auto n = np_kids.back().head;
      dep(np_kids.front().head, n, "det");
      dep(prep.head, n, "case");
      auto np = node("NP", std::move(np_kids), 1);
      pred = node("PP", {std::move(prep), std::move(np)}, 1);
    }
    dep(subj.node.head, pred.head, "nsubj");
    dep(be.head, pred.head, "cop");
    if (neg) dep(neg->head, pred.head, "advmod");
    std::vector<Node> vp_kids;
    vp_kids.push_back(std::move(be));
    if (neg) vp_kids.push_back(std::move(*neg));
    vp_kids.push_back(std::move(pred));
    const auto h = vp_kids.size() - 1;
    auto vp = node("VP", std::move(vp_kids), h);
    return node("S", {std::move(subj.node), std::move(vp)}, 1);
  }

  // SUBJ VERB-ed ..., not VERB-ing NP (the P5 frame).
  Node participial_clause() {
    auto subj = subject();
    bool transitive = false;
    const auto& v = verb(transitive);
    auto vp_main = verb_phrase(v.past, "VBD", transitive, Polarity::Plain, false);
    const auto main = vp_main.head;
    auto comma = leaf(",", ",");
    auto neg = leaf("not", "RB");
    const auto& g = pick(kTransitive);
    auto inner = verb_phrase(g.ger, "VBG", true, chance(0.6) ? Polarity::Npi : Polarity::Plain);
    dep(subj.node.head, main, "nsubj");
    dep(comma.head, main, "punct");
    dep(inner.head, main, "advcl");
    dep(neg.head, inner.head, "advmod");
    auto s_inner = node("S", {std::move(neg), std::move(inner)}, 1);
    const auto ger = s_inner.head;
    // (VP (VBD ...) ... (, ,) (S not VP) [(CC and) (S (VP ...))])
    Node flat = std::move(vp_main);
    flat.tree.children.push_back(std::move(comma.tree));
    flat.tree.children.push_back(std::move(s_inner.tree));
    if (chance(0.4)) {
      auto cc = leaf("and", "CC");
      const auto& h = pick(kIntransitive);
      auto vp2 = verb_phrase(h.ger, "VBG", false, Polarity::Plain);
      dep(cc.head, vp2.head, "cc");
      dep(vp2.head, ger, "conj");
      auto s2 = node("S", {std::move(vp2)}, 0);
      flat.tree.children.push_back(std::move(cc.tree));
      flat.tree.children.push_back(std::move(s2.tree));
    }
    return node("S", {std::move(subj.node), std::move(flat)}, 1);
  }

  // "SUBJ does not often VERB": a negation outside every template.
  Node unmatched_negation() {
    auto subj = subject();
    auto aux = leaf(subj.third_singular ? "does" : "do", subj.third_singular ? "VBZ" : "VBP");
    auto neg = leaf("not", "RB");
    auto adv = leaf("often", "RB");
    bool transitive = false;
    const auto& v = verb(transitive);
    auto vp = verb_phrase(v.base, "VB", transitive, Polarity::Plain);
    dep(subj.node.head, vp.head, "nsubj");
    dep(aux.head, vp.head, "aux");
    dep(neg.head, vp.head, "advmod");
    dep(adv.head, vp.head, "advmod");
    auto advp = node("ADVP", {std::move(adv)}, 0);
    auto outer = node("VP", {std::move(aux), std::move(neg), std::move(advp), std::move(vp)}, 3);
    return node("S", {std::move(subj.node), std::move(outer)}, 1);
  }

  Node simple_clause(bool negated = false) {
    if (negated) return negated_clause(Polarity::Plain);
    auto subj = chance(0.5) ? pronoun() : name();
    bool transitive = false;
    const auto& v = verb(transitive);
    auto vp = verb_phrase(v.past, "VBD", transitive, Polarity::Plain, false);
    dep(subj.node.head, vp.head, "nsubj");
    return node("S", {std::move(subj.node), std::move(vp)}, 1);
  }

  ParsedSentence sentence(std::string id) {
    const std::string genre = pick(kGenres);
    const double r = rng_.uniform();
    const bool npi = chance(0.55);
    const auto neg_pi = npi ? Polarity::Npi : Polarity::Plain;
    const bool participial = r >= 0.37 && r < 0.44;
    const double p = participial ? 1.0 : rng_.uniform();

    // Material left of the core clause, emitted first to keep word order.
    std::optional<Node> say_subj, say_verb, that, adv_clause, adv_comma;
    if (p < 0.22) {
      say_subj = chance(0.6) ? pronoun().node : name().node;
      static constexpr std::array<const char*, 5> kSay = {"think", "said", "knew", "believe",
                                                          "guess"};
      std::string sv = pick(kSay);
      say_verb = leaf(sv, sv == "said" || sv == "knew" ? "VBD" : "VBP");
      dep(say_subj->head, say_verb->head, "nsubj");
      if (chance(0.5)) that = leaf("that", "IN");
    } else if (p < 0.36) {
      static constexpr std::array<const char*, 4> kSub = {"Since", "When", "Because",
                                                          "Although"};
      auto mark = leaf(pick(kSub), "IN");
      auto clause = simple_clause();
      dep(mark.head, clause.head, "mark");
      adv_clause = node("SBAR", {std::move(mark), std::move(clause)}, 1);
      adv_comma = leaf(",", ",");
    }

    Node core;
    if (r < 0.30) {
      core = negated_clause(neg_pi);
    } else if (r < 0.37) {
      core = copular_clause(true, neg_pi);
    } else if (participial) {
      core = participial_clause();
    } else if (r < 0.47) {
      core = unmatched_negation();
    } else if (r < 0.53) {
      core = copular_clause(false, chance(0.4) ? Polarity::Ppi : Polarity::Plain);
    } else {
      core = positive_clause(chance(0.3) ? Polarity::Ppi : Polarity::Plain);
    }
    const bool second_negation = r < 0.44 && chance(0.04);

    // Right-hand coordination or parataxis.
    if (!participial && chance(0.4)) {
      auto comma = leaf(",", ",");
      std::optional<Node> cc;
      const bool conj = chance(0.6);
      if (conj) cc = leaf(chance(0.5) ? "and" : "but", "CC");
      auto rest = simple_clause(second_negation);
      dep(comma.head, rest.head, "punct");
      if (cc) dep(cc->head, rest.head, "cc");
      dep(rest.head, core.head, conj ? "conj" : "parataxis");
      std::vector<Node> kids;
      kids.push_back(std::move(core));
      kids.push_back(std::move(comma));
      if (cc) kids.push_back(std::move(*cc));
      kids.push_back(std::move(rest));
      core = node("S", std::move(kids), 0);
    }

    std::size_t root = core.head;
    std::vector<Node> top;
    if (say_verb) {
      if (that) dep(that->head, core.head, "mark");
      dep(core.head, say_verb->head, "ccomp");
      root = say_verb->head;
      std::vector<Node> sbar;
      if (that) sbar.push_back(std::move(*that));
      sbar.push_back(std::move(core));
      const auto sh = sbar.size() - 1;
      auto sb = node("SBAR", std::move(sbar), sh);
      auto vp = node("VP", {std::move(*say_verb), std::move(sb)}, 0);
      top.push_back(std::move(*say_subj));
      top.push_back(std::move(vp));
    } else if (adv_clause) {
      dep(adv_clause->head, core.head, "advcl");
      dep(adv_comma->head, core.head, "punct");
      top.push_back(std::move(*adv_clause));
      top.push_back(std::move(*adv_comma));
      top.push_back(std::move(core));
    } else {
      top.push_back(std::move(core));
    }
    auto period = leaf(".", ".");
    dep(period.head, root, "punct");
    top.push_back(std::move(period));
    Node s = node("S", std::move(top), 0);
    return finish(std::move(s), root, std::move(id), genre);
  }

 private:
  Rng& rng_;
  ParsedSentence s_;
};

bool is_punct(const std::string& w) { return w == "," || w == "." || w == "!" || w == "?"; }

}  // namespace

std::vector<ParsedSentence> generate_corpus(std::size_t n, std::uint64_t seed,
                                            const std::string& id_prefix) {
  Rng rng(seed);
  std::vector<ParsedSentence> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Builder b(rng);
    out.push_back(b.sentence(id_prefix + "-" + std::to_string(k)));
  }
  return out;
}

SubwordSentence tokenize(const ParsedSentence& s, PieceStyle style,
                         std::optional<std::size_t> mask) {
  if (style == PieceStyle::Word) return word_level_tokenization(s, mask);
  SubwordSentence out;
  out.id = s.id;
  out.model_tag = style == PieceStyle::Bert ? "toy-wordpiece" : "toy-bpe";
  const std::string space = style == PieceStyle::Roberta ? "\xC4\xA0" : "";
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& w = s.tokens[i].surface;
    const bool before_neg = i + 1 < s.size() && s.tokens[i + 1].surface == "n't" &&
                            !(mask && (*mask == i || *mask == i + 1));
    const bool first = i == 0;
    const std::string lead = (first || is_punct(w) || w.starts_with("'")) ? "" : space;
    if (mask && *mask == i) {
      out.pieces.push_back({style == PieceStyle::Bert ? "[MASK]" : "<mask>", i, true});
      continue;
    }
    if (w == "n't" && i > 0 && s.tokens[i - 1].surface != "n't" &&
        !(mask && *mask == i - 1)) {
      // Contraction already split with the preceding word.
      if (style == PieceStyle::Bert) {
        out.pieces.push_back({"'", i, false});
        out.pieces.push_back({"t", i, false});
      } else {
        out.pieces.push_back({"t", i, false});
      }
      continue;
    }
    if (before_neg) {
      out.pieces.push_back({lead + w + (style == PieceStyle::Bert ? "n" : "n'"), i, false});
      continue;
    }
    const std::size_t head_len = style == PieceStyle::Bert ? 4 : 5;
    const std::size_t chunk = style == PieceStyle::Bert ? 3 : 4;
    if (w.size() <= head_len + 2) {
      out.pieces.push_back({lead + w, i, false});
      continue;
    }
    out.pieces.push_back({lead + w.substr(0, head_len), i, false});
    for (std::size_t k = head_len; k < w.size(); k += chunk)
      out.pieces.push_back(
          {(style == PieceStyle::Bert ? "##" : "") + w.substr(k, chunk), i, false});
  }
  return out;
}

std::vector<SubwordSentence> tokenize_all(std::span<const ParsedSentence> corpus,
                                          PieceStyle style,
                                          std::span<const MaskInstruction> masks) {
  std::map<std::string, std::size_t> by_id;
  for (const auto& m : masks) by_id.emplace(m.id, m.word);
  std::vector<SubwordSentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    auto it = by_id.find(s.id);
    out.push_back(tokenize(s, style, it == by_id.end() ? std::nullopt
                                                       : std::optional(it->second)));
  }
  return out;
}

std::string to_conllu(std::span<const ParsedSentence> corpus) {
  std::ostringstream out;
  for (const auto& s : corpus) {
    out << "# sent_id = " << s.id << '\n';
    for (const auto& [k, v] : s.meta) out << "# " << k << " = " << v << '\n';
    for (const auto& t : s.tokens) {
      out << t.index + 1 << '\t' << t.surface << "\t_\t_\t" << t.pos << "\t_\t"
          << (t.head == kRoot ? 0 : t.head + 1) << '\t' << t.deprel << "\t_\t_\n";
    }
    out << '\n';
  }
  return out.str();
}

std::string to_ptb(std::span<const ParsedSentence> corpus) {
  std::string out;
  for (const auto& s : corpus) out += print_ptb(*s.consttree) + "\n";
  return out;
}

std::string fixture_path(const std::string& name) {
  return std::string(SCOPE_PROBE_FIXTURES) + "/" + name;
}

std::vector<ParsedSentence> golden_sentences() {
  return ingest(read_conllu_file(fixture_path("golden.conllu")),
                read_ptb_file(fixture_path("golden.ptb")));
}

const ParsedSentence& golden(const std::string& id) {
  static const auto all = golden_sentences();
  for (const auto& s : all)
    if (s.id == id) return s;
  throw std::out_of_range("no golden sentence " + id);
}

}  // namespace scope_probe::testing
