#pragma once

// Parsed-sentence model: tokens with a dependency tree plus an optional
// Penn-style constituency tree over the same tokenization.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scope_probe {

inline constexpr int kRoot = -1;

struct Token {
  std::size_t index = 0;
  std::string surface;
  std::string pos;  // Penn tag; falls back to UPOS when XPOS is absent
  int head = kRoot;
  std::string deprel;

  bool is_root() const { return head == kRoot; }
};

struct ConstTree {
  std::string label;
  std::vector<ConstTree> children;
  std::size_t begin = 0;  // span [begin, end) in word indices
  std::size_t end = 0;
  std::optional<std::size_t> leaf;  // set on preterminals only
  std::string word;                 // surface of a preterminal

  bool is_preterminal() const { return leaf.has_value(); }
  std::size_t size() const { return end - begin; }
};

// CoNLL-U range row ("3-4 don't"); never counted as a token.
struct MultiwordToken {
  std::size_t first = 0;
  std::size_t last = 0;
  std::string surface;
};

struct ParsedSentence {
  std::string id;
  std::vector<Token> tokens;
  std::optional<ConstTree> consttree;
  std::map<std::string, std::string> meta;
  std::vector<MultiwordToken> multiword;

  std::size_t size() const { return tokens.size(); }
  std::string genre() const;
};

// --- CoNLL-U -------------------------------------------------------------

// Reads blank-line separated CoNLL-U blocks. `# sent_id = X` sets the id
// (otherwise "s<N>", 1-based), `# genre = G` / `# source = S` go to meta.
std::vector<ParsedSentence> read_conllu(std::istream& in);
std::vector<ParsedSentence> read_conllu_file(const std::string& path);

// Throws ValidationError on out-of-range heads, a missing or repeated
// root, or a cycle.
void validate_dependencies(const std::vector<Token>& tokens);

// --- Penn Treebank brackets ----------------------------------------------

// Reads every bracketed tree in the stream. Trees may span lines.
std::vector<ConstTree> read_ptb(std::istream& in);
std::vector<ConstTree> read_ptb_file(const std::string& path);
ConstTree parse_ptb(std::string_view text);

// Single-line bracketed form, e.g. "(S (NP (PRP I)) (VP (VBD left)))".
std::string print_ptb(const ConstTree& tree);

// Strips function tags and coindexation ("NP-SBJ-1" -> "NP"), drops
// -NONE- and any node left without leaves, unwraps an unlabeled root,
// then recomputes spans. Applied by read_ptb/parse_ptb.
void normalize_tree(ConstTree& tree);
std::string base_label(std::string_view label);

// Recomputes begin/end/leaf assuming preterminal order is word order.
void compute_spans(ConstTree& tree);

std::vector<std::string> leaves(const ConstTree& tree);

// Undoes PTB escapes (-LRB- -> "(", `` and '' -> ") and maps typographic
// apostrophes to ASCII, for comparing tokenizations across tools.
std::string normalize_surface(std::string_view surface);

// Merges a dependency-parsed sentence with a constituency tree over the
// same tokens. Throws AlignmentError naming the first diverging index.
ParsedSentence align_parses(ParsedSentence dep, ConstTree tree);

// --- dependency navigation -------------------------------------------------

// children[i] lists the dependents of token i in ascending order.
std::vector<std::vector<std::size_t>> dependents(const ParsedSentence& s);

// Token `root` and all its descendants, ascending.
std::vector<std::size_t> subtree(
    const std::vector<std::vector<std::size_t>>& children, std::size_t root);

// Relation without its subtype: "acl:relcl" -> "acl".
std::string base_deprel(std::string_view deprel);

std::string lowercase(std::string_view s);

}  // namespace scope_probe
