#include "scope_probe/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "scope_probe/errors.hpp"

namespace scope_probe {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<long> parse_int(std::string_view s) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string ParsedSentence::genre() const {
  auto it = meta.find("genre");
  return it == meta.end() || it->second.empty() ? "default" : it->second;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string base_deprel(std::string_view deprel) {
  return std::string(deprel.substr(0, deprel.find(':')));
}

// ---------------------------------------------------------------------------
// CoNLL-U

void validate_dependencies(const std::vector<Token>& tokens) {
  const auto n = static_cast<long>(tokens.size());
  std::size_t roots = 0;
  for (const auto& t : tokens) {
    if (t.is_root()) {
      ++roots;
      continue;
    }
    if (t.head < 0 || t.head >= n)
      throw ValidationError("token " + std::to_string(t.index) +
                            " has out-of-range head " + std::to_string(t.head));
    if (static_cast<std::size_t>(t.head) == t.index)
      throw ValidationError("token " + std::to_string(t.index) +
                            " is its own head");
  }
  if (!tokens.empty() && roots != 1)
    throw ValidationError("expected exactly one root, found " +
                          std::to_string(roots));
  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<int> state(tokens.size(), 0);
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (true) {
      if (state[cur] == 2) break;
      if (state[cur] == 1)
        throw ValidationError("cyclic head links through token " +
                              std::to_string(cur));
      state[cur] = 1;
      path.push_back(cur);
      if (tokens[cur].is_root()) break;
      cur = static_cast<std::size_t>(tokens[cur].head);
    }
    for (auto i : path) state[i] = 2;
  }
}

std::vector<ParsedSentence> read_conllu(std::istream& in) {
  std::vector<ParsedSentence> out;
  ParsedSentence current;
  bool open = false;
  std::size_t line_no = 0;
  std::size_t block_start = 0;

  auto finish = [&]() {
    if (!open) return;
    if (current.id.empty()) current.id = "s" + std::to_string(out.size() + 1);
    try {
      validate_dependencies(current.tokens);
    } catch (const ValidationError& e) {
      throw ValidationError("sentence " + current.id + " (line " +
                            std::to_string(block_start) + "): " + e.what());
    }
    out.push_back(std::move(current));
    current = ParsedSentence{};
    open = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      finish();
      continue;
    }
    if (!open) {
      open = true;
      block_start = line_no;
    }
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto key = trim(std::string_view(line).substr(1, eq - 1));
      auto value = trim(std::string_view(line).substr(eq + 1));
      if (key == "sent_id")
        current.id = value;
      else if (key == "genre" || key == "source")
        current.meta[key] = value;
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 10)
      throw ParseError("expected 10 tab-separated columns, got " +
                           std::to_string(fields.size()),
                       line_no);
    const auto& id = fields[0];
    if (id.find('.') != std::string::npos) continue;  // empty node
    if (auto dash = id.find('-'); dash != std::string::npos) {
      auto first = parse_int(std::string_view(id).substr(0, dash));
      auto last = parse_int(std::string_view(id).substr(dash + 1));
      if (!first || !last || *first < 1 || *last < *first)
        throw ParseError("bad multiword range '" + id + "'", line_no);
      current.multiword.push_back({static_cast<std::size_t>(*first - 1),
                                   static_cast<std::size_t>(*last - 1),
                                   fields[1]});
      continue;
    }
    auto index = parse_int(id);
    if (!index || *index != static_cast<long>(current.tokens.size()) + 1)
      throw ParseError("token id '" + id + "' is not the next index",
                       line_no);
    auto head = parse_int(fields[6]);
    if (!head || *head < 0)
      throw ParseError("bad head '" + fields[6] + "'", line_no);
    Token t;
    t.index = current.tokens.size();
    t.surface = fields[1];
    t.pos = fields[4] != "_" ? fields[4] : fields[3];
    t.head = *head == 0 ? kRoot : static_cast<int>(*head - 1);
    t.deprel = fields[7];
    current.tokens.push_back(std::move(t));
  }
  finish();
  return out;
}

std::vector<ParsedSentence> read_conllu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_conllu(in);
}

// ---------------------------------------------------------------------------
// PTB

namespace {

struct PtbLexer {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line = 1;

  void skip_space() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos]))) {
      if (text[pos] == '\n') ++line;
      ++pos;
    }
  }
  bool done() {
    skip_space();
    return pos >= text.size();
  }
  char peek() {
    skip_space();
    return pos < text.size() ? text[pos] : '\0';
  }
  std::string atom() {
    skip_space();
    auto start = pos;
    while (pos < text.size() && text[pos] != '(' && text[pos] != ')' &&
           !std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
};

ConstTree parse_node(PtbLexer& lex) {
  // caller has seen '('
  ++lex.pos;
  ConstTree node;
  if (lex.peek() != '(' && lex.peek() != ')') node.label = lex.atom();
  std::vector<std::string> words;
  while (true) {
    char c = lex.peek();
    if (c == '\0') throw ParseError("unbalanced parentheses", lex.line);
    if (c == ')') {
      ++lex.pos;
      break;
    }
    if (c == '(')
      node.children.push_back(parse_node(lex));
    else
      words.push_back(lex.atom());
  }
  if (!words.empty()) {
    if (words.size() != 1 || !node.children.empty())
      throw ParseError("preterminal '" + node.label +
                           "' must have exactly one word",
                       lex.line);
    node.word = words.front();
    node.leaf = 0;
  } else if (node.children.empty()) {
    throw ParseError("empty tree", lex.line);
  }
  return node;
}

std::vector<ConstTree> parse_all(std::string_view text) {
  PtbLexer lex{text};
  std::vector<ConstTree> trees;
  while (!lex.done()) {
    if (lex.peek() != '(')
      throw ParseError("expected '(' but found '" + std::string(1, lex.peek()) +
                           "'",
                       lex.line);
    auto tree = parse_node(lex);
    normalize_tree(tree);
    trees.push_back(std::move(tree));
  }
  return trees;
}

std::size_t assign_spans(ConstTree& node, std::size_t next) {
  node.begin = next;
  if (node.is_preterminal()) {
    node.leaf = next;
    node.end = next + 1;
    return node.end;
  }
  for (auto& child : node.children) next = assign_spans(child, next);
  node.end = next;
  return next;
}

// Returns false when the node should be removed.
bool prune(ConstTree& node) {
  if (node.is_preterminal()) return node.label != "-NONE-";
  node.label = base_label(node.label);
  std::vector<ConstTree> kept;
  for (auto& child : node.children)
    if (prune(child)) kept.push_back(std::move(child));
  node.children = std::move(kept);
  return !node.children.empty();
}

void print_into(const ConstTree& node, std::string& out) {
  out += '(';
  out += node.label;
  if (node.is_preterminal()) {
    out += ' ';
    out += node.word;
  } else {
    for (const auto& child : node.children) {
      out += ' ';
      print_into(child, out);
    }
  }
  out += ')';
}

void collect_leaves(const ConstTree& node, std::vector<std::string>& out) {
  if (node.is_preterminal()) {
    out.push_back(node.word);
    return;
  }
  for (const auto& child : node.children) collect_leaves(child, out);
}

}  // namespace

std::string base_label(std::string_view label) {
  if (label.empty() || label.front() == '-') return std::string(label);
  auto cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

void compute_spans(ConstTree& tree) { assign_spans(tree, 0); }

void normalize_tree(ConstTree& tree) {
  if (!prune(tree)) throw ParseError("empty tree after normalization");
  while (tree.label.empty() && tree.children.size() == 1 &&
         !tree.is_preterminal()) {
    ConstTree child = std::move(tree.children.front());
    tree = std::move(child);
  }
  compute_spans(tree);
}

ConstTree parse_ptb(std::string_view text) {
  auto trees = parse_all(text);
  if (trees.size() != 1)
    throw ParseError("expected one tree, found " + std::to_string(trees.size()));
  return std::move(trees.front());
}

std::vector<ConstTree> read_ptb(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_all(buffer.str());
}

std::vector<ConstTree> read_ptb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_ptb(in);
}

std::string print_ptb(const ConstTree& tree) {
  std::string out;
  print_into(tree, out);
  return out;
}

std::vector<std::string> leaves(const ConstTree& tree) {
  std::vector<std::string> out;
  collect_leaves(tree, out);
  return out;
}

std::string normalize_surface(std::string_view surface) {
  static const std::map<std::string_view, std::string_view> escapes = {
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"},
      {"-LCB-", "{"}, {"-RCB-", "}"}, {"``", "\""},   {"''", "\""},
  };
  if (auto it = escapes.find(surface); it != escapes.end())
    return std::string(it->second);
  std::string out;
  out.reserve(surface.size());
  for (std::size_t i = 0; i < surface.size(); ++i) {
    // U+2018/U+2019 -> ', U+201C/U+201D -> "
    if (i + 2 < surface.size() && surface[i] == '\xE2' &&
        surface[i + 1] == '\x80') {
      char c = surface[i + 2];
      if (c == '\x98' || c == '\x99') {
        out += '\'';
        i += 2;
        continue;
      }
      if (c == '\x9C' || c == '\x9D') {
        out += '"';
        i += 2;
        continue;
      }
    }
    out += surface[i];
  }
  return out;
}

ParsedSentence align_parses(ParsedSentence dep, ConstTree tree) {
  auto words = leaves(tree);
  const auto n = std::min(words.size(), dep.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (normalize_surface(words[i]) != normalize_surface(dep.tokens[i].surface))
      throw AlignmentError("sentence " + dep.id + ": token " +
                               std::to_string(i) + " is '" +
                               dep.tokens[i].surface + "' in the dependency "
                               "parse but '" + words[i] + "' in the tree",
                           i);
  }
  if (words.size() != dep.tokens.size())
    throw AlignmentError("sentence " + dep.id + ": " +
                             std::to_string(dep.tokens.size()) +
                             " dependency tokens vs " +
                             std::to_string(words.size()) + " tree leaves",
                         n);
  dep.consttree = std::move(tree);
  return dep;
}

std::vector<std::vector<std::size_t>> dependents(const ParsedSentence& s) {
  std::vector<std::vector<std::size_t>> children(s.tokens.size());
  for (const auto& t : s.tokens)
    if (!t.is_root()) children[static_cast<std::size_t>(t.head)].push_back(t.index);
  return children;
}

std::vector<std::size_t> subtree(
    const std::vector<std::vector<std::size_t>>& children, std::size_t root) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{root};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (auto c : children[cur]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scope_probe
