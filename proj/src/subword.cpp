#include "scope_probe/subword.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "scope_probe/errors.hpp"

namespace scope_probe {

using nlohmann::json;

std::optional<std::size_t> SubwordSentence::masked_word() const {
  for (const auto& p : pieces)
    if (p.mask) return p.word;
  return std::nullopt;
}

SubwordSentence tokenization_from_json(const json& j) {
  SubwordSentence s;
  s.id = j.at("id").get<std::string>();
  s.model_tag = j.value("model_tag", "");
  std::optional<std::size_t> unresolved;
  std::vector<bool> covered;
  for (const auto& p : j.at("pieces")) {
    Piece piece;
    piece.text = p.at("text").get<std::string>();
    piece.mask = p.value("mask", false);
    const auto& w = p.at("word");
    if (w.is_null()) {
      piece.mask = true;
      unresolved = s.pieces.size();
    } else {
      piece.word = w.get<std::size_t>();
      if (!piece.mask) {
        if (covered.size() <= piece.word) covered.resize(piece.word + 1, false);
        covered[piece.word] = true;
      }
    }
    s.pieces.push_back(std::move(piece));
  }
  if (unresolved) {
    // The mask stands for the one word no other piece covers.
    std::size_t gap = 0;
    while (gap < covered.size() && covered[gap]) ++gap;
    s.pieces[*unresolved].word = gap;
  }
  return s;
}

json tokenization_to_json(const SubwordSentence& s) {
  json pieces = json::array();
  for (const auto& p : s.pieces) {
    json piece = {{"text", p.text}, {"word", p.word}};
    if (p.mask) piece["mask"] = true;
    pieces.push_back(std::move(piece));
  }
  return {{"id", s.id}, {"model_tag", s.model_tag}, {"pieces", pieces}};
}

std::vector<SubwordSentence> read_tokenization(std::istream& in) {
  std::vector<SubwordSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(tokenization_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<SubwordSentence> read_tokenization_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_tokenization(in);
}

void write_tokenization(std::ostream& out,
                        std::span<const SubwordSentence> sentences) {
  for (const auto& s : sentences) out << tokenization_to_json(s).dump() << '\n';
}

SubwordSentence word_level_tokenization(const ParsedSentence& s,
                                        std::optional<std::size_t> masked_word) {
  SubwordSentence out{s.id, {}, "word"};
  for (const auto& t : s.tokens) {
    if (masked_word && *masked_word == t.index)
      out.pieces.push_back({"[MASK]", t.index, true});
    else
      out.pieces.push_back({t.surface, t.index, false});
  }
  return out;
}

std::string strip_piece_markers(std::string_view text) {
  for (bool changed = true; changed;) {
    changed = false;
    if (text.starts_with("##")) {
      text.remove_prefix(2);
      changed = true;
    } else if (text.starts_with("\xC4\xA0") || text.starts_with("\xE2\x96\x81")) {
      text.remove_prefix(text.starts_with("\xC4\xA0") ? 2 : 3);
      changed = true;
    } else if (!text.empty() && text.front() == ' ') {
      text.remove_prefix(1);
      changed = true;
    }
  }
  return std::string(text);
}

void validate_alignment(const ParsedSentence& s, const SubwordSentence& sub) {
  const auto n = s.size();
  std::vector<bool> covered(n, false);
  std::size_t masks = 0;
  std::optional<std::size_t> masked;
  std::size_t last_word = 0;
  for (std::size_t k = 0; k < sub.pieces.size(); ++k) {
    const auto& p = sub.pieces[k];
    if (p.word >= n)
      throw AlignmentError(sub.id + ": piece " + std::to_string(k) + " '" +
                               p.text + "' points at word " +
                               std::to_string(p.word) + " of " + std::to_string(n),
                           k);
    if (p.word < last_word)
      throw AlignmentError(sub.id + ": piece " + std::to_string(k) + " '" +
                               p.text + "' goes back to word " +
                               std::to_string(p.word),
                           k);
    last_word = p.word;
    covered[p.word] = true;
    if (p.mask) {
      ++masks;
      masked = p.word;
    }
  }
  if (masks > 1)
    throw AlignmentError(sub.id + ": more than one mask piece", 0);
  for (std::size_t w = 0; w < n; ++w)
    if (!covered[w])
      throw AlignmentError(sub.id + ": word " + std::to_string(w) + " '" +
                               s.tokens[w].surface + "' has no piece",
                           w);

  // Character stream of the unmasked words, with the owning word per char.
  std::string stream;
  std::vector<std::size_t> owner;
  std::vector<std::size_t> word_end(n, 0);
  for (std::size_t w = 0; w < n; ++w) {
    if (masked && *masked == w) {
      word_end[w] = stream.size();
      continue;
    }
    auto surface = normalize_surface(s.tokens[w].surface);
    for (char c : surface) {
      stream += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      owner.push_back(w);
    }
    word_end[w] = stream.size();
  }

  std::size_t offset = 0;
  for (std::size_t k = 0; k < sub.pieces.size(); ++k) {
    const auto& p = sub.pieces[k];
    if (p.mask) continue;
    auto text = lowercase(normalize_surface(strip_piece_markers(p.text)));
    if (text.empty()) continue;
    if (text == "[unk]" || text == "<unk>") {
      offset = std::max(offset, word_end[p.word]);
      continue;
    }
    if (stream.compare(offset, text.size(), text) != 0)
      throw AlignmentError(sub.id + ": piece " + std::to_string(k) + " '" +
                               p.text + "' does not match the sentence at word " +
                               std::to_string(offset < owner.size() ? owner[offset] : n) +
                               " (text '" + stream.substr(offset, text.size()) +
                               "')",
                           k);
    if (owner[offset] != p.word)
      throw AlignmentError(sub.id + ": piece " + std::to_string(k) + " '" +
                               p.text + "' starts in word " +
                               std::to_string(owner[offset]) +
                               " but is mapped to word " + std::to_string(p.word),
                           k);
    offset += text.size();
  }
  if (offset != stream.size())
    throw AlignmentError(sub.id + ": pieces stop before word " +
                             std::to_string(owner[offset]) + " '" +
                             s.tokens[owner[offset]].surface + "'",
                         sub.pieces.size());
}

std::vector<int> relative_positions(const SubwordSentence& sub,
                                    std::span<const std::size_t> anchor_words) {
  auto is_anchor = [&](const Piece& p) {
    return !p.mask && std::find(anchor_words.begin(), anchor_words.end(),
                                p.word) != anchor_words.end();
  };
  std::optional<std::size_t> first, last;
  for (std::size_t k = 0; k < sub.pieces.size(); ++k) {
    if (!is_anchor(sub.pieces[k])) continue;
    if (!first) first = k;
    last = k;
  }
  if (!first)
    throw AlignmentError(sub.id + ": no piece belongs to the anchor words", 0);
  for (auto k = *first; k <= *last; ++k)
    if (!is_anchor(sub.pieces[k]))
      throw AlignmentError(sub.id + ": anchor pieces are not contiguous at piece " +
                               std::to_string(k),
                           k);
  std::vector<int> positions(sub.pieces.size(), 0);
  for (std::size_t k = 0; k < sub.pieces.size(); ++k) {
    auto ki = static_cast<long>(k);
    if (k < *first)
      positions[k] = static_cast<int>(ki - static_cast<long>(*first));
    else if (k > *last)
      positions[k] = static_cast<int>(ki - static_cast<long>(*last));
  }
  return positions;
}

std::vector<ZonedToken> anchor_pieces(const SubwordSentence& sub,
                                      std::span<const std::size_t> anchor_words) {
  std::vector<int> positions(sub.pieces.size(), 0);
  if (!anchor_words.empty()) positions = relative_positions(sub, anchor_words);
  std::vector<ZonedToken> out;
  out.reserve(sub.pieces.size());
  for (std::size_t k = 0; k < sub.pieces.size(); ++k) {
    const auto& p = sub.pieces[k];
    const bool anchor = !p.mask && std::find(anchor_words.begin(), anchor_words.end(),
                                             p.word) != anchor_words.end();
    out.push_back({k, p.word, std::nullopt, positions[k], true, p.mask, false, anchor});
  }
  return out;
}

std::vector<ZonedToken> project_zones(const ParsedSentence& s,
                                      const WordZones& zones,
                                      const ScopeAnnotation& ann,
                                      const SubwordSentence& sub) {
  if (zones.zones.size() != s.size())
    throw std::logic_error("zone vector does not match sentence " + s.id);
  validate_alignment(s, sub);
  auto out = anchor_pieces(sub, ann.neg_complex);
  for (auto& t : out) {
    t.zone = zones.zones[t.word];
    t.flagged = zones.flagged[t.word];
    if ((*t.zone == Zone::Not) != (t.position == 0))
      throw AlignmentError(sub.id + ": piece " + std::to_string(t.piece) +
                               " breaks the negation-complex alignment",
                           t.piece);
  }
  return out;
}

std::vector<ZonedToken> mark_eligible(std::vector<ZonedToken> tokens) {
  for (auto& t : tokens) t.eligible = !t.anchor && !t.mask;
  return tokens;
}

}  // namespace scope_probe
