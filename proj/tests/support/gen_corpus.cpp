// Test helper: writes a synthetic parsed corpus, or a toy subword
// tokenization of a corpus.db file.
//
//   gen-corpus corpus N SEED DIR            -> DIR/corpus.conllu, DIR/corpus.ptb
//   gen-corpus tokenize CORPUS STYLE OUT [MASKS]

#include <fstream>
#include <iostream>
#include <string>

#include "grammar.hpp"
#include "scope_probe/corpus.hpp"
#include "scope_probe/dataset.hpp"

using namespace scope_probe;

int main(int argc, char** argv) {
  try {
    const std::string cmd = argc > 1 ? argv[1] : "";
    if (cmd == "corpus" && argc == 5) {
      auto corpus = testing::generate_corpus(std::stoul(argv[2]), std::stoull(argv[3]));
      const std::string dir = argv[4];
      std::ofstream(dir + "/corpus.conllu") << testing::to_conllu(corpus);
      std::ofstream(dir + "/corpus.ptb") << testing::to_ptb(corpus);
      return 0;
    }
    if (cmd == "tokenize" && (argc == 5 || argc == 6)) {
      auto corpus = read_corpus_file(argv[2]);
      const std::string style = argv[3];
      auto ps = style == "bert"      ? testing::PieceStyle::Bert
                : style == "roberta" ? testing::PieceStyle::Roberta
                                     : testing::PieceStyle::Word;
      std::vector<MaskInstruction> masks;
      if (argc == 6) {
        std::ifstream in(argv[5]);
        masks = masks_from_json(nlohmann::json::parse(in));
      }
      std::ofstream out(argv[4]);
      write_tokenization(out, testing::tokenize_all(corpus, ps, masks));
      return 0;
    }
    std::cerr << "usage: gen-corpus corpus N SEED DIR | tokenize CORPUS STYLE OUT [MASKS]\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gen-corpus: " << e.what() << '\n';
    return 1;
  }
}
