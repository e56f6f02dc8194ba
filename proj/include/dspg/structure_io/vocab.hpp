#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace dspg::structure {

// 23-token vocabulary: the 20 amino acids in table order, X, then BOS '1'
// and EOS '2'. Ids are the positions in kTokens and never change.
class Vocabulary {
 public:
  static constexpr std::string_view kTokens = "ARNDCQEGHILKMFPSTWYVX12";
  static constexpr int kSize = 23;
  static constexpr int kUnknown = 20;
  static constexpr int kBos = 21;
  static constexpr int kEos = 22;

  static int id(char token);  // throws VocabularyError
  static char token(int id);  // throws VocabularyError
  static bool is_residue(int id) { return id >= 0 && id <= kUnknown; }
};

struct TokenSequence {
  std::vector<int> ids;
};

// BOS + residues + EOS.
TokenSequence encode(std::string_view sequence);
// Strips one leading BOS and everything from the first EOS on; any BOS
// tokens remaining in the body are dropped.
std::string decode(const std::vector<int>& ids);

}  // namespace dspg::structure
