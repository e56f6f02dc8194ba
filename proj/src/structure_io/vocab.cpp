#include "dspg/structure_io/vocab.hpp"

#include "dspg/error.hpp"

namespace dspg::structure {

int Vocabulary::id(char token) {
  const auto pos = kTokens.find(token);
  if (pos == std::string_view::npos) {
    throw VocabularyError(std::string("character '") + token + "' is not in the vocabulary");
  }
  return static_cast<int>(pos);
}

char Vocabulary::token(int id) {
  if (id < 0 || id >= kSize) throw VocabularyError("token id " + std::to_string(id) + " is not in [0, 23)");
  return kTokens[static_cast<std::size_t>(id)];
}

TokenSequence encode(std::string_view sequence) {
  TokenSequence out;
  out.ids.reserve(sequence.size() + 2);
  out.ids.push_back(Vocabulary::kBos);
  for (char c : sequence) {
    const int id = Vocabulary::id(c);
    if (!Vocabulary::is_residue(id)) {
      throw VocabularyError(std::string("special token '") + c + "' inside a residue sequence");
    }
    out.ids.push_back(id);
  }
  out.ids.push_back(Vocabulary::kEos);
  return out;
}

std::string decode(const std::vector<int>& ids) {
  std::string out;
  std::size_t i = 0;
  if (!ids.empty() && ids[0] == Vocabulary::kBos) i = 1;
  for (; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kEos) break;
    if (ids[i] == Vocabulary::kBos) continue;
    out.push_back(Vocabulary::token(ids[i]));
  }
  return out;
}

}  // namespace dspg::structure
