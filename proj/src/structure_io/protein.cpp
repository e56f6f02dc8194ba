#include "dspg/structure_io/protein.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "dspg/error.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::structure {

namespace {
constexpr std::array<std::string_view, kElementCount> kSymbols = {"C", "N", "O", "S", "Se", "H"};
}

std::string_view element_symbol(Element e) { return kSymbols[static_cast<std::size_t>(e)]; }

std::optional<Element> element_from_symbol(std::string_view symbol) {
  std::string upper;
  for (char c : symbol) {
    if (!std::isspace(static_cast<unsigned char>(c))) upper.push_back(static_cast<char>(std::toupper(c)));
  }
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    std::string candidate(kSymbols[i]);
    std::transform(candidate.begin(), candidate.end(), candidate.begin(), [](char c) { return std::toupper(c); });
    if (candidate == upper) return static_cast<Element>(i);
  }
  return std::nullopt;
}

void validate(const ProteinRecord& record) {
  if (record.residues.size() < 2) {
    throw EmptyStructureError("structure '" + record.id + "' has " + std::to_string(record.residues.size()) +
                              " complete residues (need at least 2)");
  }
  if (record.sequence.size() != record.residues.size()) {
    throw ParseError("sequence length does not match residue count in '" + record.id + "'");
  }
  for (std::size_t i = 0; i < record.residues.size(); ++i) {
    if (record.sequence[i] != record.residues[i].aa) throw ParseError("sequence/residue mismatch in '" + record.id + "'");
    const int id = Vocabulary::id(record.sequence[i]);
    if (!Vocabulary::is_residue(id)) throw ParseError("non-residue letter in sequence of '" + record.id + "'");
  }
  if (record.atoms.empty()) throw ParseError("structure '" + record.id + "' has no atoms");
}

numerics::Tensor backbone_coords(const ProteinRecord& record) {
  const std::size_t L = record.residues.size();
  numerics::Tensor out({L, 3, 3});
  for (std::size_t i = 0; i < L; ++i) {
    const Residue& r = record.residues[i];
    const Eigen::Vector3d* rows[3] = {&r.n, &r.ca, &r.c};
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t k = 0; k < 3; ++k) out[(i * 3 + a) * 3 + k] = static_cast<float>((*rows[a])[k]);
  }
  return out;
}

}  // namespace dspg::structure
