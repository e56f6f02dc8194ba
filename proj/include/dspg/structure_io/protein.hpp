#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dspg/numerics/tensor.hpp"

namespace dspg::structure {

// Element alphabet in one-hot order.
enum class Element : std::uint8_t { C = 0, N = 1, O = 2, S = 3, Se = 4, H = 5 };
inline constexpr std::size_t kElementCount = 6;

std::string_view element_symbol(Element e);
// Case-insensitive; nullopt for anything outside the alphabet.
std::optional<Element> element_from_symbol(std::string_view symbol);

struct Residue {
  int res_index = 0;
  char aa = 'X';
  Eigen::Vector3d n;
  Eigen::Vector3d ca;
  Eigen::Vector3d c;
};

struct Atom {
  Element element = Element::C;
  Eigen::Vector3d xyz;
};

struct ProteinRecord {
  std::string id;
  std::vector<Residue> residues;
  std::vector<Atom> atoms;
  std::string sequence;
  std::size_t dropped_residues = 0;  // residues discarded for missing backbone atoms

  std::size_t length() const { return residues.size(); }
};

// Throws ParseError when the record breaks its invariants.
void validate(const ProteinRecord& record);

// [L, 3, 3] with rows (N, CA, C) per residue, in Angstrom.
numerics::Tensor backbone_coords(const ProteinRecord& record);

}  // namespace dspg::structure
