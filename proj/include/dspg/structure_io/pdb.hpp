#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dspg/structure_io/protein.hpp"

namespace dspg::structure {

// Reads ATOM records of the first chain of the first model. HETATM records
// are ignored, altLoc ' ' and 'A' are accepted, residues missing N/CA/C are
// dropped (counted in dropped_residues) and unknown residue names become X.
//
// Throws ElementRejectedError for any ATOM element outside C,N,O,S,Se,H and
// EmptyStructureError when fewer than two complete residues remain.
ProteinRecord parse_pdb(std::string_view text, std::string id = {});
ProteinRecord read_pdb_file(const std::filesystem::path& path);

char residue_letter(std::string_view three_letter);

}  // namespace dspg::structure
