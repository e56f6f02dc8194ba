#include "dspg/structure_io/pdb.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "dspg/error.hpp"

namespace dspg::structure {

namespace {

constexpr std::array<std::pair<std::string_view, char>, 20> kThreeToOne = {{
    {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'}, {"GLN", 'Q'}, {"GLU", 'E'},
    {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'}, {"LEU", 'L'}, {"LYS", 'K'}, {"MET", 'M'}, {"PHE", 'F'},
    {"PRO", 'P'}, {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'}, {"TYR", 'Y'}, {"VAL", 'V'},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// 1-indexed inclusive column range, tolerant of short lines.
std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
  if (line.size() < first) return {};
  return line.substr(first - 1, std::min(last, line.size()) - first + 1);
}

double parse_coord(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad coordinate field '" + std::string(field) + "'");
  }
  return v;
}

// Element from columns 77-78, else from the atom-name alignment convention:
// one-letter elements start in column 14, two-letter elements in column 13.
std::string element_field(std::string_view line) {
  std::string_view e = trim(columns(line, 77, 78));
  if (!e.empty()) return std::string(e);
  std::string_view name = columns(line, 13, 16);
  if (name.size() < 2) return std::string(trim(name));
  const char c13 = name[0];
  if (c13 == ' ' || std::isdigit(static_cast<unsigned char>(c13))) return std::string(1, name[1]);
  std::string_view trimmed = trim(name);
  if (trimmed.size() == 4 && (c13 == 'H' || c13 == 'h')) return "H";
  std::string two(name.substr(0, 2));
  if (two[1] == ' ' || std::isdigit(static_cast<unsigned char>(two[1]))) return std::string(1, two[0]);
  return two;
}

struct PendingResidue {
  std::string key;
  int res_index = 0;
  char aa = 'X';
  std::optional<Eigen::Vector3d> n, ca, c;
  std::vector<std::string> names;
  std::vector<Atom> atoms;
};

}  // namespace

char residue_letter(std::string_view three_letter) {
  three_letter = trim(three_letter);
  for (auto [code, letter] : kThreeToOne) {
    if (code == three_letter) return letter;
  }
  return 'X';
}

ProteinRecord parse_pdb(std::string_view text, std::string id) {
  ProteinRecord record;
  record.id = std::move(id);

  std::optional<char> chain;
  std::optional<PendingResidue> current;
  auto flush = [&]() {
    if (!current) return;
    if (current->n && current->ca && current->c) {
      record.residues.push_back(Residue{current->res_index, current->aa, *current->n, *current->ca, *current->c});
      record.sequence.push_back(current->aa);
      for (Atom& a : current->atoms) record.atoms.push_back(a);
    } else {
      ++record.dropped_residues;
    }
    current.reset();
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;

    if (line.starts_with("ENDMDL")) break;
    if (!line.starts_with("ATOM  ") && !line.starts_with("ATOM")) continue;
    if (line.size() < 54) throw ParseError("line " + std::to_string(line_no) + ": truncated ATOM record");

    const char chain_id = line.size() >= 22 ? line[21] : ' ';
    if (!chain) chain = chain_id;
    if (chain_id != *chain) continue;

    const std::string elem = element_field(line);
    const auto element = element_from_symbol(elem);
    if (!element) throw ElementRejectedError(elem);

    const char alt = line.size() >= 17 ? line[16] : ' ';
    if (alt != ' ' && alt != 'A') continue;

    std::string key(columns(line, 23, 27));
    if (!current || current->key != key) {
      flush();
      current.emplace();
      current->key = key;
      std::string_view seq_field = trim(columns(line, 23, 26));
      int res_index = 0;
      std::from_chars(seq_field.data(), seq_field.data() + seq_field.size(), res_index);
      current->res_index = res_index;
      current->aa = residue_letter(columns(line, 18, 20));
    }

    std::string name(trim(columns(line, 13, 16)));
    bool seen = false;
    for (const std::string& n : current->names) seen = seen || n == name;
    if (seen) continue;
    current->names.push_back(name);

    Eigen::Vector3d xyz(parse_coord(columns(line, 31, 38), line_no), parse_coord(columns(line, 39, 46), line_no),
                        parse_coord(columns(line, 47, 54), line_no));
    current->atoms.push_back(Atom{*element, xyz});
    if (name == "N") current->n = xyz;
    if (name == "CA") current->ca = xyz;
    if (name == "C") current->c = xyz;
  }
  flush();

  if (record.residues.empty()) {
    throw EmptyStructureError("no complete residues in structure '" + record.id + "'");
  }
  validate(record);
  return record;
}

ProteinRecord read_pdb_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pdb(buffer.str(), path.stem().string());
}

}  // namespace dspg::structure
