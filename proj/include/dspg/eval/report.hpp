#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dspg::eval {

struct FastaRecord {
  std::string header;  // without '>'
  std::string sequence;
  std::string id() const;  // header up to the first '|'
};

std::vector<FastaRecord> parse_fasta(const std::string& text);

struct EvalRow {
  std::string id;
  std::string sample;  // header remainder after the id, may be empty
  std::size_t length = 0;
  double recovery = 0.0;
  double identity = 0.0;
  bool length_match = false;
  std::optional<double> rmsd;
  std::optional<double> tm;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> missing;  // ids in the FASTA with no cache
};

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};
Summary summarize(std::vector<double> values);

// Length bands used to bucket recovery.
struct LengthBand {
  const char* name;
  std::size_t lo;  // inclusive
  std::size_t hi;  // exclusive, 0 = unbounded
};
const std::vector<LengthBand>& length_bands();

// TSV rows followed by a '#'-prefixed summary block.
std::string format_report(const EvalReport& report);

}  // namespace dspg::eval
