#include "dspg/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dspg/error.hpp"

namespace dspg::eval {

std::string FastaRecord::id() const { return header.substr(0, header.find('|')); }

std::vector<FastaRecord> parse_fasta(const std::string& text) {
  std::vector<FastaRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      out.push_back({line.substr(1), {}});
    } else {
      if (out.empty()) throw ParseError("FASTA sequence data before the first header");
      out.back().sequence += line;
    }
  }
  return out;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

const std::vector<LengthBand>& length_bands() {
  static const std::vector<LengthBand> bands = {
      {"0<L<100", 1, 100}, {"100<=L<300", 100, 300}, {"300<=L<500", 300, 500}, {"L>=500", 500, 0}};
  return bands;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "# dspg evaluation report\n"
      << "# tm: TM-score formula with fixed residue correspondence over a Kabsch superposition "
         "(no alignment search; approximates TM-align)\n"
      << "# identity: position-wise identity, a stand-in for sequence similarity\n"
      << "id\tsample\tL\trecovery\tidentity\tlength_match\trmsd\ttm\n";
  std::vector<double> rec, ident, match, rmsd, tm;
  for (const auto& r : report.rows) {
    out << r.id << '\t' << r.sample << '\t' << r.length << '\t' << fmt(r.recovery) << '\t' << fmt(r.identity) << '\t'
        << (r.length_match ? 1 : 0) << '\t' << (r.rmsd ? fmt(*r.rmsd) : "NA") << '\t' << (r.tm ? fmt(*r.tm) : "NA")
        << '\n';
    rec.push_back(r.recovery);
    ident.push_back(r.identity);
    match.push_back(r.length_match ? 1.0 : 0.0);
    if (r.rmsd) rmsd.push_back(*r.rmsd);
    if (r.tm) tm.push_back(*r.tm);
  }
  out << "\n## summary\n## metric\tn\tmean\tmedian\n";
  auto line = [&](const char* name, const std::vector<double>& v) {
    const Summary s = summarize(v);
    out << "## " << name << '\t' << s.count << '\t' << (s.count ? fmt(s.mean) : "NA") << '\t'
        << (s.count ? fmt(s.median) : "NA") << '\n';
  };
  line("recovery", rec);
  line("identity", ident);
  line("length_match_rate", match);
  line("rmsd", rmsd);
  line("tm", tm);
  out << "## recovery by length band\n## band\tn\tmean\n";
  for (const auto& band : length_bands()) {
    std::vector<double> v;
    for (const auto& r : report.rows) {
      if (r.length >= band.lo && (band.hi == 0 || r.length < band.hi)) v.push_back(r.recovery);
    }
    const Summary s = summarize(v);
    out << "## " << band.name << '\t' << s.count << '\t' << (s.count ? fmt(s.mean) : "NA") << '\n';
  }
  out << "## missing\t" << report.missing.size();
  for (const auto& id : report.missing) out << '\t' << id;
  out << '\n';
  return out.str();
}

}  // namespace dspg::eval
