#include "dspg/eval/split.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "dspg/error.hpp"
#include "dspg/numerics/random.hpp"

namespace dspg::eval {

SplitPlan grouped_kfold(const std::vector<LabeledId>& items, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ArgumentError("k must be positive");
  std::map<std::string, std::vector<std::size_t>> by_label;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].label.empty()) throw ArgumentError("protein '" + items[i].id + "' has no topology label");
    if (!ids.insert(items[i].id).second) throw ArgumentError("protein '" + items[i].id + "' listed twice");
    by_label[items[i].label].push_back(i);
  }
  if (k > by_label.size()) {
    throw ArgumentError("cannot split " + std::to_string(by_label.size()) + " topology groups into " +
                        std::to_string(k) + " folds");
  }
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [label, members] : by_label) groups.push_back(&members);
  numerics::Rng rng(numerics::derive_seed(seed, "split"));
  for (std::size_t i = groups.size(); i > 1; --i) std::swap(groups[i - 1], groups[rng.below(i)]);
  std::stable_sort(groups.begin(), groups.end(), [](auto* a, auto* b) { return a->size() > b->size(); });

  std::vector<std::vector<std::size_t>> folds(k);
  for (const auto* g : groups) {
    std::size_t target = 0;
    for (std::size_t f = 1; f < k; ++f) {
      if (folds[f].size() < folds[target].size()) target = f;
    }
    folds[target].insert(folds[target].end(), g->begin(), g->end());
  }
  SplitPlan plan(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(folds[f].begin(), folds[f].end());
    for (std::size_t i : folds[f]) plan[f].push_back(items[i].id);
  }
  return plan;
}

std::vector<LabeledId> parse_labels(const std::string& text) {
  std::vector<LabeledId> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw ArgumentError("labels line " + std::to_string(line_no) + ": expected 'id<TAB>label'");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::string format_split(const SplitPlan& plan) {
  std::string out;
  for (std::size_t f = 0; f < plan.size(); ++f)
    for (const auto& id : plan[f]) out += std::to_string(f) + "\t" + id + "\n";
  return out;
}

}  // namespace dspg::eval
