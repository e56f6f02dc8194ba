#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dspg::eval {

struct LabeledId {
  std::string id;
  std::string label;  // topology group
};

// folds[f] lists the ids of fold f in input order.
using SplitPlan = std::vector<std::vector<std::string>>;

// Groups sorted by descending size (the seed shuffles equal-size groups),
// each assigned to the currently smallest fold, lowest fold index on ties.
SplitPlan grouped_kfold(const std::vector<LabeledId>& items, std::size_t k, std::uint64_t seed);

// "protein_id<TAB>label" lines; blank lines and '#' comments skipped.
std::vector<LabeledId> parse_labels(const std::string& text);
// "fold_id<TAB>protein_id" lines, folds in order.
std::string format_split(const SplitPlan& plan);

}  // namespace dspg::eval
