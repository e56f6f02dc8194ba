#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "dspg/error.hpp"
#include "dspg/eval/metrics.hpp"
#include "dspg/eval/report.hpp"
#include "dspg/eval/split.hpp"
#include "support/synthetic.hpp"

using namespace dspg;
using namespace dspg::eval;
using numerics::Rng;

namespace {

Coords random_coords(std::size_t n, Rng& rng, double spread = 10.0) {
  Coords out(n);
  for (auto& p : out) p = {rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
  return out;
}

Coords move(const Coords& c, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Coords out;
  for (const auto& p : c) out.push_back(r * p + t);
  return out;
}

// Rotation from ZYZ Euler angles.
Eigen::Matrix3d euler(double a, double b, double c) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  return (AngleAxisd(a, Vector3d::UnitZ()) * AngleAxisd(b, Vector3d::UnitY()) * AngleAxisd(c, Vector3d::UnitZ()))
      .toRotationMatrix();
}

// Brute-force superposition: centroids matched, rotation found by an Euler
// grid and then a shrinking pattern search.
double brute_force_rmsd(const Coords& p, const Coords& q) {
  Eigen::Vector3d cp = Eigen::Vector3d::Zero(), cq = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) cp += p[i], cq += q[i];
  cp /= static_cast<double>(p.size());
  cq /= static_cast<double>(q.size());
  auto cost = [&](double a, double b, double c) {
    const Eigen::Matrix3d r = euler(a, b, c);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (r * (q[i] - cq) - (p[i] - cp)).squaredNorm();
    return std::sqrt(s / static_cast<double>(p.size()));
  };
  const double pi = std::numbers::pi;
  double best = cost(0, 0, 0), ba = 0, bb = 0, bc = 0;
  const int n = 36;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= n / 2; ++j)
      for (int k = 0; k < n; ++k) {
        const double a = 2 * pi * i / n, b = pi * j / (n / 2), c = 2 * pi * k / n;
        const double v = cost(a, b, c);
        if (v < best) best = v, ba = a, bb = b, bc = c;
      }
  for (double step = 0.1; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int axis = 0; axis < 3; ++axis)
        for (double sign : {-1.0, 1.0}) {
          double a = ba, b = bb, c = bc;
          (axis == 0 ? a : axis == 1 ? b : c) += sign * step;
          const double v = cost(a, b, c);
          if (v < best) best = v, ba = a, bb = b, bc = c, improved = true;
        }
    }
  }
  return best;
}

}  // namespace

TEST(Recovery, HandCountedFixtures) {
  struct Case {
    const char* native;
    const char* predicted;
    double expected;
  };
  const Case cases[] = {
      {"AAAA", "AABB", 0.5},    {"ACDE", "ACDE", 1.0},      {"ACDE", "WWWW", 0.0},  {"A", "A", 1.0},
      {"A", "C", 0.0},          {"ACDEF", "ACD", 0.6},      {"ACD", "ACDEFG", 1.0}, {"GGGG", "GXGX", 0.5},
      {"MKVL", "", 0.0},        {"ARNDCQEGHI", "ARNDXQEGHX", 0.8},
  };
  for (const auto& c : cases) {
    EXPECT_DOUBLE_EQ(recovery_rate(c.native, c.predicted), c.expected) << c.native << " vs " << c.predicted;
    EXPECT_DOUBLE_EQ(sequence_identity(c.native, c.predicted), c.expected);
  }
}

TEST(Recovery, EmptyNativeIsAnError) {
  EXPECT_THROW(recovery_rate("", "A"), EvaluationError);
  EXPECT_THROW(sequence_identity("", ""), EvaluationError);
}

TEST(Recovery, MatchesCharacterComparisonOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(80), m = rng.below(100);
    std::string a, b;
    // A three-letter alphabet makes matches common.
    for (std::size_t i = 0; i < n; ++i) a += "ACD"[rng.below(3)];
    for (std::size_t i = 0; i < m; ++i) b += "ACD"[rng.below(3)];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(n, m); ++i) hits += a[i] == b[i];
    const double r = recovery_rate(a, b);
    EXPECT_DOUBLE_EQ(r, static_cast<double>(hits) / static_cast<double>(n));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Kabsch, RigidCopyHasZeroRmsd) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Coords p = random_coords(3 + rng.below(50), rng);
    const Coords q = move(p, fixtures::random_rotation(rng), {rng.normal() * 20, rng.normal() * 20, rng.normal() * 20});
    EXPECT_LT(kabsch_rmsd(p, q), 1e-5);
  }
}

TEST(Kabsch, ThreePointFixtureMatchesBruteForce) {
  const Coords p{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const Coords q{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  const double oracle = brute_force_rmsd(p, q);
  EXPECT_NEAR(kabsch_rmsd(p, q), oracle, 1e-3);
  EXPECT_GT(oracle, 0.1);
}

TEST(Kabsch, RandomPairsMatchBruteForce) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Coords p = random_coords(6, rng, 3.0), q = random_coords(6, rng, 3.0);
    EXPECT_NEAR(kabsch_rmsd(p, q), brute_force_rmsd(p, q), 1e-3);
  }
}

TEST(Kabsch, SymmetricAndRigidInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    const Coords p = random_coords(n, rng), q = random_coords(n, rng);
    const double base = kabsch_rmsd(p, q);
    EXPECT_NEAR(base, kabsch_rmsd(q, p), 1e-6);
    const Eigen::Vector3d t{rng.normal() * 30, rng.normal() * 30, rng.normal() * 30};
    EXPECT_NEAR(base, kabsch_rmsd(move(p, fixtures::random_rotation(rng), t), q), 1e-6);
    EXPECT_NEAR(base, kabsch_rmsd(p, move(q, fixtures::random_rotation(rng), -t)), 1e-6);
    EXPECT_GE(base, 0.0);
  }
}

TEST(Kabsch, MirrorImageIsNotSuperposedByReflection) {
  // A chiral tetrahedron against its mirror image: a reflection would give
  // zero, a proper rotation cannot.
  const Coords p{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  Coords q = p;
  for (auto& x : q) x.z() = -x.z();
  EXPECT_GT(kabsch_rmsd(p, q), 0.1);
  EXPECT_NEAR(kabsch_rmsd(p, q), brute_force_rmsd(p, q), 1e-3);
}

TEST(Kabsch, CollinearInputsAreHandled) {
  const Coords p{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const Coords q{{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {0, 3, 0}};
  EXPECT_LT(kabsch_rmsd(p, q), 1e-6);
}

TEST(Kabsch, Errors) {
  const Coords three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const Coords two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(kabsch_rmsd(three, two), DimensionError);
  EXPECT_THROW(kabsch_rmsd(two, two), ArgumentError);
  EXPECT_THROW(tm_score_fixed(three, two), DimensionError);
}

TEST(TmScore, IdenticalIsOneAndDistanceD0IsHalf) {
  Rng rng(5);
  const Coords p = random_coords(60, rng);
  EXPECT_NEAR(tm_score_fixed(p, p), 1.0, 1e-12);
  EXPECT_NEAR(tm_score_fixed(p, move(p, fixtures::random_rotation(rng), {5, -3, 2})), 1.0, 1e-9);
  for (std::size_t l : {5, 16, 60, 300}) {
    const std::vector<double> d(l, tm_d0(l));
    EXPECT_DOUBLE_EQ(tm_score_from_distances(d, l), 0.5);
  }
}

TEST(TmScore, D0FormulaAndClamp) {
  EXPECT_NEAR(tm_d0(100), 1.24 * std::cbrt(85.0) - 1.8, 1e-12);
  EXPECT_NEAR(tm_d0(300), 1.24 * std::cbrt(285.0) - 1.8, 1e-12);
  EXPECT_DOUBLE_EQ(tm_d0(10), 0.5);
  EXPECT_DOUBLE_EQ(tm_d0(16), 0.5);  // 1.24 - 1.8 is negative
  EXPECT_DOUBLE_EQ(tm_d0(0), 0.5);
}

TEST(TmScore, InflationNeverIncreasesScore) {
  Rng rng(6);
  const Coords p = random_coords(80, rng);
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& x : p) c += x;
  c /= static_cast<double>(p.size());
  double previous = 1.0;
  for (double s = 1.0; s <= 3.0; s += 0.05) {
    Coords q;
    for (const auto& x : p) q.push_back(c + s * (x - c));
    const double tm = tm_score_fixed(p, q);
    EXPECT_LE(tm, previous + 1e-12) << "scale " << s;
    previous = tm;
  }
  EXPECT_LT(previous, 0.5);
}

TEST(TmScore, RangeAndOneOnlyAtZeroRmsd) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(100);
    const Coords p = random_coords(n, rng), q = random_coords(n, rng);
    const double tm = tm_score_fixed(p, q);
    EXPECT_GT(tm, 0.0);
    EXPECT_LT(tm, 1.0);
    EXPECT_GT(kabsch_rmsd(p, q), 0.0);
  }
}

namespace {

void expect_valid_partition(const std::vector<LabeledId>& items, const SplitPlan& plan, std::size_t k) {
  ASSERT_EQ(plan.size(), k);
  std::map<std::string, std::string> label_of;
  for (const auto& it : items) label_of[it.id] = it.label;
  std::set<std::string> seen;
  std::map<std::string, std::size_t> fold_of_label;
  for (std::size_t f = 0; f < plan.size(); ++f) {
    for (const auto& id : plan[f]) {
      ASSERT_TRUE(label_of.count(id)) << id;
      EXPECT_TRUE(seen.insert(id).second) << id << " in two folds";
      auto [it, inserted] = fold_of_label.emplace(label_of[id], f);
      EXPECT_EQ(it->second, f) << "label " << label_of[id] << " split";
    }
  }
  EXPECT_EQ(seen.size(), items.size());
}

}  // namespace

TEST(Split, TenSingletonsGiveOnePerFold) {
  std::vector<LabeledId> items;
  for (int i = 0; i < 10; ++i) items.push_back({"p" + std::to_string(i), "t" + std::to_string(i)});
  const auto plan = grouped_kfold(items, 10, 0);
  expect_valid_partition(items, plan, 10);
  for (const auto& fold : plan) EXPECT_EQ(fold.size(), 1u);
}

TEST(Split, RandomLabelingsArePartitionsWithBalancedFolds) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 200 + rng.below(300), labels = 40 + rng.below(40);
    std::vector<LabeledId> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back({"id" + std::to_string(i), "L" + std::to_string(rng.below(labels))});
    const auto plan = grouped_kfold(items, 10, trial);
    expect_valid_partition(items, plan, 10);
    // Largest groups here stay well under 15% of N/10, so balance is possible.
    const double target = static_cast<double>(n) / 10.0;
    for (const auto& fold : plan) EXPECT_LE(std::fabs(static_cast<double>(fold.size()) - target), 0.15 * target);
  }
}

TEST(Split, DeterministicGivenSeed) {
  std::vector<LabeledId> items;
  for (int i = 0; i < 60; ++i) items.push_back({"p" + std::to_string(i), "t" + std::to_string(i % 20)});
  EXPECT_EQ(grouped_kfold(items, 10, 3), grouped_kfold(items, 10, 3));
  // Equal-size groups are shuffled by the seed.
  bool differs = false;
  for (std::uint64_t s = 4; s < 10 && !differs; ++s) differs = grouped_kfold(items, 10, s) != grouped_kfold(items, 10, 3);
  EXPECT_TRUE(differs);
}

TEST(Split, LargestGroupGoesFirstToFoldZero) {
  std::vector<LabeledId> items;
  for (int i = 0; i < 5; ++i) items.push_back({"big" + std::to_string(i), "B"});
  for (int i = 0; i < 12; ++i) items.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
  const auto plan = grouped_kfold(items, 3, 1);
  expect_valid_partition(items, plan, 3);
  // Fold 0 takes the big group, singletons then fill folds 1 and 2 to five
  // and the lowest index wins the remaining ties: sizes 6, 6, 5.
  EXPECT_EQ(plan[0].size(), 6u);
  EXPECT_EQ(plan[1].size(), 6u);
  EXPECT_EQ(plan[2].size(), 5u);
  EXPECT_EQ(std::count_if(plan[0].begin(), plan[0].end(), [](const std::string& id) { return id.starts_with("big"); }), 5);
}

TEST(Split, Errors) {
  std::vector<LabeledId> items{{"a", "x"}, {"b", "y"}};
  EXPECT_THROW(grouped_kfold(items, 3, 0), ArgumentError);
  EXPECT_THROW(grouped_kfold(items, 0, 0), ArgumentError);
  EXPECT_THROW(grouped_kfold({{"a", "x"}, {"a", "y"}}, 1, 0), ArgumentError);
  EXPECT_THROW(grouped_kfold({{"a", ""}}, 1, 0), ArgumentError);
}

TEST(Split, LabelsAndPlanText) {
  const auto items = parse_labels("# header\np1\tT1\n\np2\tT2\r\np3\tT1\n");
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[1].id, "p2");
  EXPECT_EQ(items[1].label, "T2");
  EXPECT_THROW(parse_labels("p1 T1\n"), ArgumentError);
  const auto plan = grouped_kfold(items, 2, 0);
  const std::string text = format_split(plan);
  EXPECT_EQ(text, plan[0].size() == 2 ? "0\tp1\n0\tp3\n1\tp2\n" : "0\tp2\n1\tp1\n1\tp3\n");
}

TEST(Report, ParsesFastaWithWrappedLines) {
  const auto recs = parse_fasta(">1abc|sample0|seed7\nACDE\nFG\n\n>2xyz\r\nMK\r\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].id(), "1abc");
  EXPECT_EQ(recs[0].sequence, "ACDEFG");
  EXPECT_EQ(recs[1].id(), "2xyz");
  EXPECT_EQ(recs[1].sequence, "MK");
  EXPECT_THROW(parse_fasta("ACDE\n>x\nA\n"), ParseError);
}

TEST(Report, SummaryBandsAndMissingFooter) {
  EvalReport r;
  r.rows.push_back({"a", "sample0", 50, 1.0, 1.0, true, 0.0, 1.0});
  r.rows.push_back({"b", "", 150, 0.5, 0.5, false, std::nullopt, std::nullopt});
  r.rows.push_back({"c", "", 600, 0.0, 0.0, true, 2.0, 0.25});
  r.missing = {"zz"};
  const std::string text = format_report(r);
  EXPECT_NE(text.find("approximates TM-align"), std::string::npos);
  EXPECT_NE(text.find("a\tsample0\t50\t1.000000\t1.000000\t1\t0.000000\t1.000000\n"), std::string::npos);
  EXPECT_NE(text.find("b\t\t150\t0.500000\t0.500000\t0\tNA\tNA\n"), std::string::npos);
  EXPECT_NE(text.find("## recovery\t3\t0.500000\t0.500000\n"), std::string::npos);
  EXPECT_NE(text.find("## length_match_rate\t3\t0.666667"), std::string::npos);
  EXPECT_NE(text.find("## tm\t2\t0.625000\t0.625000\n"), std::string::npos);
  EXPECT_NE(text.find("## 0<L<100\t1\t1.000000\n"), std::string::npos);
  EXPECT_NE(text.find("## 100<=L<300\t1\t0.500000\n"), std::string::npos);
  EXPECT_NE(text.find("## 300<=L<500\t0\tNA\n"), std::string::npos);
  EXPECT_NE(text.find("## L>=500\t1\t0.000000\n"), std::string::npos);
  EXPECT_NE(text.find("## missing\t1\tzz\n"), std::string::npos);
}

TEST(Report, SummarizeMedian) {
  EXPECT_DOUBLE_EQ(summarize({3, 1, 2}).median, 2.0);
  EXPECT_DOUBLE_EQ(summarize({4, 1, 2, 3}).median, 2.5);
  EXPECT_EQ(summarize({}).count, 0u);
}
