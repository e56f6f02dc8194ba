// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Usage: dspg_acceptance [criterion numbers...]   (default: all ten)

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "dspg/backbone/encoder.hpp"
#include "dspg/cli/cache.hpp"
#include "dspg/cli/commands.hpp"
#include "dspg/decoder/dataset.hpp"
#include "dspg/decoder/sampler.hpp"
#include "dspg/decoder/trainer.hpp"
#include "dspg/eval/metrics.hpp"
#include "dspg/numerics/gradient_check.hpp"
#include "dspg/structure_io/vocab.hpp"
#include "dspg/surface/build.hpp"
#include "dspg/surface/curvature.hpp"
#include "dspg/surface/neighborhood.hpp"
#include "dspg/surface/sampling.hpp"
#include "dspg/surface_encoder/encoder.hpp"
#include "support/synthetic.hpp"

using namespace dspg;
using numerics::Rng;
using numerics::Tape;
using numerics::Tensor;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kRotations = 20;
constexpr int kGvpInputs = 10;
constexpr double kGvpTolerance = 1e-5;
constexpr double kEncoderTolerance = 1e-4;
constexpr double kLimit1 = 10.0;
// Criterion 2
constexpr double kGradTolerance = 1e-3;
constexpr double kLimit2 = 120.0;
// Criterion 3
constexpr double kAtomRadius = 1.70;
constexpr double kSphereTolerance = 5e-3;
constexpr double kRho = 5.0;
constexpr double kMeanRelTolerance = 0.10;
constexpr double kGaussRelTolerance = 0.15;
constexpr double kPlaneTolerance = 1e-3;
constexpr double kCurvatureRadius = 2.0;
constexpr double kLimit3 = 60.0;
// Criterion 4
constexpr std::size_t kFpsMaxN = 64;
constexpr std::size_t kBruteMaxN = 500;
constexpr double kLimit4 = 30.0;
// Criterion 5
constexpr std::size_t kBudget = 8192;
constexpr double kLimit5 = 5.0;
// Criterion 6
constexpr std::size_t kOverfitProteins = 5;
constexpr std::size_t kOverfitMaxLength = 60;
constexpr double kOverfitLoss = 0.05;
constexpr double kOverfitRecovery = 0.99;
constexpr std::size_t kOverfitMaxSteps = 2000;
constexpr double kOverfitLr = 1e-3;
constexpr double kLimit6 = 600.0;
// Criterion 7
constexpr std::size_t kAblationProteins = 20;
// Criterion 8
constexpr double kColdTemperature = 1e-6;
constexpr int kDraws = 100000;
constexpr double kSigmas = 3.0;
constexpr double kLimit8 = 60.0;
// Criterion 9
constexpr double kRigidRmsd = 1e-5;
constexpr double kSymmetry = 1e-6;
constexpr double kTmTolerance = 1e-12;
constexpr double kLimit9 = 5.0;
// Criterion 10
constexpr std::size_t kPipelineSteps = 50;
constexpr double kLimit10 = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(numerics::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(scale * rng.normal());
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

Tensor rotate_vectors(const Tensor& v, const Eigen::Matrix3d& q) {
  Tensor out = v;
  const std::size_t n = v.dim(0) / 3, c = v.dim(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      Eigen::Vector3d x(v.at(3 * i, ch), v.at(3 * i + 1, ch), v.at(3 * i + 2, ch));
      Eigen::Vector3d y = q * x;
      for (int k = 0; k < 3; ++k) out.at(3 * i + k, ch) = static_cast<float>(y[k]);
    }
  return out;
}

Tensor transform_coords(const Tensor& c, const Eigen::Matrix3d& q, const Eigen::Vector3d& t) {
  Tensor out = c;
  for (std::size_t a = 0; a < c.numel() / 3; ++a) {
    Eigen::Vector3d y = q * Eigen::Vector3d(c[a * 3], c[a * 3 + 1], c[a * 3 + 2]) + t;
    for (int k = 0; k < 3; ++k) out[a * 3 + k] = static_cast<float>(y[k]);
  }
  return out;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

// ------------------------------------------------------------------ 1

Outcome gvp_equivariance() {
  Outcome o;
  Rng rng(101);
  backbone::GvpLayer layer({128, 16, 128, 16, 16}, rng);
  double s_dev = 0.0, v_dev = 0.0;
  for (int input = 0; input < kGvpInputs; ++input) {
    backbone::ResidueGeometry g{random_tensor({12, 128}, rng), random_tensor({36, 16}, rng)};
    const auto base = backbone::gvp_forward(g, layer);
    for (int r = 0; r < kRotations; ++r) {
      const Eigen::Matrix3d q = fixtures::random_rotation(rng);
      const auto rotated = backbone::gvp_forward({g.s, rotate_vectors(g.v, q)}, layer);
      s_dev = std::max(s_dev, max_abs_diff(rotated.s, base.s));
      v_dev = std::max(v_dev, max_abs_diff(rotated.v, rotate_vectors(base.v, q)));
    }
  }
  o.require(v_dev <= kGvpTolerance, "vector equivariance " + fmt("%.2e", v_dev));
  o.require(s_dev <= kGvpTolerance, "scalar invariance " + fmt("%.2e", s_dev));

  backbone::BackboneEncoder enc(backbone::BackboneConfig{}, rng);
  const Tensor coords = structure::backbone_coords(fixtures::synthetic_protein("p", 50, 7));
  const Tensor base = enc.encode(coords);
  double b_dev = 0.0;
  for (int r = 0; r < 5; ++r) {
    const Eigen::Vector3d t(rng.normal() * 20, rng.normal() * 20, rng.normal() * 20);
    b_dev = std::max(b_dev, max_abs_diff(enc.encode(transform_coords(coords, fixtures::random_rotation(rng), t)), base));
  }
  o.require(b_dev <= kEncoderTolerance, "backbone B invariance " + fmt("%.2e", b_dev));
  return o;
}

// ------------------------------------------------------------------ 2

Outcome gradient_fidelity() {
  Outcome o;
  Rng rng(202);
  {
    backbone::GvpLayer layer({16, 4, 12, 4, 4}, rng);
    Tensor s = random_tensor({4, 16}, rng), v = random_tensor({12, 4}, rng);
    Tensor ws = random_tensor({4, 12}, rng), wv = random_tensor({12, 4}, rng);
    auto r = numerics::gradient_check(
        [&](Tape& t) {
          auto out = layer.forward(t, t.param(s), t.param(v));
          return numerics::add(numerics::sum(numerics::mul(out.s, t.constant(ws))),
                               numerics::sum(numerics::mul(out.v, t.constant(wv))));
        },
        {&layer.w_h, &layer.w_mu, &layer.w_m, &layer.b, &s, &v});
    o.require(r.max_relative_error < kGradTolerance, "GVP " + fmt("%.2e", r.max_relative_error));
  }
  {
    surface_encoder::ChemEmbed chem(rng);
    Tensor nb = random_tensor({3 * 16, 7}, rng), w = random_tensor({3, 6}, rng);
    numerics::ParamList ps;
    chem.collect("chem", ps);
    std::vector<Tensor*> params{&nb};
    for (auto& p : ps) params.push_back(p.tensor);
    auto r = numerics::gradient_check(
        [&](Tape& t) { return numerics::sum(numerics::mul(chem.forward(t, t.param(nb)), t.constant(w))); }, params);
    o.require(r.max_relative_error < kGradTolerance, "chem_embed " + fmt("%.2e", r.max_relative_error));
  }
  {
    surface_encoder::FeatureFusion fuse(2, rng);
    Tensor chem = random_tensor({3, 6}, rng), curv = random_tensor({3, 10}, rng), w = random_tensor({3, 16}, rng);
    numerics::ParamList ps;
    fuse.collect("fuse", ps);
    std::vector<Tensor*> params{&chem, &curv};
    for (auto& p : ps) params.push_back(p.tensor);
    auto r = numerics::gradient_check(
        [&](Tape& t) {
          return numerics::sum(numerics::mul(fuse.forward(t, t.param(chem), t.param(curv)), t.constant(w)));
        },
        params);
    o.require(r.max_relative_error < kGradTolerance, "fuse_features " + fmt("%.2e", r.max_relative_error));
  }
  {
    decoder::DecoderConfig dc;
    dc.hidden = 32;
    dc.layers = 2;
    dc.heads = 4;
    dc.ffn_mult = 2;
    dc.max_len = 64;
    decoder::Decoder dec(dc, rng);
    const std::size_t l = 5;
    Tensor prefix = random_tensor({l, 32}, rng);
    const std::vector<int> tokens{structure::Vocabulary::kBos, 3, 11, 0, 7, 19};
    std::vector<int> targets(l + tokens.size(), 0);
    std::vector<std::uint8_t> mask(targets.size(), 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      targets[l + i] = i + 1 < tokens.size() ? tokens[i + 1] : structure::Vocabulary::kEos;
      mask[l + i] = 1;
    }
    numerics::ParamList ps;
    dec.collect("decoder", ps);
    std::vector<Tensor*> params{&prefix};
    for (auto& p : ps) params.push_back(p.tensor);
    auto r = numerics::gradient_check(
        [&](Tape& t) { return numerics::cross_entropy(dec.forward(t, t.param(prefix), tokens), targets, mask); },
        params);
    o.require(r.max_relative_error < kGradTolerance, "2-layer decoder " + fmt("%.2e", r.max_relative_error));
  }
  return o;
}

// ------------------------------------------------------------------ 3

Outcome surface_oracles() {
  Outcome o;
  Rng rng(303);
  const surface::VdwField atom({{0.5, -1.0, 2.0}}, {kAtomRadius}, 0.3);
  const auto pts = surface::sample_surface(atom, rng);
  double dev = 0.0;
  for (const auto& p : pts) dev = std::max(dev, std::abs((p - Eigen::Vector3d(0.5, -1.0, 2.0)).norm() - kAtomRadius));
  o.require(!pts.empty() && dev <= kSphereTolerance,
            std::to_string(pts.size()) + " sphere points, max radial error " + fmt("%.2e", dev));

  // Fibonacci lattice on a rho = 5 sphere with exact normals.
  std::vector<Eigen::Vector3d> sphere, normals;
  const std::size_t n = 4000;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / n, r = std::sqrt(1.0 - z * z);
    sphere.emplace_back(kRho * r * std::cos(golden * i), kRho * r * std::sin(golden * i), kRho * z);
    normals.push_back(sphere.back().normalized());
  }
  std::vector<double> h, k;
  for (const auto& e : surface::estimate_curvature(sphere, normals, kCurvatureRadius)) {
    if (!e.fallback) h.push_back(e.mean), k.push_back(e.gaussian);
  }
  const double mh = median(h), mk = median(k);
  o.require(std::abs(mh - 1.0 / kRho) <= kMeanRelTolerance / kRho, "median H " + fmt("%.4f", mh) + " (1/rho 0.2)");
  o.require(std::abs(mk - 1.0 / (kRho * kRho)) <= kGaussRelTolerance / (kRho * kRho),
            "median K " + fmt("%.5f", mk) + " (1/rho^2 0.04)");

  std::vector<Eigen::Vector3d> plane, up;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) plane.emplace_back(0.4 * i, 0.4 * j, 1.0), up.emplace_back(0, 0, 1);
  double worst = 0.0;
  bool all_fitted = true;
  for (const auto& e : surface::estimate_curvature(plane, up, kCurvatureRadius)) {
    worst = std::max(worst, std::abs(e.mean));
    all_fitted = all_fitted && !e.fallback;
  }
  o.require(all_fitted && worst < kPlaneTolerance, "plane max |H| " + fmt("%.2e", worst));
  return o;
}

// ------------------------------------------------------------------ 4

std::vector<Eigen::Vector3d> random_points(std::size_t n, Rng& rng, double spread) {
  std::vector<Eigen::Vector3d> p;
  for (std::size_t i = 0; i < n; ++i)
    p.emplace_back(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
  return p;
}

Outcome combinatorial_oracles() {
  Outcome o;
  Rng rng(404);
  int fps_cases = 0, fps_ok = 0;
  for (std::size_t n = 2; n <= kFpsMaxN; n += 3) {
    const auto p = random_points(n, rng, 6.0);
    const std::size_t start = rng.below(n), g = 1 + rng.below(n);
    std::vector<std::size_t> oracle{start};
    while (oracle.size() < g) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(oracle.begin(), oracle.end(), i) != oracle.end()) continue;
        double m = 1e300;
        for (std::size_t c : oracle) m = std::min(m, (p[i] - p[c]).squaredNorm());
        if (m > best) best = m, arg = i;
      }
      oracle.push_back(arg);
    }
    ++fps_cases;
    fps_ok += surface_encoder::farthest_point_sampling(p, g, start) == oracle;
  }
  o.require(fps_ok == fps_cases, "FPS " + std::to_string(fps_ok) + "/" + std::to_string(fps_cases) + " exact");

  int knn_cases = 0, knn_ok = 0;
  for (std::size_t n : {20u, 100u, 300u, 500u}) {
    const auto p = random_points(n, rng, 10.0);
    std::vector<std::size_t> centers;
    for (int c = 0; c < 8; ++c) centers.push_back(rng.below(n));
    const std::size_t k = std::min<std::size_t>(16, n);
    const auto patches = surface_encoder::knn_patches(p, centers, k);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < n; ++i) all.emplace_back((p[i] - p[centers[c]]).squaredNorm(), i);
      std::sort(all.begin(), all.end());
      std::set<std::size_t> want, got(patches[c].begin(), patches[c].end());
      for (std::size_t j = 0; j < k; ++j) want.insert(all[j].second);
      ++knn_cases;
      knn_ok += want == got;
    }
  }
  o.require(knn_ok == knn_cases, "KNN " + std::to_string(knn_ok) + "/" + std::to_string(knn_cases) + " exact");

  int nb_cases = 0, nb_ok = 0;
  for (std::size_t m : {std::size_t{16}, std::size_t{100}, kBruteMaxN}) {
    std::vector<structure::Atom> atoms;
    for (const auto& x : random_points(m, rng, 12.0)) atoms.push_back({static_cast<structure::Element>(rng.below(6)), x});
    const auto queries = random_points(50, rng, 14.0);
    const auto nearest = surface::nearest_atoms(queries, atoms);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t a = 0; a < m; ++a) all.emplace_back((atoms[a].xyz - queries[q]).norm(), a);
      std::sort(all.begin(), all.end());
      std::set<std::size_t> want, got(nearest[q].begin(), nearest[q].end());
      for (std::size_t j = 0; j < surface::kNeighborAtoms; ++j) want.insert(all[j].second);
      ++nb_cases;
      nb_ok += want == got;
    }
  }
  o.require(nb_ok == nb_cases,
            "16-atom neighbourhoods " + std::to_string(nb_ok) + "/" + std::to_string(nb_cases) + " exact");
  return o;
}

// ------------------------------------------------------------------ 5

Outcome budget_rule() {
  Outcome o;
  Rng rng(505);
  for (std::size_t count : {5000u, 8192u, 10000u}) {
    const auto sel = surface::enforce_budget(count, kBudget, rng);
    const std::size_t pads = static_cast<std::size_t>(std::count(sel.pad_mask.begin(), sel.pad_mask.end(), 1));
    bool ok = sel.source.size() == kBudget && sel.pad_mask.size() == kBudget;
    const std::set<std::size_t> distinct(sel.source.begin(), sel.source.end());
    if (count >= kBudget) {
      // Subsample: distinct rows of the input, no padding.
      ok = ok && pads == 0 && distinct.size() == kBudget && *distinct.rbegin() < count;
    } else {
      // Pad: every input row once, in order, then copies of input rows.
      for (std::size_t r = 0; r < count && ok; ++r) ok = sel.source[r] == r && !sel.pad_mask[r];
      ok = ok && pads == kBudget - count && distinct.size() == count;
    }
    o.require(ok, std::to_string(count) + " -> " + std::to_string(sel.source.size()) + " rows, " +
                      std::to_string(pads) + " pads");
  }
  return o;
}

// ------------------------------------------------------------------ 6, 7

std::vector<decoder::PreparedProtein> synthetic_dataset(const io::RunConfig& cfg, std::size_t count) {
  std::vector<decoder::PreparedProtein> out;
  const auto model_cfg = decoder::model_config(cfg);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t length = 40 + (i * 5) % (kOverfitMaxLength - 40 + 1);
    const auto record = fixtures::synthetic_protein("syn" + std::to_string(i), length, 1000 + i);
    out.push_back(decoder::prepare(io::make_cache(record, cfg, 77 + i), model_cfg, cfg.seed));
  }
  return out;
}

double dataset_loss(decoder::DsProGen& model, const std::vector<decoder::PreparedProtein>& data, decoder::Branch b) {
  double total = 0.0, tokens = 0.0;
  for (const auto& p : data) {
    Tape tape(numerics::Precision::f32, false);
    const double n = static_cast<double>(p.tokens.size() - 1);
    total += n * tape.item(decoder::sequence_loss(tape, model, p, b));
    tokens += n;
  }
  return total / tokens;
}

std::vector<double> greedy_recovery(decoder::DsProGen& model, const std::vector<decoder::PreparedProtein>& data,
                                    decoder::Branch b) {
  std::vector<double> out;
  decoder::SamplingConfig s;
  s.top_k = 1;
  s.temperature = 1.0;
  for (const auto& p : data) out.push_back(eval::recovery_rate(p.sequence, structure::decode(decoder::generate(model, p, b, s))));
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

decoder::TrainConfig overfit_train_config(std::size_t steps, std::size_t batch, decoder::Branch branch) {
  decoder::TrainConfig t;
  t.lr = kOverfitLr;
  t.total_steps = steps;
  t.batch = batch;
  t.warmup_frac = 0.05;
  t.clip = 1.0;
  t.seed = 0;
  t.branch = branch;
  return t;
}

struct OverfitRun {
  std::size_t steps = 0;
  std::size_t first_met = 0;  // step at which the target was first met, 0 if never
  double loss = 0.0;
  std::vector<double> recovery;
};

// Trains until the overfit target is met (or through the whole schedule when
// stop_at_target is false). With a batch smaller than the dataset the step
// loss covers only part of it, so a low step loss triggers a full check on
// the updated model.
OverfitRun train_to_target(const io::RunConfig& cfg, const std::vector<decoder::PreparedProtein>& data,
                           decoder::Branch branch, bool stop_at_target) {
  decoder::DsProGen model(decoder::model_config(cfg), cfg.seed);
  decoder::Trainer trainer(model, data, overfit_train_config(kOverfitMaxSteps, kOverfitProteins, branch));
  OverfitRun run;
  bool met = false;
  while (!trainer.finished() && !(met && stop_at_target)) {
    const auto r = trainer.step();
    if (!met && r.loss <= kOverfitLoss && trainer.steps_done() % 10 == 0) {
      run.loss = dataset_loss(model, data, branch);
      if (run.loss <= kOverfitLoss) {
        run.recovery = greedy_recovery(model, data, branch);
        met = mean(run.recovery) >= kOverfitRecovery;
        if (met) run.first_met = trainer.steps_done();
      }
    }
  }
  run.steps = trainer.steps_done();
  if (!met || !stop_at_target) {
    run.loss = dataset_loss(model, data, branch);
    run.recovery = greedy_recovery(model, data, branch);
  }
  return run;
}

Outcome overfit_sanity() {
  Outcome o;
  const io::RunConfig cfg;  // desk defaults: h_s 256, 4 decoder layers, g 32, K 16
  o.require(cfg.h_s == 256 && cfg.dec_layers == 4 && cfg.g == 32 && cfg.K == 16, "desk config");
  const auto run = train_to_target(cfg, synthetic_dataset(cfg, kOverfitProteins), decoder::Branch::full, true);
  const auto& rec = run.recovery;
  o.require(run.steps <= kOverfitMaxSteps, std::to_string(run.steps) + " steps");
  o.require(run.loss <= kOverfitLoss, "training loss " + fmt("%.4f", run.loss));
  o.require(mean(rec) >= kOverfitRecovery, "greedy recovery " + fmt("%.4f", mean(rec)) + " (min " +
                                               fmt("%.4f", *std::min_element(rec.begin(), rec.end())) + ")");
  return o;
}

// The overfit task on 20 proteins, per branch. Every branch runs the full
// step budget so the three are compared at the same training state; stopping
// each at its own target would compare numbers pinned near the threshold.
Outcome ablation_direction() {
  Outcome o;
  const io::RunConfig cfg;
  const auto data = synthetic_dataset(cfg, kAblationProteins);
  const decoder::Branch branches[3] = {decoder::Branch::full, decoder::Branch::backbone, decoder::Branch::surface};
  OverfitRun runs[3];
  for (int b = 0; b < 3; ++b) runs[b] = train_to_target(cfg, data, branches[b], false);
  const double full = mean(runs[0].recovery), bb = mean(runs[1].recovery), sf = mean(runs[2].recovery);
  o.require(full >= bb, "full " + fmt("%.4f", full) + " >= backbone-only " + fmt("%.4f", bb));
  o.require(full >= sf, "full " + fmt("%.4f", full) + " >= surface-only " + fmt("%.4f", sf));
  o.detail += "; after " + std::to_string(runs[0].steps) + " steps each, target first met at " +
              std::to_string(runs[0].first_met) + "/" + std::to_string(runs[1].first_met) + "/" +
              std::to_string(runs[2].first_met);
  return o;
}

// ------------------------------------------------------------------ 8

Outcome sampling_contracts() {
  Outcome o;
  Rng rng(808);
  // Token level: near-zero temperature is argmax. An exact tie has no single
  // argmax; the limit distribution splits between the tied ids, so those
  // trials only require the draw to land on a maximal logit.
  int cold_ok = 0, tie_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<float> logits(23);
    for (float& x : logits) x = static_cast<float>(rng.normal() * 3);
    const bool tied = trial % 10 == 0;
    if (tied) logits[5] = logits[17] = 50.0f;
    const int argmax = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    const int drawn = decoder::sample_token(logits, kColdTemperature, 23, rng);
    if (tied) {
      tie_ok += drawn == 5 || drawn == 17;
    } else {
      cold_ok += drawn == argmax;
    }
  }
  o.require(cold_ok == 900, "temperature 1e-6 == argmax on " + std::to_string(cold_ok) + "/900 logit vectors");
  o.require(tie_ok == 100, "exact ties drawn from the tied set " + std::to_string(tie_ok) + "/100");

  // Sequence level on an untrained small model.
  io::RunConfig cfg;
  cfg.h_s = 64;
  cfg.d_s = 32;
  cfg.h_g = 64;
  cfg.dec_heads = 4;
  cfg.enc_heads = 4;
  cfg.point_budget = 1024;
  const auto data = synthetic_dataset(cfg, 2);
  decoder::DsProGen model(decoder::model_config(cfg), 5);
  bool same_cold = true, seed_free = true;
  for (const auto& p : data) {
    decoder::SamplingConfig greedy;
    greedy.top_k = 1;
    greedy.temperature = 1.0;
    const auto argmax_ids = decoder::generate(model, p, decoder::Branch::full, greedy);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      decoder::SamplingConfig cold;
      cold.temperature = kColdTemperature;
      cold.top_k = 23;
      cold.seed = seed;
      same_cold = same_cold && decoder::generate(model, p, decoder::Branch::full, cold) == argmax_ids;
      decoder::SamplingConfig k1 = greedy;
      k1.seed = seed * 7919 + 1;
      seed_free = seed_free && decoder::generate(model, p, decoder::Branch::full, k1) == argmax_ids;
    }
  }
  o.require(same_cold, "cold decoding equals argmax decoding");
  o.require(seed_free, "top_k=1 decoding is seed independent");

  // Frequencies at one fixed decoding step: the last row of teacher-forced logits.
  Tape tape(numerics::Precision::f32, false);
  const Tensor logits = tape.value(model.forward(tape, data[0], decoder::Branch::full));
  std::vector<float> row(23);
  for (std::size_t c = 0; c < 23; ++c) row[c] = logits.at(logits.dim(0) / 2, c) * 40.0f;  // sharpen to spread mass
  const auto probs = decoder::sampling_distribution(row, 1.0, 23);
  std::vector<int> counts(23, 0);
  Rng draw(809);
  for (int i = 0; i < kDraws; ++i) ++counts[decoder::sample_token(row, 1.0, 23, draw)];
  double worst = 0.0;
  for (std::size_t c = 0; c < 23; ++c) {
    const double expect = kDraws * probs[c], sigma = std::sqrt(kDraws * probs[c] * (1.0 - probs[c]));
    worst = std::max(worst, sigma > 0 ? std::abs(counts[c] - expect) / sigma : (counts[c] == 0 ? 0.0 : 1e9));
  }
  o.require(worst <= kSigmas, "1e5 draws, worst deviation " + fmt("%.2f", worst) + " sigma");
  return o;
}

// ------------------------------------------------------------------ 9

Outcome metric_exactness() {
  Outcome o;
  struct Case {
    const char* native;
    const char* predicted;
    double expected;
  };
  const Case cases[] = {
      {"AAAA", "AABB", 0.5}, {"ACDE", "ACDE", 1.0}, {"ACDE", "WWWW", 0.0}, {"A", "A", 1.0},
      {"A", "C", 0.0},       {"ACDEF", "ACD", 0.6}, {"ACD", "ACDEFG", 1.0}, {"GGGG", "GXGX", 0.5},
      {"MKVL", "", 0.0},     {"ARNDCQEGHI", "ARNDXQEGHX", 0.8},
  };
  int ok = 0;
  for (const auto& c : cases) ok += eval::recovery_rate(c.native, c.predicted) == c.expected;
  o.require(ok == 10, "recovery fixtures " + std::to_string(ok) + "/10");

  Rng rng(909);
  double rigid = 0.0, asym = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    eval::Coords p, q, r;
    const std::size_t n = 3 + rng.below(100);
    for (std::size_t i = 0; i < n; ++i) p.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    const Eigen::Matrix3d rot = fixtures::random_rotation(rng);
    const Eigen::Vector3d t(rng.normal() * 30, rng.normal() * 30, rng.normal() * 30);
    for (const auto& x : p) q.push_back(rot * x + t), r.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    rigid = std::max(rigid, eval::kabsch_rmsd(p, q));
    asym = std::max(asym, std::abs(eval::kabsch_rmsd(p, r) - eval::kabsch_rmsd(r, p)));
  }
  o.require(rigid < kRigidRmsd, "rigid-copy RMSD " + fmt("%.2e", rigid));
  o.require(asym <= kSymmetry, "RMSD asymmetry " + fmt("%.2e", asym));

  eval::Coords p;
  for (int i = 0; i < 60; ++i) p.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
  const double tm_same = eval::tm_score_fixed(p, p);
  double tm_half_dev = 0.0;
  for (std::size_t l : {10u, 60u, 250u}) {
    const std::vector<double> d(l, eval::tm_d0(l));
    tm_half_dev = std::max(tm_half_dev, std::abs(eval::tm_score_from_distances(d, l) - 0.5));
  }
  o.require(std::abs(tm_same - 1.0) <= kTmTolerance, "TM identical " + fmt("%.12f", tm_same));
  o.require(tm_half_dev <= kTmTolerance, "TM at d_i = d0 off by " + fmt("%.1e", tm_half_dev));
  return o;
}

// ------------------------------------------------------------------ 10

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dspg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome pipeline_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("dspg_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root / "pdb");
  for (int i = 0; i < 3; ++i) {
    std::ofstream(root / "pdb" / ("prot" + std::to_string(i) + ".pdb")) << fixtures::synthetic_pdb(30 + 10 * i, 500 + i);
  }
  struct Run {
    std::vector<std::string> caches;
    std::string log, fasta;
    bool ok = true;
  };
  auto pipeline = [&](const std::string& tag) {
    Run r;
    const fs::path dir = root / tag;
    const auto b = run_cli({"build-surface", "--pdb-dir", (root / "pdb").string(), "--out", (dir / "cache").string(),
                            "--seed", "11"});
    const auto t = run_cli({"train", "--cache-dir", (dir / "cache").string(), "--out-checkpoint",
                            (dir / "model.ckpt").string(), "--steps", std::to_string(kPipelineSteps), "--seed", "3"});
    const auto g = run_cli({"generate", "--checkpoint", (dir / "model.ckpt").string(), "--cache",
                            (dir / "cache").string(), "--n", "2", "--seed", "5", "--temperature", "1"});
    r.ok = b.code == 0 && t.code == 0 && g.code == 0;
    for (const auto& p : io::list_caches(dir / "cache")) r.caches.push_back(slurp(p));
    r.log = t.out;
    r.fasta = g.out;
    return r;
  };
  const Run a = pipeline("a"), b = pipeline("b");
  fs::remove_all(root);
  o.require(a.ok && b.ok, "all commands exit 0");
  o.require(a.caches.size() == 3 && a.caches == b.caches, std::to_string(a.caches.size()) + " caches byte-identical");
  const auto lines = static_cast<std::size_t>(std::count(a.log.begin(), a.log.end(), '\n'));
  o.require(a.log == b.log && lines == kPipelineSteps + 1, "loss logs byte-identical (" + std::to_string(lines) + " lines)");
  o.require(!a.fasta.empty() && a.fasta == b.fasta, "FASTA byte-identical");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "GVP equivariance", kLimit1, gvp_equivariance},
      {2, "gradient fidelity", kLimit2, gradient_fidelity},
      {3, "surface oracles", kLimit3, surface_oracles},
      {4, "combinatorial oracles", kLimit4, combinatorial_oracles},
      {5, "budget rule", kLimit5, budget_rule},
      {6, "overfit sanity", kLimit6, overfit_sanity},
      {7, "ablation direction", 0.0, ablation_direction},
      {8, "sampling contracts", kLimit8, sampling_contracts},
      {9, "metric exactness", kLimit9, metric_exactness},
      {10, "pipeline determinism", kLimit10, pipeline_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0) {
      o.require(seconds < c.limit_seconds, fmt("%.1fs", seconds) + " < " + fmt("%.0fs", c.limit_seconds));
    } else {
      o.detail += "; " + fmt("%.1fs", seconds);
    }
    std::printf("criterion %2d %s  %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
