#include "dspg/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "dspg/cli/cache.hpp"
#include "dspg/decoder/checkpoint.hpp"
#include "dspg/decoder/dataset.hpp"
#include "dspg/decoder/sampler.hpp"
#include "dspg/decoder/trainer.hpp"
#include "dspg/error.hpp"
#include "dspg/eval/metrics.hpp"
#include "dspg/eval/report.hpp"
#include "dspg/eval/split.hpp"
#include "dspg/structure_io/pdb.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::cli {

namespace fs = std::filesystem;

namespace {

io::RunConfig load_config(const std::string& path) {
  return path.empty() ? io::RunConfig{} : io::RunConfig::load(path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << text;
}

void require_surface_match(const io::ProteinCache& cache, const io::RunConfig& cfg) {
  if (cache.surface_config != io::surface_config_echo(cfg)) {
    throw ConfigError("cache '" + cache.id + "' was built with different surface settings:\n" + cache.surface_config);
  }
}

std::vector<decoder::PreparedProtein> load_prepared(const fs::path& path, const io::RunConfig& cfg) {
  const auto model_cfg = decoder::model_config(cfg);
  std::vector<fs::path> files = fs::is_directory(path) ? io::list_caches(path) : std::vector<fs::path>{path};
  std::vector<decoder::PreparedProtein> out;
  for (const auto& f : files) {
    const io::ProteinCache cache = io::read_cache(f);
    require_surface_match(cache, cfg);
    out.push_back(decoder::prepare(cache, model_cfg, cfg.seed));
  }
  if (out.empty()) throw ArgumentError("no caches found at " + path.string());
  return out;
}

// ---------------------------------------------------------------- build-surface

struct BuildArgs {
  std::string pdb_dir, out_dir, config;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool ply = false;
};

int cmd_build_surface(const BuildArgs& a, std::ostream& err) {
  io::RunConfig cfg = load_config(a.config);
  if (!fs::is_directory(a.pdb_dir)) throw ArgumentError("PDB directory not found: " + a.pdb_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.pdb_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".pdb" || ext == ".ent")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(a.out_dir);

  struct Outcome {
    bool ok = false;
    std::string message;
  };
  std::vector<Outcome> outcomes(files.size());
  auto work = [&](std::size_t i) {
    try {
      const auto record = structure::read_pdb_file(files[i]);
      const auto cache = io::make_cache(record, cfg, numerics::derive_seed(a.seed, record.id));
      io::write_cache(fs::path(a.out_dir) / (record.id + ".dspg"), cache);
      if (a.ply) {
        std::ofstream ply(fs::path(a.out_dir) / (record.id + ".ply"));
        surface::write_ply(cache.cloud, ply);
      }
      outcomes[i] = {true, std::to_string(record.length()) + " residues, " + std::to_string(cache.cloud.size()) +
                               " surface points"};
    } catch (const std::exception& e) {
      outcomes[i] = {false, e.what()};
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, a.threads ? a.threads : cfg.threads);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < std::min(workers, files.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < files.size(); i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();

  std::size_t ok = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    err << (outcomes[i].ok ? "ok\t" : "rejected\t") << files[i].filename().string() << '\t' << outcomes[i].message
        << '\n';
    ok += outcomes[i].ok;
  }
  err << "built " << ok << " of " << files.size() << " caches\n";
  return ok > 0 ? 0 : 1;
}

// ------------------------------------------------------------------------ train

struct TrainArgs {
  std::string cache_dir, config, out_checkpoint, resume;
  bool backbone_only = false, surface_only = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::size_t stop_after = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  io::RunConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.steps) cfg.steps = *a.steps;
  if (a.backbone_only && a.surface_only) throw ArgumentError("--backbone-only and --surface-only are exclusive");
  if (a.backbone_only) cfg.branch = "backbone";
  if (a.surface_only) cfg.branch = "surface";
  cfg.validate();

  const auto data = load_prepared(a.cache_dir, cfg);
  std::unique_ptr<decoder::DsProGen> model;
  std::uint64_t init_seed = cfg.seed;
  std::optional<io::Container> resume_state;
  if (!a.resume.empty()) {
    auto loaded = decoder::load_checkpoint(a.resume);
    decoder::require_compatible(loaded.config, cfg);
    init_seed = loaded.container.get_u64("init_seed").at(0);
    model = std::move(loaded.model);
    resume_state = std::move(loaded.container);
  } else {
    model = std::make_unique<decoder::DsProGen>(decoder::model_config(cfg), init_seed);
  }
  decoder::Trainer trainer(*model, data, decoder::train_config(cfg, data.size()));
  if (resume_state) trainer.load_state(*resume_state);

  if (trainer.steps_done() == 0) out << "step\tlr\tloss\n";
  char line[96];
  while (!trainer.finished() && (a.stop_after == 0 || trainer.steps_done() < a.stop_after)) {
    decoder::StepResult r;
    try {
      r = trainer.step();
    } catch (const DivergenceError& e) {
      decoder::save_checkpoint(a.out_checkpoint, *model, cfg, init_seed, &trainer);
      err << "error: " << e.what() << "; last good state written to " << a.out_checkpoint << '\n';
      return 2;
    }
    std::snprintf(line, sizeof line, "%zu\t%.6e\t%.6f\n", r.step, r.lr, r.loss);
    out << line;
  }
  decoder::save_checkpoint(a.out_checkpoint, *model, cfg, init_seed, &trainer);
  err << "trained " << trainer.steps_done() << " of " << trainer.config().total_steps << " steps ("
      << decoder::branch_name(trainer.config().branch) << "), checkpoint " << a.out_checkpoint << '\n';
  return 0;
}

// --------------------------------------------------------------------- generate

struct GenerateArgs {
  std::string checkpoint, cache, config;
  std::size_t n = 1, max_tokens = 0;
  std::optional<double> temperature;
  std::optional<std::size_t> top_k;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  auto loaded = decoder::load_checkpoint(a.checkpoint);
  if (!a.config.empty()) decoder::require_compatible(loaded.config, io::RunConfig::load(a.config));
  const io::RunConfig& cfg = loaded.config;
  const auto proteins = load_prepared(a.cache, cfg);
  const decoder::Branch branch = decoder::parse_branch(cfg.branch);
  for (const auto& p : proteins) {
    for (std::size_t i = 0; i < a.n; ++i) {
      decoder::SamplingConfig s;
      s.temperature = a.temperature.value_or(cfg.temperature);
      s.top_k = a.top_k.value_or(cfg.top_k);
      s.max_tokens = a.max_tokens;
      s.seed = numerics::derive_seed(numerics::derive_seed(a.seed, p.id), i);
      const auto ids = decoder::generate(*loaded.model, p, branch, s);
      out << '>' << p.id << "|sample" << i << "|seed" << a.seed << '\n' << structure::decode(ids) << '\n';
    }
  }
  return 0;
}

// ------------------------------------------------------------------------- eval

struct EvalArgs {
  std::string fasta, cache_dir, out_report, pred_dir;
};

eval::Coords ca_trace(const numerics::Tensor& coords) {
  eval::Coords out(coords.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float* ca = coords.data().data() + i * 9 + 3;
    out[i] = Eigen::Vector3d(ca[0], ca[1], ca[2]);
  }
  return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& err) {
  const auto records = eval::parse_fasta(read_text(a.fasta));
  std::map<std::string, io::ProteinCache> caches;
  for (const auto& path : io::list_caches(a.cache_dir)) {
    auto c = io::read_cache(path);
    caches.emplace(c.id, std::move(c));
  }
  eval::EvalReport report;
  for (const auto& rec : records) {
    const std::string id = rec.id();
    auto it = caches.find(id);
    if (it == caches.end()) {
      if (std::find(report.missing.begin(), report.missing.end(), id) == report.missing.end()) report.missing.push_back(id);
      continue;
    }
    const std::string& native = it->second.sequence;
    eval::EvalRow row;
    row.id = id;
    row.sample = rec.header.size() > id.size() ? rec.header.substr(id.size() + 1) : "";
    row.length = native.size();
    row.recovery = eval::recovery_rate(native, rec.sequence);
    row.identity = eval::sequence_identity(native, rec.sequence);
    row.length_match = native.size() == rec.sequence.size();
    if (!a.pred_dir.empty()) {
      const fs::path pred = fs::path(a.pred_dir) / (id + ".pdb");
      if (fs::exists(pred)) {
        const auto model = structure::read_pdb_file(pred);
        const auto p = ca_trace(it->second.coords);
        const auto q = ca_trace(structure::backbone_coords(model));
        if (p.size() == q.size() && p.size() >= 3) {
          row.rmsd = eval::kabsch_rmsd(p, q);
          row.tm = eval::tm_score_fixed(p, q);
        } else {
          err << "warning: predicted structure for " << id << " has " << q.size() << " residues, native " << p.size()
              << "; structure metrics skipped\n";
        }
      }
    }
    report.rows.push_back(std::move(row));
  }
  write_text(a.out_report, eval::format_report(report));
  err << "evaluated " << report.rows.size() << " records, " << report.missing.size() << " ids without cache\n";
  return 0;
}

// ------------------------------------------------------------------------ split

struct SplitArgs {
  std::string labels, out;
  std::size_t k = 10;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const auto plan = eval::grouped_kfold(eval::parse_labels(read_text(a.labels)), a.k, a.seed);
  const std::string text = eval::format_split(plan);
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dspg: structure-conditioned protein sequence design"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build-surface", "Parse PDB files and write one surface cache per protein");
  b->add_option("--pdb-dir", build.pdb_dir, "Directory of .pdb files")->required();
  b->add_option("--out", build.out_dir, "Output cache directory")->required();
  b->add_option("--seed", build.seed, "Base seed");
  b->add_option("--config", build.config, "RunConfig file");
  b->add_option("--threads", build.threads, "Worker threads (default: config threads)");
  b->add_flag("--ply", build.ply, "Also write a PLY point cloud per protein");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the model on a cache directory");
  t->add_option("--cache-dir", train.cache_dir, "Cache directory")->required();
  t->add_option("--config", train.config, "RunConfig file");
  t->add_option("--out-checkpoint", train.out_checkpoint, "Checkpoint to write")->required();
  t->add_flag("--backbone-only", train.backbone_only, "Drop the surface branch");
  t->add_flag("--surface-only", train.surface_only, "Drop the backbone branch");
  t->add_option("--resume", train.resume, "Continue from this checkpoint");
  t->add_option("--seed", train.seed, "Override the config seed");
  t->add_option("--steps", train.steps, "Override the config step count");
  t->add_option("--stop-after", train.stop_after, "Stop (and checkpoint) once this many steps are done");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample sequences as FASTA");
  g->add_option("--checkpoint", gen.checkpoint, "Trained checkpoint")->required();
  g->add_option("--cache", gen.cache, "Cache file or directory")->required();
  g->add_option("--n", gen.n, "Samples per protein");
  g->add_option("--temperature", gen.temperature, "Sampling temperature");
  g->add_option("--top-k", gen.top_k, "Top-k cutoff");
  g->add_option("--seed", gen.seed, "Sampling seed");
  g->add_option("--max-tokens", gen.max_tokens, "Maximum residues per sample (default 2L)");
  g->add_option("--config", gen.config, "Refuse to run unless this config matches the checkpoint");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score FASTA predictions against cached natives");
  e->add_option("--fasta", ev.fasta, "Predicted sequences")->required();
  e->add_option("--cache-dir", ev.cache_dir, "Cache directory")->required();
  e->add_option("--out-report", ev.out_report, "TSV report to write")->required();
  e->add_option("--pred-dir", ev.pred_dir, "Predicted structures <id>.pdb for RMSD/TM");

  SplitArgs sp;
  auto* s = app.add_subcommand("split", "Topology-grouped k-fold split");
  s->add_option("--labels", sp.labels, "id<TAB>label file")->required();
  s->add_option("--k", sp.k, "Number of folds");
  s->add_option("--seed", sp.seed, "Seed for ordering equal-size groups");
  s->add_option("--out", sp.out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n" << "run with --help for usage\n";
    return 1;
  }

  try {
    if (b->parsed()) return cmd_build_surface(build, err);
    if (t->parsed()) return cmd_train(train, out, err);
    if (g->parsed()) return cmd_generate(gen, out);
    if (e->parsed()) return cmd_eval(ev, err);
    if (s->parsed()) return cmd_split(sp, out);
  } catch (const ArgumentError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const FormatError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const ContextLengthError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace dspg::cli
