#include "dspg/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dspg/error.hpp"

namespace dspg::io {

namespace {

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, p);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field field(T RunConfig::*member, const char* key) {
  Field f;
  f.set = [member, key](RunConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else {
      c.*member = parse_number<T>(key, v);
    }
  };
  f.get = [member](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

#define DSPG_FIELD(name) {#name, field(&RunConfig::name, #name)}

const std::vector<std::pair<std::string, Field>>& table() {
  static const std::vector<std::pair<std::string, Field>> t = {
      DSPG_FIELD(h_s),         DSPG_FIELD(d_s),        DSPG_FIELD(d_v),          DSPG_FIELD(h_v),
      DSPG_FIELD(gvp_layers),  DSPG_FIELD(enc_layers), DSPG_FIELD(enc_heads),    DSPG_FIELD(dec_layers),
      DSPG_FIELD(dec_heads),   DSPG_FIELD(ffn_mult),   DSPG_FIELD(max_len),      DSPG_FIELD(dropout),
      DSPG_FIELD(prefix_lm),   DSPG_FIELD(freeze_backbone),
      DSPG_FIELD(g),           DSPG_FIELD(K),          DSPG_FIELD(d_surf),       DSPG_FIELD(h_g),
      DSPG_FIELD(surf_layers), DSPG_FIELD(surf_heads), DSPG_FIELD(fuse_blocks),
      DSPG_FIELD(tau),         DSPG_FIELD(point_budget),
      DSPG_FIELD(radius_C),    DSPG_FIELD(radius_N),   DSPG_FIELD(radius_O),     DSPG_FIELD(radius_S),
      DSPG_FIELD(radius_Se),   DSPG_FIELD(radius_H),
      DSPG_FIELD(lr),          DSPG_FIELD(epochs),     DSPG_FIELD(steps),        DSPG_FIELD(batch),
      DSPG_FIELD(warmup_frac), DSPG_FIELD(clip),       DSPG_FIELD(seed),         DSPG_FIELD(threads),
      DSPG_FIELD(branch),      DSPG_FIELD(temperature), DSPG_FIELD(top_k),
  };
  return t;
}

#undef DSPG_FIELD

const Field& lookup(const std::string& key) {
  for (const auto& [k, f] : table())
    if (k == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError("config key '" + key + "' repeated on lines " + std::to_string(it->second) + " and " +
                        std::to_string(line_no));
    }
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) { lookup(key).set(*this, value); }
std::string RunConfig::get(const std::string& key) const { return lookup(key).get(*this); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : table()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(h_s > 0 && d_s > 0 && d_v > 0 && h_v > 0, "model widths must be positive");
  need(dec_heads > 0 && h_s % dec_heads == 0, "h_s must be divisible by dec_heads");
  need(enc_heads > 0 && h_s % enc_heads == 0, "h_s must be divisible by enc_heads");
  need(surf_heads > 0 && d_surf % surf_heads == 0, "d_surf must be divisible by surf_heads");
  need(d_s >= 22, "d_s must hold the 22 raw scalar features");
  need(d_v >= 4, "d_v must hold the 4 raw vector features");
  need(g > 0 && K > 0, "g and K must be positive");
  need(point_budget >= 32, "point_budget must be at least 32");
  need(tau > 0.0, "tau must be positive");
  for (double r : {radius_C, radius_N, radius_O, radius_S, radius_Se, radius_H}) need(r > 0.0, "radii must be positive");
  need(lr > 0.0, "lr must be positive");
  need(batch > 0, "batch must be positive");
  need(warmup_frac >= 0.0 && warmup_frac < 1.0, "warmup_frac must be in [0, 1)");
  need(clip > 0.0, "clip must be positive");
  need(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  need(threads > 0, "threads must be positive");
  need(branch == "full" || branch == "backbone" || branch == "surface", "branch must be full, backbone or surface");
  need(temperature > 0.0, "temperature must be positive");
  need(top_k >= 1, "top_k must be at least 1");
  need(max_len >= 4, "max_len too small");
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [key, f] : table()) out.push_back(key);
    return out;
  }();
  return k;
}

const std::vector<std::string>& RunConfig::model_keys() {
  static const std::vector<std::string> k = {"h_s",      "d_s",       "d_v",        "h_v",        "gvp_layers",
                                             "enc_layers", "enc_heads", "dec_layers", "dec_heads", "ffn_mult",
                                             "max_len",  "prefix_lm", "g",          "K",          "d_surf",
                                             "h_g",      "surf_layers", "surf_heads", "fuse_blocks"};
  return k;
}

const std::vector<std::string>& RunConfig::surface_keys() {
  static const std::vector<std::string> k = {"tau",      "point_budget", "radius_C", "radius_N",
                                             "radius_O", "radius_S",     "radius_Se", "radius_H"};
  return k;
}

}  // namespace dspg::io
