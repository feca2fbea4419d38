#include "adanet/train/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "adanet/errors.hpp"

namespace adanet::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& value) {
  N out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw ConfigError("setting '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("setting '" + key + "': expected a boolean, got '" + value + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"lambda", [](TrainConfig& c, auto& k, auto& v) { c.weights.spatial = parse_number<double>(k, v); }},
      {"beta", [](TrainConfig& c, auto& k, auto& v) { c.weights.id_spatial = parse_number<double>(k, v); }},
      {"gamma", [](TrainConfig& c, auto& k, auto& v) { c.weights.freq = parse_number<double>(k, v); }},
      {"vartheta", [](TrainConfig& c, auto& k, auto& v) { c.weights.id_freq = parse_number<double>(k, v); }},
      {"cycle_weight", [](TrainConfig& c, auto& k, auto& v) { c.weights.cycle = parse_number<double>(k, v); }},
      {"tau", [](TrainConfig& c, auto& k, auto& v) { c.weights.tau = parse_number<double>(k, v); }},
      {"gan_flavor", [](TrainConfig& c, auto&, auto& v) { c.weights.flavor = loss::parse_flavor(v); }},
      {"learning_rate", [](TrainConfig& c, auto& k, auto& v) { c.learning_rate = parse_number<double>(k, v); }},
      {"epochs", [](TrainConfig& c, auto& k, auto& v) { c.epochs = parse_number<std::size_t>(k, v); }},
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = parse_number<std::size_t>(k, v); }},
      {"steps", [](TrainConfig& c, auto& k, auto& v) { c.steps = parse_number<std::uint64_t>(k, v); }},
      {"time_budget", [](TrainConfig& c, auto& k, auto& v) { c.time_budget_seconds = parse_number<double>(k, v); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"checkpoint_every",
       [](TrainConfig& c, auto& k, auto& v) { c.checkpoint_every = parse_number<std::size_t>(k, v); }},
      {"low_dir", [](TrainConfig& c, auto&, auto& v) { c.low_dir = v; }},
      {"high_dir", [](TrainConfig& c, auto&, auto& v) { c.high_dir = v; }},
      {"out_dir", [](TrainConfig& c, auto&, auto& v) { c.out_dir = v; }},
      {"patch", [](TrainConfig& c, auto& k, auto& v) { c.patch = parse_number<std::size_t>(k, v); }},
      {"n_spatial", [](TrainConfig& c, auto& k, auto& v) { c.n_spatial = parse_number<std::size_t>(k, v); }},
      {"n_freq", [](TrainConfig& c, auto& k, auto& v) { c.n_freq = parse_number<std::size_t>(k, v); }},
      {"freq_patch", [](TrainConfig& c, auto& k, auto& v) { c.freq_patch = parse_number<std::size_t>(k, v); }},
      {"channels", [](TrainConfig& c, auto& k, auto& v) { c.channels = parse_number<std::size_t>(k, v); }},
      {"g_base", [](TrainConfig& c, auto& k, auto& v) { c.g_base = parse_number<std::size_t>(k, v); }},
      {"n_resblocks", [](TrainConfig& c, auto& k, auto& v) { c.n_resblocks = parse_number<std::size_t>(k, v); }},
      {"attention", [](TrainConfig& c, auto& k, auto& v) { c.attention = parse_bool(k, v); }},
      {"decoder_attention", [](TrainConfig& c, auto& k, auto& v) { c.decoder_attention = parse_bool(k, v); }},
      {"d_base", [](TrainConfig& c, auto& k, auto& v) { c.d_base = parse_number<std::size_t>(k, v); }},
      {"head_width", [](TrainConfig& c, auto& k, auto& v) { c.head_width = parse_number<std::size_t>(k, v); }},
      {"freq_hidden", [](TrainConfig& c, auto& k, auto& v) { c.freq_hidden = parse_number<std::size_t>(k, v); }},
      {"freq_out", [](TrainConfig& c, auto& k, auto& v) { c.freq_out = parse_number<std::size_t>(k, v); }},
      {"augment", [](TrainConfig& c, auto& k, auto& v) { c.augment = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  weights.validate();
  if (batch_size != 1) throw ConfigError("only batch_size=1 is supported");
  if (epochs == 0 && steps == 0) throw ConfigError("need epochs > 0 or steps > 0");
  if (learning_rate < 0) throw ParameterError("learning_rate must be non-negative");
  if (patch == 0 || patch % 4 != 0) throw ConfigError("patch must be a positive multiple of 4");
  if (n_spatial < 2) throw ConfigError("n_spatial must be at least 2");
  if (n_freq < 2) throw ConfigError("n_freq must be at least 2");
  if (freq_patch > patch) throw ConfigError("freq_patch exceeds patch");
  if (preset == loss::Preset::kCycleGan &&
      (weights.spatial > 0 || weights.id_spatial > 0 || weights.freq > 0 || weights.id_freq > 0)) {
    throw ConfigError("the cyclegan preset has no contrastive terms");
  }
  if (preset != loss::Preset::kCycleGan && weights.cycle > 0) {
    throw ConfigError("cycle_weight is only meaningful for the cyclegan preset");
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "preset=" << loss::preset_name(preset) << "\n";
  os << "lambda=" << fmt(weights.spatial) << "\n";
  os << "beta=" << fmt(weights.id_spatial) << "\n";
  os << "gamma=" << fmt(weights.freq) << "\n";
  os << "vartheta=" << fmt(weights.id_freq) << "\n";
  os << "cycle_weight=" << fmt(weights.cycle) << "\n";
  os << "tau=" << fmt(weights.tau) << "\n";
  os << "gan_flavor=" << loss::flavor_name(weights.flavor) << "\n";
  os << "learning_rate=" << fmt(learning_rate) << "\n";
  os << "epochs=" << epochs << "\n";
  os << "batch_size=" << batch_size << "\n";
  os << "steps=" << steps << "\n";
  os << "time_budget=" << fmt(time_budget_seconds) << "\n";
  os << "seed=" << seed << "\n";
  os << "checkpoint_every=" << checkpoint_every << "\n";
  os << "low_dir=" << low_dir.string() << "\n";
  os << "high_dir=" << high_dir.string() << "\n";
  os << "out_dir=" << out_dir.string() << "\n";
  os << "patch=" << patch << "\n";
  os << "n_spatial=" << n_spatial << "\n";
  os << "n_freq=" << n_freq << "\n";
  os << "freq_patch=" << freq_patch << "\n";
  os << "channels=" << channels << "\n";
  os << "g_base=" << g_base << "\n";
  os << "n_resblocks=" << n_resblocks << "\n";
  os << "attention=" << (attention ? 1 : 0) << "\n";
  os << "decoder_attention=" << (decoder_attention ? 1 : 0) << "\n";
  os << "d_base=" << d_base << "\n";
  os << "head_width=" << head_width << "\n";
  os << "freq_hidden=" << freq_hidden << "\n";
  os << "freq_out=" << freq_out << "\n";
  os << "augment=" << (augment ? 1 : 0) << "\n";
  return os.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

TrainConfig make_config(const std::map<std::string, std::string>& settings) {
  TrainConfig cfg;
  if (auto it = settings.find("preset"); it != settings.end()) {
    cfg.preset = loss::parse_preset(it->second);
    cfg.weights = loss::preset_weights(cfg.preset);
  }
  for (const auto& [key, value] : settings) {
    if (key == "preset") continue;
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> settings;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    settings = parse_key_values(ss.str());
  }
  for (const auto& o : overrides) {
    for (auto& [k, v] : parse_key_values(o)) settings[k] = v;
  }
  return make_config(settings);
}

TrainConfig config_from_overrides(const std::vector<std::string>& overrides) { return load_config({}, overrides); }

std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  if (const char* root = std::getenv(kDataRootEnv); root && *root) return std::filesystem::path(root) / p;
  return p;
}

}  // namespace adanet::train
