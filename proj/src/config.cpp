#include "qoe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "qoe/error.hpp"

namespace qoe {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  fail(ErrorKind::validation, "config key '" + std::string(key) + "': expected " +
                                  std::string(want) + ", got '" + std::string(value) + "'");
}

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad_value(key, v, "an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto item : split_list(v)) out.push_back(parse_int<std::size_t>(key, item));
  if (out.empty()) bad_value(key, v, "a comma-separated list of sizes");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}
std::string fmt_bool(bool b) { return b ? "true" : "false"; }
std::string fmt_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct KeySpec {
  std::string key;
  std::string description;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Shorthand builders for the common field types.
template <typename Field>
KeySpec size_key(std::string key, std::string desc, Field field) {
  return {key, std::move(desc),
          [field, key](ExperimentConfig& c, std::string_view v) {
            field(c) = parse_int<std::size_t>(key, v);
          },
          [field](const ExperimentConfig& c) {
            return fmt_int(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
KeySpec int_key(std::string key, std::string desc, Field field) {
  return {key, std::move(desc),
          [field, key](ExperimentConfig& c, std::string_view v) { field(c) = parse_int<int>(key, v); },
          [field](const ExperimentConfig& c) {
            return fmt_int(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
KeySpec real_key(std::string key, std::string desc, Field field) {
  return {key, std::move(desc),
          [field, key](ExperimentConfig& c, std::string_view v) { field(c) = parse_real(key, v); },
          [field](const ExperimentConfig& c) { return fmt(field(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Field>
KeySpec bool_key(std::string key, std::string desc, Field field) {
  return {key, std::move(desc),
          [field, key](ExperimentConfig& c, std::string_view v) { field(c) = parse_bool(key, v); },
          [field](const ExperimentConfig& c) {
            return fmt_bool(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
KeySpec seed_key(std::string key, std::string desc, Field field) {
  return {key, std::move(desc),
          [field, key](ExperimentConfig& c, std::string_view v) {
            field(c) = parse_int<std::uint64_t>(key, v);
          },
          [field](const ExperimentConfig& c) {
            return fmt_int(field(const_cast<ExperimentConfig&>(c)));
          }};
}

void add_mlp_keys(std::vector<KeySpec>& keys, const std::string& prefix, MlpConfig ModelParams::*member,
                  bool attention) {
  auto cfg = [member](ExperimentConfig& c) -> MlpConfig& { return c.params.*member; };
  keys.push_back({prefix + ".hidden", "hidden layer widths, comma-separated",
                  [cfg, prefix](ExperimentConfig& c, std::string_view v) {
                    cfg(c).hidden = parse_sizes(prefix + ".hidden", v);
                  },
                  [cfg](const ExperimentConfig& c) {
                    return fmt_sizes(cfg(const_cast<ExperimentConfig&>(c)).hidden);
                  }});
  if (attention)
    keys.push_back(size_key(prefix + ".attention_hidden", "attention gate hidden width",
                            [cfg](ExperimentConfig& c) -> auto& { return cfg(c).attention_hidden; }));
  keys.push_back(real_key(prefix + ".dropout", "dropout after each hidden activation",
                          [cfg](ExperimentConfig& c) -> auto& { return cfg(c).dropout; }));
  keys.push_back(real_key(prefix + ".learning_rate", "Adam learning rate",
                          [cfg](ExperimentConfig& c) -> auto& { return cfg(c).learning_rate; }));
  keys.push_back(size_key(prefix + ".batch_size", "mini-batch size",
                          [cfg](ExperimentConfig& c) -> auto& { return cfg(c).batch_size; }));
  keys.push_back(size_key(prefix + ".epochs", "training epochs",
                          [cfg](ExperimentConfig& c) -> auto& { return cfg(c).epochs; }));
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> k;
    k.push_back(seed_key("experiment.seed", "global seed; default for the data/augment/split seeds",
                         [](ExperimentConfig& c) -> auto& { return c.seed; }));
    k.push_back({"experiment.roster", "models to train, comma-separated, or 'all'",
                 [](ExperimentConfig& c, std::string_view v) {
                   c.roster.clear();
                   if (trim(v) == "all") {
                     c.roster.assign(kAllModelKinds.begin(), kAllModelKinds.end());
                     return;
                   }
                   for (auto item : split_list(v)) {
                     auto kind = parse_model_kind(item);
                     if (!kind) bad_value("experiment.roster", item, "a model id");
                     if (std::find(c.roster.begin(), c.roster.end(), *kind) != c.roster.end())
                       bad_value("experiment.roster", item, "each model at most once");
                     c.roster.push_back(*kind);
                   }
                   if (c.roster.empty()) bad_value("experiment.roster", v, "a nonempty roster");
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.roster.size(); ++i)
                     out += (i ? "," : "") + std::string(to_string(c.roster[i]));
                   return out;
                 }});
    k.push_back(bool_key("experiment.include_demographic_feature",
                         "encode the demographic label as a feature on augmented data",
                         [](ExperimentConfig& c) -> auto& { return c.include_demographic; }));
    k.push_back(bool_key("experiment.record_timing",
                         "add per-model wall-clock seconds to reports (breaks byte-identity)",
                         [](ExperimentConfig& c) -> auto& { return c.record_timing; }));
    k.push_back({"data.path", "CSV of base sessions; empty selects the synthetic generator",
                 [](ExperimentConfig& c, std::string_view v) {
                   if (trim(v).empty())
                     c.data.path.reset();
                   else
                     c.data.path = std::filesystem::path(std::string(trim(v)));
                 },
                 [](const ExperimentConfig& c) {
                   return c.data.path ? c.data.path->string() : std::string();
                 }});
    k.push_back(size_key("data.n", "synthetic base sessions",
                         [](ExperimentConfig& c) -> auto& { return c.data.n; }));
    k.push_back(seed_key("data.seed", "generator seed",
                         [](ExperimentConfig& c) -> auto& { return c.data.seed; }));
    k.push_back(real_key("augment.noise_sigma", "Gaussian MOS noise (MOS points)",
                         [](ExperimentConfig& c) -> auto& { return c.augmentation.noise_sigma; }));
    k.push_back(real_key("augment.adjustment_scale", "MOS points per unit of weighted factor shift",
                         [](ExperimentConfig& c) -> auto& { return c.augmentation.adjustment_scale; }));
    k.push_back(seed_key("augment.seed", "augmentation noise seed",
                         [](ExperimentConfig& c) -> auto& { return c.augmentation.seed; }));
    for (std::size_t p = 0; p < kDemographicCount; ++p) {
      const std::string base = "profiles." + std::string(to_string(kAllDemographics[p]));
      k.push_back(real_key(base + ".w_rebuff", "stall sensitivity",
                           [p](ExperimentConfig& c) -> auto& { return c.augmentation.profiles[p].w_rebuff; }));
      k.push_back(real_key(base + ".w_quality", "visual quality sensitivity",
                           [p](ExperimentConfig& c) -> auto& { return c.augmentation.profiles[p].w_quality; }));
      k.push_back(real_key(base + ".w_bitrate", "bitrate sensitivity",
                           [p](ExperimentConfig& c) -> auto& { return c.augmentation.profiles[p].w_bitrate; }));
      k.push_back(real_key(base + ".w_consistency", "smoothness sensitivity",
                           [p](ExperimentConfig& c) -> auto& {
                             return c.augmentation.profiles[p].w_consistency;
                           }));
    }
    k.push_back(real_key("split.test_fraction", "held-out fraction (groups or rows)",
                         [](ExperimentConfig& c) -> auto& { return c.split.test_fraction; }));
    k.push_back({"split.mode", "grouped_by_session or iid",
                 [](ExperimentConfig& c, std::string_view v) {
                   auto m = parse_split_mode(trim(v));
                   if (!m) bad_value("split.mode", v, "grouped_by_session or iid");
                   c.split.mode = *m;
                 },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.split.mode)); }});
    k.push_back(seed_key("split.seed", "split seed",
                         [](ExperimentConfig& c) -> auto& { return c.split.seed; }));
    k.push_back(real_key("linear_regression.ridge_jitter", "ridge term on the Gram diagonal",
                         [](ExperimentConfig& c) -> auto& { return c.params.linear.ridge_jitter; }));
    k.push_back(int_key("decision_tree.max_depth", "maximum depth, 0 for unlimited",
                        [](ExperimentConfig& c) -> auto& { return c.params.tree.max_depth; }));
    k.push_back(size_key("decision_tree.min_samples_leaf", "minimum rows per leaf",
                         [](ExperimentConfig& c) -> auto& { return c.params.tree.min_samples_leaf; }));
    k.push_back(size_key("random_forest.n_trees", "number of trees",
                         [](ExperimentConfig& c) -> auto& { return c.params.forest.n_trees; }));
    k.push_back(size_key("random_forest.max_features", "features tried per split, 0 for max(1, d/3)",
                         [](ExperimentConfig& c) -> auto& { return c.params.forest.max_features; }));
    k.push_back(bool_key("random_forest.bootstrap", "draw a bootstrap sample per tree",
                         [](ExperimentConfig& c) -> auto& { return c.params.forest.bootstrap; }));
    k.push_back(int_key("random_forest.max_depth", "maximum depth, 0 for unlimited",
                        [](ExperimentConfig& c) -> auto& { return c.params.forest.tree.max_depth; }));
    k.push_back(size_key("random_forest.min_samples_leaf", "minimum rows per leaf",
                         [](ExperimentConfig& c) -> auto& {
                           return c.params.forest.tree.min_samples_leaf;
                         }));
    k.push_back(size_key("gradient_boosting.n_stages", "boosting stages",
                         [](ExperimentConfig& c) -> auto& { return c.params.boosting.n_stages; }));
    k.push_back(real_key("gradient_boosting.learning_rate", "shrinkage in (0,1]",
                         [](ExperimentConfig& c) -> auto& { return c.params.boosting.learning_rate; }));
    k.push_back(int_key("gradient_boosting.max_depth", "depth of each stage tree, 0 for unlimited",
                        [](ExperimentConfig& c) -> auto& { return c.params.boosting.tree.max_depth; }));
    k.push_back(size_key("gradient_boosting.min_samples_leaf", "minimum rows per leaf",
                         [](ExperimentConfig& c) -> auto& {
                           return c.params.boosting.tree.min_samples_leaf;
                         }));
    k.push_back(size_key("knn.k", "neighbours averaged",
                         [](ExperimentConfig& c) -> auto& { return c.params.knn.k; }));
    add_mlp_keys(k, "mlp", &ModelParams::mlp, false);
    add_mlp_keys(k, "attention_mlp", &ModelParams::attention_mlp, true);
    auto tab = [](ExperimentConfig& c) -> TabNetConfig& { return c.params.tabnet; };
    k.push_back(size_key("tabnet.n_steps", "decision steps",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).n_steps; }));
    k.push_back(real_key("tabnet.gamma", "prior relaxation (>= 1)",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).gamma; }));
    k.push_back(real_key("tabnet.sparsity", "mask entropy penalty",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).sparsity; }));
    k.push_back(size_key("tabnet.step_width", "feature transformer width",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).step_width; }));
    k.push_back(size_key("tabnet.batch_size", "mini-batch size",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).batch_size; }));
    k.push_back(size_key("tabnet.virtual_batch", "ghost batch norm chunk size",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).virtual_batch; }));
    k.push_back(size_key("tabnet.max_epochs", "epoch cap",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).max_epochs; }));
    k.push_back(size_key("tabnet.patience", "early-stopping patience (epochs)",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).patience; }));
    k.push_back(real_key("tabnet.learning_rate", "Adam learning rate",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).learning_rate; }));
    k.push_back(real_key("tabnet.momentum", "running statistics momentum",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).momentum; }));
    k.push_back(real_key("tabnet.validation_fraction", "rows held out for early stopping",
                         [tab](ExperimentConfig& c) -> auto& { return tab(c).validation_fraction; }));
    return k;
  }();
  return table;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
  KeyValueConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorKind::parse, std::string(origin) + ":" + std::to_string(line_no) +
                                   ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::parse, std::string(origin) + ":" + std::to_string(line_no) +
                                 ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty())
      fail(ErrorKind::parse, std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    cfg.set(std::move(key), std::string(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

ExperimentConfig experiment_from_config(const KeyValueConfig& kv,
                                        std::optional<std::uint64_t> seed_override) {
  const auto& table = key_table();
  for (const auto& [key, _] : kv.entries())
    if (std::none_of(table.begin(), table.end(), [&](const KeySpec& s) { return s.key == key; }))
      fail(ErrorKind::validation, "unknown config key '" + key + "'");

  ExperimentConfig cfg;
  if (seed_override)
    cfg.seed = *seed_override;
  else if (auto s = kv.get("experiment.seed"))
    cfg.seed = parse_int<std::uint64_t>("experiment.seed", *s);
  cfg.data.seed = cfg.augmentation.seed = cfg.split.seed = cfg.seed;

  for (const auto& spec : table) {
    if (spec.key == "experiment.seed") continue;
    if (auto v = kv.get(spec.key)) spec.set(cfg, *v);
  }

  validate(cfg.augmentation);
  validate(cfg.params.mlp);
  validate(cfg.params.attention_mlp);
  validate(cfg.params.tabnet);
  if (!(cfg.split.test_fraction > 0.0 && cfg.split.test_fraction < 1.0))
    fail(ErrorKind::validation, "split.test_fraction must lie in (0,1)");
  if (cfg.data.n == 0) fail(ErrorKind::validation, "data.n must be >= 1");
  if (cfg.roster.empty()) fail(ErrorKind::validation, "experiment.roster must not be empty");
  return cfg;
}

std::vector<ConfigKeyDoc> config_reference() {
  const ExperimentConfig defaults;
  std::vector<ConfigKeyDoc> out;
  for (const auto& spec : key_table()) out.push_back({spec.key, spec.get(defaults), spec.description});
  return out;
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : key_table()) out.emplace_back(spec.key, spec.get(cfg));
  return out;
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("QOE_FORGE_SEED");
  if (v == nullptr) return std::nullopt;
  std::uint64_t out = 0;
  const std::string_view s(v);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

}  // namespace qoe
