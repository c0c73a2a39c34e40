#include "pgcr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pgcr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("invalid value '" + value + "' for " + key + ": expected " + expected);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T v{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') bad_value(key, value, "a non-negative integer");
  return parse_integer<std::size_t>(key, value);
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) bad_value(key, value, "a number");
  return v;
}

std::vector<std::string> parse_names(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, e] : table)
    if (name == value) return e;
  std::vector<std::string> names;
  for (const auto& entry : table) names.push_back(entry.first);
  throw ConfigError("unknown " + key + " '" + value + "'; valid values: " + join(names));
}

const std::vector<std::pair<std::string, EnvKind>> kEnvKinds = {{"toy-linear", EnvKind::kToyLinear},
                                                                {"toy-bernoulli", EnvKind::kToyBernoulli},
                                                                {"toy-mixed", EnvKind::kToyMixed},
                                                                {"mdpcr", EnvKind::kMdpCr},
                                                                {"dataset", EnvKind::kDataset}};

const std::vector<std::pair<std::string, AlgoKind>> kAlgoKinds = {
    {"pgcr", AlgoKind::kPgcr},     {"pg", AlgoKind::kPg},         {"egreedy", AlgoKind::kEGreedy},
    {"linucb", AlgoKind::kLinUcb}, {"glmucb", AlgoKind::kGlmUcb}, {"ts", AlgoKind::kTs}};

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto count = [&t](const std::string& key, auto field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_count(k, v); };
    };
    auto real = [&t](const std::string& key, auto field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_real(k, v); };
    };
    auto maybe_count = [&t](const std::string& key, auto field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        if (v == "auto") field(c).reset();
        else field(c) = parse_count(k, v);
      };
    };
    auto text = [&t](const std::string& key, auto field) {
      t[key] = [field](RunConfig& c, const std::string&, const std::string& v) { field(c) = v; };
    };

    t["env.kind"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.env.kind = parse_enum(k, v, kEnvKinds);
    };
    maybe_count("env.dim", [](RunConfig& c) -> auto& { return c.env.dim; });
    maybe_count("env.candidates", [](RunConfig& c) -> auto& { return c.env.candidates; });
    real("env.noise_r", [](RunConfig& c) -> auto& { return c.env.noise_r; });
    real("env.noise_beta", [](RunConfig& c) -> auto& { return c.env.noise_beta; });
    count("env.users", [](RunConfig& c) -> auto& { return c.env.mdpcr.users; });
    count("env.catalog", [](RunConfig& c) -> auto& { return c.env.mdpcr.catalog; });
    count("env.memory", [](RunConfig& c) -> auto& { return c.env.mdpcr.memory; });
    count("env.session_length", [](RunConfig& c) -> auto& { return c.env.mdpcr.session_length; });
    real("env.taste_scale", [](RunConfig& c) -> auto& { return c.env.mdpcr.taste_scale; });
    real("env.shared_taste", [](RunConfig& c) -> auto& { return c.env.mdpcr.shared_taste; });
    real("env.interaction", [](RunConfig& c) -> auto& { return c.env.mdpcr.interaction; });
    text("env.path", [](RunConfig& c) -> auto& { return c.env.path; });
    text("env.user_column", [](RunConfig& c) -> auto& { return c.env.schema.user_column; });
    text("env.label_column", [](RunConfig& c) -> auto& { return c.env.schema.label_column; });
    t["env.numeric_columns"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.env.schema.numeric_columns = parse_names(v);
    };
    t["env.categorical_columns"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.env.schema.categorical_columns = parse_names(v);
    };
    count("env.hash_budget", [](RunConfig& c) -> auto& { return c.env.schema.hash_budget; });

    t["algorithm.kind"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.algorithm.kind = parse_enum(k, v, kAlgoKinds);
    };
    count("algorithm.resamples", [](RunConfig& c) -> auto& { return c.algorithm.resamples; });
    real("algorithm.greed_rate", [](RunConfig& c) -> auto& { return c.algorithm.greed_rate; });
    real("algorithm.greed_cap", [](RunConfig& c) -> auto& { return c.algorithm.greed_cap; });
    real("algorithm.dropout", [](RunConfig& c) -> auto& { return c.algorithm.dropout; });
    real("algorithm.actor_lr", [](RunConfig& c) -> auto& { return c.algorithm.actor_lr; });
    real("algorithm.critic_lr", [](RunConfig& c) -> auto& { return c.algorithm.critic_lr; });
    real("algorithm.epsilon", [](RunConfig& c) -> auto& { return c.algorithm.epsilon; });
    t["algorithm.hidden"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") {
        c.algorithm.hidden.reset();
        return;
      }
      std::vector<std::size_t> sizes;
      for (const auto& item : parse_names(v)) sizes.push_back(parse_count(k, item));
      if (sizes.empty()) bad_value(k, v, "a comma-separated list of layer widths");
      c.algorithm.hidden = sizes;
    };
    t["algorithm.gamma"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") c.algorithm.gamma.reset();
      else c.algorithm.gamma = parse_real(k, v);
    };
    maybe_count("algorithm.batch_size", [](RunConfig& c) -> auto& { return c.algorithm.batch_size; });
    count("algorithm.warmup", [](RunConfig& c) -> auto& { return c.algorithm.warmup; });
    maybe_count("algorithm.update_every", [](RunConfig& c) -> auto& { return c.algorithm.update_every; });
    count("algorithm.capacity", [](RunConfig& c) -> auto& { return c.algorithm.capacity; });
    real("algorithm.bucket_precision", [](RunConfig& c) -> auto& { return c.algorithm.bucket_precision; });
    real("algorithm.lambda", [](RunConfig& c) -> auto& { return c.algorithm.lambda; });
    real("algorithm.alpha", [](RunConfig& c) -> auto& { return c.algorithm.alpha; });
    real("algorithm.kappa", [](RunConfig& c) -> auto& { return c.algorithm.kappa; });
    real("algorithm.ts_scale", [](RunConfig& c) -> auto& { return c.algorithm.ts_scale; });
    t["algorithm.ts_model"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") c.algorithm.ts_model.reset();
      else c.algorithm.ts_model = parse_enum(k, v, std::vector<std::pair<std::string, TsModel>>{
                                                      {"linear", TsModel::kLinear}, {"logistic", TsModel::kLogistic}});
    };
    real("algorithm.refit_growth", [](RunConfig& c) -> auto& { return c.algorithm.refit_growth; });

    t["run.horizon"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.run.horizon = parse_integer<std::int64_t>(k, v);
    };
    count("run.replications", [](RunConfig& c) -> auto& { return c.run.replications; });
    t["run.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.run.seed = parse_integer<std::uint64_t>(k, v);
    };
    text("run.output", [](RunConfig& c) -> auto& { return c.run.output; });
    count("run.threads", [](RunConfig& c) -> auto& { return c.run.threads; });
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& entry : setters()) keys.push_back(entry.first);
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown key '" + key + "'; valid keys: " + join(config_keys()));
  it->second(config, key, value);
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  std::vector<std::string> unknown;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "env" && section != "algorithm" && section != "run")
        throw ConfigError(where + "unknown section '" + section + "'; valid sections: env, algorithm, run");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key before '='");
    if (key.find('.') == std::string::npos) {
      if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of a section");
      key = section + "." + key;
    }
    if (!setters().count(key)) {
      unknown.push_back(key);
      continue;
    }
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!unknown.empty())
    throw ConfigError("unknown keys: " + join(unknown) + "; valid keys: " + join(config_keys()));
  validate(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  require(c.run.horizon >= 1, "run.horizon must be at least 1");
  require(c.run.replications >= 1, "run.replications must be at least 1");
  require(!c.run.output.empty(), "run.output must not be empty");
  require(!c.env.dim || *c.env.dim >= 1, "env.dim must be positive");
  require(!c.env.candidates || *c.env.candidates >= 1, "env.candidates must be positive");
  require(c.env.noise_r >= 0.0 && c.env.noise_beta >= 0.0, "env noise scales must be non-negative");
  if (c.env.kind == EnvKind::kMdpCr) {
    const auto& m = c.env.mdpcr;
    require(m.users >= 1 && m.memory >= 1 && m.session_length >= 1, "env.users, env.memory and env.session_length must be positive");
    require(m.catalog >= resolved_candidates(c.env), "env.catalog must be at least env.candidates");
    require(m.shared_taste >= 0.0 && m.shared_taste <= 1.0, "env.shared_taste must be in [0,1]");
  }
  if (c.env.kind == EnvKind::kDataset) {
    require(!c.env.path.empty(), "env.path is required for the dataset environment");
    require(!c.env.schema.user_column.empty() && !c.env.schema.label_column.empty(),
            "env.user_column and env.label_column are required for the dataset environment");
  }
  const auto& a = c.algorithm;
  require(a.resamples >= 1, "algorithm.resamples must be at least 1");
  require(a.greed_rate >= 0.0, "algorithm.greed_rate must be non-negative");
  require(a.greed_cap > 0.0, "algorithm.greed_cap must be positive");
  require(a.dropout >= 0.0 && a.dropout < 1.0, "algorithm.dropout must be in [0,1)");
  require(a.actor_lr > 0.0 && a.critic_lr > 0.0, "learning rates must be positive");
  require(a.epsilon >= 0.0 && a.epsilon <= 1.0, "algorithm.epsilon must be in [0,1]");
  require(!a.hidden || std::none_of(a.hidden->begin(), a.hidden->end(), [](std::size_t w) { return w == 0; }),
          "algorithm.hidden widths must be positive");
  require(!a.gamma || (*a.gamma >= 0.0 && *a.gamma < 1.0), "algorithm.gamma must be in [0,1)");
  require(!a.batch_size || *a.batch_size >= 1, "algorithm.batch_size must be positive");
  require(!a.update_every || *a.update_every >= 1, "algorithm.update_every must be positive");
  require(a.capacity >= 1, "algorithm.capacity must be positive");
  require(a.bucket_precision > 0.0, "algorithm.bucket_precision must be positive");
  require(a.lambda > 0.0, "algorithm.lambda must be positive");
  require(a.alpha >= 0.0 && a.kappa >= 0.0 && a.ts_scale >= 0.0, "exploration weights must be non-negative");
  require(a.refit_growth > 0.0, "algorithm.refit_growth must be positive");
}

std::string to_string(EnvKind kind) {
  for (const auto& [name, k] : kEnvKinds)
    if (k == kind) return name;
  return "unknown";
}

std::string to_string(AlgoKind kind) {
  for (const auto& [name, k] : kAlgoKinds)
    if (k == kind) return name;
  return "unknown";
}

bool is_sequential(EnvKind kind) { return kind == EnvKind::kMdpCr; }

std::size_t resolved_dim(const EnvSpec& env) {
  if (env.dim) return *env.dim;
  return env.kind == EnvKind::kMdpCr ? 20 : 40;
}

std::size_t resolved_candidates(const EnvSpec& env) {
  if (env.candidates) return *env.candidates;
  switch (env.kind) {
    case EnvKind::kToyLinear:
    case EnvKind::kToyBernoulli:
    case EnvKind::kToyMixed: return 5;
    default: return 10;
  }
}

double resolved_gamma(const RunConfig& c) {
  if (c.algorithm.gamma) return *c.algorithm.gamma;
  return is_sequential(c.env.kind) ? 0.9 : 0.0;
}

std::vector<std::size_t> resolved_hidden(const RunConfig& c) {
  if (c.algorithm.hidden) return *c.algorithm.hidden;
  if (c.env.kind == EnvKind::kMdpCr) return {60, 20};
  return {10};
}

std::size_t resolved_batch_size(const RunConfig& c) {
  if (c.algorithm.batch_size) return *c.algorithm.batch_size;
  return c.env.kind == EnvKind::kMdpCr ? 256 : 64;
}

std::size_t resolved_update_every(const RunConfig& c) {
  if (c.algorithm.update_every) return *c.algorithm.update_every;
  return c.env.kind == EnvKind::kMdpCr ? 64 : 1;
}

TsModel resolved_ts_model(const RunConfig& c) {
  if (c.algorithm.ts_model) return *c.algorithm.ts_model;
  return c.env.kind == EnvKind::kToyLinear ? TsModel::kLinear : TsModel::kLogistic;
}

}  // namespace pgcr
