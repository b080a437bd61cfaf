#include "promptopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "promptopt/errors.hpp"

namespace promptopt {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

long parse_long(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& field, const std::string& v) {
  std::string lower = v;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
  if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& field, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(static_cast<T>(parse_long(field, tok)));
  }
  return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

// One row per serializable field: where it lives and how to move it between
// text and the struct.
struct Field {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PO_INT_FIELD(sec, member, name)                                                      \
  Field {                                                                                    \
    sec, name, [](const RunConfig& c) { return std::to_string(c.member); },                  \
        [](RunConfig& c, const std::string& v) {                                             \
          c.member = static_cast<decltype(c.member)>(parse_long(name, v));                   \
        }                                                                                    \
  }
#define PO_DOUBLE_FIELD(sec, member, name)                                                                  \
  Field {                                                                                                   \
    sec, name, [](const RunConfig& c) { return format_double(c.member); },                                  \
        [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); }                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PO_INT_FIELD("optimizer", optimizer.n_train, "n_train"),
      PO_INT_FIELD("optimizer", optimizer.batch_size, "batch_size"),
      PO_INT_FIELD("optimizer", optimizer.reasons_per_error, "reasons_per_error"),
      PO_INT_FIELD("optimizer", optimizer.beam_width, "beam_width"),
      PO_INT_FIELD("optimizer", optimizer.ucb_epochs, "ucb_epochs"),
      PO_INT_FIELD("optimizer", optimizer.opt_iterations, "opt_iterations"),
      PO_DOUBLE_FIELD("optimizer", optimizer.gamma, "gamma"),
      PO_INT_FIELD("optimizer", optimizer.ucb_pool_size, "ucb_pool_size"),
      PO_INT_FIELD("optimizer", optimizer.candidate_size, "candidate_size"),
      Field{"optimizer", "k_values",
            [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.optimizer.k_values, ",")); },
            [](RunConfig& c, const std::string& v) { c.optimizer.k_values = parse_list<int>("k_values", v); }},
      Field{"optimizer", "seeds",
            [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.optimizer.seeds, ",")); },
            [](RunConfig& c, const std::string& v) { c.optimizer.seeds = parse_list<std::int64_t>("seeds", v); }},
      Field{"optimizer", "include_parents",
            [](const RunConfig& c) { return std::string(c.optimizer.include_parents ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.optimizer.include_parents = parse_bool("include_parents", v); }},
      Field{"optimizer", "reward_mode",
            [](const RunConfig& c) { return std::string(to_string(c.optimizer.reward_mode)); },
            [](RunConfig& c, const std::string& v) {
              if (v == "accumulate") {
                c.optimizer.reward_mode = RewardMode::accumulate;
              } else if (v == "mean") {
                c.optimizer.reward_mode = RewardMode::mean;
              } else {
                throw ConfigError("reward_mode", "expected accumulate or mean");
              }
            }},
      PO_INT_FIELD("optimizer", optimizer.concurrency, "concurrency"),
      PO_DOUBLE_FIELD("optimizer", optimizer.ranking_temperature, "ranking_temperature"),
      PO_DOUBLE_FIELD("optimizer", optimizer.generation_temperature, "generation_temperature"),
      Field{"optimizer", "json_mode",
            [](const RunConfig& c) { return std::string(c.optimizer.json_mode ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.optimizer.json_mode = parse_bool("json_mode", v); }},

      PO_DOUBLE_FIELD("mock", mock.prior_low, "prior_low"),
      PO_DOUBLE_FIELD("mock", mock.prior_high, "prior_high"),
      Field{"mock", "initial_quality",
            [](const RunConfig& c) {
              return c.mock.initial_quality ? format_double(*c.mock.initial_quality) : std::string("none");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "none" || v.empty()) {
                c.mock.initial_quality.reset();
              } else {
                c.mock.initial_quality = parse_double("initial_quality", v);
              }
            }},
      PO_DOUBLE_FIELD("mock", mock.refine_gain_mean, "refine_gain_mean"),
      PO_DOUBLE_FIELD("mock", mock.refine_gain_sd, "refine_gain_sd"),
      PO_DOUBLE_FIELD("mock", mock.augment_noise, "augment_noise"),
      PO_DOUBLE_FIELD("mock", mock.hallucination_rate, "hallucination_rate"),

      Field{"remote", "api_base", [](const RunConfig& c) { return c.remote.api_base; },
            [](RunConfig& c, const std::string& v) { c.remote.api_base = v; }},
      Field{"remote", "model", [](const RunConfig& c) { return c.remote.model; },
            [](RunConfig& c, const std::string& v) { c.remote.model = v; }},
      PO_INT_FIELD("remote", remote.max_attempts, "max_attempts"),
      PO_INT_FIELD("remote", remote.backoff_base_ms, "backoff_base_ms"),
      PO_INT_FIELD("remote", remote.requests_per_minute, "requests_per_minute"),
      PO_INT_FIELD("remote", remote.call_budget, "call_budget"),
      PO_INT_FIELD("remote", remote.timeout_s, "timeout_s"),
      PO_INT_FIELD("remote", remote.max_output_tokens, "max_output_tokens"),
  };
  return table;
}

#undef PO_INT_FIELD
#undef PO_DOUBLE_FIELD

std::string env_name(std::string_view field) {
  std::string out = "PO_";
  for (char c : field) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::string_view to_string(RewardMode mode) noexcept {
  return mode == RewardMode::mean ? "mean" : "accumulate";
}

OptimizerConfig validate_config(const OptimizerConfig& cfg) {
  auto require = [](bool ok, const char* field, const char* constraint) {
    if (!ok) throw ConfigError(field, constraint);
  };
  require(cfg.n_train >= 1, "n_train", "n_train >= 1");
  require(cfg.batch_size >= 1, "batch_size", "batch_size >= 1");
  require(cfg.batch_size <= cfg.n_train, "batch_size", "batch_size <= n_train");
  require(cfg.reasons_per_error >= 1, "reasons_per_error", "reasons_per_error >= 1");
  require(cfg.beam_width >= 1, "beam_width", "beam_width ≥ 1");
  require(cfg.ucb_epochs >= 1, "ucb_epochs", "ucb_epochs >= 1");
  require(cfg.opt_iterations >= 0, "opt_iterations", "opt_iterations >= 0");
  require(cfg.gamma > 0.0, "gamma", "gamma > 0");
  require(cfg.ucb_pool_size >= cfg.beam_width, "ucb_pool_size", "ucb_pool_size >= beam_width");
  require(cfg.candidate_size >= 2, "candidate_size", "candidate_size >= 2");
  require(!cfg.k_values.empty(), "k_values", "at least one cutoff");
  for (int k : cfg.k_values) require(k >= 1, "k_values", "every cutoff >= 1");
  require(!cfg.seeds.empty(), "seeds", "at least one seed");
  require(cfg.concurrency >= 1, "concurrency", "concurrency >= 1");
  require(cfg.ranking_temperature >= 0.0, "ranking_temperature", "ranking_temperature >= 0");
  require(cfg.generation_temperature >= 0.0, "generation_temperature", "generation_temperature >= 0");
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  validate_config(cfg.optimizer);
  const auto& m = cfg.mock;
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(m.prior_low) || !unit(m.prior_high) || m.prior_low > m.prior_high) {
    throw ConfigError("prior_low", "0 <= prior_low <= prior_high <= 1");
  }
  if (m.initial_quality && !unit(*m.initial_quality)) throw ConfigError("initial_quality", "in [0, 1]");
  if (!unit(m.hallucination_rate)) throw ConfigError("hallucination_rate", "in [0, 1]");
  if (m.refine_gain_sd < 0 || m.augment_noise < 0) throw ConfigError("refine_gain_sd", "noise scales >= 0");
  const auto& r = cfg.remote;
  if (r.max_attempts < 1) throw ConfigError("max_attempts", "max_attempts >= 1");
  if (r.requests_per_minute < 1) throw ConfigError("requests_per_minute", "requests_per_minute >= 1");
  if (r.call_budget < 0) throw ConfigError("call_budget", "call_budget >= 0");
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key outside a section");
    }
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
        return section == f.section && key == f.name;
      });
      if (it == table.end()) throw ConfigError(section + "." + key, "unknown key");
      it->set(cfg, trim(value.data()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  std::string current;
  for (const auto& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out += "\n";
      current = f.section;
      out += fmt::format("[{}]\n", current);
    }
    out += fmt::format("{} = {}\n", f.name, f.get(cfg));
  }
  return out;
}

void apply_env_overrides(RunConfig& cfg, const EnvLookup& lookup) {
  for (const auto& f : fields()) {
    if (auto v = lookup(env_name(f.name))) f.set(cfg, trim(*v));
  }
  if (auto key = lookup("PO_API_KEY")) cfg.remote.api_key = trim(*key);
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

}  // namespace promptopt
