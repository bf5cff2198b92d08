#include "dprune/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dprune/error.hpp"

namespace dprune::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got \"" + v + "\"");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError(key + ": expected a number, got \"" + v + "\"");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got \"" + v + "\"");
}

template <class T, class Parse>
std::vector<T> to_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<T>(parse(key, item)));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class M>
Setter size_field(M RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.*field = static_cast<M>(to_u64(k, v));
  };
}

Setter double_field(double RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_double(k, v); };
}

Setter string_field(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

Setter path_field(std::filesystem::path RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", size_field(&RunConfig::seed)},
      {"out", path_field(&RunConfig::out)},
      {"jobs", size_field(&RunConfig::jobs)},
      {"dataset", string_field(&RunConfig::dataset)},
      {"data_dir", path_field(&RunConfig::data_dir)},
      {"blobs_classes", size_field(&RunConfig::blobs_classes)},
      {"blobs_per_class", size_field(&RunConfig::blobs_per_class)},
      {"blobs_dim", size_field(&RunConfig::blobs_dim)},
      {"blobs_spread", double_field(&RunConfig::blobs_spread)},
      {"hidden",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.hidden = to_list<std::size_t>(k, v, to_u64);
       }},
      {"lr", double_field(&RunConfig::lr)},
      {"lr_decay", double_field(&RunConfig::lr_decay)},
      {"lr_milestones",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lr_milestones = to_list<double>(k, v, to_double);
       }},
      {"batch_size", size_field(&RunConfig::batch_size)},
      {"epochs", size_field(&RunConfig::epochs)},
      {"checkpoint", path_field(&RunConfig::checkpoint)},
      {"sparsity",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sparsity = to_list<double>(k, v, to_double);
       }},
      {"variant", [](RunConfig& c, const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
      {"constraint",
       [](RunConfig& c, const std::string&, const std::string& v) { c.constraint = parse_constraint(v); }},
      {"prune_steps", size_field(&RunConfig::prune_steps)},
      {"retrain_batches", size_field(&RunConfig::retrain_batches)},
      {"finetune_epochs", size_field(&RunConfig::finetune_epochs)},
      {"xi1", double_field(&RunConfig::xi1)},
      {"xi2", double_field(&RunConfig::xi2)},
      {"trials", size_field(&RunConfig::trials)},
      {"shared_sgd_stream",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.shared_sgd_stream = to_bool(k, v); }},
      {"ist_m", size_field(&RunConfig::ist_m)},
      {"ist_n", size_field(&RunConfig::ist_n)},
      {"ist_k", size_field(&RunConfig::ist_k)},
      {"ist_sigma", double_field(&RunConfig::ist_sigma)},
      {"ist_lambda", double_field(&RunConfig::ist_lambda)},
      {"ist_step", double_field(&RunConfig::ist_step)},
      {"ist_iters", size_field(&RunConfig::ist_iters)},
      {"ist_rule", string_field(&RunConfig::ist_rule)},
      {"ist_mode", string_field(&RunConfig::ist_mode)},
      {"graph", path_field(&RunConfig::graph)},
      {"mwvc_mutation", double_field(&RunConfig::mwvc_mutation)},
      {"mwvc_memory", size_field(&RunConfig::mwvc_memory)},
      {"mwvc_rounds", size_field(&RunConfig::mwvc_rounds)},
      {"mwvc_penalty", double_field(&RunConfig::mwvc_penalty)},
      {"mwvc_restarts", size_field(&RunConfig::mwvc_restarts)},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key \"" + key + "\"");
  it->second(*this, key, trim(value));
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  if (dataset != "mnist" && dataset != "blobs") throw ConfigError("dataset must be mnist or blobs");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if (trials == 0) throw ConfigError("trials must be at least 1");
  if (sparsity.empty()) throw ConfigError("at least one target sparsity is required");
  if (hidden.empty() || std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
    throw ConfigError("hidden layer sizes must be positive");
  }
  if (ist_rule != "proximal" && ist_rule != "literal") throw ConfigError("ist_rule must be proximal or literal");
  if (ist_mode != "deterministic" && ist_mode != "stochastic") {
    throw ConfigError("ist_mode must be deterministic or stochastic");
  }
  train_config().validate();
  for (double s : sparsity) prune_config(s).validate();
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? out / "baseline.dprn" : checkpoint;
}

std::filesystem::path RunConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("DPRUNE_DATA_DIR"); env && *env) return env;
  return {};
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lr.initial = lr;
  t.lr.decay = lr_decay;
  t.lr.milestones = lr_milestones;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.seed = seed;
  return t;
}

PruneConfig RunConfig::prune_config(double target_sparsity) const {
  PruneConfig p;
  p.schedule.final_sparsity = target_sparsity;
  p.schedule.prune_steps = prune_steps;
  p.schedule.retrain_batches = retrain_batches;
  p.schedule.constraint = constraint;
  p.schedule.finetune_epochs = finetune_epochs;
  p.drop.xi_away = xi1;
  p.drop.xi_back = xi2;
  p.drop.base_seed = seed;
  p.train = train_config();
  p.variant = variant;
  p.shared_sgd_stream = shared_sgd_stream;
  return p;
}

void load_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  load_config(in, cfg);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Traditional:
      return "tp";
    case Variant::DropAway:
      return "dap";
    case Variant::DropPruning:
      return "dp";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "tp") return Variant::Traditional;
  if (s == "dap") return Variant::DropAway;
  if (s == "dp") return Variant::DropPruning;
  throw ConfigError("variant must be tp, dap or dp");
}

std::string constraint_name(Constraint c) { return c == Constraint::LSC ? "lsc" : "gsc"; }

Constraint parse_constraint(const std::string& s) {
  if (s == "lsc") return Constraint::LSC;
  if (s == "gsc") return Constraint::GSC;
  throw ConfigError("constraint must be lsc or gsc");
}

}  // namespace dprune::cli
