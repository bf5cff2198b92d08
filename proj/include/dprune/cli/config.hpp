#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "dprune/prune.hpp"

namespace dprune::cli {

// Every knob of an experiment. Loaded from a key=value file, then overridden
// by command-line flags. Keys are the field names below; see README.md.
struct RunConfig {
  // general
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  std::size_t jobs = 1;

  // data
  std::string dataset = "mnist";  // mnist | blobs
  std::filesystem::path data_dir;  // empty: $DPRUNE_DATA_DIR
  std::size_t blobs_classes = 2;
  std::size_t blobs_per_class = 500;
  std::size_t blobs_dim = 20;
  double blobs_spread = 0.05;

  // model and baseline training
  std::vector<std::size_t> hidden{300, 100};
  double lr = 0.1;
  double lr_decay = 0.1;
  std::vector<double> lr_milestones{10.0, 15.0};
  std::size_t batch_size = 100;
  std::size_t epochs = 18;

  // pruning
  std::filesystem::path checkpoint;  // empty: <out>/baseline.dprn
  std::vector<double> sparsity{0.9};
  Variant variant = Variant::DropPruning;
  Constraint constraint = Constraint::GSC;
  std::size_t prune_steps = 20;
  std::size_t retrain_batches = 300;
  std::size_t finetune_epochs = 9;
  double xi1 = 0.9;
  double xi2 = 0.08;
  std::size_t trials = 10;
  bool shared_sgd_stream = false;

  // IST lab
  std::size_t ist_m = 40;
  std::size_t ist_n = 100;
  std::size_t ist_k = 5;
  double ist_sigma = 0.01;
  double ist_lambda = 0.05;
  double ist_step = 0.0;  // 0: 1/||A^T A||
  std::size_t ist_iters = 300;
  std::string ist_rule = "proximal";  // proximal | literal
  std::string ist_mode = "deterministic";  // deterministic | stochastic

  // MWVC lab
  std::filesystem::path graph;
  double mwvc_mutation = 0.5;
  std::size_t mwvc_memory = 8;
  std::size_t mwvc_rounds = 50;
  double mwvc_penalty = 0.0;  // 0: max weight + 1
  std::size_t mwvc_restarts = 1;

  // Sets one key from its textual value. Throws ConfigError on unknown keys
  // or unparsable values.
  void set(const std::string& key, const std::string& value);
  // Throws ConfigError on violated invariants (e.g. xi2 >= xi1).
  void validate() const;

  std::filesystem::path checkpoint_path() const;
  std::filesystem::path resolved_data_dir() const;
  TrainConfig train_config() const;
  PruneConfig prune_config(double target_sparsity) const;

  static const std::vector<std::string>& keys();
};

// Parses "key = value" lines; '#' starts a comment; blank lines ignored.
void load_config(std::istream& in, RunConfig& cfg);
void load_config_file(const std::filesystem::path& path, RunConfig& cfg);

std::string variant_name(Variant v);  // tp | dap | dp
Variant parse_variant(const std::string& s);
std::string constraint_name(Constraint c);  // lsc | gsc
Constraint parse_constraint(const std::string& s);

}  // namespace dprune::cli
