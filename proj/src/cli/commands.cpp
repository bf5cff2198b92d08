#include "dprune/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>

#include "dprune/checkpoint.hpp"
#include "dprune/cli/csv.hpp"
#include "dprune/cli/fetch.hpp"
#include "dprune/error.hpp"
#include "dprune/ist.hpp"
#include "dprune/mwvc.hpp"
#include "dprune/prune.hpp"

namespace dprune::cli {

namespace {

constexpr std::size_t kBlobsHoldoutStride = 5;

std::string tag(double sparsity) { return fmt(sparsity, 4); }

std::string run_label(const RunConfig& cfg, double sparsity) {
  return variant_name(cfg.variant) + "_" + constraint_name(cfg.constraint) + "_s" + tag(sparsity);
}

// Rewrites `path` with the rows of `fresh`, replacing existing rows whose key
// columns match any fresh row. Other rows keep their position.
void merge_into(const std::filesystem::path& path, const CsvTable& fresh, const std::vector<std::size_t>& key_cols) {
  auto key = [&key_cols](const std::vector<std::string>& row) {
    std::vector<std::string> k;
    for (std::size_t c : key_cols) k.push_back(row[c]);
    return k;
  };
  CsvTable merged(fresh.header());
  if (std::filesystem::exists(path)) {
    const CsvTable old = read_csv(path);
    if (old.header() == fresh.header()) {
      std::set<std::vector<std::string>> keys;
      for (const auto& r : fresh.rows()) keys.insert(key(r));
      for (const auto& r : old.rows()) {
        if (!keys.count(key(r))) merged.add(r);
      }
    }
  }
  for (const auto& r : fresh.rows()) merged.add(r);
  merged.write(path);
}

CsvTable step_table(const TrialReport& t, std::size_t prune_steps) {
  CsvTable table({"phase", "step", "scheduled_sparsity", "achieved_sparsity", "support_before", "support_after",
                  "candidates", "pruned_before", "dropped_away", "dropped_back", "learning_rate", "train_loss",
                  "test_error"});
  for (const auto& s : t.steps) {
    table.add({s.step > prune_steps ? "clamp" : "prune", fmt(s.step), fmt(s.scheduled_sparsity), fmt(s.achieved_sparsity),
               fmt(s.support_before), fmt(s.support_after), fmt(s.candidates), fmt(s.pruned_before),
               fmt(s.dropped_away), fmt(s.dropped_back), fmt(s.learning_rate), fmt(s.train_loss), fmt(s.test_error)});
  }
  for (const auto& e : t.finetune) {
    table.add({"finetune", fmt(e.epoch), "", "", "", "", "", "", "", "", fmt(e.learning_rate),
               fmt(e.train_loss), fmt(e.test_error)});
  }
  return table;
}

std::string percent(double fraction) { return fmt(100.0 * fraction, 2); }

}  // namespace

std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg) {
  if (cfg.dataset == "blobs") {
    const Dataset all =
        synth_blobs(cfg.seed, cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_spread);
    return split_every(all, kBlobsHoldoutStride);
  }
  const auto dir = cfg.resolved_data_dir();
  if (dir.empty()) throw ConfigError("no MNIST directory: set data_dir or DPRUNE_DATA_DIR");
  const MnistFiles f = mnist_files(dir);
  return {load_idx(f.train_images, f.train_labels, Split::Train),
          load_idx(f.test_images, f.test_labels, Split::Test)};
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto [train_set, test_set] = load_datasets(cfg);
  std::vector<std::size_t> sizes{train_set.dim()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(train_set.num_classes);

  Rng init(derive_trial_seed(cfg.seed, ~std::uint64_t{0} - 1));
  Network net = Network::mlp(sizes, init);
  err << "training " << net.weight_count() << " weights for " << cfg.epochs << " epochs\n";
  const auto log = train(net, train_set, test_set, cfg.train_config());

  CsvTable table({"epoch", "learning_rate", "train_loss", "test_error"});
  for (const auto& r : log) {
    table.add({fmt(r.epoch), fmt(r.learning_rate), fmt(r.train_loss), fmt(r.test_error)});
  }
  table.write(cfg.out / "train_log.csv");
  const double final_error = log.empty() ? evaluate(net, test_set).test_error : log.back().test_error;
  save_checkpoint(cfg.checkpoint_path(), MaskedModel(std::move(net)));

  out << "baseline test_error " << percent(final_error) << "% checkpoint " << cfg.checkpoint_path().string()
      << "\n";
  return kExitOk;
}

int cmd_prune(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto [train_set, test_set] = load_datasets(cfg);
  const MaskedModel baseline = load_checkpoint(cfg.checkpoint_path());
  if (baseline.net.input_dim() != train_set.dim() || baseline.net.output_dim() != train_set.num_classes) {
    throw ShapeError("checkpoint expects " + std::to_string(baseline.net.input_dim()) + " inputs and " +
                     std::to_string(baseline.net.output_dim()) + " classes; data has " +
                     std::to_string(train_set.dim()) + " and " + std::to_string(train_set.num_classes));
  }
  const Network start = zeroed_copy(baseline);

  CsvTable summary({"sparsity", "variant", "best", "mean", "std", "num_trials", "constraint", "aborted",
                    "weight_cr", "param_cr"});
  CsvTable trials({"sparsity", "variant", "constraint", "trial", "drop_seed", "sgd_seed", "status",
                   "final_test_error", "min_finetune_test_error", "final_sparsity", "weight_cr", "param_cr"});

  for (double s : cfg.sparsity) {
    const PruneConfig pc = cfg.prune_config(s);
    const std::string label = run_label(cfg, s);
    err << "pruning " << label << " with " << cfg.trials << " trials\n";
    auto progress = [&err](const TrialReport& t) {
      err << "  trial " << t.trial_id << (t.aborted ? " aborted: " + t.diagnostic : "") << " error "
          << percent(t.final_test_error) << "%\n";
    };
    const ExperimentSummary sum = run_experiment(start, train_set, test_set, pc, cfg.trials, cfg.jobs, progress);

    double wcr = 0.0, pcr = 0.0;
    const TrialReport* best = nullptr;
    for (const auto& t : sum.trials) {
      trials.add({tag(s), variant_name(cfg.variant), constraint_name(cfg.constraint), fmt(t.trial_id),
                  std::to_string(t.drop_seed), std::to_string(t.sgd_seed), t.aborted ? "aborted" : "ok",
                  fmt(t.final_test_error), fmt(t.min_finetune_test_error), fmt(t.final_sparsity),
                  fmt(t.weight_compression, 4), fmt(t.param_compression, 4)});
      step_table(t, cfg.prune_steps).write(cfg.out / "trials" / (label + "_t" + std::to_string(t.trial_id) + ".csv"));
      if (t.aborted) continue;
      wcr += t.weight_compression;
      pcr += t.param_compression;
      if (!best || t.final_test_error < best->final_test_error) best = &t;
    }
    if (sum.num_trials) {
      wcr /= static_cast<double>(sum.num_trials);
      pcr /= static_cast<double>(sum.num_trials);
    } else {
      wcr = pcr = std::nan("");
    }
    summary.add({tag(s), variant_name(cfg.variant), fmt(sum.best), fmt(sum.mean), fmt(sum.std),
                 fmt(sum.num_trials), constraint_name(cfg.constraint), fmt(sum.aborted), fmt(wcr, 4),
                 fmt(pcr, 4)});

    if (best) {
      save_checkpoint(cfg.out / ("best_" + label + ".dprn"), best->model);
      out << "best " << label << " trial " << best->trial_id << " test_error " << percent(best->final_test_error)
          << "% sparsity " << fmt(best->final_sparsity, 4) << " mean " << percent(sum.mean) << "% std "
          << percent(sum.std) << "% trials " << sum.num_trials << "\n";
    } else {
      out << "best " << label << " none: all " << sum.aborted << " trials aborted\n";
    }
  }
  merge_into(cfg.out / "summary.csv", summary, {0, 1, 6});
  merge_into(cfg.out / "trials.csv", trials, {0, 1, 2, 3});
  return kExitOk;
}

int cmd_ist(const RunConfig& cfg, std::ostream& out) {
  const ist::Instance inst =
      ist::make_instance(cfg.seed, cfg.ist_m, cfg.ist_n, cfg.ist_k, cfg.ist_sigma, cfg.ist_lambda);
  ist::IstConfig ic;
  ic.step = cfg.ist_step;
  ic.max_iters = cfg.ist_iters;
  ic.rule = cfg.ist_rule == "literal" ? ist::ThresholdRule::Literal : ist::ThresholdRule::Proximal;
  ic.stochastic = cfg.ist_mode == "stochastic";
  ic.xi_away = cfg.xi1;
  ic.xi_back = cfg.xi2;
  ic.seed = cfg.seed;
  const auto res = ist::ist_iterate(inst.problem, ic, Eigen::VectorXd::Zero(inst.problem.A.cols()));

  CsvTable table({"iter", "objective", "nnz", "support_f1"});
  for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
    const auto& th = res.trajectory[k];
    table.add({fmt(k), fmt(res.objectives[k], 10), fmt(static_cast<std::size_t>((th.array() != 0.0).count())),
               fmt(ist::support_f1(th, inst.truth))});
  }
  table.write(cfg.out / "ist.csv");

  const auto& fin = res.final_iterate();
  out << "step " << fmt(res.step, 6) << " threshold " << fmt(res.threshold, 6) << "\n";
  out << "final objective " << fmt(res.final_objective(), 8) << " nnz " << (fin.array() != 0.0).count()
      << " support_f1 " << fmt(ist::support_f1(fin, inst.truth), 4) << "\n";
  out << "best objective " << fmt(res.best_objective, 8) << "\n";
  if (cfg.ist_lambda == 0.0) {
    out << "residual " << fmt((inst.problem.A * fin - inst.problem.b).norm(), 10) << "\n";
  }
  return kExitOk;
}

int cmd_mwvc(const RunConfig& cfg, std::ostream& out) {
  if (cfg.graph.empty()) throw ConfigError("mwvc needs a graph file (--graph or graph = ...)");
  const mwvc::WeightedGraph g = mwvc::load_graph(cfg.graph);
  mwvc::MwvcConfig mc;
  mc.mutation = cfg.mwvc_mutation;
  mc.memory_depth = cfg.mwvc_memory;
  mc.max_rounds = cfg.mwvc_rounds;
  mc.penalty = cfg.mwvc_penalty > 0.0 ? cfg.mwvc_penalty : mwvc::default_penalty(g);
  mc.seed = cfg.seed;

  const auto greedy = mwvc::solve_greedy(g, mc);
  const auto mem = mwvc::solve_memory(g, mc, cfg.mwvc_restarts);

  CsvTable table({"round", "best_objective"});
  for (std::size_t r = 0; r < mem.round_objectives.size(); ++r) {
    table.add({fmt(r + 1), fmt(mem.round_objectives[r])});
  }
  table.write(cfg.out / "mwvc.csv");

  out << "greedy cost " << fmt(greedy.objective) << (greedy.feasible ? "" : " (infeasible)") << "\n";
  out << "cover";
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    if (mem.cover[v]) out << ' ' << v;
  }
  out << "\ncost " << fmt(mem.objective) << (mem.feasible ? "" : " (infeasible)") << "\n";
  if (g.vertex_count() <= mwvc::kMaxExactVertices) {
    const auto opt = mwvc::solve_exact(g);
    out << "optimum " << fmt(opt.objective) << " gap " << fmt(mem.objective - opt.objective) << "\n";
  }
  return kExitOk;
}

int cmd_report(const std::filesystem::path& path, std::ostream& out) {
  const CsvTable t = read_csv(path);
  auto col = [&t](const std::string& name) -> std::size_t {
    const auto& h = t.header();
    const auto it = std::find(h.begin(), h.end(), name);
    if (it == h.end()) throw FormatError(FormatError::Kind::BadValue, "summary lacks column " + name);
    return static_cast<std::size_t>(it - h.begin());
  };
  const std::size_t cs = col("sparsity"), cv = col("variant"), cb = col("best"), cm = col("mean"),
                    cd = col("std"), cn = col("num_trials"), cc = col("constraint"), cw = col("weight_cr"),
                    cp = col("param_cr");
  auto pct = [](const std::string& f) { return percent(std::strtod(f.c_str(), nullptr)); };

  out << std::left << std::setw(10) << "sparsity" << std::setw(9) << "variant" << std::setw(12) << "constraint"
      << std::setw(26) << "error % [best, mean, std]" << std::setw(10) << "CR(w)" << std::setw(10) << "CR(p)"
      << "trials\n";
  for (const auto& r : t.rows()) {
    const std::string cell = "[" + pct(r[cb]) + ", " + pct(r[cm]) + ", \xC2\xB1" + pct(r[cd]) + "]";
    out << std::left << std::setw(10) << r[cs] << std::setw(9) << r[cv] << std::setw(12) << r[cc]
        << std::setw(27) << cell << std::setw(10) << r[cw] << std::setw(10) << r[cp] << r[cn] << "\n";
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradual magnitude pruning with drop away and drop back", "dprune"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, sparsity_list, variant, constraint, data_dir, graph, summary_path, mirror, fetch_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials, jobs;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;

  app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "base seed");
  app.add_option("--trials", trials, "independent trials per sparsity");
  app.add_option("--sparsity", sparsity_list, "comma-separated target sparsities");
  app.add_option("--variant", variant, "tp | dap | dp");
  app.add_option("--constraint", constraint, "lsc | gsc");
  app.add_option("--jobs", jobs, "worker threads for trials");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--data-dir", data_dir, "MNIST directory (default $DPRUNE_DATA_DIR)");
  app.add_option("--set", overrides, "extra key=value override, repeatable");

  auto* train_cmd = app.add_subcommand("train", "train the dense baseline");
  auto* prune_cmd = app.add_subcommand("prune", "prune the baseline over several trials");
  auto* ist_cmd = app.add_subcommand("ist", "iterative hard thresholding on a random sparse problem");
  auto* mwvc_cmd = app.add_subcommand("mwvc", "minimum weighted vertex cover game");
  mwvc_cmd->add_option("--graph", graph, "edge-list graph file");
  auto* report_cmd = app.add_subcommand("report", "print a summary table");
  report_cmd->add_option("--input", summary_path, "summary.csv (default <out>/summary.csv)");
  auto* fetch_cmd = app.add_subcommand("fetch", "download MNIST into the data directory");
  fetch_cmd->add_option("--mirror", mirror, "base URL")->default_val(kDefaultMnistMirror);
  fetch_cmd->add_option("--dir", fetch_dir, "target directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  try {
    if (!config_file.empty()) load_config_file(config_file, cfg);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (trials) cfg.set("trials", std::to_string(*trials));
    if (jobs) cfg.set("jobs", std::to_string(*jobs));
    if (out_dir) cfg.set("out", *out_dir);
    if (!sparsity_list.empty()) cfg.set("sparsity", sparsity_list);
    if (!variant.empty()) cfg.set("variant", variant);
    if (!constraint.empty()) cfg.set("constraint", constraint);
    if (!data_dir.empty()) cfg.set("data_dir", data_dir);
    if (!graph.empty()) cfg.set("graph", graph);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(cfg, out, err);
    if (*prune_cmd) return cmd_prune(cfg, out, err);
    if (*ist_cmd) return cmd_ist(cfg, out);
    if (*mwvc_cmd) return cmd_mwvc(cfg, out);
    if (*report_cmd) return cmd_report(summary_path.empty() ? cfg.out / "summary.csv" : std::filesystem::path(summary_path), out);
    if (*fetch_cmd) {
      std::filesystem::path dir = fetch_dir.empty() ? cfg.resolved_data_dir() : std::filesystem::path(fetch_dir);
      if (dir.empty()) dir = "data/mnist";
      for (const auto& p : fetch_mnist(mirror, dir)) out << "wrote " << p.string() << "\n";
      out << "MNIST ready in " << dir.string() << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dprune::cli
