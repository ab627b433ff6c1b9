#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "galaxy/engine.hpp"
#include "galaxy/io.hpp"
#include "galaxy/pool_sim.hpp"
#include "galaxy/strategies.hpp"
#include "galaxy/verify.hpp"

namespace galaxy::cli {

enum ExitCode : int {
  kOk = 0,
  kBoundViolation = 1,
  kInputError = 2,
  kPoolExhausted = 3,
  kMissingOracle = 4,
};

// Shortest round-trip decimal form, so output bytes depend only on the value.
inline std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct SelectArgs {
  std::string scores, scores_csv, labels, strategy = "galaxy", out, oracle;
  std::size_t batch = 0;
  std::uint64_t seed = 0;
};

inline int cmd_select(const SelectArgs& a, std::ostream& err) {
  if (a.batch < 1) throw input_error("--batch must be at least 1");
  if (a.scores.empty() == a.scores_csv.empty()) throw input_error("give exactly one of --scores and --scores-csv");
  const Strategy strategy = strategy_from_string(a.strategy);
  if (strategy == Strategy::galaxy && a.oracle.empty()) {
    err << "galaxy selects sequentially and needs --oracle to answer its queries\n";
    return kMissingOracle;
  }
  const ScoreMatrix s = a.scores.empty() ? read_scores_csv(a.scores_csv) : read_gxsm(a.scores);
  LabeledSet labeled = a.labels.empty() ? LabeledSet(s.rows()) : read_labels_csv(a.labels, s.rows(), s.classes());
  if (labeled.unlabeled_count() == 0) {
    err << "no unlabeled examples remain\n";
    return kPoolExhausted;
  }
  spdlog::info("select: {} over {}x{} scores, {} labeled, batch {}", a.strategy, s.rows(), s.classes(),
               labeled.size(), a.batch);
  Rng rng(a.seed);
  std::string text;
  switch (strategy) {
    case Strategy::galaxy: {
      const auto oracle = read_oracle_csv(a.oracle, s.rows(), s.classes());
      const auto r = galaxy_select_batch(s, std::move(labeled), oracle, a.batch, rng);
      text = format_batch_csv(r.batch, r.labeled);
      break;
    }
    case Strategy::confidence: text = format_index_csv(confidence_sampling_batch(s, labeled, a.batch)); break;
    case Strategy::most_likely_positive:
      text = format_index_csv(most_likely_positive_batch(s, labeled, a.batch, default_id_classes(s.classes())));
      break;
    case Strategy::random: text = format_index_csv(random_batch(labeled, s.rows(), a.batch, rng)); break;
  }
  detail::spill(a.out, text);
  return kOk;
}

// Simulation config: a flat JSON object.
//   preset            name from the pool presets, or
//   n, k, epsilon     explicit pool shape
//   separation, separation_per_label, gain, gain_per_label, skew,
//   label_noise, fit, reweight                   synthetic model quality
//   strategies        list of strategy names (default: all four)
//   batch_size, rounds, seed, repeats
struct SimConfig {
  std::optional<std::string> preset;
  std::size_t n = 0, k = 2;
  double epsilon = 1.0;
  ModelQuality quality;
  std::vector<Strategy> strategies{Strategy::galaxy, Strategy::confidence, Strategy::most_likely_positive,
                                   Strategy::random};
  std::size_t batch_size = 0, rounds = 0;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
};

inline SimConfig parse_sim_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw input_error("config must be a JSON object");
  static const std::vector<std::string> known{"preset", "n", "k", "epsilon", "separation", "separation_per_label",
                                              "gain", "gain_per_label", "skew", "label_noise", "fit", "reweight",
                                              "strategies", "batch_size", "rounds", "seed", "repeats"};
  for (const auto& [key, v] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw input_error("unknown config key '" + key + "'");
  SimConfig c;
  try {
    if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
    if (!c.preset) {
      for (auto key : {"n", "k", "epsilon"})
        if (!j.contains(key)) throw input_error(std::string("config needs 'preset' or '") + key + "'");
      c.n = j["n"].get<std::size_t>();
      c.k = j["k"].get<std::size_t>();
      c.epsilon = j["epsilon"].get<double>();
    }
    auto& q = c.quality;
    q.separation = j.value("separation", q.separation);
    q.separation_per_label = j.value("separation_per_label", q.separation_per_label);
    q.gain = j.value("gain", q.gain);
    q.gain_per_label = j.value("gain_per_label", q.gain_per_label);
    q.skew = j.value("skew", q.skew);
    q.label_noise = j.value("label_noise", q.label_noise);
    q.fit = j.value("fit", q.fit);
    q.reweight = j.value("reweight", q.reweight);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j["strategies"]) c.strategies.push_back(strategy_from_string(s.get<std::string>()));
      if (c.strategies.empty()) throw input_error("'strategies' is empty");
    }
    for (auto key : {"batch_size", "rounds"})
      if (!j.contains(key)) throw input_error(std::string("config needs '") + key + "'");
    c.batch_size = j["batch_size"].get<std::size_t>();
    c.rounds = j["rounds"].get<std::size_t>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.repeats = j.value("repeats", std::size_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("bad config value: ") + e.what());
  }
  if (!(c.quality.skew >= 0.0 && c.quality.skew < 0.5)) throw input_error("skew must lie in [0, 0.5)");
  if (!(c.quality.label_noise >= 0.0 && c.quality.label_noise <= 1.0)) throw input_error("label_noise must lie in [0, 1]");
  if (c.batch_size < 1 || c.rounds < 1 || c.repeats < 1) throw input_error("batch_size, rounds and repeats must be >= 1");
  return c;
}

inline ImbalancedPool make_sim_pool(const SimConfig& c, std::uint64_t seed) {
  if (c.preset) return make_preset_pool(*c.preset, c.quality, seed);
  return make_imbalanced_pool(c.n, c.k, c.epsilon, c.quality, seed);
}

struct Moments {
  double sum = 0.0, sum2 = 0.0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
  }
  double mean(std::size_t n) const { return sum / static_cast<double>(n); }
  // Standard error of the mean; empty for a single repeat.
  std::string se(std::size_t n) const {
    if (n < 2) return {};
    const double m = mean(n);
    const double var = std::max(0.0, (sum2 - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return num(std::sqrt(var / static_cast<double>(n)));
  }
};

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const SimConfig c = parse_sim_config(detail::slurp(config_path));
  {
    // Validate the pool and the budget before any work.
    const auto probe = make_sim_pool(c, 0);
    if (c.rounds * c.batch_size > probe.pool.n)
      throw input_error("budget T*B = " + std::to_string(c.rounds * c.batch_size) + " exceeds pool size " +
                        std::to_string(probe.pool.n));
  }
  std::filesystem::create_directories(out_dir);

  struct Acc {
    Moments labels, acc, id, frac;
  };
  std::vector<std::vector<Acc>> acc(c.strategies.size(), std::vector<Acc>(c.rounds));
  for (std::size_t rep = 0; rep < c.repeats; ++rep) {
    const std::uint64_t rep_seed = substream(c.seed, rep)();
    auto pool = make_sim_pool(c, rep_seed);
    const auto oracle = pool.pool.oracle();
    for (std::size_t si = 0; si < c.strategies.size(); ++si) {
      spdlog::info("simulate: repeat {} strategy {}", rep, to_string(c.strategies[si]));
      const auto r = run_active_learning(pool.provider, oracle,
                                         RunConfig{c.strategies[si], c.rounds, c.batch_size, rep_seed, {}},
                                         pool.pool.true_labels);
      for (const auto& m : r.metrics) {
        auto& a = acc[si][m.round];
        a.labels.add(static_cast<double>(m.labels_used));
        a.acc.add(m.acc_bal);
        a.id.add(static_cast<double>(m.id_labels));
        a.frac.add(static_cast<double>(m.id_labels) / static_cast<double>(m.labels_used));
      }
    }
  }

  const std::size_t n = c.repeats;
  std::string summary =
      "strategy,round,labels_used,acc_bal_mean,acc_bal_se,id_labels_mean,id_labels_se,id_fraction_mean,id_fraction_se\n";
  for (std::size_t si = 0; si < c.strategies.size(); ++si) {
    const std::string name(to_string(c.strategies[si]));
    std::string csv = "round,labels_used,acc_bal,id_labels,strategy\n";
    for (std::size_t t = 0; t < c.rounds; ++t) {
      const auto& a = acc[si][t];
      csv += std::to_string(t) + ',' + num(a.labels.mean(n)) + ',' + num(a.acc.mean(n)) + ',' + num(a.id.mean(n)) +
             ',' + name + '\n';
      summary += name + ',' + std::to_string(t) + ',' + num(a.labels.mean(n)) + ',' + num(a.acc.mean(n)) + ',' +
                 a.acc.se(n) + ',' + num(a.id.mean(n)) + ',' + a.id.se(n) + ',' + num(a.frac.mean(n)) + ',' +
                 a.frac.se(n) + '\n';
    }
    detail::spill(std::filesystem::path(out_dir) / (name + ".csv"), csv);
  }
  detail::spill(std::filesystem::path(out_dir) / "summary.csv", summary);
  return kOk;
}

inline std::string format_verify_csv(const VerifyReport& r) {
  std::string out = "suite,z,n_prime,b_prime,delta,estimate,se,bound,pass\n";
  auto opt = [](const auto& o) { return o ? num(static_cast<double>(*o)) : std::string(); };
  for (const auto& c : r.cells)
    out += r.suite + ',' + opt(c.z) + ',' + opt(c.n_prime) + ',' + opt(c.b_prime) + ',' + opt(c.delta) + ',' +
           num(c.estimate) + ',' + opt(c.se) + ',' + num(c.bound) + ',' + (c.pass ? "1" : "0") + '\n';
  return out;
}

inline int cmd_verify(const std::string& suite, std::uint64_t trials, std::uint64_t seed, const std::string& csv,
                      std::ostream& out) {
  const auto r = run_verify_suite(suite, trials, seed);
  for (const auto& c : r.cells) {
    out << (c.pass ? "PASS " : "FAIL ") << r.suite << ' ' << c.describe() << " estimate=" << num(c.estimate);
    if (c.se) out << " se=" << num(*c.se);
    out << " bound=" << num(c.bound) << '\n';
  }
  if (!csv.empty()) detail::spill(csv, format_verify_csv(r));
  if (!r.pass()) {
    for (const auto& c : r.cells)
      if (!c.pass) out << "bound violated in cell " << c.describe() << '\n';
    return kBoundViolation;
  }
  return kOk;
}

inline void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("GALAXY_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"GALAXY active learning: batch selection, simulation, theory checks"};
  app.require_subcommand(1);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Select one batch of queries from a score file");
  select->add_option("--scores", sel.scores, "GXSM score file");
  select->add_option("--scores-csv", sel.scores_csv, "Score CSV (one row of K probabilities per example)");
  select->add_option("--labels", sel.labels, "Label CSV (index,label) of already labeled examples");
  select->add_option("--batch", sel.batch, "Batch size B")->required();
  select->add_option("--strategy", sel.strategy, "galaxy|confidence|mlp|random");
  select->add_option("--seed", sel.seed, "RNG seed");
  select->add_option("--out", sel.out, "Output CSV")->required();
  select->add_option("--oracle", sel.oracle, "Ground-truth label CSV consulted per galaxy query");

  std::string config, out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run simulated active-learning experiments");
  simulate->add_option("--config", config, "JSON config")->required();
  simulate->add_option("--out-dir", out_dir, "Directory for metric CSVs")->required();

  std::string suite, csv;
  std::uint64_t trials = 100000, vseed = 0;
  auto* verify = app.add_subcommand("verify", "Monte-Carlo checks of the balancedness and noise bounds");
  verify->add_option("--suite", suite, "thm51|cor52|prop53|thm54")->required();
  verify->add_option("--trials", trials, "Trials per grid cell");
  verify->add_option("--seed", vseed, "RNG seed");
  verify->add_option("--csv", csv, "Also write the grid as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*select) return cmd_select(sel, err);
    if (*simulate) return cmd_simulate(config, out_dir);
    if (*verify) return cmd_verify(suite, trials, vseed, csv, out);
  } catch (const pool_exhausted& e) {
    err << e.what() << '\n';
    return kPoolExhausted;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace galaxy::cli
