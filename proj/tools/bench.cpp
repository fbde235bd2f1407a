// bench: streaming regression tables and the synthetic boosting experiments.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/bench.hpp"
#include "oboost/errors.hpp"
#include "oboost/scenarios.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw oboost::ConfigError(fmt::format("not an integer list: '{}'", s));
    }
  }
  if (out.empty()) throw oboost::ConfigError("empty integer list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online boosting benchmarks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "normalized-loss table on a CSV dataset");
  oboost::bench::ExperimentConfig cfg;
  std::string learners = "stump", ns = "2,3,4,5", out = "markdown", target;
  run->add_option("--dataset", cfg.dataset, "CSV path or name under BENCH_DATA_DIR")->required();
  run->add_option("--learner", learners, "stump, ridge, mlp (comma list for several rows)");
  run->add_option("--n", ns, "numbers of weak learners");
  run->add_option("--gamma", cfg.gamma);
  run->add_option("--step", cfg.step);
  run->add_option("--l2", cfg.l2, "learner regularization");
  run->add_option("--bins", cfg.bins, "stump quantile bins");
  run->add_option("--warmup", cfg.warmup, "stump warm-up examples");
  run->add_option("--runs", cfg.runs);
  run->add_option("--seed", cfg.seed);
  run->add_option("--out", out, "markdown, csv or json");
  run->add_option("--target-col", target, "target column (default: last)");

  auto* synth = app.add_subcommand("synth", "synthetic experiments with known comparators");
  std::string scenario, synth_ns;
  double gamma = 0.5;
  int horizon = 0, seeds = 1;
  std::uint64_t seed = 0;
  std::optional<double> explore_rate;
  synth->add_option("--scenario", scenario, "oco, bandit or sco")->required();
  synth->add_option("--n", synth_ns, "numbers of learners or stages");
  synth->add_option("--gamma", gamma);
  synth->add_option("--horizon", horizon, "rounds (oco, bandit)");
  synth->add_option("--seeds", seeds, "independent repetitions");
  synth->add_option("--seed", seed, "first seed");
  synth->add_option("--explore-rate", explore_rate, "bandit exploration rate (default automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      if (!target.empty()) cfg.target_col = target;
      cfg.n_values = parse_ints(ns);
      const auto format = oboost::bench::parse_format(out);
      const auto path = oboost::bench::resolve_dataset(cfg.dataset);
      const auto data = oboost::bench::ingest(path, cfg.target_col);
      for (std::size_t j : data.guarded) {
        std::cerr << fmt::format("note: column '{}' is constant; left unscaled\n", data.feature_names[j]);
      }
      std::vector<oboost::bench::ExperimentResult> results;
      for (const auto& kind : split_list(learners)) {
        auto c = cfg;
        c.learner = kind;
        results.push_back(oboost::bench::run_experiment(c, data));
      }
      if (results.empty()) throw oboost::ConfigError("no learner given");
      std::cout << oboost::bench::emit_table(results, format);
      return 0;
    }

    if (seeds < 1) throw oboost::ConfigError("--seeds must be at least 1");
    namespace sc = oboost::scenarios;
    nlohmann::json rows = nlohmann::json::array();
    if (scenario == "oco") {
      for (int n : parse_ints(synth_ns.empty() ? "4,16,64" : synth_ns)) {
        for (int k = 0; k < seeds; ++k) {
          sc::OcoScenario s{n, gamma, horizon > 0 ? horizon : 5000, seed + static_cast<std::uint64_t>(k)};
          auto j = sc::to_json(sc::run_oco(s));
          j["n"] = n;
          j["seed"] = s.seed;
          rows.push_back(j);
        }
      }
    } else if (scenario == "bandit") {
      for (int n : parse_ints(synth_ns.empty() ? "16" : synth_ns)) {
        for (int k = 0; k < seeds; ++k) {
          sc::BanditScenario s;
          s.n_learners = n;
          s.gamma = gamma;
          s.horizon = horizon > 0 ? horizon : 2000;
          s.seed = seed + static_cast<std::uint64_t>(k);
          s.explore_rate = explore_rate;
          auto j = sc::to_json(sc::run_bandit(s));
          j["n"] = n;
          j["seed"] = s.seed;
          rows.push_back(j);
        }
      }
    } else if (scenario == "sco") {
      for (int n : parse_ints(synth_ns.empty() ? "16,64,256" : synth_ns)) {
        auto j = sc::to_json(sc::run_sco({n, gamma}));
        j["n"] = n;
        rows.push_back(j);
      }
    } else {
      throw oboost::ConfigError(fmt::format("unknown scenario '{}' (oco, bandit, sco)", scenario));
    }
    for (const auto& r : rows) std::cout << r.dump() << '\n';
    return 0;
  } catch (const oboost::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const oboost::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
