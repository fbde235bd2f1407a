#pragma once

// Synthetic experiments with known comparators, shared by `bench synth` and the
// acceptance suite.

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oboost/b4co.hpp"

namespace oboost::scenarios {

// The comparator problem of a finished run: outputs[t][j] = h_j(c_t) and f_t.
struct HullProblem {
  std::vector<std::vector<Point>> outputs;
  std::vector<ConvexLoss> losses;
};

// Full-information stream on the unit disc: contexts are angles, the four base
// hypotheses are 0.8 times the unit vectors rotated by the context angle plus
// multiples of 90 degrees, and targets are a fixed interior mixture of them plus
// N(0, 0.1^2) noise. Square-distance losses, hedge oracles with edge gamma.
struct OcoScenario {
  int n_learners = 4;
  double gamma = 0.5;
  int horizon = 5000;
  std::uint64_t seed = 0;
  bool keep_problem = false;
};

struct OcoOutcome {
  double realized = 0.0;
  double regret = 0.0;  // realized - hull optimum
  double bound = 0.0;   // 4GDT/(gamma sqrt N) + (2GD/gamma) 2 sqrt(T ln|H|)
  double lipschitz = 0.0;
  double diameter = 0.0;
  std::optional<HullProblem> problem;
};

OcoOutcome run_oco(const OcoScenario& s);

// Contextual bandit on the 4-simplex: a sign context selects one of two arm
// mean vectors, losses are Bernoulli, and the base class is four
// context-dependent arm policies.
struct BanditScenario {
  int n_learners = 16;
  double gamma = 0.5;
  int horizon = 2000;
  std::uint64_t seed = 0;
  std::optional<double> explore_rate;  // default: the automatic rate
  bool keep_problem = false;
};

struct BanditOutcome {
  double realized = 0.0;
  double regret = 0.0;
  double explore_rate = 0.0;
  std::optional<HullProblem> problem;
};

BanditOutcome run_bandit(const BanditScenario& s);

// Four atoms on [-1, 1] (d = 1) with three base hypotheses; exact ERM stages.
struct ScoInstance {
  DecisionSet set;
  std::vector<Sample> atoms;
  std::vector<double> probabilities;
  std::vector<Hypothesis> hypotheses;
};
ScoInstance sco_instance();

struct ScoScenario {
  int n_stages = 16;
  double gamma = 0.5;
};

struct ScoOutcome {
  double value = 0.0;    // F_D(h)
  double optimum = 0.0;  // min over the hull of F_D
  double gap = 0.0;
  double bound = 0.0;    // 4GD/(gamma sqrt N) + (2GD/gamma) epsilon
  double lipschitz = 0.0;
  double epsilon = 0.0;
  std::vector<double> hull_weights;
};

ScoOutcome run_sco(const ScoScenario& s);

nlohmann::json to_json(const OcoOutcome& o);
nlohmann::json to_json(const BanditOutcome& o);
nlohmann::json to_json(const ScoOutcome& o);

}  // namespace oboost::scenarios
