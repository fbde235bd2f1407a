#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oboost/extension.hpp"
#include "oboost/rng.hpp"
#include "oboost/weak.hpp"

namespace oboost {

struct Sample {
  ConvexLoss loss;
  Context context;
};

struct LinearSample {
  LinearLoss loss;
  Context context;
};

template <class S>
struct FiniteSupport {
  std::vector<S> atoms;
  std::vector<double> probabilities;
};

// i.i.d. draws of (loss, context) from a fixed distribution.
class SampleOracle {
 public:
  virtual ~SampleOracle() = default;
  virtual Sample draw() = 0;
  // The distribution itself, when it has finite support.
  virtual std::optional<FiniteSupport<Sample>> support() const { return std::nullopt; }
};

// Categorical distribution over a fixed list of atoms.
class FiniteSupportOracle final : public SampleOracle {
 public:
  FiniteSupportOracle(std::vector<Sample> atoms, std::vector<double> probabilities,
                      std::uint64_t seed);
  Sample draw() override;
  std::optional<FiniteSupport<Sample>> support() const override { return support_; }

 private:
  FiniteSupport<Sample> support_;
  std::vector<double> cumulative_;
  Rng rng_;
};

// Draws produced by a user function of a seeded generator.
class FunctionOracle final : public SampleOracle {
 public:
  FunctionOracle(std::function<Sample(Rng&)> generator, std::uint64_t seed);
  Sample draw() override { return generator_(rng_); }

 private:
  std::function<Sample(Rng&)> generator_;
  Rng rng_;
};

// The stage distributions handed to a weak optimizer: linear losses only.
class LinearSampleOracle {
 public:
  virtual ~LinearSampleOracle() = default;
  virtual LinearSample draw() = 0;
  virtual std::optional<FiniteSupport<LinearSample>> support() const { return std::nullopt; }
};

// A stage output: maps contexts into the recentered decision set.
struct StageHypothesis {
  std::string id;
  Hypothesis apply;
};

class WeakOptimizer {
 public:
  virtual ~WeakOptimizer() = default;
  virtual double gamma() const = 0;
  // Accuracy guaranteed (with the optimizer's stated confidence) for budget m.
  virtual double epsilon(std::size_t m) const = 0;
  virtual StageHypothesis solve(LinearSampleOracle& oracle, std::size_t m) = 0;
};

enum class ErmMode {
  sampled,  // empirical risk over m draws
  exact     // expected risk over the finite support (falls back to sampled without one)
};

// Empirical risk minimization over a finite class H (recentered coordinates),
// output scaled by gamma. Lowest index wins ties.
//
// In sampled mode, epsilon(m) = 2 gamma R sqrt(ln(2|H|/0.01) / (2m)), the
// Hoeffding-plus-union accuracy at confidence 0.99 for per-sample linear losses
// whose value range over H is at most R = loss_range.
class ErmOptimizer final : public WeakOptimizer {
 public:
  ErmOptimizer(std::vector<Hypothesis> hypotheses, double gamma, ErmMode mode,
               double loss_range = 1.0);
  double gamma() const override { return gamma_; }
  double epsilon(std::size_t m) const override;
  StageHypothesis solve(LinearSampleOracle& oracle, std::size_t m) override;

  // Index chosen by the latest solve().
  std::size_t last_choice() const { return last_; }

 private:
  std::vector<Hypothesis> hypotheses_;
  double gamma_;
  ErmMode mode_;
  double loss_range_;
  std::size_t last_ = 0;
};

// x -> h(x) - offset for every h, mapping a class on K into the recentered set.
std::vector<Hypothesis> recentered_class(const std::vector<Hypothesis>& hypotheses,
                                         const Point& offset);

// h(c) = Pi_K(h^N(c)) with h^i = (1 - eta_i) h^{i-1} + (eta_i / gamma) W^i.
// Evaluation replays that recurrence exactly from the stored stage outputs.
class BoostedHypothesis {
 public:
  BoostedHypothesis(DecisionSet set, double gamma, StageHypothesis initial);

  void add_stage(StageHypothesis stage);

  // Original coordinates, always a member of K.
  Point apply(const Context& c) const;
  Point operator()(const Context& c) const { return apply(c); }
  // h^i(c) in recentered coordinates, 0 <= i <= stages().
  Point raw(const Context& c, std::size_t i) const;
  // h^0(c), ..., h^N(c) in one pass.
  std::vector<Point> trajectory(const Context& c) const;

  std::size_t stages() const { return stages_.size(); }
  double gamma() const { return gamma_; }
  const DecisionSet& set() const { return set_; }
  const DecisionSet& recentered_set() const { return centered_; }
  const Point& offset() const { return offset_; }

  // {"offset", "gamma", "initial", "stages": [{"index", "eta", "weight", "id"}]}
  nlohmann::json to_json() const;

 private:
  DecisionSet set_;
  DecisionSet centered_;
  Point offset_;
  double gamma_;
  StageHypothesis initial_;
  std::vector<StageHypothesis> stages_;
};

struct B4coConfig {
  int n_stages = 16;
  std::size_t stage_budget = 100;   // m draws per stage
  std::optional<double> delta;      // default: smoothing_radius(delta_rule, D, G, gamma, N)
  std::optional<double> kappa;      // default: G
  std::optional<double> lipschitz;  // fixed G; default: bound of each drawn loss
  DeltaRule delta_rule = DeltaRule::balanced;
  ProxOptions prox;
  std::optional<StageHypothesis> initial;  // recentered; default: the centroid constant
};

B4coConfig b4co_config_from_json(const nlohmann::json& j);

class StageFailure : public std::runtime_error {
 public:
  StageFailure(int stage, const std::string& what);
  int stage() const { return stage_; }

 private:
  int stage_;
};

struct B4coResult {
  BoostedHypothesis hypothesis;
  std::vector<double> stage_epsilon;  // weak optimizer's epsilon(m) per stage
  std::size_t samples_used = 0;
};

// Statistical boosting: each stage lifts draws of (f, c) to the linear loss
// grad f_hat(h^{i-1}(c)) . x with f_hat the extension of f, and calls the weak
// optimizer on that stage distribution with a fresh budget of m draws.
B4coResult b4co(SampleOracle& oracle, WeakOptimizer& wopt, const DecisionSet& set,
                const B4coConfig& config);

struct PopulationEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Monte-Carlo estimate of E f(h(c)) with its standard error.
PopulationEstimate population_loss(const std::function<Point(const Context&)>& h,
                                   SampleOracle& oracle, std::size_t n_samples);
// Exact expectation over a finite support.
double population_loss(const std::function<Point(const Context&)>& h,
                       const FiniteSupport<Sample>& support);

}  // namespace oboost
