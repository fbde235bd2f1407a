#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oboost/geometry.hpp"
#include "oboost/losses.hpp"

namespace oboost {

// Side information observed before acting (a feature vector).
struct Context {
  Eigen::VectorXd features;

  std::size_t dim() const { return static_cast<std::size_t>(features.size()); }
};

// Stable 64-bit FNV-1a hash of the feature bytes, used in transcripts.
std::uint64_t context_hash(const Context& c);

// A base hypothesis: context -> action.
using Hypothesis = std::function<Point(const Context&)>;

// An online contextual learner fed linear losses, carrying a declared edge gamma.
//
// predict() is read-only; update() advances exactly one round. Predictions are
// members of `set()`, which callers pass already recentered so that the
// uniform-guess benchmark is the origin.
class WeakLearner {
 public:
  WeakLearner(DecisionSet set, double gamma, std::size_t feature_dim);
  virtual ~WeakLearner() = default;

  Point predict(const Context& c) const;
  // Also books loss.value(predict(c)) into cumulative_loss().
  void update(const Context& c, const LinearLoss& loss);
  void reset();

  double gamma() const { return gamma_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t action_dim() const { return set_.dim(); }
  const DecisionSet& set() const { return set_; }
  std::uint64_t rounds() const { return rounds_; }
  double cumulative_loss() const { return cumulative_loss_; }

  virtual std::string name() const = 0;
  virtual std::unique_ptr<WeakLearner> clone() const = 0;

 protected:
  virtual Point do_predict(const Context& c) const = 0;
  virtual void do_update(const Context& c, const LinearLoss& loss) = 0;
  virtual void do_reset() = 0;

 private:
  DecisionSet set_;
  double gamma_;
  std::size_t feature_dim_;
  std::uint64_t rounds_ = 0;
  double cumulative_loss_ = 0.0;
};

// Plays the set centroid regardless of context.
class UniformBaseline final : public WeakLearner {
 public:
  UniformBaseline(DecisionSet set, double gamma, std::size_t feature_dim);
  std::string name() const override { return "uniform"; }
  std::unique_ptr<WeakLearner> clone() const override;

 protected:
  Point do_predict(const Context& c) const override;
  void do_update(const Context&, const LinearLoss&) override {}
  void do_reset() override {}
};

// Shared hyperparameters of the gradient-trained learners.
struct GradientOptions {
  double step = 0.01;  // online gradient step size
  double l2 = 0.0;     // ridge penalty on the parameters
};

// Affine policy Pi_K(W c + b) trained by online gradient descent on
// g . (W c + b) + l2/2 ||W||^2.
class LinearPolicy final : public WeakLearner {
 public:
  LinearPolicy(DecisionSet set, double gamma, std::size_t feature_dim, GradientOptions options);
  std::string name() const override { return "ridge"; }
  std::unique_ptr<WeakLearner> clone() const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Point& bias() const { return bias_; }

 protected:
  Point do_predict(const Context& c) const override;
  void do_update(const Context& c, const LinearLoss& loss) override;
  void do_reset() override;

 private:
  GradientOptions options_;
  Eigen::MatrixXd weights_;
  Point bias_;
};

// One tanh hidden unit: Pi_K(a tanh(w . c + b) + a0), trained by online gradient
// descent with weight decay l2 on (w, a).
class TinyMlp final : public WeakLearner {
 public:
  TinyMlp(DecisionSet set, double gamma, std::size_t feature_dim, GradientOptions options,
          std::uint64_t seed);
  std::string name() const override { return "mlp"; }
  std::unique_ptr<WeakLearner> clone() const override;

 protected:
  Point do_predict(const Context& c) const override;
  void do_update(const Context& c, const LinearLoss& loss) override;
  void do_reset() override;

 private:
  Point raw(const Context& c, double* hidden) const;

  GradientOptions options_;
  std::uint64_t seed_;
  Eigen::VectorXd in_weights_;
  double in_bias_ = 0.0;
  Point out_weights_;
  Point out_bias_;
};

struct StumpOptions {
  int bins = 16;
  int warmup = 50;
  double step = 0.01;  // leaf regularization: leaf = Pi_K(-S / (l2 n + 1/step))
  double l2 = 0.0;
};

// Decision stumps over quantile-binned features.
//
// The first `warmup` examples are buffered to fix per-feature bin edges. After
// that, each (feature, bin) cell accumulates the gradient sum S and count n of
// the examples that fall in it. A stump (feature j, split after bin k) has one
// leaf on each side whose action is the regularized leader Pi_K(-S/(l2 n + 1/step));
// the stump played is the one with the lowest regularized cumulative loss.
class DecisionStump final : public WeakLearner {
 public:
  DecisionStump(DecisionSet set, double gamma, std::size_t feature_dim, StumpOptions options);
  std::string name() const override { return "stump"; }
  std::unique_ptr<WeakLearner> clone() const override;

  bool warmed_up() const { return !edges_.empty(); }
  // Gradient sum and count in one (feature, bin) cell.
  std::pair<Point, std::size_t> cell(std::size_t feature, int bin) const;
  std::pair<std::size_t, int> active_split() const { return {split_feature_, split_bin_}; }

 protected:
  Point do_predict(const Context& c) const override;
  void do_update(const Context& c, const LinearLoss& loss) override;
  void do_reset() override;

 private:
  int bin_of(std::size_t feature, double value) const;
  void accumulate(const Context& c, const Point& g);
  void refresh_split();
  Point leaf(const Point& sum, std::size_t count) const;
  double leaf_objective(const Point& sum, std::size_t count) const;

  StumpOptions options_;
  std::vector<std::pair<Context, Point>> buffer_;
  std::vector<std::vector<double>> edges_;  // per feature, bins - 1 interior edges
  std::vector<Point> sums_;                 // feature * bins + bin
  std::vector<std::size_t> counts_;
  std::size_t split_feature_ = 0;
  int split_bin_ = 0;
  Point left_leaf_, right_leaf_;
};

enum class OracleRule {
  follow_the_leader,  // gamma * h*(c) with h* the cumulative-loss minimizer
  hedge               // gamma * exponential-weights mixture, anytime rate
};

// Synthetic gamma-weak learner over a finite class H: plays gamma times the
// selection (or mixture) of base hypotheses. With the hedge rule and unit linear
// losses it satisfies the weak-learning inequality with regret <= 2 sqrt(T ln|H|).
class SyntheticGammaOracle final : public WeakLearner {
 public:
  SyntheticGammaOracle(DecisionSet set, double gamma, std::size_t feature_dim,
                       std::vector<Hypothesis> hypotheses, OracleRule rule,
                       double loss_scale = 1.0);
  std::string name() const override { return "synthetic_oracle"; }
  std::unique_ptr<WeakLearner> clone() const override;

  const Eigen::VectorXd& hypothesis_losses() const { return losses_; }
  Eigen::VectorXd mixture_weights() const;

 protected:
  Point do_predict(const Context& c) const override;
  void do_update(const Context& c, const LinearLoss& loss) override;
  void do_reset() override;

 private:
  std::vector<Hypothesis> hypotheses_;
  OracleRule rule_;
  double loss_scale_;
  Eigen::VectorXd losses_;
};

// Construction record: kind is one of stump, ridge, mlp, uniform, synthetic_oracle.
struct LearnerSpec {
  std::string kind = "stump";
  double gamma = 0.1;
  double step = 0.01;
  double l2 = 0.0;
  int bins = 16;
  int warmup = 50;
  std::uint64_t seed = 0;
  std::vector<Hypothesis> hypotheses;  // synthetic_oracle only
  OracleRule rule = OracleRule::hedge;
  double loss_scale = 1.0;
};

LearnerSpec learner_spec_from_json(const nlohmann::json& j);

// `set` is the recentered decision set; `seed` overrides spec.seed when given.
std::unique_ptr<WeakLearner> make_learner(const LearnerSpec& spec, const DecisionSet& set,
                                          std::size_t feature_dim,
                                          std::optional<std::uint64_t> seed = std::nullopt);

struct TranscriptRound {
  Context context;
  LinearLoss loss;
};

// Runs `learner` through the transcript (predict, then update) and returns
// sum_t f_t(W(c_t)) - gamma * min_{h in H} sum_t f_t(h(c_t)).
double empirical_gamma_regret(WeakLearner& learner, const std::vector<TranscriptRound>& transcript,
                              const std::vector<Hypothesis>& comparators);

}  // namespace oboost
