#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oboost/extension.hpp"
#include "oboost/weak.hpp"

namespace oboost {

enum class X0Rule {
  centroid,  // the recentered origin
  fixed      // a caller-chosen point of K (original coordinates)
};

struct BoocoConfig {
  int n_learners = 5;
  double gamma = 0.1;
  std::optional<double> delta;      // default: smoothing_radius(delta_rule, D, G, gamma, N)
  std::optional<double> kappa;      // default: G
  std::optional<double> lipschitz;  // fixed G; default: bound of each round's loss
  DeltaRule delta_rule = DeltaRule::balanced;
  X0Rule x0_rule = X0Rule::centroid;
  Point x0;  // used by X0Rule::fixed
  ProxOptions prox;
  bool keep_transcript = true;
  std::uint64_t seed = 0;
  LearnerSpec learner;
};

// Keys: N, gamma, delta, kappa, lipschitz, delta_rule (balanced|sqrt), eta_rule
// (frank_wolfe), x0_rule (centroid), keep_transcript, seed, learner.
BoocoConfig booco_config_from_json(const nlohmann::json& j);

// eta_i = min(2 / i, 1), i >= 1.
double frank_wolfe_step(int i);

// One round's trajectory. `stages` (x^0 .. x^N) and `outputs` (W^i(c), i = 1..N)
// are in recentered coordinates; `played` is in original coordinates.
struct RoundTrajectory {
  std::uint64_t round = 0;
  Context context;
  std::vector<Point> stages;
  std::vector<Point> outputs;
  Point played;
};

struct RoundDiagnostics {
  double loss = 0.0;            // f_t(x_t)
  double prox_residual = 0.0;   // max over the N extension evaluations
  bool prox_converged = true;
  double max_gradient_norm = 0.0;
  double lipschitz = 0.0;       // G used for the round
  double delta = 0.0;
};

struct TranscriptEntry {
  Context context;
  ConvexLoss loss;
  Point played;
};

struct HullResult {
  Eigen::VectorXd weights;
  double value = 0.0;
  double gap = 0.0;  // Frank-Wolfe duality gap at the returned weights
  int iterations = 0;
  bool converged = false;
};

// min over the weight simplex of sum_t f_t(sum_j w_j h_j(c_t)), where
// outputs[t][j] = h_j(c_t). Accelerated projected gradient, stopped on a
// duality gap below tol * max(1, |value|).
HullResult hull_minimize(const std::vector<std::vector<Point>>& outputs,
                         const std::vector<ConvexLoss>& losses, double tol = 1e-8,
                         int max_iterations = 100000);

// Online boosting for online convex optimization with N weak learners.
//
// Rounds alternate predict(c) -> update(f, trajectory). Learners act on the
// recentered set; the public interface is in original coordinates.
class Booco {
 public:
  // Learners built from config.learner, learner i seeded with derive_seed(seed, i).
  Booco(DecisionSet set, std::size_t feature_dim, BoocoConfig config);
  // Caller-built learners; they must act on recentered_set().
  Booco(DecisionSet set, std::size_t feature_dim, BoocoConfig config,
        std::vector<std::unique_ptr<WeakLearner>> learners);

  Booco(const Booco& other);
  Booco& operator=(const Booco&) = delete;
  Booco(Booco&&) = default;

  RoundTrajectory predict(const Context& c) const;
  void update(const ConvexLoss& loss, const RoundTrajectory& trajectory);

  std::uint64_t rounds() const { return rounds_; }
  double cumulative_loss() const { return cumulative_loss_; }
  const BoocoConfig& config() const { return config_; }
  const DecisionSet& set() const { return set_; }
  const DecisionSet& recentered_set() const { return centered_; }
  const Point& offset() const { return offset_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const WeakLearner& learner(std::size_t i) const { return *learners_.at(i); }
  // Per-learner cumulative linear loss.
  std::vector<double> learner_losses() const;
  const std::vector<RoundDiagnostics>& diagnostics() const { return diagnostics_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

  // Realized loss minus the best convex combination of `comparators`.
  double regret_report(const std::vector<Hypothesis>& comparators, double tol = 1e-8) const;
  // Realized loss minus the loss of a fixed action sequence (original coordinates).
  double regret_report(const std::vector<Point>& actions) const;

  // One JSON line per round: {t, context_hash, played, loss, prox_residual}.
  void write_transcript(std::ostream& out) const;

 private:
  void validate();

  DecisionSet set_;
  DecisionSet centered_;
  Point offset_;
  std::size_t feature_dim_;
  BoocoConfig config_;
  Point x0_;  // recentered
  std::vector<std::unique_ptr<WeakLearner>> learners_;
  std::uint64_t rounds_ = 0;
  double cumulative_loss_ = 0.0;
  std::vector<RoundDiagnostics> diagnostics_;
  std::vector<TranscriptEntry> transcript_;
};

}  // namespace oboost
