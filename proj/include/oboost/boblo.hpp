#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oboost/booco.hpp"
#include "oboost/rng.hpp"

namespace oboost {

struct BanditConfig {
  std::optional<double> explore_rate;  // unset: default_explore_rate(...)
  std::uint64_t horizon = 0;           // T, required for the automatic rate
  double weak_regret_bound = 0.0;      // R_W, used by the automatic rate
  BoocoConfig inner;
  std::uint64_t seed = 0;
};

// Keys: explore_rate (number or "auto"), horizon, weak_regret_bound, seed, inner.
BanditConfig bandit_config_from_json(const nlohmann::json& j);

// min(1, sqrt((4 d T / (gamma sqrt N) + 2 d R_W / gamma) / T)): the minimizer of
// A / eta + eta T for the exploration/estimation trade-off.
double default_explore_rate(std::size_t d, std::uint64_t horizon, int n_learners, double gamma,
                            double weak_regret_bound);

struct BanditRound {
  bool explored = false;
  std::optional<std::size_t> coordinate;
  double observed = 0.0;
  LinearLoss estimate;  // zero on exploit rounds; one nonzero entry on explore rounds
  Point played;
};

// One-point estimate: (d / eta) * observed at the explored coordinate, zero otherwise.
LinearLoss one_point_estimate(std::size_t d, double eta, bool explored, std::size_t coordinate,
                              double observed);

// Samples an index from the categorical distribution x. Negative entries are
// clamped to 0 and the rest renormalized; `repaired` reports whether that happened.
std::size_t sample_arm(const Point& x, Rng& rng, bool* repaired = nullptr);

// Bandit linear optimization by Bernoulli exploration around an inner BoOCO
// booster. K must contain the probability simplex (checked at construction).
class Boblo {
 public:
  Boblo(DecisionSet set, std::size_t feature_dim, BanditConfig config);
  Boblo(DecisionSet set, std::size_t feature_dim, BanditConfig config,
        std::vector<std::unique_ptr<WeakLearner>> learners);

  // Chooses this round's action.
  Point step(const Context& c);
  // step() followed by an arm draw from the returned point (K = simplex case).
  std::size_t contextual_bandit_arm(const Context& c);
  // Reveal the scalar loss of whatever was played; returns the round record.
  const BanditRound& feedback(double observed);

  double explore_rate() const { return eta_; }
  const Booco& inner() const { return inner_; }
  std::uint64_t rounds() const { return rounds_; }
  double realized_loss() const { return realized_; }
  std::size_t repaired_arms() const { return repaired_; }
  const std::vector<BanditRound>& log() const { return log_; }

  // One JSON line per round: {t, b_t, i_t, observed, estimate_nonzeros}.
  void write_log(std::ostream& out) const;

 private:
  void init();

  DecisionSet set_;
  BanditConfig config_;
  Booco inner_;
  double eta_ = 1.0;
  Rng explore_rng_;
  Rng coordinate_rng_;
  Rng arm_rng_;
  std::optional<RoundTrajectory> pending_;
  BanditRound current_;
  std::uint64_t rounds_ = 0;
  double realized_ = 0.0;
  std::size_t repaired_ = 0;
  std::vector<BanditRound> log_;
};

}  // namespace oboost
