#include "oboost/boblo.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/errors.hpp"

namespace oboost {

namespace {

constexpr std::uint64_t kExploreStream = 1;
constexpr std::uint64_t kCoordinateStream = 2;
constexpr std::uint64_t kArmStream = 3;

}  // namespace

BanditConfig bandit_config_from_json(const nlohmann::json& j) {
  BanditConfig c;
  try {
    if (j.contains("inner")) c.inner = booco_config_from_json(j.at("inner"));
    if (j.contains("explore_rate")) {
      const auto& r = j.at("explore_rate");
      if (r.is_string()) {
        if (r.get<std::string>() != "auto") throw ConfigError("bandit: explore_rate must be a number or \"auto\"");
      } else {
        c.explore_rate = r.get<double>();
      }
    }
    c.horizon = j.value("horizon", c.horizon);
    c.weak_regret_bound = j.value("weak_regret_bound", c.weak_regret_bound);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bandit config: {}", e.what()));
  }
  return c;
}

double default_explore_rate(std::size_t d, std::uint64_t horizon, int n_learners, double gamma,
                            double weak_regret_bound) {
  const double t = static_cast<double>(horizon);
  const double dd = static_cast<double>(d);
  const double a = 4.0 * dd * t / (gamma * std::sqrt(static_cast<double>(n_learners))) +
                   2.0 * dd * weak_regret_bound / gamma;
  return std::min(1.0, std::sqrt(a / t));
}

LinearLoss one_point_estimate(std::size_t d, double eta, bool explored, std::size_t coordinate,
                              double observed) {
  Point v = Point::Zero(static_cast<Eigen::Index>(d));
  if (explored) v[static_cast<Eigen::Index>(coordinate)] = static_cast<double>(d) / eta * observed;
  return LinearLoss{v};
}

std::size_t sample_arm(const Point& x, Rng& rng, bool* repaired) {
  require_finite(x, "sample_arm");
  Point p = x.cwiseMax(0.0);
  const double s = p.sum();
  if (!(s > 0.0)) throw ContractViolation("sample_arm: no positive mass");
  const bool fix = (p - x).norm() > kMembershipTol || std::abs(s - 1.0) > kMembershipTol;
  if (repaired != nullptr) *repaired = fix;
  p /= s;
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<std::size_t>(i);
  }
  // Rounding left u above the final partial sum: take the last arm with mass.
  for (Eigen::Index i = p.size() - 1; i >= 0; --i) {
    if (p[i] > 0.0) return static_cast<std::size_t>(i);
  }
  return 0;
}

Boblo::Boblo(DecisionSet set, std::size_t feature_dim, BanditConfig config)
    : set_(set),
      config_(config),
      inner_(std::move(set), feature_dim, config.inner),
      explore_rng_(derive_seed(config.seed, kExploreStream)),
      coordinate_rng_(derive_seed(config.seed, kCoordinateStream)),
      arm_rng_(derive_seed(config.seed, kArmStream)) {
  init();
}

Boblo::Boblo(DecisionSet set, std::size_t feature_dim, BanditConfig config,
             std::vector<std::unique_ptr<WeakLearner>> learners)
    : set_(set),
      config_(config),
      inner_(std::move(set), feature_dim, config.inner, std::move(learners)),
      explore_rng_(derive_seed(config.seed, kExploreStream)),
      coordinate_rng_(derive_seed(config.seed, kCoordinateStream)),
      arm_rng_(derive_seed(config.seed, kArmStream)) {
  init();
}

void Boblo::init() {
  const std::size_t d = set_.dim();
  for (std::size_t i = 0; i < d; ++i) {
    Point e = Point::Zero(static_cast<Eigen::Index>(d));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    if ((set_.project(e) - e).norm() > kMembershipTol) {
      throw ConfigError(fmt::format("bandit: decision set does not contain basis vector e_{}", i));
    }
  }
  if (config_.explore_rate) {
    eta_ = *config_.explore_rate;
    if (!(eta_ >= 0.0 && eta_ <= 1.0)) throw ConfigError("bandit: explore_rate must lie in [0, 1]");
  } else {
    if (config_.horizon == 0) throw ConfigError("bandit: the automatic explore rate needs a horizon");
    if (!(config_.weak_regret_bound >= 0.0)) throw ConfigError("bandit: weak_regret_bound must be non-negative");
    eta_ = default_explore_rate(d, config_.horizon, config_.inner.n_learners, config_.inner.gamma,
                                config_.weak_regret_bound);
  }
}

Point Boblo::step(const Context& c) {
  if (pending_) throw ContractViolation("bandit: step called twice without feedback");
  const std::size_t d = set_.dim();
  RoundTrajectory traj = inner_.predict(c);
  current_ = BanditRound{};
  // Both draws happen every round so the streams stay aligned across rates.
  const double u = explore_rng_.uniform();
  const std::size_t i = coordinate_rng_.index(d);
  current_.explored = u < eta_;
  if (current_.explored) {
    current_.coordinate = i;
    current_.played = Point::Zero(static_cast<Eigen::Index>(d));
    current_.played[static_cast<Eigen::Index>(i)] = 1.0;
  } else {
    current_.played = traj.played;
  }
  pending_ = std::move(traj);
  return current_.played;
}

std::size_t Boblo::contextual_bandit_arm(const Context& c) {
  if (set_.kind() != SetKind::simplex) {
    throw ContractViolation("bandit: arm sampling requires the probability simplex");
  }
  const Point x = step(c);
  bool repaired = false;
  const std::size_t arm = sample_arm(x, arm_rng_, &repaired);
  if (repaired) ++repaired_;
  return arm;
}

const BanditRound& Boblo::feedback(double observed) {
  if (!pending_) throw ContractViolation("bandit: feedback without a pending step");
  if (!std::isfinite(observed)) throw NonFiniteError("bandit: non-finite observed loss");
  current_.observed = observed;
  current_.estimate = one_point_estimate(set_.dim(), eta_, current_.explored,
                                         current_.coordinate.value_or(0), observed);
  inner_.update(ConvexLoss::linear(current_.estimate), *pending_);
  pending_.reset();
  realized_ += observed;
  ++rounds_;
  log_.push_back(current_);
  return log_.back();
}

void Boblo::write_log(std::ostream& out) const {
  for (std::size_t t = 0; t < log_.size(); ++t) {
    const auto& r = log_[t];
    nlohmann::json j;
    j["t"] = t + 1;
    j["b_t"] = r.explored ? 1 : 0;
    j["i_t"] = r.coordinate ? nlohmann::json(*r.coordinate) : nlohmann::json(nullptr);
    j["observed"] = r.observed;
    j["estimate_nonzeros"] = (r.estimate.direction.array() != 0.0).count();
    out << j.dump() << '\n';
  }
}

}  // namespace oboost
