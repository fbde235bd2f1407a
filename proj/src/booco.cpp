#include "oboost/booco.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/errors.hpp"
#include "oboost/rng.hpp"

namespace oboost {

double frank_wolfe_step(int i) {
  if (i < 1) throw ContractViolation("frank_wolfe_step: index starts at 1");
  return std::min(2.0 / static_cast<double>(i), 1.0);
}

BoocoConfig booco_config_from_json(const nlohmann::json& j) {
  BoocoConfig c;
  try {
    c.n_learners = j.value("N", c.n_learners);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
    if (j.contains("lipschitz")) c.lipschitz = j.at("lipschitz").get<double>();
    const std::string rule = j.value("delta_rule", std::string("balanced"));
    if (rule == "balanced") {
      c.delta_rule = DeltaRule::balanced;
    } else if (rule == "sqrt") {
      c.delta_rule = DeltaRule::sqrt_rule;
    } else {
      throw ConfigError(fmt::format("booster: unknown delta_rule '{}'", rule));
    }
    const std::string eta = j.value("eta_rule", std::string("frank_wolfe"));
    if (eta != "frank_wolfe") throw ConfigError(fmt::format("booster: unknown eta_rule '{}'", eta));
    const std::string x0 = j.value("x0_rule", std::string("centroid"));
    if (x0 != "centroid") throw ConfigError(fmt::format("booster: unknown x0_rule '{}'", x0));
    c.keep_transcript = j.value("keep_transcript", c.keep_transcript);
    c.seed = j.value("seed", c.seed);
    if (j.contains("learner")) c.learner = learner_spec_from_json(j.at("learner"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("booster config: {}", e.what()));
  }
  c.learner.gamma = c.gamma;
  return c;
}

namespace {

std::vector<std::unique_ptr<WeakLearner>> build_learners(const BoocoConfig& c,
                                                         const DecisionSet& centered,
                                                         std::size_t feature_dim) {
  if (c.n_learners < 1) throw ConfigError("booster: N must be at least 1");
  std::vector<std::unique_ptr<WeakLearner>> out;
  for (int i = 0; i < c.n_learners; ++i) {
    LearnerSpec spec = c.learner;
    spec.gamma = c.gamma;
    out.push_back(make_learner(spec, centered, feature_dim,
                               derive_seed(c.seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

bool is_zero_linear(const ConvexLoss& f) {
  const auto* lin = std::get_if<LinearFamily>(&f.family());
  return lin != nullptr && lin->direction.isZero(0.0);
}

}  // namespace

Booco::Booco(DecisionSet set, std::size_t feature_dim, BoocoConfig config)
    : set_(set),
      centered_(recenter(set).set),
      offset_(recenter(set).offset),
      feature_dim_(feature_dim),
      config_(std::move(config)) {
  learners_ = build_learners(config_, centered_, feature_dim_);
  validate();
}

Booco::Booco(DecisionSet set, std::size_t feature_dim, BoocoConfig config,
             std::vector<std::unique_ptr<WeakLearner>> learners)
    : set_(set),
      centered_(recenter(set).set),
      offset_(recenter(set).offset),
      feature_dim_(feature_dim),
      config_(std::move(config)),
      learners_(std::move(learners)) {
  if (static_cast<int>(learners_.size()) != config_.n_learners) {
    throw ConfigError(fmt::format("booster: {} learners supplied for N = {}", learners_.size(),
                                  config_.n_learners));
  }
  validate();
}

Booco::Booco(const Booco& other)
    : set_(other.set_),
      centered_(other.centered_),
      offset_(other.offset_),
      feature_dim_(other.feature_dim_),
      config_(other.config_),
      x0_(other.x0_),
      rounds_(other.rounds_),
      cumulative_loss_(other.cumulative_loss_),
      diagnostics_(other.diagnostics_),
      transcript_(other.transcript_) {
  for (const auto& l : other.learners_) learners_.push_back(l->clone());
}

void Booco::validate() {
  const auto& c = config_;
  if (c.n_learners < 1) throw ConfigError("booster: N must be at least 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("booster: gamma must lie in (0, 1]");
  if (c.delta && !(*c.delta > 0.0)) throw ConfigError("booster: delta must be positive");
  if (c.kappa && !(*c.kappa >= 0.0)) throw ConfigError("booster: kappa must be non-negative");
  if (c.lipschitz && !(*c.lipschitz >= 0.0)) throw ConfigError("booster: lipschitz must be non-negative");
  for (const auto& l : learners_) {
    if (!l) throw ConfigError("booster: null learner");
    if (l->action_dim() != set_.dim() || l->feature_dim() != feature_dim_) {
      throw ConfigError("booster: learner dimensions do not match the booster");
    }
  }
  if (c.x0_rule == X0Rule::fixed) {
    require_dim(c.x0, set_.dim(), "booster x0");
    if (!set_.contains(c.x0)) throw ConfigError("booster: x0 must lie in K");
    x0_ = c.x0 - offset_;
  } else {
    x0_ = Point::Zero(static_cast<Eigen::Index>(set_.dim()));
  }
}

RoundTrajectory Booco::predict(const Context& c) const {
  require_dim(c.features, feature_dim_, "booster context");
  RoundTrajectory t;
  t.round = rounds_;
  t.context = c;
  const double gamma = config_.gamma;
  t.stages.reserve(learners_.size() + 1);
  t.outputs.reserve(learners_.size());
  t.stages.push_back(x0_);
  for (std::size_t i = 0; i < learners_.size(); ++i) {
    const double eta = frank_wolfe_step(static_cast<int>(i) + 1);
    Point w = learners_[i]->predict(c);
    t.stages.push_back((1.0 - eta) * t.stages.back() + (eta / gamma) * w);
    t.outputs.push_back(std::move(w));
  }
  t.played = centered_.project(t.stages.back()) + offset_;
  return t;
}

void Booco::update(const ConvexLoss& loss, const RoundTrajectory& trajectory) {
  if (trajectory.round != rounds_ || trajectory.stages.size() != learners_.size() + 1) {
    throw ContractViolation(fmt::format(
        "booster: trajectory for round {} does not belong to pending round {}", trajectory.round,
        rounds_));
  }
  if (loss.dim() != set_.dim()) throw ContractViolation("booster: loss dimension mismatch");

  RoundDiagnostics diag;
  diag.loss = loss.eval(trajectory.played);
  const auto n = static_cast<int>(learners_.size());
  const auto d = static_cast<Eigen::Index>(set_.dim());

  if (is_zero_linear(loss)) {
    for (auto& l : learners_) l->update(trajectory.context, LinearLoss{Point::Zero(d)});
  } else {
    const ConvexLoss centered_loss = loss.translated(offset_);
    const double diameter = centered_.diameter();
    double g = 0.0;
    if (config_.lipschitz) {
      g = *config_.lipschitz;
    } else {
      const double slack = diameter / (config_.gamma * std::sqrt(static_cast<double>(n)));
      g = lipschitz_bound(centered_loss, centered_.scaled(1.0 / config_.gamma), slack);
    }
    const double delta =
        config_.delta.value_or(smoothing_radius(config_.delta_rule, diameter, g, config_.gamma, n));
    const double kappa = config_.kappa.value_or(g);
    const ExtendedLoss ext(centered_loss, centered_, delta, kappa, config_.prox);
    diag.lipschitz = g;
    diag.delta = delta;

    // Gradients first, then the (mutually independent) learner updates.
    std::vector<Point> grads;
    grads.reserve(learners_.size());
    for (std::size_t i = 0; i < learners_.size(); ++i) {
      auto ev = ext.evaluate(trajectory.stages[i]);
      diag.prox_residual = std::max(diag.prox_residual, ev.prox.residual);
      diag.prox_converged = diag.prox_converged && ev.prox.converged;
      diag.max_gradient_norm = std::max(diag.max_gradient_norm, ev.gradient.norm());
      grads.push_back(std::move(ev.gradient));
    }
    for (std::size_t i = 0; i < learners_.size(); ++i) {
      learners_[i]->update(trajectory.context, LinearLoss{grads[i]});
    }
  }

  cumulative_loss_ += diag.loss;
  diagnostics_.push_back(diag);
  if (config_.keep_transcript) {
    transcript_.push_back({trajectory.context, loss, trajectory.played});
  }
  ++rounds_;
}

std::vector<double> Booco::learner_losses() const {
  std::vector<double> out;
  for (const auto& l : learners_) out.push_back(l->cumulative_loss());
  return out;
}

double Booco::regret_report(const std::vector<Hypothesis>& comparators, double tol) const {
  if (comparators.empty()) throw ContractViolation("regret_report: empty comparator");
  if (transcript_.empty() && rounds_ > 0) {
    throw ContractViolation("regret_report: transcript was not retained");
  }
  if (transcript_.empty()) return 0.0;
  std::vector<std::vector<Point>> outputs;
  std::vector<ConvexLoss> losses;
  outputs.reserve(transcript_.size());
  for (const auto& e : transcript_) {
    std::vector<Point> row;
    for (const auto& h : comparators) row.push_back(h(e.context));
    outputs.push_back(std::move(row));
    losses.push_back(e.loss);
  }
  return cumulative_loss_ - hull_minimize(outputs, losses, tol).value;
}

double Booco::regret_report(const std::vector<Point>& actions) const {
  if (actions.size() != transcript_.size() || actions.empty()) {
    throw ContractViolation("regret_report: action sequence length must match the transcript");
  }
  double comp = 0.0;
  for (std::size_t t = 0; t < actions.size(); ++t) comp += transcript_[t].loss.eval(actions[t]);
  double realized = 0.0;
  for (const auto& e : transcript_) realized += e.loss.eval(e.played);
  return realized - comp;
}

void Booco::write_transcript(std::ostream& out) const {
  for (std::size_t t = 0; t < transcript_.size(); ++t) {
    const auto& e = transcript_[t];
    nlohmann::json j;
    j["t"] = t + 1;
    j["context_hash"] = fmt::format("{:016x}", context_hash(e.context));
    j["played"] = std::vector<double>(e.played.data(), e.played.data() + e.played.size());
    j["loss"] = diagnostics_.at(t).loss;
    j["prox_residual"] = diagnostics_.at(t).prox_residual;
    out << j.dump() << '\n';
  }
}

// ---- convex-hull comparator ----

namespace {

struct HullObjective {
  const std::vector<std::vector<Point>>& outputs;
  const std::vector<ConvexLoss>& losses;

  Point mix(std::size_t t, const Eigen::VectorXd& w) const {
    Point x = w[0] * outputs[t][0];
    for (std::size_t j = 1; j < outputs[t].size(); ++j) x += w[static_cast<Eigen::Index>(j)] * outputs[t][j];
    return x;
  }

  double value(const Eigen::VectorXd& w) const {
    double v = 0.0;
    for (std::size_t t = 0; t < losses.size(); ++t) v += losses[t].eval(mix(t, w));
    return v;
  }

  double value_grad(const Eigen::VectorXd& w, Eigen::VectorXd& grad) const {
    grad = Eigen::VectorXd::Zero(w.size());
    double v = 0.0;
    for (std::size_t t = 0; t < losses.size(); ++t) {
      const Point x = mix(t, w);
      v += losses[t].eval(x);
      const Point g = losses[t].grad(x);
      for (std::size_t j = 0; j < outputs[t].size(); ++j) grad[static_cast<Eigen::Index>(j)] += g.dot(outputs[t][j]);
    }
    return v;
  }
};

double fw_gap(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
  return g.dot(w) - g.minCoeff();
}

}  // namespace

HullResult hull_minimize(const std::vector<std::vector<Point>>& outputs,
                         const std::vector<ConvexLoss>& losses, double tol, int max_iterations) {
  if (outputs.empty() || outputs.size() != losses.size()) {
    throw ContractViolation("hull_minimize: need one output row per loss");
  }
  const std::size_t m = outputs.front().size();
  if (m == 0) throw ContractViolation("hull_minimize: empty hypothesis class");
  for (const auto& row : outputs) {
    if (row.size() != m) throw ContractViolation("hull_minimize: ragged output table");
  }
  const HullObjective obj{outputs, losses};
  const auto mi = static_cast<Eigen::Index>(m);

  HullResult best;
  // Start from the best vertex: exact for linear losses, a good warm start otherwise.
  for (Eigen::Index j = 0; j < mi; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(mi);
    e[j] = 1.0;
    const double v = obj.value(e);
    if (j == 0 || v < best.value) {
      best.value = v;
      best.weights = e;
    }
  }

  Eigen::VectorXd w = best.weights, y = w, grad;
  double fw = best.value;
  double theta = 1.0;
  double lip = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const double fy = obj.value_grad(y, grad);
    if (it == 0) {
      best.gap = fw_gap(y, grad);
      if (best.gap <= tol * std::max(1.0, std::abs(fy))) {
        best.converged = true;
        return best;
      }
    }
    Eigen::VectorXd z;
    double fz = 0.0;
    for (int bt = 0; bt < 100; ++bt) {
      z = project_to_simplex(y - grad / lip);
      fz = obj.value(z);
      const Eigen::VectorXd step = z - y;
      if (fz <= fy + grad.dot(step) + 0.5 * lip * step.squaredNorm() + 1e-14 * std::abs(fy)) break;
      lip *= 2.0;
    }
    best.iterations = it + 1;
    if (fz > fw) {
      // A plain gradient step that fails to decrease means the value is at
      // rounding level; otherwise drop the momentum and retry from w.
      if (y == w) {
        best.converged = true;
        return best;
      }
      theta = 1.0;
      y = w;
      continue;
    }
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = z + ((theta - 1.0) / next) * (z - w);
    w = z;
    fw = fz;
    theta = next;
    lip = std::max(lip * 0.9, 1e-12);
    if (fw <= best.value) {
      best.value = fw;
      best.weights = w;
    }

    Eigen::VectorXd gw;
    obj.value_grad(w, gw);
    best.gap = fw_gap(w, gw);
    if (best.gap <= tol * std::max(1.0, std::abs(fw))) {
      best.converged = true;
      return best;
    }
  }
  return best;
}

}  // namespace oboost
