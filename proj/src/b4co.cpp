#include "oboost/b4co.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/booco.hpp"
#include "oboost/errors.hpp"

namespace oboost {

// ---- oracles ----

FiniteSupportOracle::FiniteSupportOracle(std::vector<Sample> atoms,
                                         std::vector<double> probabilities, std::uint64_t seed)
    : support_{std::move(atoms), std::move(probabilities)}, rng_(seed) {
  if (support_.atoms.empty() || support_.atoms.size() != support_.probabilities.size()) {
    throw ConfigError("finite support: need one probability per atom");
  }
  double total = 0.0;
  for (double p : support_.probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("finite support: bad probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("finite support: probabilities must sum to 1");
  cumulative_.resize(support_.probabilities.size());
  std::partial_sum(support_.probabilities.begin(), support_.probabilities.end(), cumulative_.begin());
}

Sample FiniteSupportOracle::draw() {
  const double u = rng_.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                       support_.atoms.size() - 1);
  return support_.atoms[k];
}

FunctionOracle::FunctionOracle(std::function<Sample(Rng&)> generator, std::uint64_t seed)
    : generator_(std::move(generator)), rng_(seed) {
  if (!generator_) throw ConfigError("function oracle: empty generator");
}

// ---- ERM weak optimizer ----

ErmOptimizer::ErmOptimizer(std::vector<Hypothesis> hypotheses, double gamma, ErmMode mode,
                           double loss_range)
    : hypotheses_(std::move(hypotheses)), gamma_(gamma), mode_(mode), loss_range_(loss_range) {
  if (hypotheses_.empty()) throw ConfigError("erm: empty hypothesis class");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("erm: gamma must lie in (0, 1]");
  if (!(loss_range >= 0.0)) throw ConfigError("erm: loss_range must be non-negative");
}

double ErmOptimizer::epsilon(std::size_t m) const {
  if (mode_ == ErmMode::exact) return 0.0;
  if (m == 0) return std::numeric_limits<double>::infinity();
  const double h = static_cast<double>(hypotheses_.size());
  return 2.0 * gamma_ * loss_range_ * std::sqrt(std::log(2.0 * h / 0.01) / (2.0 * static_cast<double>(m)));
}

StageHypothesis ErmOptimizer::solve(LinearSampleOracle& oracle, std::size_t m) {
  const std::size_t n = hypotheses_.size();
  std::vector<double> risk(n, 0.0);
  std::optional<FiniteSupport<LinearSample>> support;
  if (mode_ == ErmMode::exact) support = oracle.support();
  if (support) {
    for (std::size_t k = 0; k < support->atoms.size(); ++k) {
      const auto& a = support->atoms[k];
      for (std::size_t j = 0; j < n; ++j) {
        risk[j] += support->probabilities[k] * a.loss.value(hypotheses_[j](a.context));
      }
    }
  } else {
    if (m == 0) throw ContractViolation("erm: sample budget must be positive");
    for (std::size_t s = 0; s < m; ++s) {
      const LinearSample a = oracle.draw();
      for (std::size_t j = 0; j < n; ++j) risk[j] += a.loss.value(hypotheses_[j](a.context));
    }
  }
  last_ = static_cast<std::size_t>(std::min_element(risk.begin(), risk.end()) - risk.begin());
  const Hypothesis h = hypotheses_[last_];
  const double g = gamma_;
  return {fmt::format("erm:h{}", last_), [h, g](const Context& c) -> Point { return g * h(c); }};
}

std::vector<Hypothesis> recentered_class(const std::vector<Hypothesis>& hypotheses,
                                         const Point& offset) {
  std::vector<Hypothesis> out;
  out.reserve(hypotheses.size());
  for (const auto& h : hypotheses) {
    out.push_back([h, offset](const Context& c) -> Point { return h(c) - offset; });
  }
  return out;
}

// ---- boosted hypothesis ----

BoostedHypothesis::BoostedHypothesis(DecisionSet set, double gamma, StageHypothesis initial)
    : set_(set),
      centered_(recenter(set).set),
      offset_(recenter(set).offset),
      gamma_(gamma),
      initial_(std::move(initial)) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("boosted hypothesis: gamma must lie in (0, 1]");
  if (!initial_.apply) throw ConfigError("boosted hypothesis: empty initial hypothesis");
}

void BoostedHypothesis::add_stage(StageHypothesis stage) {
  if (!stage.apply) throw ContractViolation("boosted hypothesis: empty stage");
  stages_.push_back(std::move(stage));
}

Point BoostedHypothesis::raw(const Context& c, std::size_t i) const {
  if (i > stages_.size()) throw ContractViolation("boosted hypothesis: stage index out of range");
  Point x = initial_.apply(c);
  require_dim(x, set_.dim(), "boosted hypothesis initial output");
  for (std::size_t k = 0; k < i; ++k) {
    const double eta = frank_wolfe_step(static_cast<int>(k) + 1);
    const Point w = centered_.project(stages_[k].apply(c));
    x = (1.0 - eta) * x + (eta / gamma_) * w;
  }
  return x;
}

std::vector<Point> BoostedHypothesis::trajectory(const Context& c) const {
  std::vector<Point> out;
  out.reserve(stages_.size() + 1);
  out.push_back(initial_.apply(c));
  require_dim(out.back(), set_.dim(), "boosted hypothesis initial output");
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const double eta = frank_wolfe_step(static_cast<int>(k) + 1);
    const Point w = centered_.project(stages_[k].apply(c));
    out.push_back((1.0 - eta) * out.back() + (eta / gamma_) * w);
  }
  return out;
}

Point BoostedHypothesis::apply(const Context& c) const {
  return centered_.project(raw(c, stages_.size())) + offset_;
}

nlohmann::json BoostedHypothesis::to_json() const {
  nlohmann::json j;
  j["offset"] = std::vector<double>(offset_.data(), offset_.data() + offset_.size());
  j["gamma"] = gamma_;
  j["initial"] = initial_.id;
  // Coefficient of each stage in h^N: (eta_k / gamma) prod_{l > k} (1 - eta_l).
  const std::size_t n = stages_.size();
  std::vector<double> weight(n, 0.0);
  double tail = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    const double eta = frank_wolfe_step(static_cast<int>(k) + 1);
    weight[k] = eta / gamma_ * tail;
    tail *= 1.0 - eta;
  }
  j["initial_weight"] = tail;
  j["stages"] = nlohmann::json::array();
  for (std::size_t k = 0; k < n; ++k) {
    j["stages"].push_back({{"index", k + 1},
                           {"eta", frank_wolfe_step(static_cast<int>(k) + 1)},
                           {"weight", weight[k]},
                           {"id", stages_[k].id}});
  }
  return j;
}

// ---- b4co ----

B4coConfig b4co_config_from_json(const nlohmann::json& j) {
  B4coConfig c;
  try {
    c.n_stages = j.value("N", c.n_stages);
    c.stage_budget = j.value("stage_budget", c.stage_budget);
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
    if (j.contains("lipschitz")) c.lipschitz = j.at("lipschitz").get<double>();
    const std::string rule = j.value("delta_rule", std::string("balanced"));
    if (rule == "balanced") {
      c.delta_rule = DeltaRule::balanced;
    } else if (rule == "sqrt") {
      c.delta_rule = DeltaRule::sqrt_rule;
    } else {
      throw ConfigError(fmt::format("b4co: unknown delta_rule '{}'", rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("b4co config: {}", e.what()));
  }
  return c;
}

StageFailure::StageFailure(int stage, const std::string& what)
    : std::runtime_error(fmt::format("b4co stage {}: {}", stage, what)), stage_(stage) {}

namespace {

// D^i: draws of the base oracle lifted through the extension at h^{i-1}.
class LiftedOracle final : public LinearSampleOracle {
 public:
  LiftedOracle(SampleOracle& base, const BoostedHypothesis& h, const B4coConfig& config,
               double gamma)
      : base_(base), h_(h), config_(config), gamma_(gamma) {}

  LinearSample draw() override {
    ++draws_;
    return lift(base_.draw());
  }

  std::optional<FiniteSupport<LinearSample>> support() const override {
    auto s = base_.support();
    if (!s) return std::nullopt;
    FiniteSupport<LinearSample> out;
    out.probabilities = s->probabilities;
    for (const auto& a : s->atoms) out.atoms.push_back(lift(a));
    return out;
  }

  std::size_t draws() const { return draws_; }

 private:
  LinearSample lift(const Sample& s) const {
    const DecisionSet& k0 = h_.recentered_set();
    const ConvexLoss f0 = s.loss.translated(h_.offset());
    const int n = config_.n_stages;
    const double diameter = k0.diameter();
    double g = 0.0;
    if (config_.lipschitz) {
      g = *config_.lipschitz;
    } else {
      const double slack = diameter / (gamma_ * std::sqrt(static_cast<double>(n)));
      g = lipschitz_bound(f0, k0.scaled(1.0 / gamma_), slack);
    }
    const double delta =
        config_.delta.value_or(smoothing_radius(config_.delta_rule, diameter, g, gamma_, n));
    const ExtendedLoss ext(f0, k0, delta, config_.kappa.value_or(g), config_.prox);
    const Point x = h_.raw(s.context, h_.stages());
    return {LinearLoss{ext.gradient(x)}, s.context};
  }

  SampleOracle& base_;
  const BoostedHypothesis& h_;
  const B4coConfig& config_;
  double gamma_;
  std::size_t draws_ = 0;
};

}  // namespace

B4coResult b4co(SampleOracle& oracle, WeakOptimizer& wopt, const DecisionSet& set,
                const B4coConfig& config) {
  if (config.n_stages < 1) throw ConfigError("b4co: N must be at least 1");
  if (config.stage_budget < 1) throw ConfigError("b4co: stage budget must be at least 1");
  const double gamma = wopt.gamma();
  const std::size_t d = set.dim();
  StageHypothesis initial = config.initial.value_or(StageHypothesis{
      "centroid", [d](const Context&) -> Point { return Point::Zero(static_cast<Eigen::Index>(d)); }});
  B4coResult result{BoostedHypothesis(set, gamma, std::move(initial)), {}, 0};
  for (int i = 1; i <= config.n_stages; ++i) {
    LiftedOracle lifted(oracle, result.hypothesis, config, gamma);
    StageHypothesis stage;
    try {
      stage = wopt.solve(lifted, config.stage_budget);
    } catch (const std::exception& e) {
      throw StageFailure(i, e.what());
    }
    if (!stage.apply) throw StageFailure(i, "weak optimizer returned an empty hypothesis");
    result.samples_used += lifted.draws();
    result.stage_epsilon.push_back(wopt.epsilon(config.stage_budget));
    result.hypothesis.add_stage(std::move(stage));
  }
  return result;
}

PopulationEstimate population_loss(const std::function<Point(const Context&)>& h,
                                   SampleOracle& oracle, std::size_t n_samples) {
  if (n_samples < 2) throw ContractViolation("population_loss: need at least two samples");
  // Welford's running mean and variance.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 1; k <= n_samples; ++k) {
    const Sample s = oracle.draw();
    const double v = s.loss.eval(h(s.context));
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(n_samples);
  return {mean, std::sqrt(m2 / (n - 1.0) / n), n_samples};
}

double population_loss(const std::function<Point(const Context&)>& h,
                       const FiniteSupport<Sample>& support) {
  double total = 0.0;
  for (std::size_t k = 0; k < support.atoms.size(); ++k) {
    const auto& a = support.atoms[k];
    total += support.probabilities[k] * a.loss.eval(h(a.context));
  }
  return total;
}

}  // namespace oboost
