#include "oboost/weak.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/errors.hpp"
#include "oboost/rng.hpp"

namespace oboost {

std::uint64_t context_hash(const Context& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : c.features) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

WeakLearner::WeakLearner(DecisionSet set, double gamma, std::size_t feature_dim)
    : set_(std::move(set)), gamma_(gamma), feature_dim_(feature_dim) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError(fmt::format("weak learner: gamma {} outside (0, 1]", gamma));
  }
}

Point WeakLearner::predict(const Context& c) const {
  require_dim(c.features, feature_dim_, "weak learner context");
  require_finite(c.features, "weak learner context");
  Point x = do_predict(c);
  if (!x.allFinite()) throw NonFiniteError(fmt::format("{}: non-finite prediction", name()));
  return set_.project(x);
}

void WeakLearner::update(const Context& c, const LinearLoss& loss) {
  require_dim(loss.direction, action_dim(), "weak learner loss");
  require_finite(loss.direction, "weak learner loss");
  cumulative_loss_ += loss.value(predict(c));
  do_update(c, loss);
  ++rounds_;
}

void WeakLearner::reset() {
  rounds_ = 0;
  cumulative_loss_ = 0.0;
  do_reset();
}

// ---- uniform ----

UniformBaseline::UniformBaseline(DecisionSet set, double gamma, std::size_t feature_dim)
    : WeakLearner(std::move(set), gamma, feature_dim) {}

std::unique_ptr<WeakLearner> UniformBaseline::clone() const {
  return std::make_unique<UniformBaseline>(*this);
}

Point UniformBaseline::do_predict(const Context&) const { return set().centroid(); }

// ---- ridge ----

namespace {

void check_gradient_options(const GradientOptions& o, const char* who) {
  if (!(o.step > 0.0) || !std::isfinite(o.step)) {
    throw ConfigError(fmt::format("{}: step must be positive", who));
  }
  if (!(o.l2 >= 0.0) || !std::isfinite(o.l2)) {
    throw ConfigError(fmt::format("{}: l2 must be non-negative", who));
  }
}

}  // namespace

LinearPolicy::LinearPolicy(DecisionSet set, double gamma, std::size_t feature_dim,
                           GradientOptions options)
    : WeakLearner(std::move(set), gamma, feature_dim), options_(options) {
  check_gradient_options(options_, "ridge");
  do_reset();
}

std::unique_ptr<WeakLearner> LinearPolicy::clone() const {
  return std::make_unique<LinearPolicy>(*this);
}

Point LinearPolicy::do_predict(const Context& c) const { return weights_ * c.features + bias_; }

void LinearPolicy::do_update(const Context& c, const LinearLoss& loss) {
  const Point& g = loss.direction;
  // No gradient, no step (the decay rides along with gradient steps only).
  if (g.isZero(0.0)) return;
  weights_ -= options_.step * (g * c.features.transpose() + options_.l2 * weights_);
  bias_ -= options_.step * g;
}

void LinearPolicy::do_reset() {
  const auto d = static_cast<Eigen::Index>(action_dim());
  const auto p = static_cast<Eigen::Index>(feature_dim());
  weights_ = Eigen::MatrixXd::Zero(d, p);
  bias_ = Point::Zero(d);
}

// ---- mlp ----

TinyMlp::TinyMlp(DecisionSet set, double gamma, std::size_t feature_dim, GradientOptions options,
                 std::uint64_t seed)
    : WeakLearner(std::move(set), gamma, feature_dim), options_(options), seed_(seed) {
  check_gradient_options(options_, "mlp");
  do_reset();
}

std::unique_ptr<WeakLearner> TinyMlp::clone() const { return std::make_unique<TinyMlp>(*this); }

Point TinyMlp::raw(const Context& c, double* hidden) const {
  const double s = std::tanh(in_weights_.dot(c.features) + in_bias_);
  if (hidden != nullptr) *hidden = s;
  return s * out_weights_ + out_bias_;
}

Point TinyMlp::do_predict(const Context& c) const { return raw(c, nullptr); }

void TinyMlp::do_update(const Context& c, const LinearLoss& loss) {
  const Point& g = loss.direction;
  if (g.isZero(0.0)) return;
  double s = 0.0;
  raw(c, &s);
  const double back = g.dot(out_weights_) * (1.0 - s * s);
  const double eta = options_.step;
  out_weights_ -= eta * (s * g + options_.l2 * out_weights_);
  out_bias_ -= eta * g;
  in_weights_ -= eta * (back * c.features + options_.l2 * in_weights_);
  in_bias_ -= eta * back;
}

void TinyMlp::do_reset() {
  const auto p = static_cast<Eigen::Index>(feature_dim());
  Rng rng(derive_seed(seed_, 0x6d6c70));
  in_weights_.resize(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(p, 1)));
  for (auto& v : in_weights_) v = scale * rng.normal();
  in_bias_ = 0.0;
  out_weights_ = Point::Zero(static_cast<Eigen::Index>(action_dim()));
  out_bias_ = Point::Zero(static_cast<Eigen::Index>(action_dim()));
}

// ---- stump ----

DecisionStump::DecisionStump(DecisionSet set, double gamma, std::size_t feature_dim,
                             StumpOptions options)
    : WeakLearner(std::move(set), gamma, feature_dim), options_(options) {
  if (options_.bins < 2) throw ConfigError("stump: bins must be at least 2");
  if (options_.warmup < 1) throw ConfigError("stump: warmup must be at least 1");
  if (feature_dim == 0) throw ConfigError("stump: needs at least one feature");
  check_gradient_options({options_.step, options_.l2}, "stump");
  do_reset();
}

std::unique_ptr<WeakLearner> DecisionStump::clone() const {
  return std::make_unique<DecisionStump>(*this);
}

std::pair<Point, std::size_t> DecisionStump::cell(std::size_t feature, int bin) const {
  if (feature >= feature_dim() || bin < 0 || bin >= options_.bins) {
    throw ContractViolation("stump: cell index out of range");
  }
  const std::size_t k = feature * static_cast<std::size_t>(options_.bins) + static_cast<std::size_t>(bin);
  return {sums_[k], counts_[k]};
}

int DecisionStump::bin_of(std::size_t feature, double value) const {
  const auto& e = edges_[feature];
  return static_cast<int>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
}

Point DecisionStump::leaf(const Point& sum, std::size_t count) const {
  const double c = options_.l2 * static_cast<double>(count) + 1.0 / options_.step;
  return set().project(-sum / c);
}

double DecisionStump::leaf_objective(const Point& sum, std::size_t count) const {
  const double c = options_.l2 * static_cast<double>(count) + 1.0 / options_.step;
  const Point v = leaf(sum, count);
  return sum.dot(v) + 0.5 * c * v.squaredNorm();
}

void DecisionStump::accumulate(const Context& c, const Point& g) {
  const auto bins = static_cast<std::size_t>(options_.bins);
  for (std::size_t j = 0; j < feature_dim(); ++j) {
    const std::size_t k = j * bins + static_cast<std::size_t>(bin_of(j, c.features[static_cast<Eigen::Index>(j)]));
    sums_[k] += g;
    counts_[k] += 1;
  }
}

void DecisionStump::refresh_split() {
  const auto bins = static_cast<std::size_t>(options_.bins);
  const auto d = static_cast<Eigen::Index>(action_dim());
  double best = std::numeric_limits<double>::infinity();
  Point total = Point::Zero(d);
  std::size_t total_n = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    total += sums_[b];
    total_n += counts_[b];
  }
  for (std::size_t j = 0; j < feature_dim(); ++j) {
    Point left = Point::Zero(d);
    std::size_t left_n = 0;
    for (std::size_t b = 0; b + 1 < bins; ++b) {
      left += sums_[j * bins + b];
      left_n += counts_[j * bins + b];
      const Point right = total - left;
      const std::size_t right_n = total_n - left_n;
      const double obj = leaf_objective(left, left_n) + leaf_objective(right, right_n);
      if (obj < best) {
        best = obj;
        split_feature_ = j;
        split_bin_ = static_cast<int>(b);
        left_leaf_ = leaf(left, left_n);
        right_leaf_ = leaf(right, right_n);
      }
    }
  }
}

Point DecisionStump::do_predict(const Context& c) const {
  if (!warmed_up()) return Point::Zero(static_cast<Eigen::Index>(action_dim()));
  const int b = bin_of(split_feature_, c.features[static_cast<Eigen::Index>(split_feature_)]);
  return b <= split_bin_ ? left_leaf_ : right_leaf_;
}

void DecisionStump::do_update(const Context& c, const LinearLoss& loss) {
  if (warmed_up()) {
    accumulate(c, loss.direction);
    refresh_split();
    return;
  }
  buffer_.emplace_back(c, loss.direction);
  if (buffer_.size() < static_cast<std::size_t>(options_.warmup)) return;

  const std::size_t n = buffer_.size();
  const auto bins = static_cast<std::size_t>(options_.bins);
  edges_.assign(feature_dim(), {});
  std::vector<double> column(n);
  for (std::size_t j = 0; j < feature_dim(); ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = buffer_[i].first.features[static_cast<Eigen::Index>(j)];
    std::sort(column.begin(), column.end());
    for (std::size_t k = 1; k < bins; ++k) {
      edges_[j].push_back(column[std::min(n - 1, k * n / bins)]);
    }
  }
  for (const auto& [ctx, g] : buffer_) accumulate(ctx, g);
  buffer_.clear();
  buffer_.shrink_to_fit();
  refresh_split();
}

void DecisionStump::do_reset() {
  const auto d = static_cast<Eigen::Index>(action_dim());
  const std::size_t cells = feature_dim() * static_cast<std::size_t>(options_.bins);
  buffer_.clear();
  edges_.clear();
  sums_.assign(cells, Point::Zero(d));
  counts_.assign(cells, 0);
  split_feature_ = 0;
  split_bin_ = 0;
  left_leaf_ = right_leaf_ = Point::Zero(d);
}

// ---- synthetic oracle ----

SyntheticGammaOracle::SyntheticGammaOracle(DecisionSet set, double gamma, std::size_t feature_dim,
                                           std::vector<Hypothesis> hypotheses, OracleRule rule,
                                           double loss_scale)
    : WeakLearner(std::move(set), gamma, feature_dim),
      hypotheses_(std::move(hypotheses)),
      rule_(rule),
      loss_scale_(loss_scale) {
  if (hypotheses_.empty()) throw ConfigError("synthetic_oracle: empty hypothesis class");
  if (!(loss_scale_ > 0.0) || !std::isfinite(loss_scale_)) {
    throw ConfigError("synthetic_oracle: loss_scale must be positive");
  }
  do_reset();
}

std::unique_ptr<WeakLearner> SyntheticGammaOracle::clone() const {
  return std::make_unique<SyntheticGammaOracle>(*this);
}

Eigen::VectorXd SyntheticGammaOracle::mixture_weights() const {
  const auto m = static_cast<Eigen::Index>(hypotheses_.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  if (rule_ == OracleRule::follow_the_leader) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m; ++j) {
      if (losses_[j] < losses_[best]) best = j;
    }
    w[best] = 1.0;
    return w;
  }
  const double t = static_cast<double>(rounds() + 1);
  const double eta = std::sqrt(8.0 * std::log(static_cast<double>(m)) / t) / loss_scale_;
  const double lo = losses_.minCoeff();
  for (Eigen::Index j = 0; j < m; ++j) w[j] = std::exp(-eta * (losses_[j] - lo));
  return w / w.sum();
}

Point SyntheticGammaOracle::do_predict(const Context& c) const {
  const Eigen::VectorXd w = mixture_weights();
  Point x = Point::Zero(static_cast<Eigen::Index>(action_dim()));
  for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
    if (w[static_cast<Eigen::Index>(j)] == 0.0) continue;
    const Point h = hypotheses_[j](c);
    require_dim(h, action_dim(), "synthetic_oracle hypothesis");
    x += w[static_cast<Eigen::Index>(j)] * h;
  }
  return gamma() * x;
}

void SyntheticGammaOracle::do_update(const Context& c, const LinearLoss& loss) {
  for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
    losses_[static_cast<Eigen::Index>(j)] += loss.value(hypotheses_[j](c));
  }
}

void SyntheticGammaOracle::do_reset() {
  losses_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hypotheses_.size()));
}

// ---- construction ----

LearnerSpec learner_spec_from_json(const nlohmann::json& j) {
  LearnerSpec s;
  try {
    s.kind = j.value("kind", s.kind);
    s.gamma = j.value("gamma", s.gamma);
    s.step = j.value("step", s.step);
    s.l2 = j.value("l2", s.l2);
    s.bins = j.value("bins", s.bins);
    s.warmup = j.value("warmup", s.warmup);
    s.seed = j.value("seed", s.seed);
    s.loss_scale = j.value("loss_scale", s.loss_scale);
    const std::string rule = j.value("rule", std::string("hedge"));
    if (rule == "hedge") {
      s.rule = OracleRule::hedge;
    } else if (rule == "ftl") {
      s.rule = OracleRule::follow_the_leader;
    } else {
      throw ConfigError(fmt::format("learner: unknown oracle rule '{}'", rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("learner config: {}", e.what()));
  }
  return s;
}

std::unique_ptr<WeakLearner> make_learner(const LearnerSpec& spec, const DecisionSet& set,
                                          std::size_t feature_dim,
                                          std::optional<std::uint64_t> seed) {
  const std::uint64_t s = seed.value_or(spec.seed);
  if (spec.kind == "stump") {
    return std::make_unique<DecisionStump>(set, spec.gamma, feature_dim,
                                           StumpOptions{spec.bins, spec.warmup, spec.step, spec.l2});
  }
  if (spec.kind == "ridge") {
    return std::make_unique<LinearPolicy>(set, spec.gamma, feature_dim,
                                          GradientOptions{spec.step, spec.l2});
  }
  if (spec.kind == "mlp") {
    return std::make_unique<TinyMlp>(set, spec.gamma, feature_dim,
                                     GradientOptions{spec.step, spec.l2}, s);
  }
  if (spec.kind == "uniform") return std::make_unique<UniformBaseline>(set, spec.gamma, feature_dim);
  if (spec.kind == "synthetic_oracle") {
    return std::make_unique<SyntheticGammaOracle>(set, spec.gamma, feature_dim, spec.hypotheses,
                                                  spec.rule, spec.loss_scale);
  }
  throw ConfigError(fmt::format("learner: unknown kind '{}'", spec.kind));
}

double empirical_gamma_regret(WeakLearner& learner, const std::vector<TranscriptRound>& transcript,
                              const std::vector<Hypothesis>& comparators) {
  if (transcript.empty()) throw ContractViolation("empirical_gamma_regret: empty transcript");
  if (comparators.empty()) throw ContractViolation("empirical_gamma_regret: empty comparator class");
  double realized = 0.0;
  Eigen::VectorXd base = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comparators.size()));
  for (const auto& r : transcript) {
    realized += r.loss.value(learner.predict(r.context));
    for (std::size_t j = 0; j < comparators.size(); ++j) {
      base[static_cast<Eigen::Index>(j)] += r.loss.value(comparators[j](r.context));
    }
    learner.update(r.context, r.loss);
  }
  return realized - learner.gamma() * base.minCoeff();
}

}  // namespace oboost
