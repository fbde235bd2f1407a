#include "oboost/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/errors.hpp"

namespace oboost {

void require_finite(const Point& x, const char* what) {
  if (!x.allFinite()) throw NonFiniteError(fmt::format("{}: non-finite entry", what));
}

void require_dim(const Point& x, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw ContractViolation(
        fmt::format("{}: dimension {} does not match expected {}", what, x.size(), dim));
  }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Point simplex_vertex(const Simplex& s, std::size_t i) {
  Point v = s.offset;
  v[static_cast<Eigen::Index>(i)] += s.scale;
  return v;
}

}  // namespace

Point project_to_simplex(const Point& x) {
  const auto n = x.size();
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (x.array() - theta).max(0.0).matrix();
}

DecisionSet DecisionSet::ball(Point center, double radius) {
  require_finite(center, "ball center");
  if (center.size() == 0) throw ConfigError("ball: dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball: radius must be positive");
  return DecisionSet(Ball{std::move(center), radius});
}

DecisionSet DecisionSet::box(Point lo, Point hi) {
  if (lo.size() == 0 || lo.size() != hi.size()) {
    throw ConfigError("box: bounds must have equal positive length");
  }
  require_finite(lo, "box lower bound");
  require_finite(hi, "box upper bound");
  if ((hi.array() < lo.array()).any()) throw ConfigError("box: lower bound exceeds upper bound");
  if ((hi - lo).norm() <= 0.0) throw ConfigError("box: degenerate (zero diameter)");
  return DecisionSet(Box{std::move(lo), std::move(hi)});
}

DecisionSet DecisionSet::interval(double lo, double hi) {
  return box(Point::Constant(1, lo), Point::Constant(1, hi));
}

DecisionSet DecisionSet::simplex(std::size_t dim) {
  if (dim < 2) throw ConfigError("simplex: dimension must be at least 2");
  return DecisionSet(Simplex{dim, 1.0, Point::Zero(static_cast<Eigen::Index>(dim))});
}

DecisionSet DecisionSet::custom(std::size_t dim, Projector projector, double diameter,
                                Point centroid) {
  if (dim == 0) throw ConfigError("custom set: dimension must be positive");
  if (!projector) throw ConfigError("custom set: projection oracle required");
  if (!(diameter > 0.0) || !std::isfinite(diameter)) {
    throw ConfigError("custom set: diameter must be supplied and positive");
  }
  require_dim(centroid, dim, "custom set centroid");
  require_finite(centroid, "custom set centroid");
  return DecisionSet(CustomSet{dim, std::move(projector), diameter, std::move(centroid), 1.0,
                               Point::Zero(static_cast<Eigen::Index>(dim))});
}

SetKind DecisionSet::kind() const {
  return std::visit(overloaded{[](const Ball&) { return SetKind::ball; },
                               [](const Box&) { return SetKind::box; },
                               [](const Simplex&) { return SetKind::simplex; },
                               [](const CustomSet&) { return SetKind::custom; }},
                    shape_);
}

std::size_t DecisionSet::dim() const {
  return std::visit(
      overloaded{[](const Ball& b) { return static_cast<std::size_t>(b.center.size()); },
                 [](const Box& b) { return static_cast<std::size_t>(b.lo.size()); },
                 [](const Simplex& s) { return s.dim; },
                 [](const CustomSet& c) { return c.dim; }},
      shape_);
}

double DecisionSet::diameter() const {
  return std::visit(overloaded{[](const Ball& b) { return 2.0 * b.radius; },
                               [](const Box& b) { return (b.hi - b.lo).norm(); },
                               [](const Simplex& s) { return s.scale * std::sqrt(2.0); },
                               [](const CustomSet& c) { return c.scale * c.diameter; }},
                    shape_);
}

Point DecisionSet::centroid() const {
  return std::visit(
      overloaded{[](const Ball& b) -> Point { return b.center; },
                 [](const Box& b) -> Point { return 0.5 * (b.lo + b.hi); },
                 [](const Simplex& s) -> Point {
                   return s.offset.array() + s.scale / static_cast<double>(s.dim);
                 },
                 [](const CustomSet& c) -> Point { return c.scale * c.centroid + c.offset; }},
      shape_);
}

Point DecisionSet::project(const Point& x) const {
  require_dim(x, dim(), "project");
  require_finite(x, "project");
  return std::visit(
      overloaded{[&](const Ball& b) -> Point {
                   const Point v = x - b.center;
                   const double n = v.norm();
                   if (n <= b.radius) return x;
                   return b.center + (b.radius / n) * v;
                 },
                 [&](const Box& b) -> Point { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
                 [&](const Simplex& s) -> Point {
                   return s.scale * project_to_simplex((x - s.offset) / s.scale) + s.offset;
                 },
                 [&](const CustomSet& c) -> Point {
                   Point p = c.projector((x - c.offset) / c.scale);
                   require_dim(p, c.dim, "custom projector output");
                   return c.scale * p + c.offset;
                 }},
      shape_);
}

double DecisionSet::distance(const Point& x) const { return (x - project(x)).norm(); }

bool DecisionSet::contains(const Point& x, double tol) const { return distance(x) <= tol; }

DecisionSet DecisionSet::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("scale: factor must be positive");
  return DecisionSet(std::visit(
      overloaded{[c](const Ball& b) -> Shape { return Ball{c * b.center, c * b.radius}; },
                 [c](const Box& b) -> Shape { return Box{c * b.lo, c * b.hi}; },
                 [c](const Simplex& s) -> Shape {
                   return Simplex{s.dim, c * s.scale, c * s.offset};
                 },
                 [c](const CustomSet& s) -> Shape {
                   CustomSet out = s;
                   out.scale = c * s.scale;
                   out.offset = c * s.offset;
                   return out;
                 }},
      shape_));
}

DecisionSet DecisionSet::translated(const Point& v) const {
  require_dim(v, dim(), "translate");
  require_finite(v, "translate");
  return DecisionSet(std::visit(
      overloaded{[&](const Ball& b) -> Shape { return Ball{b.center + v, b.radius}; },
                 [&](const Box& b) -> Shape { return Box{b.lo + v, b.hi + v}; },
                 [&](const Simplex& s) -> Shape { return Simplex{s.dim, s.scale, s.offset + v}; },
                 [&](const CustomSet& s) -> Shape {
                   CustomSet out = s;
                   out.offset = s.offset + v;
                   return out;
                 }},
      shape_));
}

double DecisionSet::max_distance_from(const Point& y) const {
  require_dim(y, dim(), "max_distance_from");
  return std::visit(
      overloaded{[&](const Ball& b) { return (y - b.center).norm() + b.radius; },
                 [&](const Box& b) {
                   return (y - b.lo).cwiseAbs().cwiseMax((y - b.hi).cwiseAbs()).norm();
                 },
                 [&](const Simplex& s) {
                   double best = 0.0;
                   for (std::size_t i = 0; i < s.dim; ++i) {
                     best = std::max(best, (y - simplex_vertex(s, i)).norm());
                   }
                   return best;
                 },
                 [&](const CustomSet&) { return (y - centroid()).norm() + diameter(); }},
      shape_);
}

double DecisionSet::support(const Point& g) const {
  require_dim(g, dim(), "support");
  return std::visit(
      overloaded{[&](const Ball& b) { return g.dot(b.center) + b.radius * g.norm(); },
                 [&](const Box& b) {
                   return g.cwiseProduct(b.lo).cwiseMax(g.cwiseProduct(b.hi)).sum();
                 },
                 [&](const Simplex& s) { return s.scale * g.maxCoeff() + g.dot(s.offset); },
                 [&](const CustomSet&) { return g.dot(centroid()) + g.norm() * diameter(); }},
      shape_);
}

Recentered recenter(const DecisionSet& set) {
  Point offset = set.centroid();
  return {set.translated(-offset), std::move(offset)};
}

DecisionSet make_set(const SetConfig& config) {
  if (config.kind == "ball") return DecisionSet::ball(config.center, config.radius);
  if (config.kind == "box") return DecisionSet::box(config.lo, config.hi);
  if (config.kind == "interval") return DecisionSet::interval(config.lo1, config.hi1);
  if (config.kind == "simplex") return DecisionSet::simplex(config.dim);
  if (config.kind == "custom") {
    if (!config.diameter || !config.centroid) {
      throw ConfigError("custom set: diameter and centroid must be supplied explicitly");
    }
    return DecisionSet::custom(config.dim, config.projector, *config.diameter, *config.centroid);
  }
  throw ConfigError(fmt::format("unknown set kind '{}'", config.kind));
}

namespace {

Point point_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ConfigError(fmt::format("set config: '{}' must be an array", field));
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) p[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return p;
}

}  // namespace

DecisionSet set_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("set config: missing 'kind'");
  SetConfig c;
  c.kind = j.at("kind").get<std::string>();
  try {
    if (c.kind == "ball") {
      c.radius = j.value("radius", 1.0);
      if (j.contains("center")) {
        c.center = point_from_json(j.at("center"), "center");
      } else {
        c.center = Point::Zero(j.at("dim").get<Eigen::Index>());
      }
    } else if (c.kind == "box") {
      c.lo = point_from_json(j.at("lo"), "lo");
      c.hi = point_from_json(j.at("hi"), "hi");
    } else if (c.kind == "interval") {
      c.lo1 = j.at("lo").get<double>();
      c.hi1 = j.at("hi").get<double>();
    } else if (c.kind == "simplex") {
      c.dim = j.at("dim").get<std::size_t>();
    } else if (c.kind == "custom") {
      throw ConfigError("set config: custom sets need an in-process projection oracle");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("set config: {}", e.what()));
  }
  return make_set(c);
}

}  // namespace oboost
