// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance              run every criterion
//   acceptance --criterion K

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "instances.hpp"
#include "oboost/bench.hpp"
#include "oboost/boblo.hpp"
#include "oboost/booco.hpp"
#include "oboost/extension.hpp"
#include "oboost/scenarios.hpp"
#include "testkit.hpp"

using namespace oboost;
using testkit::random_point;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kSolverTol = ProxOptions{}.tol;

// 1. Extension approximation on K and near-monotonicity of projection outside.
Verdict extension_operator() {
  Rng rng(1001);
  double worst_in = -1e300, worst_out = -1e300;
  int bad = 0;
  for (const auto& fam : testkit::small_set_families()) {
    for (int i = 0; i < 1000; ++i) {
      const bool square = i % 2 == 0;
      const auto f = testkit::random_loss(rng, fam.set.dim(), square);
      // G covers everything within 2 of K; delta keeps the prox displacement 2 G delta <= 1.
      const double g = lipschitz_bound(f, fam.set, 2.0);
      const double delta = rng.uniform(0.01, std::min(0.5, 0.5 / g));
      const ExtendedLoss e(f, fam.set, delta, g);

      Point x = fam.set.centroid() + random_point(rng, fam.set.dim(), fam.set.diameter());
      x = fam.set.project(x);
      const double in = std::abs(e.value(x) - f.eval(x)) - (delta * g * g / 2.0 + 10 * kSolverTol);
      worst_in = std::max(worst_in, in);

      const Point z = testkit::random_exterior(rng, fam.set, 1.0);
      const double out = e.value(fam.set.project(z)) - e.value(z) - (g * g * delta + 10 * kSolverTol);
      worst_out = std::max(worst_out, out);
      if (in > 0.0 || out > 0.0) ++bad;
    }
  }
  return {bad == 0, fmt::format("{} violations over 3000 pairs; worst margins {:.3g} (on K), {:.3g} (exterior)",
                                bad, worst_in, worst_out)};
}

// 2. Moreau gradient against finite differences, value against the grid oracle.
Verdict moreau_gradient() {
  Rng rng(1002);
  const auto fams = testkit::small_set_families();
  int bad_grad = 0;
  double worst_rel = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto& fam = fams[static_cast<std::size_t>(i) % fams.size()];
    const auto f = testkit::random_loss(rng, fam.set.dim(), i % 2 == 0);
    const double kappa = lipschitz_bound(f, fam.set, 3.0);
    const double delta = rng.uniform(0.05, 0.5);
    const ExtendedLoss e(f, fam.set, delta, kappa);
    const Point x = fam.set.centroid() + random_point(rng, fam.set.dim(), 2.5);
    const Point fd = testkit::finite_diff_grad([&](const Point& y) { return e.value(y); }, x);
    const Point g = e.gradient(x);
    // Relative error, with the denominator floored at 1 for near-stationary points.
    const double rel = (fd - g).norm() / std::max(1.0, g.norm());
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-3) ++bad_grad;
  }
  int bad_value = 0;
  double worst_excess = -1e300;
  for (int i = 0; i < 50; ++i) {
    const auto& fam = fams[static_cast<std::size_t>(i) % fams.size()];
    const std::size_t d = fam.set.dim();
    const auto f = testkit::random_loss(rng, d, i % 2 == 0);
    const double kappa = lipschitz_bound(f, fam.set, 3.0);
    const double delta = rng.uniform(0.2, 0.5);
    const ExtendedLoss e(f, fam.set, delta, kappa);
    const Point c = fam.set.centroid();
    const Point x = c + random_point(rng, d, 1.5);
    testkit::GridSpec grid{c.array() - 4.0, c.array() + 4.0, 401};
    auto composite = [&](const Point& y) { return f.eval(y) + kappa * fam.set.distance(y); };
    const auto oracle = testkit::grid_moreau(composite, delta, x, grid);
    // Nearest node is within h sqrt(d)/2 of the minimizer; the objective there
    // rises by at most L h sqrt(d) + d h^2 / (8 delta) with L the composite slope.
    const double h = grid.spacing();
    const double slope = lipschitz_bound(f, fam.set, 4.0) + kappa;
    const double cert = slope * h * std::sqrt(double(d)) + double(d) * h * h / (8.0 * delta);
    const double v = e.value(x);
    const double excess = std::max(oracle.value - v - cert, v - oracle.value) - 10 * kSolverTol;
    worst_excess = std::max(worst_excess, excess);
    if (oracle.on_boundary || excess > 0.0) ++bad_value;
  }
  return {bad_grad == 0 && bad_value == 0,
          fmt::format("gradient: {} of 200 above 1e-3 (worst {:.2e}); value: {} of 50 outside the grid "
                      "certificate (worst margin {:.3g})",
                      bad_grad, worst_rel, bad_value, worst_excess)};
}

// 3. Frank-Wolfe recursion bound, exactly.
Verdict fw_recursion() {
  std::string detail;
  bool ok = true;
  for (double c : {0.1, 1.0, 10.0}) {
    const auto h = testkit::recursion_sim(c, 100000);
    const auto v = testkit::recursion_violation(h, c);
    if (v) ok = false;
    detail += fmt::format("c={}: {}  ", c, v ? fmt::format("violated at t={}", *v) : std::string("holds"));
  }
  return {ok, detail + "(t <= 1e5)"};
}

// 4. Distance 1-Lipschitz and projection non-expansive.
Verdict distance_lipschitz() {
  Rng rng(1004);
  auto fams = testkit::small_set_families();
  fams.push_back({"simplex4", DecisionSet::simplex(4)});
  fams.push_back({"ball5d", DecisionSet::ball(Point::Constant(5, 0.3), 2.0)});
  int bad = 0;
  double worst = -1e300;
  for (const auto& fam : fams) {
    const std::size_t d = fam.set.dim();
    for (int i = 0; i < 10000; ++i) {
      const double scale = i % 3 == 0 ? 0.5 : 4.0;
      const Point x = fam.set.centroid() + random_point(rng, d, scale);
      const Point y = fam.set.centroid() + random_point(rng, d, scale);
      const double r = (x - y).norm();
      const double a = std::abs(fam.set.distance(x) - fam.set.distance(y)) - r;
      const double b = (fam.set.project(x) - fam.set.project(y)).norm() - r;
      worst = std::max({worst, a, b});
      if (a > 1e-12 || b > 1e-12) ++bad;
    }
  }
  return {bad == 0, fmt::format("{} violations over {} pairs (worst excess {:.3g})", bad,
                                10000 * fams.size(), worst)};
}

// 5. Unbiasedness of the one-point estimate, by exact enumeration.
Verdict bandit_unbiased() {
  Rng rng(1005);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 1 + rng.index(16);
    const double eta = rng.uniform(0.01, 1.0);
    const Point f = random_point(rng, d, 5.0);
    // Enumerate the library estimator: no exploration, or coordinate j with mass eta/d.
    Point mean = (1.0 - eta) * one_point_estimate(d, eta, false, 0, 0.0).direction;
    for (std::size_t j = 0; j < d; ++j) {
      mean += (eta / double(d)) * one_point_estimate(d, eta, true, j, f[static_cast<Eigen::Index>(j)]).direction;
    }
    const Point oracle = testkit::bandit_expectation(f, eta);
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    const double err = std::max((mean - f).cwiseAbs().maxCoeff(), (oracle - f).cwiseAbs().maxCoeff()) / scale;
    worst = std::max(worst, err);
    if (err > 8 * std::numeric_limits<double>::epsilon()) ++bad;
  }
  return {bad == 0, fmt::format("{} of 100 triples off by more than 8 ulp (worst {:.2e} relative)", bad, worst)};
}

// 6. BoOCO regret against the hull of H.
Verdict booco_regret() {
  const int seeds = 10, horizon = 5000;
  std::vector<double> means;
  int over = 0;
  double worst_ratio = 0.0, worst_disagree = 0.0;
  std::string detail;
  for (int n : {4, 16, 64}) {
    double mean = 0.0;
    double bound = 0.0;
    for (int s = 0; s < seeds; ++s) {
      scenarios::OcoScenario sc{n, 0.5, horizon, static_cast<std::uint64_t>(s), true};
      const auto o = scenarios::run_oco(sc);
      const auto hull = testkit::hull_optimum(o.problem->outputs, o.problem->losses);
      const double regret = o.realized - hull.value;
      worst_disagree = std::max(worst_disagree, std::abs(regret - o.regret));
      worst_ratio = std::max(worst_ratio, regret / (2.0 * o.bound));
      if (regret > 2.0 * o.bound || !hull.converged) ++over;
      mean += regret / seeds;
      bound = o.bound;
    }
    means.push_back(mean);
    detail += fmt::format("N={}: mean regret {:.2f} (2x bound {:.0f}); ", n, mean, 2.0 * bound);
  }
  const double ratio = means.back() / means.front();
  const bool ok = over == 0 && ratio <= 0.6;
  return {ok, detail + fmt::format("N=64/N=4 = {:.3f} (need <= 0.6); worst regret/(2 bound) {:.2e}; "
                                   "library vs oracle hull {:.1e}",
                                   ratio, worst_ratio, worst_disagree)};
}

// 7. BoBLO regret growth with the automatic exploration rate.
Verdict boblo_sublinear() {
  const int seeds = 20;
  auto mean_regret = [&](int horizon, double* eta) {
    double mean = 0.0;
    for (int s = 0; s < seeds; ++s) {
      scenarios::BanditScenario sc;
      sc.n_learners = 16;
      sc.gamma = 0.5;
      sc.horizon = horizon;
      sc.seed = static_cast<std::uint64_t>(s);
      sc.keep_problem = true;
      const auto o = scenarios::run_bandit(sc);
      const auto hull = testkit::hull_optimum(o.problem->outputs, o.problem->losses);
      mean += (o.realized - hull.value) / seeds;
      *eta = o.explore_rate;
    }
    return mean;
  };
  double eta2 = 0, eta4 = 0, eta8 = 0;
  const double r2 = mean_regret(2000, &eta2), r4 = mean_regret(4000, &eta4), r8 = mean_regret(8000, &eta8);
  const double a = r4 / r2, b = r8 / r4;
  return {a <= 1.9 && b <= 1.9,
          fmt::format("mean regret T=2000: {:.1f}, 4000: {:.1f}, 8000: {:.1f}; ratios {:.3f}, {:.3f} "
                      "(need <= 1.9); explore rate {:.3f}/{:.3f}/{:.3f}",
                      r2, r4, r8, a, b, eta2, eta4, eta8)};
}

// 8. B4CO population gap against the hull optimum.
Verdict b4co_endpoint() {
  const auto in = scenarios::sco_instance();
  std::vector<std::vector<Point>> outputs;
  std::vector<ConvexLoss> losses;
  for (std::size_t a = 0; a < in.atoms.size(); ++a) {
    std::vector<Point> row;
    for (const auto& h : in.hypotheses) row.push_back(h(in.atoms[a].context));
    outputs.push_back(row);
    losses.push_back(in.atoms[a].loss.scaled(in.probabilities[a]));
  }
  const auto opt = testkit::hull_optimum(outputs, losses, 1e-10, 0.01);
  bool ok = opt.converged && opt.grid_value && *opt.grid_value >= opt.value - 1e-12;
  std::string detail = fmt::format("hull optimum {:.6f}; ", opt.value);
  for (double gamma : {0.5, 1.0}) {
    double first = 0.0, last = 0.0;
    for (int n : {16, 64, 256}) {
      const auto o = scenarios::run_sco({n, gamma});
      const double gap = o.value - opt.value;
      const double bound = 2.0 * (4.0 * o.lipschitz * 2.0 / (gamma * std::sqrt(double(n)))) +
                           (2.0 * o.lipschitz * 2.0 / gamma) * o.epsilon;
      if (gap > bound) ok = false;
      if (n == 16) first = gap;
      last = gap;
      detail += fmt::format("g={} N={}: gap {:.2e} (bound {:.2f}); ", gamma, n, gap, bound);
    }
    if (last > 0.6 * first) ok = false;
    detail += fmt::format("g={} N=256/N=16 = {:.2e}; ", gamma, last / first);
  }
  return {ok, detail};
}

bench::ExperimentConfig table_config(const std::string& dataset, const std::string& learner) {
  bench::ExperimentConfig c;
  c.dataset = dataset;
  c.learner = learner;
  return c;
}

struct TableCheck {
  bool pass = false;
  std::string detail;
};

TableCheck check_table(const bench::ExperimentResult& r, double min_improvement) {
  const auto& v = r.normalized;
  bool trend = true;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] > v[j - 1] + r.pooled_standard_error) trend = false;
  }
  const bool below = v.back() < 1.0;
  const bool improves = r.improvement >= min_improvement;
  std::string cells;
  for (std::size_t j = 0; j < v.size(); ++j) cells += fmt::format("{}{:.3f}", j ? " " : "", v[j]);
  return {below && trend && improves,
          fmt::format("{}+{}: N=2..5 [{}] pooled SE {:.3f}, improvement {:.1f}% (N=5 below 1: {}, "
                      "trend: {}, improvement >= {}%: {})",
                      r.config.dataset, r.config.learner, cells, r.pooled_standard_error, r.improvement,
                      below ? "yes" : "no", trend ? "yes" : "no", min_improvement, improves ? "yes" : "no")};
}

// 9. Normalized-loss table, qualitatively.
Verdict table_reproduction() {
  const auto stumps = bench::run_experiment(table_config("diabetes", "stump"));
  const auto mlp = bench::run_experiment(table_config("california_housing", "mlp"));
  const auto ridge = bench::run_experiment(table_config("california_housing", "ridge"));
  const auto a = check_table(stumps, 5.0);
  const auto b = check_table(mlp, 5.0);
  const auto& rv = ridge.normalized;
  std::string rc;
  for (std::size_t j = 0; j < rv.size(); ++j) rc += fmt::format("{}{:.3f}", j ? " " : "", rv[j]);
  return {a.pass && b.pass, a.detail + "; " + b.detail +
                                fmt::format("; california+ridge (unconstrained): [{}] improvement {:.1f}%", rc,
                                            ridge.improvement)};
}

// 10. Byte-identical outputs on repetition.
Verdict determinism() {
  auto tables = [] {
    auto c = table_config("diabetes", "stump");
    const auto r = bench::run_experiment(c);
    std::string out;
    for (auto f : {bench::TableFormat::markdown, bench::TableFormat::csv, bench::TableFormat::json}) {
      out += bench::emit_table({r}, f);
    }
    return out;
  };
  auto synth = [] {
    std::string out;
    for (int n : {4, 16}) out += scenarios::to_json(scenarios::run_oco({n, 0.5, 2000, 3, false})).dump();
    scenarios::BanditScenario b;
    b.horizon = 2000;
    b.seed = 3;
    out += scenarios::to_json(scenarios::run_bandit(b)).dump();
    for (double g : {0.5, 1.0}) out += scenarios::to_json(scenarios::run_sco({64, g})).dump();
    return out;
  };
  const auto t1 = tables(), t2 = tables();
  const auto s1 = synth(), s2 = synth();
  return {t1 == t2 && s1 == s2,
          fmt::format("bench tables {} ({} bytes), synthetic outputs {} ({} bytes)",
                      t1 == t2 ? "identical" : "DIFFER", t1.size(), s1 == s2 ? "identical" : "DIFFER",
                      s1.size())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "extension operator approximation and projection", 30, extension_operator},
      {2, "Moreau gradient and value", 60, moreau_gradient},
      {3, "Frank-Wolfe recursion h_t <= 4c/t", 1, fw_recursion},
      {4, "distance Lipschitzness and projection non-expansiveness", 5, distance_lipschitz},
      {5, "bandit estimator unbiasedness", 1, bandit_unbiased},
      {6, "BoOCO regret scaling", 300, booco_regret},
      {7, "BoBLO sublinear regret", 600, boblo_sublinear},
      {8, "B4CO population gap", 120, b4co_endpoint},
      {9, "normalized-loss table (qualitative)", 900, table_reproduction},
      {10, "determinism", 900, determinism},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion K]\n");
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %d %s: %s | %s | %.2fs of %.0fs%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no such criterion\n");
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
