#include "oboost/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oboost/booco.hpp"
#include "oboost/errors.hpp"
#include "oboost/rng.hpp"

#ifndef OBOOST_DATA_DIR
#define OBOOST_DATA_DIR "data"
#endif

namespace oboost::bench {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  s = s.substr(a, b - a);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::uint64_t hash_combine(std::uint64_t h, double v) {
  unsigned char bytes[sizeof(double)];
  std::memcpy(bytes, &v, sizeof v);
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::MatrixXd Dataset::standardized_features() const {
  Eigen::MatrixXd z = features.rowwise() - feature_mean.transpose();
  return z.array().rowwise() / feature_std.transpose().array();
}

Eigen::VectorXd Dataset::standardized_targets() const {
  return (targets.array() - target_mean) / target_std;
}

Dataset parse_csv(std::istream& in, const std::string& source,
                  const std::optional<std::string>& target_col) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    header = split(line);
    break;
  }
  if (header.size() < 2) throw DataError(fmt::format("{}: need a header with at least two columns", source));
  std::size_t target = header.size() - 1;
  if (target_col) {
    const auto it = std::find(header.begin(), header.end(), *target_col);
    if (it == header.end()) throw DataError(fmt::format("{}: no column named '{}'", source, *target_col));
    target = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError(fmt::format("{}: line {}: expected {} fields, found {}", source, line_no,
                                  header.size(), cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& s = cells[j];
      const char* first = s.data();
      const char* last = s.data() + s.size();
      if (first != last && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[j]);
      if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[j])) {
        throw DataError(fmt::format("{}: line {}: column '{}': non-numeric value '{}'", source,
                                    line_no, header[j], s));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(fmt::format("{}: no data rows", source));

  Dataset d;
  d.source = source;
  d.target_name = header[target];
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target) d.feature_names.push_back(header[j]);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  d.features.resize(n, p);
  d.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == target) {
        d.targets[i] = rows[static_cast<std::size_t>(i)][j];
      } else {
        d.features(i, k++) = rows[static_cast<std::size_t>(i)][j];
      }
    }
  }
  d.feature_mean = d.features.colwise().mean().transpose();
  d.feature_std.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = (d.features.col(j).array() - d.feature_mean[j]).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(d.feature_mean[j]))) {
      d.feature_std[j] = sd;
    } else {
      d.feature_std[j] = 1.0;
      d.guarded.push_back(static_cast<std::size_t>(j));
    }
  }
  d.target_mean = d.targets.mean();
  const double tsd = std::sqrt((d.targets.array() - d.target_mean).square().mean());
  d.target_std = tsd > 0.0 ? tsd : 1.0;
  d.target_min = d.targets.minCoeff();
  d.target_max = d.targets.maxCoeff();
  return d;
}

Dataset ingest(const std::string& path, const std::optional<std::string>& target_col) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open dataset '{}'", path));
  return parse_csv(in, path, target_col);
}

std::string resolve_dataset(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("BENCH_DATA_DIR"); env != nullptr && *env != '\0') dirs.emplace_back(env);
  dirs.emplace_back(OBOOST_DATA_DIR);
  for (const auto& dir : dirs) {
    for (const fs::path& candidate : {dir / path, dir / (path + ".csv")}) {
      if (fs::exists(candidate)) return candidate.string();
    }
  }
  throw DataError(fmt::format("dataset '{}' not found (set BENCH_DATA_DIR)", path));
}

TableFormat parse_format(const std::string& s) {
  if (s == "markdown" || s == "md") return TableFormat::markdown;
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  throw ConfigError(fmt::format("unknown output format '{}'", s));
}

namespace {

void validate(const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw ConfigError("runs must be at least 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(cfg.step > 0.0)) throw ConfigError("step must be positive");
  if (cfg.n_values.empty()) throw ConfigError("need at least one N");
  for (int n : cfg.n_values) {
    if (n < 1) throw ConfigError("every N must be at least 1");
  }
  if (cfg.learner != "stump" && cfg.learner != "ridge" && cfg.learner != "mlp") {
    throw ConfigError(fmt::format("unknown learner '{}' (stump, ridge, mlp)", cfg.learner));
  }
}

struct Stream {
  std::vector<Context> contexts;
  std::vector<double> targets;
};

// Fisher-Yates with our own index draws, so the order is the same everywhere.
std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

std::uint64_t step_hash(std::uint64_t h, const Context& c, double y) {
  h ^= context_hash(c);
  h *= 0x100000001b3ULL;
  return hash_combine(h, y);
}

constexpr std::uint64_t kHashSeed = 0xcbf29ce484222325ULL;

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  validate(cfg);
  if (data.rows() < 10) {
    throw DataError(fmt::format("{}: {} rows, need at least 10", data.source, data.rows()));
  }
  const Eigen::MatrixXd z = data.standardized_features();
  const Eigen::VectorXd zy = data.standardized_targets();
  const DecisionSet k = DecisionSet::interval(zy.minCoeff(), zy.maxCoeff());
  const Recentered rc = recenter(k);
  const double offset = rc.offset[0];
  const double lo = zy.minCoeff() - offset, hi = zy.maxCoeff() - offset;
  const std::size_t p = data.dim();

  LearnerSpec spec;
  spec.kind = cfg.learner;
  spec.gamma = cfg.gamma;
  spec.step = cfg.step;
  spec.l2 = cfg.l2;
  spec.bins = cfg.bins;
  spec.warmup = cfg.warmup;

  ExperimentResult res;
  res.config = cfg;
  res.rows = data.rows();
  for (int r = 0; r < cfg.runs; ++r) {
    RunRecord rec;
    rec.shuffle_seed = cfg.seed ^ static_cast<std::uint64_t>(r);
    const auto order = shuffled(data.rows(), rec.shuffle_seed);
    Stream s;
    s.contexts.reserve(order.size());
    for (std::size_t i : order) {
      s.contexts.push_back(Context{z.row(static_cast<Eigen::Index>(i)).transpose()});
      s.targets.push_back(zy[static_cast<Eigen::Index>(i)]);
    }
    const std::uint64_t learner_seed = derive_seed(rec.shuffle_seed, 0x6c6561726e6572ULL);

    // Standalone weak learner on the square loss, fed its own gradient.
    auto wl = make_learner(spec, rc.set, p, derive_seed(learner_seed, 0));
    std::uint64_t h_wl = kHashSeed;
    for (std::size_t t = 0; t < s.targets.size(); ++t) {
      const Context& c = s.contexts[t];
      const double y = s.targets[t] - offset;
      const double x = wl->predict(c)[0];
      rec.wl_loss += (x - y) * (x - y);
      wl->update(c, LinearLoss{Point::Constant(1, 2.0 * (x - y))});
      h_wl = step_hash(h_wl, c, s.targets[t]);
    }
    rec.stream_hash = h_wl;

    for (int n : cfg.n_values) {
      BoocoConfig bc;
      bc.n_learners = n;
      bc.gamma = cfg.gamma;
      bc.keep_transcript = false;
      bc.seed = learner_seed;
      bc.learner = spec;
      bc.lipschitz = square_loss_lipschitz(lo, hi, rc.set.scaled(1.0 / cfg.gamma),
                                           rc.set.diameter() / (cfg.gamma * std::sqrt(double(n))));
      Booco booster(k, p, bc);
      std::uint64_t h = kHashSeed;
      for (std::size_t t = 0; t < s.targets.size(); ++t) {
        const Context& c = s.contexts[t];
        const RoundTrajectory traj = booster.predict(c);
        booster.update(ConvexLoss::square(s.targets[t]), traj);
        h = step_hash(h, c, s.targets[t]);
      }
      if (h != h_wl) throw ContractViolation("bench: booster and weak learner saw different streams");
      rec.boosted_loss.push_back(booster.cumulative_loss());
    }
    res.runs.push_back(std::move(rec));
  }

  const double runs = static_cast<double>(res.runs.size());
  for (const auto& rec : res.runs) res.wl_mean_loss += rec.wl_loss / runs;
  double pooled = 0.0;
  for (std::size_t j = 0; j < cfg.n_values.size(); ++j) {
    double mean = 0.0;
    std::vector<double> ratio;
    for (const auto& rec : res.runs) {
      mean += rec.boosted_loss[j] / runs;
      ratio.push_back(rec.boosted_loss[j] / rec.wl_loss);
    }
    res.normalized.push_back(mean / res.wl_mean_loss);
    double se = 0.0;
    if (ratio.size() > 1) {
      const double m = std::accumulate(ratio.begin(), ratio.end(), 0.0) / runs;
      double ss = 0.0;
      for (double v : ratio) ss += (v - m) * (v - m);
      se = std::sqrt(ss / (runs - 1.0) / runs);
    }
    res.standard_error.push_back(se);
    pooled += se * se;
  }
  res.pooled_standard_error = std::sqrt(pooled / static_cast<double>(cfg.n_values.size()));
  res.best = static_cast<std::size_t>(std::min_element(res.normalized.begin(), res.normalized.end()) -
                                      res.normalized.begin());
  res.improvement = (1.0 - res.normalized[res.best]) * 100.0;
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  return run_experiment(cfg, ingest(resolve_dataset(cfg.dataset), cfg.target_col));
}

nlohmann::json table_json(const std::vector<ExperimentResult>& results) {
  if (results.empty()) throw ContractViolation("emit_table: no results");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t j = 0; j < r.config.n_values.size(); ++j) {
      cells.push_back({{"n", r.config.n_values[j]},
                       {"normalized", r.normalized[j]},
                       {"standard_error", r.standard_error[j]}});
    }
    rows.push_back({{"learner", r.config.learner},
                    {"dataset", r.config.dataset},
                    {"rows", r.rows},
                    {"runs", r.config.runs},
                    {"gamma", r.config.gamma},
                    {"step", r.config.step},
                    {"seed", r.config.seed},
                    {"wl", 1.0},
                    {"wl_mean_loss", r.wl_mean_loss},
                    {"cells", cells},
                    {"best_n", r.config.n_values[r.best]},
                    {"pooled_standard_error", r.pooled_standard_error},
                    {"improvement_pct", r.improvement}});
  }
  return {{"format", "oboost-bench-table/1"}, {"rows", rows}};
}

std::string emit_table(const std::vector<ExperimentResult>& results, TableFormat format) {
  if (results.empty()) throw ContractViolation("emit_table: no results");
  const auto& ns = results.front().config.n_values;
  for (const auto& r : results) {
    if (r.config.n_values != ns) throw ContractViolation("emit_table: rows must share the N list");
  }
  std::string out;
  switch (format) {
    case TableFormat::json:
      return table_json(results).dump(2) + "\n";
    case TableFormat::csv: {
      // Numeric only, so the table reads back through ingest(); rows follow the
      // order of `results`.
      out = "WL";
      for (int n : ns) out += fmt::format(",N={}", n);
      out += ",Improvement\n";
      for (const auto& r : results) {
        out += "1.000";
        for (double v : r.normalized) out += fmt::format(",{:.3f}", v);
        out += fmt::format(",{:.3f}\n", r.improvement);
      }
      return out;
    }
    case TableFormat::markdown: {
      out = "| Learner | WL |";
      for (int n : ns) out += fmt::format(" N={} |", n);
      out += " Improvement |\n|---|---|";
      for (std::size_t j = 0; j < ns.size(); ++j) out += "---|";
      out += "---|\n";
      for (const auto& r : results) {
        out += fmt::format("| {} | 1.000 |", r.config.learner);
        for (std::size_t j = 0; j < ns.size(); ++j) {
          out += j == r.best ? fmt::format(" **{:.3f}** |", r.normalized[j])
                             : fmt::format(" {:.3f} |", r.normalized[j]);
        }
        out += fmt::format(" {:.1f}% |\n", r.improvement);
      }
      return out;
    }
  }
  return out;
}

}  // namespace oboost::bench
