#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "oboost/weak.hpp"

namespace oboost::bench {

// Raw table plus the full-pass standardization statistics.
struct Dataset {
  std::string source;
  std::vector<std::string> feature_names;
  std::string target_name;
  Eigen::MatrixXd features;  // rows x p, as read
  Eigen::VectorXd targets;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;          // population stddev, 1 where guarded
  std::vector<std::size_t> guarded;     // constant columns
  double target_mean = 0.0;
  double target_std = 1.0;
  double target_min = 0.0;
  double target_max = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(targets.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  Eigen::MatrixXd standardized_features() const;
  Eigen::VectorXd standardized_targets() const;
};

// CSV with a header row; every cell numeric. The target is the last column
// unless `target_col` names another. Throws DataError with the line number or
// the column name.
Dataset parse_csv(std::istream& in, const std::string& source,
                  const std::optional<std::string>& target_col = std::nullopt);
Dataset ingest(const std::string& path, const std::optional<std::string>& target_col = std::nullopt);

// Search order for a bare dataset name: as given, then $BENCH_DATA_DIR, then the
// data/ directory of the source tree.
std::string resolve_dataset(const std::string& path);

enum class TableFormat { markdown, csv, json };
TableFormat parse_format(const std::string& s);

struct ExperimentConfig {
  std::string dataset;
  std::optional<std::string> target_col;
  std::string learner = "stump";
  std::vector<int> n_values{2, 3, 4, 5};
  double gamma = 0.1;
  double step = 0.01;
  double l2 = 0.0;
  int bins = 16;
  int warmup = 50;
  int runs = 20;
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::uint64_t shuffle_seed = 0;
  double wl_loss = 0.0;
  std::vector<double> boosted_loss;  // one per n_values entry
  std::uint64_t stream_hash = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::size_t rows = 0;
  std::vector<RunRecord> runs;
  double wl_mean_loss = 0.0;
  std::vector<double> normalized;      // mean L_N / mean L_WL
  std::vector<double> standard_error;  // of the per-run ratios L_N / L_WL
  double pooled_standard_error = 0.0;  // sqrt of the mean squared standard error
  std::size_t best = 0;                // index into n_values
  double improvement = 0.0;            // percent, (1 - best normalized) * 100
};

// Streams every run through the standalone weak learner and one booster per N.
// All consumers of a run see the same (context, loss) sequence; the per-run
// stream hash is checked across them.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Rows are learners; columns WL, N=..., Improvement.
std::string emit_table(const std::vector<ExperimentResult>& results, TableFormat format);
nlohmann::json table_json(const std::vector<ExperimentResult>& results);

// Stable FNV-1a fold of a double into a running hash.
std::uint64_t hash_combine(std::uint64_t h, double v);

}  // namespace oboost::bench
