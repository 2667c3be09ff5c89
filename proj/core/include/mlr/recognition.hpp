#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mlr/learning.hpp"
#include "mlr/memory.hpp"
#include "mlr/types.hpp"

namespace mlr {

enum class Metric { Msd, Smsd, Mncs, Smcs };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Msd, Metric::Smsd, Metric::Mncs, Metric::Smcs};

/// Decision rule: one metric alone, or rank-sum over all four.
enum class Rule { Msd, Smsd, Mncs, Smcs, RankSum };
inline constexpr std::array<Rule, 5> kAllRules{Rule::Msd, Rule::Smsd, Rule::Mncs, Rule::Smcs, Rule::RankSum};

std::string_view to_string(Metric metric) noexcept;
std::string_view to_string(Rule rule) noexcept;
/// Accepts msd|smsd|mncs|smcs|ranksum; ConfigError otherwise.
Rule parse_rule(std::string_view name);

/// Distances are minimized, similarities maximized.
constexpr bool is_similarity(Metric m) noexcept { return m == Metric::Mncs || m == Metric::Smcs; }

/// Singular values below this fraction of the largest are skipped by the
/// scaled metrics.
inline constexpr double kScaleTolerance = 1e-8;
/// Norms below this make the normalized cross similarity 0.
inline constexpr double kZeroNorm = 1e-12;

Eigen::VectorXd project(const EigenModel& model, const Eigen::VectorXd& input);
Eigen::VectorXd reconstruct(const EigenModel& model, const Eigen::VectorXd& omega);

/// Euclidean norm of a - b.
double metric_msd(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
/// Euclidean norm of (a - b) / scale, skipping degenerate scale entries.
double metric_smsd(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& scale);
/// Cosine of the angle between a and b, 0 when either is (near) zero.
double metric_mncs(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
/// Dot product of a / scale and b / scale, skipping degenerate scale entries.
double metric_smcs(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& scale);

/// Eigen-coefficients of every training sample with its recorded command.
struct ProjectedDataset {
  std::vector<Eigen::VectorXd> omegas;
  std::vector<CommandTriple> commands;
  std::string source_label;

  std::size_t size() const noexcept { return omegas.size(); }
};

ProjectedDataset build_projected_dataset(const EigenModel& model, const LoadedSession& session);

struct MetricScores {
  double msd = 0.0;
  double smsd = 0.0;
  double mncs = 0.0;
  double smcs = 0.0;

  double operator[](Metric m) const noexcept;
  bool operator==(const MetricScores&) const = default;
};

struct MetricWinner {
  std::size_t index = 0;
  double score = 0.0;

  bool operator==(const MetricWinner&) const = default;
};

struct RecognitionResult {
  std::size_t best_index = 0;
  CommandTriple command;
  std::array<MetricWinner, 4> per_metric{};  // indexed like kAllMetrics
  MetricScores winner_scores;
  Rule aggregation = Rule::RankSum;

  bool operator==(const RecognitionResult&) const = default;
};

/// Scores of one query against every stored sample.
struct ScoreTable {
  std::vector<MetricScores> rows;
};

ScoreTable score_all(const EigenModel& model, const ProjectedDataset& dataset, const Eigen::VectorXd& omega);

/// Competition ranks (0 = best, ties share the smallest rank) of each
/// candidate under one metric.
std::vector<std::size_t> competition_ranks(const ScoreTable& table, Metric metric);

/// Projects `input` and picks the best stored sample under `rule`; ties go
/// to the smallest index.
RecognitionResult recognize(const EigenModel& model, const ProjectedDataset& dataset,
                            const Eigen::VectorXd& input, Rule rule);
/// Same, for an already projected query.
RecognitionResult recognize_projected(const EigenModel& model, const ProjectedDataset& dataset,
                                      const Eigen::VectorXd& omega, Rule rule);

}  // namespace mlr
