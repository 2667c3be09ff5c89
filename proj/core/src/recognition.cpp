#include "mlr/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlr/error.hpp"

namespace mlr {

namespace {

void require_same_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::ShapeError, "vector lengths differ: " + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()));
  }
}

// 1/scale_i for usable entries, 0 for skipped ones.
Eigen::VectorXd inverse_scale(const Eigen::VectorXd& scale, Eigen::Index length) {
  if (scale.size() != length) {
    throw Error(Errc::ShapeError, "scale has " + std::to_string(scale.size()) + " entries, expected " +
                                      std::to_string(length));
  }
  const double largest = scale.size() > 0 ? scale.maxCoeff() : 0.0;
  Eigen::VectorXd inverse = Eigen::VectorXd::Zero(length);
  bool any = false;
  if (largest > 0.0) {
    for (Eigen::Index i = 0; i < length; ++i) {
      if (scale(i) >= kScaleTolerance * largest) {
        inverse(i) = 1.0 / scale(i);
        any = true;
      }
    }
  }
  if (!any) throw Error(Errc::DegenerateScale, "every scale entry is degenerate");
  return inverse;
}

bool better(Metric metric, double candidate, double incumbent) {
  return is_similarity(metric) ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Msd: return "msd";
    case Metric::Smsd: return "smsd";
    case Metric::Mncs: return "mncs";
    case Metric::Smcs: return "smcs";
  }
  return "?";
}

std::string_view to_string(Rule rule) noexcept {
  switch (rule) {
    case Rule::Msd: return "msd";
    case Rule::Smsd: return "smsd";
    case Rule::Mncs: return "mncs";
    case Rule::Smcs: return "smcs";
    case Rule::RankSum: return "ranksum";
  }
  return "?";
}

Rule parse_rule(std::string_view name) {
  for (Rule rule : kAllRules) {
    if (to_string(rule) == name) return rule;
  }
  throw Error(Errc::ConfigError, "unknown rule '" + std::string(name) + "'");
}

double MetricScores::operator[](Metric m) const noexcept {
  switch (m) {
    case Metric::Msd: return msd;
    case Metric::Smsd: return smsd;
    case Metric::Mncs: return mncs;
    case Metric::Smcs: return smcs;
  }
  return 0.0;
}

Eigen::VectorXd project(const EigenModel& model, const Eigen::VectorXd& input) {
  if (input.size() != model.mean.size()) {
    throw Error(Errc::ShapeError, "input dimension " + std::to_string(input.size()) + " does not match model " +
                                      std::to_string(model.mean.size()));
  }
  return model.components.transpose() * (input - model.mean);
}

Eigen::VectorXd reconstruct(const EigenModel& model, const Eigen::VectorXd& omega) {
  if (omega.size() != model.n_kept()) {
    throw Error(Errc::ShapeError, "coefficient vector has " + std::to_string(omega.size()) + " entries, model has " +
                                      std::to_string(model.n_kept()));
  }
  return model.mean + model.components * omega;
}

double metric_msd(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require_same_length(a, b);
  return (a - b).norm();
}

double metric_smsd(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& scale) {
  require_same_length(a, b);
  const Eigen::VectorXd inverse = inverse_scale(scale, a.size());
  return (a - b).cwiseProduct(inverse).norm();
}

double metric_mncs(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require_same_length(a, b);
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kZeroNorm || nb < kZeroNorm) return 0.0;
  return a.dot(b) / (na * nb);
}

double metric_smcs(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& scale) {
  require_same_length(a, b);
  const Eigen::VectorXd inverse = inverse_scale(scale, a.size());
  return a.cwiseProduct(inverse).dot(b.cwiseProduct(inverse));
}

ProjectedDataset build_projected_dataset(const EigenModel& model, const LoadedSession& session) {
  if (session.size() == 0) throw Error(Errc::InsufficientData, "session has no records");
  ProjectedDataset dataset;
  dataset.source_label = session.label();
  dataset.omegas.reserve(session.size());
  dataset.commands.reserve(session.size());
  for (std::size_t k = 0; k < session.size(); ++k) {
    dataset.omegas.push_back(project(model, scale_image(session.read_image(k), model.width, model.height)));
    dataset.commands.push_back(session.record(k).command);
  }
  return dataset;
}

ScoreTable score_all(const EigenModel& model, const ProjectedDataset& dataset, const Eigen::VectorXd& omega) {
  if (dataset.size() == 0) throw Error(Errc::InsufficientData, "projected dataset is empty");
  if (dataset.commands.size() != dataset.omegas.size()) {
    throw Error(Errc::ShapeError, "dataset omegas and commands differ in length");
  }
  if (omega.size() != model.n_kept()) throw Error(Errc::ShapeError, "query length does not match model");

  // Per-query work hoisted out of the candidate loop; the arithmetic matches
  // the metric_* functions term for term.
  const Eigen::VectorXd inverse = inverse_scale(model.singular_values, omega.size());
  const Eigen::VectorXd query_scaled = omega.cwiseProduct(inverse);
  const double query_norm = omega.norm();

  ScoreTable table;
  table.rows.resize(dataset.size());
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const Eigen::VectorXd& stored = dataset.omegas[k];
    require_same_length(omega, stored);
    MetricScores& s = table.rows[k];
    s.msd = (omega - stored).norm();
    s.smsd = (omega - stored).cwiseProduct(inverse).norm();
    const double stored_norm = stored.norm();
    s.mncs = (query_norm < kZeroNorm || stored_norm < kZeroNorm) ? 0.0
                                                                 : omega.dot(stored) / (query_norm * stored_norm);
    s.smcs = query_scaled.dot(stored.cwiseProduct(inverse));
  }
  return table;
}

std::vector<std::size_t> competition_ranks(const ScoreTable& table, Metric metric) {
  const std::size_t t = table.rows.size();
  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return better(metric, table.rows[i][metric], table.rows[j][metric]);
  });
  std::vector<std::size_t> ranks(t);
  for (std::size_t pos = 0; pos < t; ++pos) {
    const std::size_t idx = order[pos];
    if (pos > 0 && table.rows[idx][metric] == table.rows[order[pos - 1]][metric]) {
      ranks[idx] = ranks[order[pos - 1]];
    } else {
      ranks[idx] = pos;
    }
  }
  return ranks;
}

RecognitionResult recognize_projected(const EigenModel& model, const ProjectedDataset& dataset,
                                      const Eigen::VectorXd& omega, Rule rule) {
  const ScoreTable table = score_all(model, dataset, omega);
  const std::size_t t = table.rows.size();

  RecognitionResult result;
  result.aggregation = rule;
  for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
    const Metric metric = kAllMetrics[m];
    MetricWinner best{0, table.rows[0][metric]};
    for (std::size_t k = 1; k < t; ++k) {
      if (better(metric, table.rows[k][metric], best.score)) best = {k, table.rows[k][metric]};
    }
    result.per_metric[m] = best;
  }

  switch (rule) {
    case Rule::Msd: result.best_index = result.per_metric[0].index; break;
    case Rule::Smsd: result.best_index = result.per_metric[1].index; break;
    case Rule::Mncs: result.best_index = result.per_metric[2].index; break;
    case Rule::Smcs: result.best_index = result.per_metric[3].index; break;
    case Rule::RankSum: {
      std::vector<std::size_t> total(t, 0);
      for (Metric metric : kAllMetrics) {
        const auto ranks = competition_ranks(table, metric);
        for (std::size_t k = 0; k < t; ++k) total[k] += ranks[k];
      }
      result.best_index = static_cast<std::size_t>(std::min_element(total.begin(), total.end()) - total.begin());
      break;
    }
  }
  result.command = dataset.commands[result.best_index];
  result.winner_scores = table.rows[result.best_index];
  return result;
}

RecognitionResult recognize(const EigenModel& model, const ProjectedDataset& dataset,
                            const Eigen::VectorXd& input, Rule rule) {
  if (dataset.size() == 0) throw Error(Errc::InsufficientData, "projected dataset is empty");
  return recognize_projected(model, dataset, project(model, input), rule);
}

}  // namespace mlr
