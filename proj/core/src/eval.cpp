#include "cascal/eval.hpp"

#include <algorithm>
#include <cmath>

#include "cascal/cascade.hpp"
#include "cascal/errors.hpp"
#include "cascal/slices.hpp"

namespace cascal {

double expected_energy(const CascadeSpec& cascade, double escalation_rate) {
  validate(cascade);
  if (!std::isfinite(escalation_rate) || escalation_rate < 0.0 || escalation_rate > 1.0) {
    throw InvalidInput("escalation rate " + std::to_string(escalation_rate) +
                       " outside [0,1]");
  }
  return cascade.stages[0].energy_mj + cascade.stages[1].energy_mj * escalation_rate;
}

EvaluationReport evaluate_policy(const PredictionSet& predictions,
                                 const ThresholdPolicy& policy,
                                 const CascadeSpec& cascade) {
  validate(predictions);
  validate(cascade);
  validate(policy, predictions.class_count);
  if (cascade.class_count != predictions.class_count) {
    throw InvalidInput("cascade class_count " + std::to_string(cascade.class_count) +
                       " does not match prediction set class_count " +
                       std::to_string(predictions.class_count));
  }
  if (predictions.samples.empty()) {
    throw InvalidInput("cannot evaluate an empty prediction set");
  }

  const auto n = static_cast<double>(predictions.samples.size());
  std::int64_t correct = 0;
  std::int64_t escalated = 0;
  std::int64_t stage1_correct = 0;
  std::int64_t stage2_correct = 0;
  for (const SampleRecord& sample : predictions.samples) {
    const CascadeDecision decision = cascade_decide(sample, policy);
    if (decision.predicted_label == sample.true_label) ++correct;
    if (decision.stopped_at_stage == 2) ++escalated;
    if (decision.stage1_label == sample.true_label) ++stage1_correct;
    if (predicted_label(sample.stage_probs[1]) == sample.true_label) ++stage2_correct;
  }

  EvaluationReport report;
  report.accuracy = static_cast<double>(correct) / n;
  report.escalation_rate = static_cast<double>(escalated) / n;
  report.mean_energy_mj = expected_energy(cascade, report.escalation_rate);
  report.stage_accuracies.stage1 = static_cast<double>(stage1_correct) / n;
  report.stage_accuracies.stage2 = static_cast<double>(stage2_correct) / n;

  const std::vector<ClassSlice> slices = build_class_slices(predictions);
  report.per_class.reserve(slices.size());
  for (const ClassSlice& slice : slices) {
    const double th = policy.threshold_for(slice.class_id);
    PerClassStats stats;
    stats.class_id = slice.class_id;
    stats.m_c = static_cast<std::int64_t>(slice.entries.size());
    stats.fp = false_positives_for_class(slice, th);
    stats.escalations = escalations_for_class(slice, th);
    stats.th_used = th;
    report.per_class.push_back(stats);
  }
  return report;
}

namespace {

StageAccuracies standalone_accuracies(const PredictionSet& predictions) {
  std::int64_t stage1_correct = 0;
  std::int64_t stage2_correct = 0;
  for (const SampleRecord& sample : predictions.samples) {
    if (predicted_label(sample.stage_probs[0]) == sample.true_label) ++stage1_correct;
    if (predicted_label(sample.stage_probs[1]) == sample.true_label) ++stage2_correct;
  }
  const auto n = static_cast<double>(predictions.samples.size());
  return {static_cast<double>(stage1_correct) / n, static_cast<double>(stage2_correct) / n};
}

}  // namespace

TradeoffCurve sweep_alpha(const PredictionSet& opt_set, const PredictionSet& test_set,
                          const CascadeSpec& cascade, std::vector<double> alphas,
                          SweepMode mode) {
  validate(opt_set);
  validate(test_set);
  validate(cascade);
  if (opt_set.class_count != test_set.class_count) {
    throw InvalidInput("optimization and test sets disagree on class_count");
  }
  if (alphas.empty()) {
    throw InvalidInput("alpha list must not be empty");
  }
  if (test_set.samples.empty()) {
    throw InvalidInput("test set must not be empty");
  }
  std::sort(alphas.begin(), alphas.end());

  TradeoffCurve curve;
  const StageAccuracies test_acc = standalone_accuracies(test_set);
  curve.baseline_m1 = {test_acc.stage1, cascade.stages[0].energy_mj};
  curve.baseline_m2 = {test_acc.stage2, cascade.stages[1].energy_mj};

  curve.points.reserve(alphas.size());
  for (double alpha : alphas) {
    ThresholdPolicy policy =
        mode == SweepMode::PerClass
            ? ThresholdPolicy::per_class(
                  optimize_class_thresholds(opt_set, alpha).per_class_th, alpha)
            : optimize_global_threshold(opt_set, alpha);
    const EvaluationReport report = evaluate_policy(test_set, policy, cascade);
    TradeoffPoint point;
    point.alpha = alpha;
    point.accuracy = report.accuracy;
    point.mean_energy_mj = report.mean_energy_mj;
    point.escalation_rate = report.escalation_rate;
    point.policy = std::move(policy);
    curve.points.push_back(std::move(point));
  }
  return curve;
}

std::vector<GainPoint> accuracy_gain_points(const TradeoffCurve& curve,
                                            const std::vector<double>& quantiles) {
  std::vector<GainPoint> gains;
  gains.reserve(quantiles.size());
  for (double q : quantiles) {
    if (!std::isfinite(q) || q < 0.0 || q > 1.0) {
      throw InvalidInput("quantile " + std::to_string(q) + " outside [0,1]");
    }
    GainPoint gain;
    gain.quantile = q;
    gain.target_accuracy = curve.baseline_m1.accuracy +
                           q * (curve.baseline_m2.accuracy - curve.baseline_m1.accuracy);
    for (const TradeoffPoint& point : curve.points) {
      if (point.accuracy >= gain.target_accuracy &&
          (!gain.mean_energy_mj || point.mean_energy_mj < *gain.mean_energy_mj)) {
        gain.mean_energy_mj = point.mean_energy_mj;
      }
    }
    gains.push_back(gain);
  }
  return gains;
}

std::vector<PolicyComparison> compare_policies(const TradeoffCurve& per_class_curve,
                                               const TradeoffCurve& global_curve,
                                               const std::vector<double>& quantiles) {
  if (per_class_curve.baseline_m1.accuracy != global_curve.baseline_m1.accuracy ||
      per_class_curve.baseline_m1.energy_mj != global_curve.baseline_m1.energy_mj ||
      per_class_curve.baseline_m2.accuracy != global_curve.baseline_m2.accuracy ||
      per_class_curve.baseline_m2.energy_mj != global_curve.baseline_m2.energy_mj) {
    throw InvalidInput("curves carry different single-stage baselines; "
                       "they were not produced from the same test set");
  }
  const std::vector<GainPoint> per_class = accuracy_gain_points(per_class_curve, quantiles);
  const std::vector<GainPoint> global = accuracy_gain_points(global_curve, quantiles);

  std::vector<PolicyComparison> rows;
  rows.reserve(quantiles.size());
  for (size_t i = 0; i < quantiles.size(); ++i) {
    PolicyComparison row;
    row.quantile = per_class[i].quantile;
    row.target_accuracy = per_class[i].target_accuracy;
    row.energy_per_class = per_class[i].mean_energy_mj;
    row.energy_global = global[i].mean_energy_mj;
    if (row.energy_per_class && row.energy_global) {
      if (*row.energy_global != 0.0) {
        row.relative_difference =
            (*row.energy_per_class - *row.energy_global) / *row.energy_global;
      } else if (*row.energy_per_class == 0.0) {
        row.relative_difference = 0.0;
      }
      // else: zero-energy baseline with nonzero per-class energy stays undefined
    }
    rows.push_back(row);
  }
  return rows;
}

Histogram sm_histogram(const PredictionSet& predictions, int class_id, int bin_count) {
  validate(predictions);
  if (class_id < 0 || class_id >= predictions.class_count) {
    throw InvalidInput("class_id " + std::to_string(class_id) + " out of range [0, " +
                       std::to_string(predictions.class_count) + ")");
  }
  if (bin_count < 1) {
    throw InvalidInput("bin_count must be >= 1");
  }

  Histogram histogram;
  histogram.bin_edges.reserve(static_cast<size_t>(bin_count) + 1);
  for (int k = 0; k <= bin_count; ++k) {
    histogram.bin_edges.push_back(static_cast<double>(k) / bin_count);
  }
  histogram.correct_counts.assign(static_cast<size_t>(bin_count), 0);
  histogram.incorrect_counts.assign(static_cast<size_t>(bin_count), 0);

  const std::vector<ClassSlice> slices = build_class_slices(predictions);
  for (const ClassSliceEntry& entry : slices[static_cast<size_t>(class_id)].entries) {
    // Bins are [lo, hi) except the last, which is closed at 1.0.
    auto bin = static_cast<size_t>(entry.stage1_margin * bin_count);
    bin = std::min(bin, static_cast<size_t>(bin_count) - 1);
    if (entry.stage1_correct) {
      ++histogram.correct_counts[bin];
    } else {
      ++histogram.incorrect_counts[bin];
    }
  }
  return histogram;
}

std::vector<double> default_alpha_grid() {
  return {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
}

std::vector<double> default_quantiles() {
  return {0.25, 0.5, 0.75, 1.0};
}

MaxAccuracySummary max_accuracy_summary(const TradeoffCurve& curve) {
  if (curve.points.empty()) {
    throw InvalidInput("cannot summarize an empty trade-off curve");
  }
  const TradeoffPoint* best = &curve.points.front();
  for (const TradeoffPoint& point : curve.points) {
    if (point.accuracy > best->accuracy ||
        (point.accuracy == best->accuracy && point.mean_energy_mj < best->mean_energy_mj)) {
      best = &point;
    }
  }
  MaxAccuracySummary summary;
  summary.accuracy = best->accuracy;
  summary.mean_energy_mj = best->mean_energy_mj;
  summary.delta_vs_m2_accuracy = best->accuracy - curve.baseline_m2.accuracy;
  summary.delta_vs_m2_energy = best->mean_energy_mj - curve.baseline_m2.energy_mj;
  return summary;
}

}  // namespace cascal
