#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cascal/optimizer.hpp"
#include "cascal/types.hpp"

namespace cascal {

struct PerClassStats {
  int class_id = 0;
  std::int64_t m_c = 0;  // samples stage 1 predicted as this class
  std::int64_t fp = 0;
  std::int64_t escalations = 0;
  double th_used = 0.0;
};

struct StageAccuracies {
  double stage1 = 0.0;
  double stage2 = 0.0;
};

struct EvaluationReport {
  double accuracy = 0.0;
  double mean_energy_mj = 0.0;
  double escalation_rate = 0.0;
  std::vector<PerClassStats> per_class;
  StageAccuracies stage_accuracies;
};

// E(M1) + E(M2) * escalation_rate.
double expected_energy(const CascadeSpec& cascade, double escalation_rate);

// Runs the decision rule over every sample and aggregates accuracy,
// escalation rate, energy, and per-class counters.
EvaluationReport evaluate_policy(const PredictionSet& predictions,
                                 const ThresholdPolicy& policy,
                                 const CascadeSpec& cascade);

struct BaselinePoint {
  double accuracy = 0.0;
  double energy_mj = 0.0;
};

struct TradeoffPoint {
  double alpha = 0.0;
  std::optional<ThresholdPolicy> policy;  // absent on curves loaded from disk
  double accuracy = 0.0;
  double mean_energy_mj = 0.0;
  double escalation_rate = 0.0;
};

struct TradeoffCurve {
  std::vector<TradeoffPoint> points;  // ascending alpha
  BaselinePoint baseline_m1;          // stage 1 alone
  BaselinePoint baseline_m2;          // stage 2 alone
};

enum class SweepMode { PerClass, Global };

// For each alpha: optimize thresholds on opt_set, evaluate on test_set.
// Baselines are the single-stage accuracy/energy pairs on test_set.
TradeoffCurve sweep_alpha(const PredictionSet& opt_set, const PredictionSet& test_set,
                          const CascadeSpec& cascade, std::vector<double> alphas,
                          SweepMode mode);

struct GainPoint {
  double quantile = 0.0;
  double target_accuracy = 0.0;
  std::optional<double> mean_energy_mj;  // nullopt: target unreachable
};

// Minimum curve energy at accuracy >= acc(M1) + q * (acc(M2) - acc(M1)),
// per quantile q. No interpolation between points.
std::vector<GainPoint> accuracy_gain_points(const TradeoffCurve& curve,
                                            const std::vector<double>& quantiles);

struct PolicyComparison {
  double quantile = 0.0;
  double target_accuracy = 0.0;
  std::optional<double> energy_per_class;
  std::optional<double> energy_global;
  std::optional<double> relative_difference;  // (per_class - global) / global
};

std::vector<PolicyComparison> compare_policies(const TradeoffCurve& per_class_curve,
                                               const TradeoffCurve& global_curve,
                                               const std::vector<double>& quantiles);

struct Histogram {
  std::vector<double> bin_edges;  // bin_count + 1 ascending edges over [0,1]
  std::vector<std::int64_t> correct_counts;
  std::vector<std::int64_t> incorrect_counts;
};

// Stage-1 margins of the class slice, binned equal-width on [0,1] and split
// by stage-1 correctness. Bins are [lo, hi) except the last, closed at 1.
Histogram sm_histogram(const PredictionSet& predictions, int class_id, int bin_count);

struct MaxAccuracySummary {
  double accuracy = 0.0;
  double mean_energy_mj = 0.0;
  double delta_vs_m2_accuracy = 0.0;
  double delta_vs_m2_energy = 0.0;
};

// Point of maximum accuracy (ties: lowest energy) and its deltas against
// the stage-2-alone baseline.
MaxAccuracySummary max_accuracy_summary(const TradeoffCurve& curve);

// Default sweep grid: {0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5}.
std::vector<double> default_alpha_grid();

// Default comparison quantiles: {0.25, 0.5, 0.75, 1.0}.
std::vector<double> default_quantiles();

}  // namespace cascal
