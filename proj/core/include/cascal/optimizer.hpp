#pragma once

#include <cstdint>
#include <vector>

#include "cascal/slices.hpp"
#include "cascal/types.hpp"

namespace cascal {

// One evaluation of the per-class objective: false positives plus
// alpha-weighted escalations. Counts are exact integers; only `total`
// carries the alpha product.
struct ObjectiveValue {
  std::int64_t fp = 0;
  std::int64_t escalations = 0;
  double total = 0.0;
};

// Counts entries that end up as false positives of the whole cascade for
// this class at threshold th: stage-1-wrong entries that are either kept
// (margin > th) or escalated into a wrong stage-2 prediction.
std::int64_t false_positives_for_class(const ClassSlice& slice, double th);

// Counts entries the cascade would escalate at threshold th (margin <= th),
// regardless of correctness. Proportional to big-model energy.
std::int64_t escalations_for_class(const ClassSlice& slice, double th);

ObjectiveValue objective(const ClassSlice& slice, double th, double alpha);

// {0} plus the distinct observed margins, ascending. Both objective terms
// are piecewise constant with breakpoints only at observed margins, so
// minimizing over these candidates is exact, not a grid approximation.
std::vector<double> candidate_thresholds(const ClassSlice& slice);

struct SliceOptimum {
  double th = 0.0;
  ObjectiveValue value;
};

// Exact minimizer over candidate_thresholds; equal totals resolve to the
// smallest threshold (fewest escalations at equal objective).
SliceOptimum optimize_slice_threshold(const ClassSlice& slice, double alpha);

struct OptimizationResult {
  std::vector<double> per_class_th;
  std::vector<ObjectiveValue> per_class_objective;
  // True where the class was never predicted on the optimization set and
  // inherited the pooled global optimum instead.
  std::vector<bool> fallback_used;
};

OptimizationResult optimize_class_thresholds(const PredictionSet& predictions, double alpha);

// Single-threshold baseline: one th minimizing the summed per-class
// objective over the pooled candidate set.
ThresholdPolicy optimize_global_threshold(const PredictionSet& predictions, double alpha);

struct ObjectiveCurvePoint {
  double th = 0.0;
  std::int64_t fp = 0;
  std::int64_t escalations = 0;
  double total = 0.0;
  bool is_argmin = false;
};

// The objective evaluated at every candidate threshold, for plotting.
// Exactly one point carries is_argmin (smallest-th tie-break).
std::vector<ObjectiveCurvePoint> objective_curve(const ClassSlice& slice, double alpha);

}  // namespace cascal
