#include "cascal/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "cascal/cascade.hpp"
#include "cascal/errors.hpp"

namespace cascal {

namespace {

void check_threshold(double th) {
  if (!std::isfinite(th) || th < 0.0 || th > 1.0) {
    throw InvalidInput("threshold " + std::to_string(th) + " outside [0,1]");
  }
}

void check_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw InvalidInput("alpha must be finite and >= 0, got " + std::to_string(alpha));
  }
}

// Margins sorted ascending with prefix counts, so the objective at any
// candidate is O(log M). For the first k margins covered by a threshold:
//   escalations = k
//   fp          = (stage1-wrong beyond k) + (stage1-wrong AND stage2-wrong within k)
struct SortedSlice {
  std::vector<double> margins;
  std::vector<std::int64_t> wrong1_prefix;      // stage1-wrong among first k
  std::vector<std::int64_t> wrong_both_prefix;  // stage1-wrong and stage2-wrong among first k
  std::int64_t wrong1_total = 0;

  explicit SortedSlice(const ClassSlice& slice) {
    std::vector<ClassSliceEntry> entries = slice.entries;
    std::sort(entries.begin(), entries.end(),
              [](const ClassSliceEntry& a, const ClassSliceEntry& b) {
                return a.stage1_margin < b.stage1_margin;
              });
    margins.reserve(entries.size());
    wrong1_prefix.assign(entries.size() + 1, 0);
    wrong_both_prefix.assign(entries.size() + 1, 0);
    for (size_t i = 0; i < entries.size(); ++i) {
      margins.push_back(entries[i].stage1_margin);
      const bool wrong1 = !entries[i].stage1_correct;
      wrong1_prefix[i + 1] = wrong1_prefix[i] + (wrong1 ? 1 : 0);
      wrong_both_prefix[i + 1] =
          wrong_both_prefix[i] + ((wrong1 && !entries[i].stage2_correct) ? 1 : 0);
    }
    wrong1_total = wrong1_prefix[entries.size()];
  }

  ObjectiveValue at_covered(size_t k, double alpha) const {
    ObjectiveValue value;
    value.escalations = static_cast<std::int64_t>(k);
    value.fp = (wrong1_total - wrong1_prefix[k]) + wrong_both_prefix[k];
    value.total = static_cast<double>(value.fp) +
                  alpha * static_cast<double>(value.escalations);
    return value;
  }

  size_t covered_by(double th) const {
    return static_cast<size_t>(
        std::upper_bound(margins.begin(), margins.end(), th) - margins.begin());
  }
};

}  // namespace

std::int64_t false_positives_for_class(const ClassSlice& slice, double th) {
  check_threshold(th);
  std::int64_t count = 0;
  for (const ClassSliceEntry& entry : slice.entries) {
    if (entry.stage1_correct) continue;
    if (entry.stage1_margin > th || !entry.stage2_correct) ++count;
  }
  return count;
}

std::int64_t escalations_for_class(const ClassSlice& slice, double th) {
  check_threshold(th);
  std::int64_t count = 0;
  for (const ClassSliceEntry& entry : slice.entries) {
    if (entry.stage1_margin <= th) ++count;
  }
  return count;
}

ObjectiveValue objective(const ClassSlice& slice, double th, double alpha) {
  check_alpha(alpha);
  ObjectiveValue value;
  value.fp = false_positives_for_class(slice, th);
  value.escalations = escalations_for_class(slice, th);
  value.total = static_cast<double>(value.fp) +
                alpha * static_cast<double>(value.escalations);
  return value;
}

std::vector<double> candidate_thresholds(const ClassSlice& slice) {
  std::vector<double> candidates;
  candidates.reserve(slice.entries.size() + 1);
  candidates.push_back(0.0);
  for (const ClassSliceEntry& entry : slice.entries) {
    candidates.push_back(entry.stage1_margin);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  return candidates;
}

SliceOptimum optimize_slice_threshold(const ClassSlice& slice, double alpha) {
  check_alpha(alpha);
  const SortedSlice sorted(slice);
  const std::vector<double> candidates = candidate_thresholds(slice);

  SliceOptimum best;
  best.th = candidates.front();
  best.value = sorted.at_covered(sorted.covered_by(best.th), alpha);
  for (size_t i = 1; i < candidates.size(); ++i) {
    const ObjectiveValue value = sorted.at_covered(sorted.covered_by(candidates[i]), alpha);
    // Strict improvement only: ascending scan keeps the smallest threshold
    // on equal totals.
    if (value.total < best.value.total) {
      best.th = candidates[i];
      best.value = value;
    }
  }
  return best;
}

namespace {

// All samples as one slice, in input order. Summing the per-class objective
// over a partition equals evaluating the same counts on the pooled entries,
// so the global baseline reuses the slice optimizer directly.
ClassSlice pooled_slice(const PredictionSet& predictions) {
  ClassSlice pooled;
  pooled.class_id = -1;
  pooled.entries.reserve(predictions.samples.size());
  for (const SampleRecord& sample : predictions.samples) {
    const int stage1_label = predicted_label(sample.stage_probs[0]);
    ClassSliceEntry entry;
    entry.stage1_margin = score_margin(sample.stage_probs[0]);
    entry.stage1_correct = stage1_label == sample.true_label;
    entry.stage2_correct = predicted_label(sample.stage_probs[1]) == sample.true_label;
    pooled.entries.push_back(entry);
  }
  return pooled;
}

}  // namespace

OptimizationResult optimize_class_thresholds(const PredictionSet& predictions, double alpha) {
  check_alpha(alpha);
  const std::vector<ClassSlice> slices = build_class_slices(predictions);

  OptimizationResult result;
  result.per_class_th.resize(slices.size(), 0.0);
  result.per_class_objective.resize(slices.size());
  result.fallback_used.assign(slices.size(), false);

  bool need_fallback = false;
  for (const ClassSlice& slice : slices) {
    if (slice.entries.empty()) need_fallback = true;
  }
  double fallback_th = 0.0;
  if (need_fallback) {
    fallback_th = optimize_slice_threshold(pooled_slice(predictions), alpha).th;
  }

  for (size_t c = 0; c < slices.size(); ++c) {
    if (slices[c].entries.empty()) {
      // Never predicted on the optimization set: inherit the pooled optimum.
      result.per_class_th[c] = fallback_th;
      result.per_class_objective[c] = ObjectiveValue{};
      result.fallback_used[c] = true;
    } else {
      const SliceOptimum opt = optimize_slice_threshold(slices[c], alpha);
      result.per_class_th[c] = opt.th;
      result.per_class_objective[c] = opt.value;
    }
  }
  return result;
}

ThresholdPolicy optimize_global_threshold(const PredictionSet& predictions, double alpha) {
  check_alpha(alpha);
  validate(predictions);
  const SliceOptimum opt = optimize_slice_threshold(pooled_slice(predictions), alpha);
  return ThresholdPolicy::global(opt.th, alpha);
}

std::vector<ObjectiveCurvePoint> objective_curve(const ClassSlice& slice, double alpha) {
  check_alpha(alpha);
  const SortedSlice sorted(slice);
  const std::vector<double> candidates = candidate_thresholds(slice);

  std::vector<ObjectiveCurvePoint> points;
  points.reserve(candidates.size());
  size_t argmin = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const ObjectiveValue value = sorted.at_covered(sorted.covered_by(candidates[i]), alpha);
    points.push_back({candidates[i], value.fp, value.escalations, value.total, false});
    if (points[i].total < points[argmin].total) argmin = i;
  }
  points[argmin].is_argmin = true;
  return points;
}

}  // namespace cascal
