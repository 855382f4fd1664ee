#include "cascal/types.hpp"

#include <cmath>
#include <unordered_set>

#include "cascal/errors.hpp"

namespace cascal {

void validate(const PredictionSet& set) {
  if (set.class_count < 2) {
    throw InvalidInput("class_count must be at least 2, got " +
                       std::to_string(set.class_count));
  }
  if (set.class_names &&
      static_cast<int>(set.class_names->size()) != set.class_count) {
    throw InvalidInput("class_names length " + std::to_string(set.class_names->size()) +
                       " does not match class_count " + std::to_string(set.class_count));
  }
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(set.samples.size());
  for (const SampleRecord& sample : set.samples) {
    if (!seen_ids.insert(sample.sample_id).second) {
      throw InvalidInput("duplicate sample_id '" + sample.sample_id + "'");
    }
    if (sample.true_label < 0 || sample.true_label >= set.class_count) {
      throw InvalidInput("sample '" + sample.sample_id + "': true_label " +
                         std::to_string(sample.true_label) + " out of range [0, " +
                         std::to_string(set.class_count) + ")");
    }
    for (int stage = 0; stage < kStageCount; ++stage) {
      const auto& probs = sample.stage_probs[stage];
      if (static_cast<int>(probs.size()) != set.class_count) {
        throw InvalidInput("sample '" + sample.sample_id + "' stage " +
                           std::to_string(stage + 1) + ": expected " +
                           std::to_string(set.class_count) + " probabilities, got " +
                           std::to_string(probs.size()));
      }
      double sum = 0.0;
      for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
          throw ValidationError("sample '" + sample.sample_id + "' stage " +
                                std::to_string(stage + 1) +
                                ": probability outside [0,1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbSumTolerance) {
        throw ValidationError("sample '" + sample.sample_id + "' stage " +
                              std::to_string(stage + 1) + ": probabilities sum to " +
                              std::to_string(sum) + ", outside 1 +/- " +
                              std::to_string(kProbSumTolerance));
      }
    }
  }
}

void validate(const CascadeSpec& spec) {
  if (spec.stages.size() != static_cast<size_t>(kStageCount)) {
    throw InvalidInput("cascade must have exactly 2 stages, got " +
                       std::to_string(spec.stages.size()));
  }
  for (const StageSpec& stage : spec.stages) {
    if (!std::isfinite(stage.energy_mj) || stage.energy_mj < 0.0) {
      throw InvalidInput("stage '" + stage.name + "': energy_mj must be finite and >= 0");
    }
  }
  if (spec.class_count < 1) {
    throw InvalidInput("cascade class_count must be positive");
  }
}

ThresholdPolicy ThresholdPolicy::global(double th, std::optional<double> alpha) {
  ThresholdPolicy policy;
  policy.kind = PolicyKind::Global;
  policy.global_th = th;
  policy.alpha = alpha;
  return policy;
}

ThresholdPolicy ThresholdPolicy::per_class(std::vector<double> th,
                                           std::optional<double> alpha) {
  ThresholdPolicy policy;
  policy.kind = PolicyKind::PerClass;
  policy.per_class_th = std::move(th);
  policy.alpha = alpha;
  return policy;
}

double ThresholdPolicy::threshold_for(int stage1_label) const {
  if (kind == PolicyKind::Global) return global_th;
  return per_class_th.at(static_cast<size_t>(stage1_label));
}

void validate(const ThresholdPolicy& policy, int class_count) {
  const auto check = [](double th) {
    if (!std::isfinite(th) || th < 0.0 || th > 1.0) {
      throw InvalidInput("threshold " + std::to_string(th) + " outside [0,1]");
    }
  };
  if (policy.kind == PolicyKind::Global) {
    check(policy.global_th);
  } else {
    if (static_cast<int>(policy.per_class_th.size()) != class_count) {
      throw InvalidInput("per-class policy has " +
                         std::to_string(policy.per_class_th.size()) +
                         " thresholds but data has " + std::to_string(class_count) +
                         " classes");
    }
    for (double th : policy.per_class_th) check(th);
  }
  if (policy.alpha && (!std::isfinite(*policy.alpha) || *policy.alpha < 0.0)) {
    throw InvalidInput("policy alpha must be finite and >= 0");
  }
}

}  // namespace cascal
