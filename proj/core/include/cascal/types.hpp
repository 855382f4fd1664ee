#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cascal {

// Probability vectors must sum to 1 within this tolerance (unless the caller
// opted into renormalization at load time).
inline constexpr double kProbSumTolerance = 1e-4;

inline constexpr int kStageCount = 2;

// One joined record: true label plus the probability vectors the two cascade
// stages produced for the same input.
struct SampleRecord {
  std::string sample_id;
  int true_label = 0;
  std::array<std::vector<double>, kStageCount> stage_probs;
};

struct PredictionSet {
  int class_count = 0;
  std::vector<SampleRecord> samples;
  std::optional<std::vector<std::string>> class_names;
};

// Throws InvalidInput / ValidationError on any violated invariant
// (class_count < 2, vector length or label range mismatches, duplicate
// sample ids, probabilities outside [0,1] or off-sum beyond tolerance).
void validate(const PredictionSet& set);

struct StageSpec {
  std::string name;
  double energy_mj = 0.0;  // cost of one inference with this stage
};

struct CascadeSpec {
  std::vector<StageSpec> stages;  // exactly 2 stages, ordered little -> big
  int class_count = 0;
};

void validate(const CascadeSpec& spec);

enum class PolicyKind { Global, PerClass };

// Score-margin stopping thresholds: one shared value, or one per stage-1
// predicted class. `alpha` records the trade-off weight a policy was
// optimized for, when known.
struct ThresholdPolicy {
  PolicyKind kind = PolicyKind::Global;
  double global_th = 0.0;
  std::vector<double> per_class_th;
  std::optional<double> alpha;

  static ThresholdPolicy global(double th, std::optional<double> alpha = std::nullopt);
  static ThresholdPolicy per_class(std::vector<double> th,
                                   std::optional<double> alpha = std::nullopt);

  double threshold_for(int stage1_label) const;
};

// `class_count` is the class count of the data the policy will be applied to.
void validate(const ThresholdPolicy& policy, int class_count);

struct CascadeDecision {
  int predicted_label = 0;
  int stopped_at_stage = 1;  // 1 or 2
  double stage1_margin = 0.0;
  int stage1_label = 0;
};

}  // namespace cascal
