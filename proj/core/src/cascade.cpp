#include "cascal/cascade.hpp"

#include "cascal/errors.hpp"

namespace cascal {

double score_margin(std::span<const double> probs) {
  if (probs.size() < 2) {
    throw InvalidInput("score margin needs at least 2 class probabilities, got " +
                       std::to_string(probs.size()));
  }
  double top1 = probs[0];
  double top2 = probs[1];
  if (top2 > top1) std::swap(top1, top2);
  for (size_t i = 2; i < probs.size(); ++i) {
    const double p = probs[i];
    if (p > top1) {
      top2 = top1;
      top1 = p;
    } else if (p > top2) {
      top2 = p;
    }
  }
  return top1 - top2;
}

int predicted_label(std::span<const double> probs) {
  // Single-entry vectors are rejected too: class counts below 2 are invalid
  // everywhere in this library.
  if (probs.size() < 2) {
    throw InvalidInput("argmax needs at least 2 class probabilities, got " +
                       std::to_string(probs.size()));
  }
  size_t best = 0;
  for (size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;  // ties keep the lowest index
  }
  return static_cast<int>(best);
}

CascadeDecision cascade_decide(const SampleRecord& sample, const ThresholdPolicy& policy) {
  const auto& stage1 = sample.stage_probs[0];
  const auto& stage2 = sample.stage_probs[1];
  if (stage1.size() != stage2.size()) {
    throw InvalidInput("sample '" + sample.sample_id +
                       "': stage probability vectors differ in length");
  }
  const int stage1_label = predicted_label(stage1);
  const double margin = score_margin(stage1);
  validate(policy, static_cast<int>(stage1.size()));
  const double th = policy.threshold_for(stage1_label);

  CascadeDecision decision;
  decision.stage1_label = stage1_label;
  decision.stage1_margin = margin;
  if (margin > th) {
    decision.predicted_label = stage1_label;
    decision.stopped_at_stage = 1;
  } else {
    decision.predicted_label = predicted_label(stage2);
    decision.stopped_at_stage = 2;
  }
  return decision;
}

}  // namespace cascal
