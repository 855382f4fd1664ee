#pragma once

#include <span>

#include "cascal/types.hpp"

namespace cascal {

// Difference between the two largest entries. Requires at least 2 entries.
double score_margin(std::span<const double> probs);

// Index of the largest entry; ties resolve to the lowest index.
// Requires at least 2 entries (single-class outputs are meaningless here).
int predicted_label(std::span<const double> probs);

// The early-stopping decision rule: keep the stage-1 prediction iff its
// score margin strictly exceeds the threshold selected by the stage-1
// predicted class; otherwise escalate and return stage 2's argmax.
// Ties at margin == threshold escalate.
CascadeDecision cascade_decide(const SampleRecord& sample, const ThresholdPolicy& policy);

}  // namespace cascal
