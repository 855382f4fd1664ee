#pragma once

#include <vector>

#include "cascal/types.hpp"

namespace cascal {

// Per-sample facts that matter for threshold selection, with the full
// probability vectors stripped away.
struct ClassSliceEntry {
  double stage1_margin = 0.0;
  bool stage1_correct = false;
  bool stage2_correct = false;
};

// All samples whose stage-1 argmax is `class_id`, in input order.
struct ClassSlice {
  int class_id = -1;
  std::vector<ClassSliceEntry> entries;
};

// Partitions the set by stage-1 predicted label. Every sample lands in
// exactly one slice; slices may be empty.
std::vector<ClassSlice> build_class_slices(const PredictionSet& predictions);

}  // namespace cascal
