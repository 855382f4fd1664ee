#include "cascal/slices.hpp"

#include "cascal/cascade.hpp"

namespace cascal {

std::vector<ClassSlice> build_class_slices(const PredictionSet& predictions) {
  validate(predictions);
  std::vector<ClassSlice> slices(static_cast<size_t>(predictions.class_count));
  for (int c = 0; c < predictions.class_count; ++c) {
    slices[static_cast<size_t>(c)].class_id = c;
  }
  for (const SampleRecord& sample : predictions.samples) {
    const int stage1_label = predicted_label(sample.stage_probs[0]);
    ClassSliceEntry entry;
    entry.stage1_margin = score_margin(sample.stage_probs[0]);
    entry.stage1_correct = stage1_label == sample.true_label;
    entry.stage2_correct = predicted_label(sample.stage_probs[1]) == sample.true_label;
    slices[static_cast<size_t>(stage1_label)].entries.push_back(entry);
  }
  return slices;
}

}  // namespace cascal
