#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cascal/types.hpp"

namespace cascal {

// Difficulty knobs for one synthetic class. Sharpness shapes the margin
// distribution: correct predictions skew toward high margins, incorrect
// toward low, and larger values sharpen the skew.
struct ClassProfile {
  int class_id = 0;
  double prior = 1.0;
  double stage1_accuracy = 0.9;
  double stage2_accuracy = 0.95;
  double margin_sharpness_correct = 3.0;
  double margin_sharpness_incorrect = 3.0;
};

struct GeneratorConfig {
  std::vector<ClassProfile> class_profiles;  // profile i describes class i
  int sample_count = 0;
  std::uint64_t seed = 0;
};

void validate(const GeneratorConfig& config);

// Seeded synthetic prediction set. Output is a pure function of the config;
// every sample draws from its own RNG stream derived from (seed, index).
PredictionSet generate(const GeneratorConfig& config);

// Keeps a seeded uniform subset of ceil(fraction * count) samples per TRUE
// class, preserving input order. Fractions must be in (0, 1].
PredictionSet resample_by_class(const PredictionSet& predictions,
                                const std::vector<double>& keep_fraction,
                                std::uint64_t seed);

// Seeded stratified-by-true-label partition into (validation, test).
std::pair<PredictionSet, PredictionSet> split(const PredictionSet& predictions,
                                              double val_fraction, std::uint64_t seed);

}  // namespace cascal
