#include "cascal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cascal/errors.hpp"

namespace cascal {

namespace {

// Margins never reach exactly 0 so the emitted argmax is unambiguous under
// lowest-index tie-breaking.
constexpr double kMinMargin = 1e-12;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream per (seed, index) pair; parallel and sequential
// generation draw identical values.
std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t state = seed ^ tag;
  state ^= splitmix64(state) + index * 0x9E3779B97F4A7C15ULL;
  return std::mt19937_64(splitmix64(state));
}

constexpr std::uint64_t kGenerateTag = 0x67656E65ULL;  // stream domains must not collide
constexpr std::uint64_t kResampleTag = 0x72657361ULL;
constexpr std::uint64_t kSplitTag = 0x73706C69ULL;

// Uniform double in [0, 1), 53 mantissa bits, identical on every platform.
double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n) by rejection.
std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % n;
  }
}

// Kumaraswamy(a, b) via its closed-form inverse CDF. Correct predictions use
// (a=sharpness, b=1), whose density x^(a-1) piles mass near 1; incorrect use
// (a=1, b=sharpness), the mirror image near 0.
double draw_margin(std::mt19937_64& gen, bool correct, const ClassProfile& profile) {
  const double u = unit_uniform(gen);
  double margin;
  if (correct) {
    margin = std::pow(u, 1.0 / profile.margin_sharpness_correct);
  } else {
    margin = 1.0 - std::pow(1.0 - u, 1.0 / profile.margin_sharpness_incorrect);
  }
  return std::clamp(margin, kMinMargin, 1.0);
}

// Probability vector with argmax `top`, runner-up `second`, and top-2 gap
// `margin`. Remaining classes share half the runner-up's probability:
// p2 = 2(1-m)/(C+2), q = (1-m)/(C+2), p1 = p2 + m keeps the ordering strict
// for every class count >= 2 and sums to 1 up to rounding.
std::vector<double> make_probs(int class_count, int top, int second, double margin) {
  const double rest = (1.0 - margin) / (class_count + 2.0);
  const double p2 = 2.0 * rest;
  std::vector<double> probs(static_cast<size_t>(class_count), rest);
  probs[static_cast<size_t>(second)] = p2;
  probs[static_cast<size_t>(top)] = p2 + margin;
  if (class_count == 2) {
    // No "rest" classes; renormalize the pair exactly.
    probs[static_cast<size_t>(second)] = (1.0 - margin) / 2.0;
    probs[static_cast<size_t>(top)] = (1.0 + margin) / 2.0;
  }
  return probs;
}

int wrong_label(std::mt19937_64& gen, int class_count, int true_label) {
  const auto offset = static_cast<int>(
      uniform_below(gen, static_cast<std::uint64_t>(class_count - 1)));
  return (true_label + 1 + offset) % class_count;
}

}  // namespace

void validate(const GeneratorConfig& config) {
  if (config.class_profiles.size() < 2) {
    throw InvalidInput("generator needs at least 2 class profiles");
  }
  if (config.sample_count < 1) {
    throw InvalidInput("sample_count must be positive");
  }
  double prior_sum = 0.0;
  for (size_t i = 0; i < config.class_profiles.size(); ++i) {
    const ClassProfile& profile = config.class_profiles[i];
    if (profile.class_id != static_cast<int>(i)) {
      throw InvalidInput("class profile " + std::to_string(i) + " has class_id " +
                         std::to_string(profile.class_id) + "; profiles must be ordered");
    }
    if (!std::isfinite(profile.prior) || profile.prior < 0.0) {
      throw InvalidInput("class " + std::to_string(i) + ": prior must be >= 0");
    }
    for (double acc : {profile.stage1_accuracy, profile.stage2_accuracy}) {
      if (!std::isfinite(acc) || acc < 0.0 || acc > 1.0) {
        throw InvalidInput("class " + std::to_string(i) + ": accuracy outside [0,1]");
      }
    }
    for (double sharp : {profile.margin_sharpness_correct, profile.margin_sharpness_incorrect}) {
      if (!std::isfinite(sharp) || sharp <= 0.0) {
        throw InvalidInput("class " + std::to_string(i) + ": sharpness must be > 0");
      }
    }
    prior_sum += profile.prior;
  }
  if (prior_sum <= 0.0) {
    throw InvalidInput("class priors must not all be zero");
  }
}

PredictionSet generate(const GeneratorConfig& config) {
  validate(config);
  const int class_count = static_cast<int>(config.class_profiles.size());

  std::vector<double> cumulative;
  cumulative.reserve(config.class_profiles.size());
  double acc = 0.0;
  for (const ClassProfile& profile : config.class_profiles) {
    acc += profile.prior;
    cumulative.push_back(acc);
  }
  const double prior_sum = acc;

  PredictionSet set;
  set.class_count = class_count;
  set.samples.reserve(static_cast<size_t>(config.sample_count));
  for (int i = 0; i < config.sample_count; ++i) {
    std::mt19937_64 gen =
        stream_for(config.seed, static_cast<std::uint64_t>(i), kGenerateTag);

    const double u = unit_uniform(gen) * prior_sum;
    int true_label = 0;
    while (true_label + 1 < class_count && u >= cumulative[static_cast<size_t>(true_label)]) {
      ++true_label;
    }
    const ClassProfile& profile = config.class_profiles[static_cast<size_t>(true_label)];

    SampleRecord sample;
    sample.sample_id = "s" + std::to_string(i);
    sample.true_label = true_label;
    for (int stage = 0; stage < kStageCount; ++stage) {
      const double accuracy =
          stage == 0 ? profile.stage1_accuracy : profile.stage2_accuracy;
      const bool correct = unit_uniform(gen) < accuracy;
      const double margin = draw_margin(gen, correct, profile);
      // Correct draws put the true label on top with a random wrong
      // runner-up; incorrect draws put a uniform wrong label on top with the
      // true label as runner-up.
      const int other = wrong_label(gen, class_count, true_label);
      const int top = correct ? true_label : other;
      const int second = correct ? other : true_label;
      sample.stage_probs[static_cast<size_t>(stage)] =
          make_probs(class_count, top, second, margin);
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

PredictionSet resample_by_class(const PredictionSet& predictions,
                                const std::vector<double>& keep_fraction,
                                std::uint64_t seed) {
  validate(predictions);
  if (static_cast<int>(keep_fraction.size()) != predictions.class_count) {
    throw InvalidInput("keep_fraction has " + std::to_string(keep_fraction.size()) +
                       " entries but class_count is " +
                       std::to_string(predictions.class_count));
  }
  for (double fraction : keep_fraction) {
    if (!std::isfinite(fraction) || fraction <= 0.0 || fraction > 1.0) {
      throw InvalidInput("keep fraction " + std::to_string(fraction) +
                         " outside (0,1]");
    }
  }

  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(predictions.class_count));
  for (size_t i = 0; i < predictions.samples.size(); ++i) {
    by_class[static_cast<size_t>(predictions.samples[i].true_label)].push_back(i);
  }

  std::vector<char> keep(predictions.samples.size(), 0);
  for (int c = 0; c < predictions.class_count; ++c) {
    std::vector<size_t>& indices = by_class[static_cast<size_t>(c)];
    if (indices.empty()) continue;
    const double fraction = keep_fraction[static_cast<size_t>(c)];
    const auto n = indices.size();
    // ceil(fraction * n), nudged so binary representation artifacts
    // (0.2 * 100 = 20.000000000000004) don't bump the count.
    auto kept = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(n) - 1e-9));
    kept = std::clamp<size_t>(kept, 1, n);

    std::mt19937_64 gen = stream_for(seed, static_cast<std::uint64_t>(c), kResampleTag);
    for (size_t i = 0; i < kept; ++i) {  // partial Fisher-Yates
      const size_t j = i + uniform_below(gen, n - i);
      std::swap(indices[i], indices[j]);
    }
    for (size_t i = 0; i < kept; ++i) keep[indices[i]] = 1;
  }

  PredictionSet survivor;
  survivor.class_count = predictions.class_count;
  survivor.class_names = predictions.class_names;
  for (size_t i = 0; i < predictions.samples.size(); ++i) {
    if (keep[i]) survivor.samples.push_back(predictions.samples[i]);
  }
  return survivor;
}

std::pair<PredictionSet, PredictionSet> split(const PredictionSet& predictions,
                                              double val_fraction, std::uint64_t seed) {
  validate(predictions);
  if (predictions.samples.size() < 2) {
    throw InvalidInput("split needs at least 2 samples");
  }
  if (!std::isfinite(val_fraction) || val_fraction <= 0.0 || val_fraction >= 1.0) {
    throw InvalidInput("val_fraction " + std::to_string(val_fraction) +
                       " outside (0,1)");
  }

  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(predictions.class_count));
  for (size_t i = 0; i < predictions.samples.size(); ++i) {
    by_class[static_cast<size_t>(predictions.samples[i].true_label)].push_back(i);
  }

  std::vector<char> to_val(predictions.samples.size(), 0);
  for (int c = 0; c < predictions.class_count; ++c) {
    std::vector<size_t>& indices = by_class[static_cast<size_t>(c)];
    if (indices.empty()) continue;
    const auto n = indices.size();
    const auto val_count = static_cast<size_t>(
        std::floor(val_fraction * static_cast<double>(n) + 0.5));

    std::mt19937_64 gen = stream_for(seed, static_cast<std::uint64_t>(c), kSplitTag);
    for (size_t i = 0; i + 1 < n; ++i) {
      const size_t j = i + uniform_below(gen, n - i);
      std::swap(indices[i], indices[j]);
    }
    for (size_t i = 0; i < val_count; ++i) to_val[indices[i]] = 1;
  }

  PredictionSet validation;
  PredictionSet test;
  for (PredictionSet* side : {&validation, &test}) {
    side->class_count = predictions.class_count;
    side->class_names = predictions.class_names;
  }
  for (size_t i = 0; i < predictions.samples.size(); ++i) {
    (to_val[i] ? validation : test).samples.push_back(predictions.samples[i]);
  }
  if (validation.samples.empty() || test.samples.empty()) {
    throw InvalidInput("degenerate split: one side is empty; adjust val_fraction");
  }
  return {std::move(validation), std::move(test)};
}

}  // namespace cascal
