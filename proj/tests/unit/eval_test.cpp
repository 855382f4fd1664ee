#include <doctest.h>

#include <random>

#include "cascal/cascade.hpp"
#include "cascal/errors.hpp"
#include "cascal/eval.hpp"
#include "support/test_helpers.hpp"

using namespace cascal;
namespace th = cascal::testing;

TEST_SUITE_BEGIN("eval");

namespace {

CascadeSpec cascade_1_10(int class_count) {
  return {{{"little", 1.0}, {"big", 10.0}}, class_count};
}

double direct_stage_accuracy(const PredictionSet& set, int stage) {
  std::int64_t correct = 0;
  for (const SampleRecord& sample : set.samples) {
    if (predicted_label(sample.stage_probs[static_cast<size_t>(stage)]) ==
        sample.true_label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(set.samples.size());
}

}  // namespace

TEST_CASE("expected_energy follows the two-term model") {
  const CascadeSpec cascade = cascade_1_10(3);
  CHECK(expected_energy(cascade, 0.0) == 1.0);
  CHECK(expected_energy(cascade, 1.0) == 11.0);
  CHECK(expected_energy(cascade, 0.5) == 6.0);
  CHECK_THROWS_AS(expected_energy(cascade, -0.1), InvalidInput);
  CHECK_THROWS_AS(expected_energy(cascade, 1.5), InvalidInput);
}

TEST_CASE("th=1 policies reproduce stage 2 exactly") {
  std::mt19937_64 rng(21);
  const PredictionSet set = th::random_instance(rng, 6, 300);
  const CascadeSpec cascade = cascade_1_10(set.class_count);
  for (const ThresholdPolicy& policy :
       {ThresholdPolicy::global(1.0),
        ThresholdPolicy::per_class(
            std::vector<double>(static_cast<size_t>(set.class_count), 1.0))}) {
    const EvaluationReport report = evaluate_policy(set, policy, cascade);
    CHECK(report.escalation_rate == 1.0);
    CHECK(report.accuracy == report.stage_accuracies.stage2);
    CHECK(report.accuracy == direct_stage_accuracy(set, 1));
    CHECK(report.mean_energy_mj == 11.0);
  }
}

TEST_CASE("th=0 with no zero margins reproduces stage 1 exactly") {
  std::mt19937_64 rng(22);
  const PredictionSet set = th::random_instance(rng, 6, 300, /*min_margin_step=*/1);
  const CascadeSpec cascade = cascade_1_10(set.class_count);
  const EvaluationReport report =
      evaluate_policy(set, ThresholdPolicy::global(0.0), cascade);
  CHECK(report.escalation_rate == 0.0);
  CHECK(report.accuracy == report.stage_accuracies.stage1);
  CHECK(report.accuracy == direct_stage_accuracy(set, 0));
  CHECK(report.mean_energy_mj == 1.0);
}

TEST_CASE("energy model arithmetic matches the documented example") {
  // two samples, exactly one escalates at th=0.5
  PredictionSet set;
  set.class_count = 2;
  set.samples = {
      th::make_sample("a", 0, th::top2_probs(2, 0, 1, 0.75), th::one_hot(2, 0)),
      th::make_sample("b", 1, th::top2_probs(2, 1, 0, 0.25), th::one_hot(2, 1)),
  };
  const EvaluationReport report =
      evaluate_policy(set, ThresholdPolicy::global(0.5), cascade_1_10(2));
  CHECK(report.escalation_rate == 0.5);
  CHECK(report.mean_energy_mj == 6.0);
}

TEST_CASE("report invariants hold on random sets") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 15; ++trial) {
    const PredictionSet set = th::random_instance(rng, 8, 400);
    const CascadeSpec cascade = cascade_1_10(set.class_count);
    std::vector<double> thresholds(static_cast<size_t>(set.class_count));
    for (double& t : thresholds) t = unit(rng);
    const EvaluationReport report =
        evaluate_policy(set, ThresholdPolicy::per_class(thresholds), cascade);

    // same arithmetic path as Eq-style energy accounting: exact zero residue
    CHECK(report.mean_energy_mj - cascade.stages[0].energy_mj -
              cascade.stages[1].energy_mj * report.escalation_rate ==
          0.0);

    std::int64_t total_m = 0;
    std::int64_t total_escalations = 0;
    for (const PerClassStats& stats : report.per_class) {
      total_m += stats.m_c;
      total_escalations += stats.escalations;
      CHECK(stats.th_used == thresholds[static_cast<size_t>(stats.class_id)]);
    }
    CHECK(total_m == static_cast<std::int64_t>(set.samples.size()));
    CHECK(static_cast<double>(total_escalations) /
              static_cast<double>(set.samples.size()) ==
          report.escalation_rate);
  }
}

TEST_CASE("evaluate_policy validates dimensions and emptiness") {
  std::mt19937_64 rng(24);
  const PredictionSet set = th::random_instance(rng, 4, 50);
  CHECK_THROWS_AS(
      evaluate_policy(set, ThresholdPolicy::global(0.5), cascade_1_10(set.class_count + 1)),
      InvalidInput);
  PredictionSet empty;
  empty.class_count = set.class_count;
  CHECK_THROWS_AS(
      evaluate_policy(empty, ThresholdPolicy::global(0.5), cascade_1_10(set.class_count)),
      InvalidInput);
}

TEST_CASE("sweep_alpha composes optimize and evaluate") {
  std::mt19937_64 rng(25);
  const PredictionSet opt_set = th::random_instance(rng, 5, 400);
  const PredictionSet test_set =
      th::random_instance(rng, 5, 300, 0, /*fixed_classes=*/opt_set.class_count);
  const CascadeSpec cascade = cascade_1_10(opt_set.class_count);

  const TradeoffCurve curve =
      sweep_alpha(opt_set, test_set, cascade, {1.0}, SweepMode::PerClass);
  REQUIRE(curve.points.size() == 1);
  const OptimizationResult direct = optimize_class_thresholds(opt_set, 1.0);
  REQUIRE(curve.points[0].policy.has_value());
  CHECK(curve.points[0].policy->per_class_th == direct.per_class_th);
  CHECK(curve.points[0].alpha == 1.0);

  // baselines are the single-stage numbers on the test set
  CHECK(curve.baseline_m1.accuracy == direct_stage_accuracy(test_set, 0));
  CHECK(curve.baseline_m2.accuracy == direct_stage_accuracy(test_set, 1));
  CHECK(curve.baseline_m1.energy_mj == 1.0);
  CHECK(curve.baseline_m2.energy_mj == 10.0);
}

TEST_CASE("sweep_alpha sorts alphas and keeps duplicates") {
  std::mt19937_64 rng(26);
  const PredictionSet set = th::random_instance(rng, 4, 200);
  const CascadeSpec cascade = cascade_1_10(set.class_count);
  const TradeoffCurve curve =
      sweep_alpha(set, set, cascade, {1.0, 0.0, 1.0, 0.5}, SweepMode::Global);
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].alpha == 0.0);
  CHECK(curve.points[1].alpha == 0.5);
  CHECK(curve.points[2].alpha == 1.0);
  CHECK(curve.points[3].alpha == 1.0);
}

TEST_CASE("sweep_alpha rejects empty grids and mismatched sets") {
  std::mt19937_64 rng(27);
  const PredictionSet set = th::random_instance(rng, 4, 100);
  const CascadeSpec cascade = cascade_1_10(set.class_count);
  CHECK_THROWS_AS(sweep_alpha(set, set, cascade, {}, SweepMode::PerClass), InvalidInput);
}

TEST_CASE("optimization-set escalations are non-increasing along the sweep") {
  std::mt19937_64 rng(28);
  const PredictionSet opt_set = th::random_instance(rng, 6, 500);
  const CascadeSpec cascade = cascade_1_10(opt_set.class_count);
  const TradeoffCurve curve =
      sweep_alpha(opt_set, opt_set, cascade, default_alpha_grid(), SweepMode::PerClass);
  const auto slices = build_class_slices(opt_set);
  std::int64_t previous = -1;
  for (const TradeoffPoint& point : curve.points) {
    std::int64_t escalations = 0;
    for (const ClassSlice& slice : slices) {
      escalations +=
          escalations_for_class(slice, point.policy->per_class_th[static_cast<size_t>(
                                           slice.class_id)]);
    }
    if (previous >= 0) CHECK(escalations <= previous);
    previous = escalations;
  }
}

TEST_CASE("alpha=0 with a perfect stage 1 keeps stage-1 accuracy") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> margin_dist(1, 8192);
  PredictionSet set;
  set.class_count = 3;
  for (int i = 0; i < 90; ++i) {
    const int label = static_cast<int>(rng() % 3);
    set.samples.push_back(th::make_sample(
        "s" + std::to_string(i), label,
        th::top2_probs(3, label, (label + 1) % 3, th::dyadic_margin(margin_dist(rng))),
        th::one_hot(3, (label + static_cast<int>(rng() % 3)) % 3)));
  }
  const CascadeSpec cascade = cascade_1_10(3);
  const TradeoffCurve curve = sweep_alpha(set, set, cascade, {0.0}, SweepMode::PerClass);
  CHECK(curve.points[0].accuracy == 1.0);
  CHECK(curve.points[0].escalation_rate == 0.0);
}

namespace {

TradeoffCurve synthetic_curve() {
  TradeoffCurve curve;
  curve.baseline_m1 = {0.7, 1.0};
  curve.baseline_m2 = {0.9, 10.0};
  const auto point = [](double alpha, double acc, double energy) {
    TradeoffPoint p;
    p.alpha = alpha;
    p.accuracy = acc;
    p.mean_energy_mj = energy;
    return p;
  };
  curve.points = {point(0.0, 0.91, 9.0), point(0.1, 0.88, 6.0), point(1.0, 0.75, 2.0)};
  return curve;
}

}  // namespace

TEST_CASE("accuracy_gain_points picks minimum energy above target") {
  const TradeoffCurve curve = synthetic_curve();
  const auto gains = accuracy_gain_points(curve, {0.0, 0.25, 0.5, 1.0});
  REQUIRE(gains.size() == 4);
  // q=0: target 0.7, all points qualify, cheapest is 2.0
  CHECK(gains[0].target_accuracy == 0.7);
  CHECK(gains[0].mean_energy_mj == 2.0);
  // q=0.25: target 0.75, the 2.0-energy point still qualifies
  CHECK(gains[1].mean_energy_mj == 2.0);
  // q=0.5: target 0.8, only the first two qualify
  CHECK(gains[2].mean_energy_mj == 6.0);
  // q=1: target 0.9, only the 0.91 point qualifies
  CHECK(gains[3].mean_energy_mj == 9.0);

  // energy is non-decreasing in q whenever reachable
  for (size_t i = 1; i < gains.size(); ++i) {
    if (gains[i - 1].mean_energy_mj && gains[i].mean_energy_mj) {
      CHECK(*gains[i].mean_energy_mj >= *gains[i - 1].mean_energy_mj);
    }
  }
}

TEST_CASE("accuracy_gain_points reports unreachable targets") {
  TradeoffCurve curve = synthetic_curve();
  curve.points.erase(curve.points.begin());  // best accuracy now 0.88 < 0.9
  const auto gains = accuracy_gain_points(curve, {1.0});
  CHECK_FALSE(gains[0].mean_energy_mj.has_value());
  CHECK_THROWS_AS(accuracy_gain_points(curve, {1.5}), InvalidInput);
}

TEST_CASE("compare_policies on identical curves yields zero differences") {
  const TradeoffCurve curve = synthetic_curve();
  const auto rows = compare_policies(curve, curve, {0.25, 0.5, 0.75, 1.0});
  for (const PolicyComparison& row : rows) {
    REQUIRE(row.relative_difference.has_value());
    CHECK(*row.relative_difference == 0.0);
  }
}

TEST_CASE("compare_policies rejects mismatched baselines") {
  const TradeoffCurve curve = synthetic_curve();
  TradeoffCurve other = curve;
  other.baseline_m2.energy_mj = 11.0;
  CHECK_THROWS_AS(compare_policies(curve, other, {0.5}), InvalidInput);
}

TEST_CASE("compare_policies marks unreachable sides undefined") {
  const TradeoffCurve curve = synthetic_curve();
  TradeoffCurve weaker = curve;
  weaker.points.erase(weaker.points.begin());
  const auto rows = compare_policies(curve, weaker, {1.0});
  CHECK(rows[0].energy_per_class.has_value());
  CHECK_FALSE(rows[0].energy_global.has_value());
  CHECK_FALSE(rows[0].relative_difference.has_value());
}

TEST_CASE("duplicated-class sets give identical per-class and global curves") {
  std::mt19937_64 rng(20240630);
  const PredictionSet opt_set = th::duplicated_class_set(rng, 4, 60);
  const PredictionSet test_set = th::duplicated_class_set(rng, 4, 50);
  const CascadeSpec cascade = cascade_1_10(4);
  const auto alphas = default_alpha_grid();
  const TradeoffCurve per_class =
      sweep_alpha(opt_set, test_set, cascade, alphas, SweepMode::PerClass);
  const TradeoffCurve global =
      sweep_alpha(opt_set, test_set, cascade, alphas, SweepMode::Global);
  const auto rows = compare_policies(per_class, global, default_quantiles());
  for (const PolicyComparison& row : rows) {
    if (row.relative_difference) CHECK(*row.relative_difference == 0.0);
    CHECK(row.energy_per_class.has_value() == row.energy_global.has_value());
  }
}

TEST_CASE("sm_histogram bins margins and splits by correctness") {
  SUBCASE("class never predicted gives all-zero counts") {
    std::mt19937_64 rng(31);
    PredictionSet set;
    set.class_count = 3;
    set.samples = {
        th::make_sample("a", 0, th::top2_probs(3, 0, 1, 0.5), th::one_hot(3, 0))};
    const Histogram histogram = sm_histogram(set, 2, 4);
    for (std::int64_t c : histogram.correct_counts) CHECK(c == 0);
    for (std::int64_t c : histogram.incorrect_counts) CHECK(c == 0);
    CHECK(histogram.bin_edges.size() == 5);
  }
  SUBCASE("edge margins land in the outer bins") {
    PredictionSet set;
    set.class_count = 2;
    set.samples = {
        th::make_sample("zero", 0, th::top2_probs(2, 0, 1, 0.0), th::one_hot(2, 0)),
        th::make_sample("one", 0, th::top2_probs(2, 0, 1, 1.0), th::one_hot(2, 0)),
    };
    const Histogram histogram = sm_histogram(set, 0, 2);
    CHECK(histogram.correct_counts == std::vector<std::int64_t>{1, 1});
    CHECK(histogram.incorrect_counts == std::vector<std::int64_t>{0, 0});
  }
  SUBCASE("counts partition the class slice") {
    std::mt19937_64 rng(32);
    const PredictionSet set = th::random_instance(rng, 5, 400);
    const auto slices = build_class_slices(set);
    for (int c = 0; c < set.class_count; ++c) {
      const Histogram histogram = sm_histogram(set, c, 7);
      std::int64_t total = 0;
      for (std::int64_t v : histogram.correct_counts) total += v;
      for (std::int64_t v : histogram.incorrect_counts) total += v;
      CHECK(total == static_cast<std::int64_t>(slices[static_cast<size_t>(c)].entries.size()));
    }
  }
  SUBCASE("argument validation") {
    std::mt19937_64 rng(33);
    const PredictionSet set = th::random_instance(rng, 3, 10);
    CHECK_THROWS_AS(sm_histogram(set, set.class_count, 4), InvalidInput);
    CHECK_THROWS_AS(sm_histogram(set, -1, 4), InvalidInput);
    CHECK_THROWS_AS(sm_histogram(set, 0, 0), InvalidInput);
  }
}

TEST_CASE("max_accuracy_summary picks the best point and reports M2 deltas") {
  TradeoffCurve curve;
  curve.baseline_m1 = {0.7, 1.0};
  curve.baseline_m2 = {0.9, 10.0};
  TradeoffPoint always_escalate;
  always_escalate.alpha = 0.0;
  always_escalate.accuracy = 0.9;
  always_escalate.mean_energy_mj = 11.0;
  curve.points = {always_escalate};
  const MaxAccuracySummary summary = max_accuracy_summary(curve);
  CHECK(summary.accuracy == 0.9);
  CHECK(summary.delta_vs_m2_accuracy == 0.0);
  CHECK(summary.delta_vs_m2_energy == 1.0);  // + E(M1)

  // accuracy ties resolve to the cheaper point
  TradeoffPoint cheaper = always_escalate;
  cheaper.mean_energy_mj = 7.0;
  curve.points.push_back(cheaper);
  CHECK(max_accuracy_summary(curve).mean_energy_mj == 7.0);

  curve.points.clear();
  CHECK_THROWS_AS(max_accuracy_summary(curve), InvalidInput);
}

TEST_CASE("default grids match the documented tool defaults") {
  CHECK(default_alpha_grid() ==
        std::vector<double>{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0});
  CHECK(default_quantiles() == std::vector<double>{0.25, 0.5, 0.75, 1.0});
}

TEST_SUITE_END();
