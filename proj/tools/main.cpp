// cascal: optimize and evaluate score-margin stopping thresholds for
// two-stage classifier cascades, working on exported prediction files.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascal/cascade.hpp"
#include "cascal/errors.hpp"
#include "cascal/eval.hpp"
#include "cascal/io.hpp"
#include "cascal/optimizer.hpp"
#include "cascal/slices.hpp"
#include "cascal/synth.hpp"
#include "cascal/types.hpp"

namespace {

namespace fs = std::filesystem;

struct StageFileOpts {
  std::string stage1;
  std::string stage2;
  bool renormalize = false;
};

struct CascadeOpts {
  std::vector<double> energy_mj{1.0, 10.0};
  std::vector<std::string> stage_names{"stage1", "stage2"};
};

void add_stage_file_opts(CLI::App* cmd, StageFileOpts& opts, const std::string& prefix = "") {
  const std::string p = prefix.empty() ? "" : prefix + "-";
  cmd->add_option("--" + p + "stage1", opts.stage1,
                  "CSV of " + (prefix.empty() ? std::string("the") : prefix) +
                      " stage-1 (little model) predictions")
      ->required();
  cmd->add_option("--" + p + "stage2", opts.stage2,
                  "CSV of " + (prefix.empty() ? std::string("the") : prefix) +
                      " stage-2 (big model) predictions")
      ->required();
}

void add_renormalize_opt(CLI::App* cmd, StageFileOpts& opts) {
  cmd->add_flag("--renormalize", opts.renormalize,
                "Divide probability rows by their sum instead of rejecting "
                "rows that do not sum to 1 within 1e-4");
}

void add_cascade_opts(CLI::App* cmd, CascadeOpts& opts) {
  cmd->add_option("--energy-mj", opts.energy_mj,
                  "Per-inference energy of the two stages, in mJ")
      ->expected(2)
      ->capture_default_str();
  cmd->add_option("--stage-names", opts.stage_names, "Display names of the two stages")
      ->expected(2)
      ->capture_default_str();
}

cascal::PredictionSet load_set(const StageFileOpts& opts) {
  return cascal::load_prediction_set(opts.stage1, opts.stage2, opts.renormalize);
}

cascal::CascadeSpec make_cascade(const CascadeOpts& opts, int class_count) {
  cascal::CascadeSpec cascade;
  cascade.stages = {{opts.stage_names[0], opts.energy_mj[0]},
                    {opts.stage_names[1], opts.energy_mj[1]}};
  cascade.class_count = class_count;
  return cascade;
}

void emit(const std::optional<std::string>& out_path, const std::string& content) {
  if (out_path) {
    cascal::write_text_file(*out_path, content);
  } else {
    std::cout << content;
  }
}

std::string join_fixed6(const std::vector<double>& values) {
  std::string joined;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) joined += ',';
    joined += cascal::fixed6(values[i]);
  }
  return joined;
}

// Expands a single-value knob to one value per class.
std::vector<double> broadcast(std::vector<double> values, size_t count,
                              const std::string& name) {
  if (values.size() == 1) return std::vector<double>(count, values[0]);
  if (values.size() != count) {
    throw cascal::InvalidInput(name + " needs 1 or " + std::to_string(count) +
                               " values, got " + std::to_string(values.size()));
  }
  return values;
}

constexpr const char* kPolicyKindGlobal = "global";
constexpr const char* kPolicyKindPerClass = "per_class";

cascal::PolicyFile optimize_policies(const cascal::PredictionSet& val_set,
                                     const std::vector<double>& alphas, bool global_mode) {
  cascal::PolicyFile file;
  file.class_count = val_set.class_count;
  file.kind = global_mode ? cascal::PolicyKind::Global : cascal::PolicyKind::PerClass;
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());
  for (double alpha : sorted) {
    file.policies.push_back(
        global_mode
            ? cascal::optimize_global_threshold(val_set, alpha)
            : cascal::ThresholdPolicy::per_class(
                  cascal::optimize_class_thresholds(val_set, alpha).per_class_th, alpha));
  }
  file.metadata["mode"] = global_mode ? kPolicyKindGlobal : kPolicyKindPerClass;
  file.metadata["alphas"] = join_fixed6(sorted);
  return file;
}

int run_optimize(const StageFileOpts& files, const std::vector<double>& alphas,
                 const std::string& mode, const std::string& out) {
  const cascal::PredictionSet val_set = load_set(files);
  cascal::PolicyFile file = optimize_policies(val_set, alphas, mode == "global");
  cascal::save_policy(file, out);
  return 0;
}

int run_evaluate(const StageFileOpts& files, const CascadeOpts& cascade_opts,
                 const std::string& policy_path, std::optional<double> alpha,
                 const std::vector<std::string>& class_names,
                 const std::optional<std::string>& out) {
  cascal::PredictionSet test_set = load_set(files);
  if (!class_names.empty()) {
    test_set.class_names = class_names;
  }
  const cascal::PolicyFile file = cascal::load_policy(policy_path);
  if (file.class_count != test_set.class_count) {
    throw cascal::ConsistencyError(
        "policy file is for " + std::to_string(file.class_count) +
        " classes but the data has " + std::to_string(test_set.class_count));
  }

  const cascal::ThresholdPolicy* selected = nullptr;
  if (alpha) {
    for (const cascal::ThresholdPolicy& policy : file.policies) {
      if (policy.alpha && *policy.alpha == *alpha) {
        selected = &policy;
        break;
      }
    }
    if (!selected) {
      throw cascal::InvalidInput("no policy record with alpha " +
                                 cascal::fixed6(*alpha) + " in " + policy_path);
    }
  } else if (file.policies.size() == 1) {
    selected = &file.policies.front();
  } else {
    throw cascal::InvalidInput("policy file has " + std::to_string(file.policies.size()) +
                               " records; pick one with --alpha");
  }

  const cascal::CascadeSpec cascade = make_cascade(cascade_opts, test_set.class_count);
  const cascal::EvaluationReport report =
      cascal::evaluate_policy(test_set, *selected, cascade);
  emit(out, cascal::report_to_json(report, test_set.class_names));
  return 0;
}

int run_sweep(const StageFileOpts& val_files, const StageFileOpts& test_files,
              const CascadeOpts& cascade_opts, const std::vector<double>& alphas,
              bool global_mode, const std::string& out_curve,
              const std::string& out_policies) {
  const cascal::PredictionSet val_set = load_set(val_files);
  const cascal::PredictionSet test_set = load_set(test_files);
  const cascal::CascadeSpec cascade = make_cascade(cascade_opts, val_set.class_count);

  const cascal::TradeoffCurve curve = cascal::sweep_alpha(
      val_set, test_set, cascade, alphas,
      global_mode ? cascal::SweepMode::Global : cascal::SweepMode::PerClass);
  cascal::save_curve(curve, out_curve);

  cascal::PolicyFile file;
  file.class_count = val_set.class_count;
  file.kind = global_mode ? cascal::PolicyKind::Global : cascal::PolicyKind::PerClass;
  for (const cascal::TradeoffPoint& point : curve.points) {
    file.policies.push_back(*point.policy);
  }
  file.metadata["mode"] = global_mode ? kPolicyKindGlobal : kPolicyKindPerClass;
  file.metadata["alphas"] = join_fixed6([&] {
    std::vector<double> sorted;
    for (const auto& p : curve.points) sorted.push_back(p.alpha);
    return sorted;
  }());
  file.metadata["energy_mj"] = join_fixed6(cascade_opts.energy_mj);
  cascal::save_policy(file, out_policies);
  return 0;
}

int run_compare(const std::string& per_class_path, const std::string& global_path,
                const std::vector<double>& quantiles,
                const std::optional<std::string>& out) {
  const cascal::TradeoffCurve per_class = cascal::load_curve(per_class_path);
  const cascal::TradeoffCurve global = cascal::load_curve(global_path);
  const std::vector<cascal::PolicyComparison> rows =
      cascal::compare_policies(per_class, global, quantiles);
  emit(out, cascal::comparison_to_csv(rows));
  return 0;
}

int run_histogram(const StageFileOpts& files, int class_id, int bins,
                  const std::optional<std::string>& out) {
  const cascal::PredictionSet set = load_set(files);
  const cascal::Histogram histogram = cascal::sm_histogram(set, class_id, bins);
  emit(out, cascal::histogram_to_csv(histogram));
  return 0;
}

int run_curve(const StageFileOpts& files, int class_id, double alpha,
              const std::optional<std::string>& out) {
  const cascal::PredictionSet set = load_set(files);
  if (class_id < 0 || class_id >= set.class_count) {
    throw cascal::InvalidInput("class_id " + std::to_string(class_id) +
                               " out of range [0, " + std::to_string(set.class_count) + ")");
  }
  const std::vector<cascal::ClassSlice> slices = cascal::build_class_slices(set);
  const auto points =
      cascal::objective_curve(slices[static_cast<size_t>(class_id)], alpha);
  emit(out, cascal::objective_curve_to_csv(points));
  return 0;
}

int run_generate(std::vector<double> stage1_acc, std::vector<double> stage2_acc,
                 std::vector<double> priors, std::vector<double> sharp_correct,
                 std::vector<double> sharp_incorrect, int samples, std::uint64_t seed,
                 const std::string& out_stage1, const std::string& out_stage2) {
  const size_t class_count = stage1_acc.size();
  if (class_count < 2) {
    throw cascal::InvalidInput("--stage1-acc needs at least 2 values");
  }
  stage2_acc = broadcast(std::move(stage2_acc), class_count, "--stage2-acc");
  priors = broadcast(std::move(priors), class_count, "--priors");
  sharp_correct = broadcast(std::move(sharp_correct), class_count, "--sharpness-correct");
  sharp_incorrect =
      broadcast(std::move(sharp_incorrect), class_count, "--sharpness-incorrect");

  cascal::GeneratorConfig config;
  config.sample_count = samples;
  config.seed = seed;
  for (size_t c = 0; c < class_count; ++c) {
    cascal::ClassProfile profile;
    profile.class_id = static_cast<int>(c);
    profile.prior = priors[c];
    profile.stage1_accuracy = stage1_acc[c];
    profile.stage2_accuracy = stage2_acc[c];
    profile.margin_sharpness_correct = sharp_correct[c];
    profile.margin_sharpness_incorrect = sharp_incorrect[c];
    config.class_profiles.push_back(profile);
  }
  const cascal::PredictionSet set = cascal::generate(config);
  cascal::save_stage_files(set, out_stage1, out_stage2);
  return 0;
}

int run_resample(const StageFileOpts& files, std::vector<double> fractions,
                 std::uint64_t seed, const std::string& out_stage1,
                 const std::string& out_stage2) {
  const cascal::PredictionSet set = load_set(files);
  fractions = broadcast(std::move(fractions),
                        static_cast<size_t>(set.class_count), "--fractions");
  const cascal::PredictionSet resampled = cascal::resample_by_class(set, fractions, seed);
  cascal::save_stage_files(resampled, out_stage1, out_stage2);
  return 0;
}

int run_split(const StageFileOpts& files, double val_fraction, std::uint64_t seed,
              const std::string& out_val_stage1, const std::string& out_val_stage2,
              const std::string& out_test_stage1, const std::string& out_test_stage2) {
  const cascal::PredictionSet set = load_set(files);
  const auto [val_set, test_set] = cascal::split(set, val_fraction, seed);
  cascal::save_stage_files(val_set, out_val_stage1, out_val_stage2);
  cascal::save_stage_files(test_set, out_test_stage1, out_test_stage2);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cascal: class-dependent score-margin thresholds for two-stage "
      "classifier cascades"};
  app.require_subcommand(1);

  const auto add_config = [](CLI::App* cmd) {
    cmd->set_config("--config", "", "Read options from a key=value config file");
  };

  int exit_code = 0;
  const auto wrap = [&exit_code](auto fn) {
    return [fn, &exit_code]() { exit_code = fn(); };
  };

  // optimize
  auto* optimize = app.add_subcommand(
      "optimize", "Find thresholds minimizing false positives + alpha * escalations");
  auto opt_files = std::make_shared<StageFileOpts>();
  auto opt_alphas = std::make_shared<std::vector<double>>(std::vector<double>{0.05});
  auto opt_mode = std::make_shared<std::string>("per-class");
  auto opt_out = std::make_shared<std::string>();
  add_stage_file_opts(optimize, *opt_files);
  add_renormalize_opt(optimize, *opt_files);
  optimize->add_option("--alpha", *opt_alphas, "Trade-off weight(s); one policy per value")
      ->capture_default_str();
  optimize->add_option("--mode", *opt_mode, "per-class or global thresholds")
      ->check(CLI::IsMember({"per-class", "global"}))
      ->capture_default_str();
  optimize->add_option("--out", *opt_out, "Output policy file (JSON)")->required();
  add_config(optimize);
  optimize->callback(wrap([=]() {
    return run_optimize(*opt_files, *opt_alphas,
                        *opt_mode == "global" ? "global" : "per_class", *opt_out);
  }));

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run a saved policy over a test set");
  auto eval_files = std::make_shared<StageFileOpts>();
  auto eval_cascade = std::make_shared<CascadeOpts>();
  auto eval_policy = std::make_shared<std::string>();
  auto eval_alpha = std::make_shared<double>();
  auto eval_names = std::make_shared<std::vector<std::string>>();
  auto eval_out = std::make_shared<std::string>();
  add_stage_file_opts(evaluate, *eval_files);
  add_renormalize_opt(evaluate, *eval_files);
  add_cascade_opts(evaluate, *eval_cascade);
  evaluate->add_option("--policy", *eval_policy, "Policy file written by optimize/sweep")
      ->required();
  auto* eval_alpha_opt =
      evaluate->add_option("--alpha", *eval_alpha,
                           "Which alpha record to use when the file has several");
  evaluate->add_option("--class-names", *eval_names, "Optional class names for the report");
  auto* eval_out_opt = evaluate->add_option("--out", *eval_out,
                                            "Report file (JSON); stdout when omitted");
  add_config(evaluate);
  evaluate->callback(wrap([=]() {
    return run_evaluate(*eval_files, *eval_cascade, *eval_policy,
                        eval_alpha_opt->count() ? std::optional<double>(*eval_alpha)
                                                : std::nullopt,
                        *eval_names,
                        eval_out_opt->count() ? std::optional<std::string>(*eval_out)
                                              : std::nullopt);
  }));

  // sweep / baseline
  const auto add_sweep_like = [&](const std::string& name, const std::string& desc,
                                  bool global_mode) {
    auto* cmd = app.add_subcommand(name, desc);
    auto val_files = std::make_shared<StageFileOpts>();
    auto test_files = std::make_shared<StageFileOpts>();
    auto cascade = std::make_shared<CascadeOpts>();
    auto alphas = std::make_shared<std::vector<double>>(cascal::default_alpha_grid());
    auto out_curve = std::make_shared<std::string>();
    auto out_policies = std::make_shared<std::string>();
    add_stage_file_opts(cmd, *val_files, "val");
    add_stage_file_opts(cmd, *test_files, "test");
    cmd->add_flag("--renormalize", val_files->renormalize,
                  "Renormalize probability rows in all four input files");
    add_cascade_opts(cmd, *cascade);
    cmd->add_option("--alphas", *alphas, "Alpha grid to sweep")->capture_default_str();
    cmd->add_option("--out-curve", *out_curve, "Trade-off curve CSV")->required();
    cmd->add_option("--out-policies", *out_policies, "Policy file with one record per alpha")
        ->required();
    add_config(cmd);
    cmd->callback(wrap([=]() {
      test_files->renormalize = val_files->renormalize;
      return run_sweep(*val_files, *test_files, *cascade, *alphas, global_mode,
                       *out_curve, *out_policies);
    }));
  };
  add_sweep_like("sweep",
                 "Sweep alpha with per-class thresholds: optimize on the validation "
                 "files, evaluate on the test files",
                 false);
  add_sweep_like("baseline",
                 "Same sweep with a single global threshold (the standard "
                 "score-margin baseline)",
                 true);

  // compare
  auto* compare = app.add_subcommand(
      "compare", "Energy at matched accuracy-gain quantiles, per-class vs global");
  auto cmp_per_class = std::make_shared<std::string>();
  auto cmp_global = std::make_shared<std::string>();
  auto cmp_quantiles = std::make_shared<std::vector<double>>(cascal::default_quantiles());
  auto cmp_out = std::make_shared<std::string>();
  compare->add_option("--per-class", *cmp_per_class, "Curve CSV from sweep")->required();
  compare->add_option("--global", *cmp_global, "Curve CSV from baseline")->required();
  compare->add_option("--quantiles", *cmp_quantiles,
                      "Normalized accuracy-gain quantiles in [0,1]")
      ->capture_default_str();
  auto* cmp_out_opt =
      compare->add_option("--out", *cmp_out, "Comparison CSV; stdout when omitted");
  add_config(compare);
  compare->callback(wrap([=]() {
    return run_compare(*cmp_per_class, *cmp_global, *cmp_quantiles,
                       cmp_out_opt->count() ? std::optional<std::string>(*cmp_out)
                                            : std::nullopt);
  }));

  // histogram
  auto* histogram = app.add_subcommand(
      "histogram", "Stage-1 score-margin histogram of one class, split by correctness");
  auto hist_files = std::make_shared<StageFileOpts>();
  auto hist_class = std::make_shared<int>(0);
  auto hist_bins = std::make_shared<int>(20);
  auto hist_out = std::make_shared<std::string>();
  add_stage_file_opts(histogram, *hist_files);
  add_renormalize_opt(histogram, *hist_files);
  histogram->add_option("--class-id", *hist_class, "Stage-1 predicted class to inspect")
      ->required();
  histogram->add_option("--bins", *hist_bins, "Number of equal-width bins on [0,1]")
      ->capture_default_str();
  auto* hist_out_opt =
      histogram->add_option("--out", *hist_out, "Histogram CSV; stdout when omitted");
  add_config(histogram);
  histogram->callback(wrap([=]() {
    return run_histogram(*hist_files, *hist_class, *hist_bins,
                         hist_out_opt->count() ? std::optional<std::string>(*hist_out)
                                               : std::nullopt);
  }));

  // curve
  auto* curve = app.add_subcommand(
      "curve", "Objective vs threshold for one class, with the argmin flagged");
  auto curve_files = std::make_shared<StageFileOpts>();
  auto curve_class = std::make_shared<int>(0);
  auto curve_alpha = std::make_shared<double>(0.05);
  auto curve_out = std::make_shared<std::string>();
  add_stage_file_opts(curve, *curve_files);
  add_renormalize_opt(curve, *curve_files);
  curve->add_option("--class-id", *curve_class, "Class whose objective to plot")->required();
  curve->add_option("--alpha", *curve_alpha, "Trade-off weight")->capture_default_str();
  auto* curve_out_opt =
      curve->add_option("--out", *curve_out, "Plot-data CSV; stdout when omitted");
  add_config(curve);
  curve->callback(wrap([=]() {
    return run_curve(*curve_files, *curve_class, *curve_alpha,
                     curve_out_opt->count() ? std::optional<std::string>(*curve_out)
                                            : std::nullopt);
  }));

  // generate
  auto* generate = app.add_subcommand(
      "generate", "Seeded synthetic prediction files with per-class difficulty");
  auto gen_stage1_acc = std::make_shared<std::vector<double>>(
      std::vector<double>{0.5, 0.6, 0.8, 0.9, 0.95});
  auto gen_stage2_acc = std::make_shared<std::vector<double>>(std::vector<double>{0.95});
  auto gen_priors = std::make_shared<std::vector<double>>(std::vector<double>{1.0});
  auto gen_sharp_c = std::make_shared<std::vector<double>>(std::vector<double>{3.0});
  auto gen_sharp_i = std::make_shared<std::vector<double>>(std::vector<double>{3.0});
  auto gen_samples = std::make_shared<int>(2000);
  auto gen_seed = std::make_shared<std::uint64_t>(42);
  auto gen_out1 = std::make_shared<std::string>();
  auto gen_out2 = std::make_shared<std::string>();
  generate->add_option("--stage1-acc", *gen_stage1_acc,
                       "Per-class stage-1 accuracy; length sets the class count")
      ->capture_default_str();
  generate->add_option("--stage2-acc", *gen_stage2_acc,
                       "Per-class stage-2 accuracy (single value broadcasts)")
      ->capture_default_str();
  generate->add_option("--priors", *gen_priors,
                       "Per-class sampling weights (single value broadcasts)")
      ->capture_default_str();
  generate->add_option("--sharpness-correct", *gen_sharp_c,
                       "Margin sharpness for correct predictions (higher = margins near 1)")
      ->capture_default_str();
  generate->add_option("--sharpness-incorrect", *gen_sharp_i,
                       "Margin sharpness for incorrect predictions (higher = margins near 0)")
      ->capture_default_str();
  generate->add_option("--samples", *gen_samples, "Total sample count")
      ->capture_default_str();
  generate->add_option("--seed", *gen_seed, "Generator seed")->capture_default_str();
  generate->add_option("--out-stage1", *gen_out1, "Output stage-1 CSV")->required();
  generate->add_option("--out-stage2", *gen_out2, "Output stage-2 CSV")->required();
  add_config(generate);
  generate->callback(wrap([=]() {
    return run_generate(*gen_stage1_acc, *gen_stage2_acc, *gen_priors, *gen_sharp_c,
                        *gen_sharp_i, *gen_samples, *gen_seed, *gen_out1, *gen_out2);
  }));

  // resample
  auto* resample = app.add_subcommand(
      "resample", "Keep a seeded per-true-class fraction of samples");
  auto res_files = std::make_shared<StageFileOpts>();
  auto res_fractions = std::make_shared<std::vector<double>>();
  auto res_seed = std::make_shared<std::uint64_t>(42);
  auto res_out1 = std::make_shared<std::string>();
  auto res_out2 = std::make_shared<std::string>();
  add_stage_file_opts(resample, *res_files);
  add_renormalize_opt(resample, *res_files);
  resample->add_option("--fractions", *res_fractions,
                       "Keep fraction per class in (0,1] (single value broadcasts)")
      ->required();
  resample->add_option("--seed", *res_seed, "Subsampling seed")->capture_default_str();
  resample->add_option("--out-stage1", *res_out1, "Output stage-1 CSV")->required();
  resample->add_option("--out-stage2", *res_out2, "Output stage-2 CSV")->required();
  add_config(resample);
  resample->callback(wrap([=]() {
    return run_resample(*res_files, *res_fractions, *res_seed, *res_out1, *res_out2);
  }));

  // split
  auto* split_cmd = app.add_subcommand(
      "split", "Seeded stratified split into validation and test stage files");
  auto split_files = std::make_shared<StageFileOpts>();
  auto split_fraction = std::make_shared<double>(0.5);
  auto split_seed = std::make_shared<std::uint64_t>(42);
  auto split_val1 = std::make_shared<std::string>();
  auto split_val2 = std::make_shared<std::string>();
  auto split_test1 = std::make_shared<std::string>();
  auto split_test2 = std::make_shared<std::string>();
  add_stage_file_opts(split_cmd, *split_files);
  add_renormalize_opt(split_cmd, *split_files);
  split_cmd->add_option("--val-fraction", *split_fraction, "Validation share in (0,1)")
      ->capture_default_str();
  split_cmd->add_option("--seed", *split_seed, "Split seed")->capture_default_str();
  split_cmd->add_option("--out-val-stage1", *split_val1)->required();
  split_cmd->add_option("--out-val-stage2", *split_val2)->required();
  split_cmd->add_option("--out-test-stage1", *split_test1)->required();
  split_cmd->add_option("--out-test-stage2", *split_test2)->required();
  add_config(split_cmd);
  split_cmd->callback(wrap([=]() {
    return run_split(*split_files, *split_fraction, *split_seed, *split_val1, *split_val2,
                     *split_test1, *split_test2);
  }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: UsageError: " << e.what() << std::endl;
    return 2;
  } catch (const cascal::Error& e) {
    std::cerr << "error: " << e.kind_name() << ": " << e.what() << std::endl;
    return 1;
  }
  return exit_code;
}
