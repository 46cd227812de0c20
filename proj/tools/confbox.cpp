// Command-line front end: match detections to truth, calibrate a two-step
// model, predict label sets and box intervals, evaluate coverage, run the
// synthetic coverage study, and print exact coverage bounds.
//
// Exit codes: 0 ok, 1 usage or inconsistent flags, 2 invalid data.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "confbox/conformal.hpp"
#include "confbox/harness.hpp"
#include "confbox/io.hpp"
#include "confbox/matching.hpp"
#include "confbox/pipeline.hpp"
#include "confbox/types.hpp"

namespace {

using confbox::DetectionRecord;
using confbox::GroundTruthObject;
using confbox::MiscoverageConfig;

template <typename T>
std::map<std::string, std::vector<T>> by_image(std::vector<T> items) {
  std::map<std::string, std::vector<T>> grouped;
  for (auto& item : items) {
    auto& bucket = grouped[item.image_id];
    bucket.push_back(std::move(item));
  }
  return grouped;
}

confbox::io::LoadOptions load_options(bool lenient,
                                      const std::string& mapping_path) {
  confbox::io::LoadOptions options;
  options.lenient = lenient;
  if (!mapping_path.empty())
    options.class_mapping = confbox::io::load_class_mapping(mapping_path);
  return options;
}

void report_load(const confbox::io::LoadStats& stats, const char* what) {
  for (const auto& w : stats.warnings) std::cerr << "warning: " << w << '\n';
  if (stats.dropped > 0)
    std::cerr << "dropped " << stats.dropped << " invalid " << what
              << " line(s)\n";
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw confbox::DataError("cannot write " + path);
  out << text;
}

// Method/correction flag pair shared by calibrate and simulate. An empty
// correction means the method's own default.
struct MethodFlags {
  std::string box_method = "std";
  std::string correction;
  std::string label_method = "classthr";
  int min_class_count = 2;

  confbox::box_intervals::BoxMethod method() const {
    return confbox::box_intervals::box_method_from_string(box_method);
  }
  confbox::pipeline::Correction resolved_correction() const {
    if (correction.empty())
      return confbox::pipeline::default_correction(method());
    return confbox::pipeline::correction_from_string(correction);
  }
  confbox::label_sets::LabelMethod labels() const {
    return confbox::label_sets::label_method_from_string(label_method);
  }
};

void add_method_flags(CLI::App* cmd, MethodFlags& flags,
                      MiscoverageConfig& config) {
  cmd->add_option("--alpha-label", config.alpha_label,
                  "label-step miscoverage budget (0 keeps every class)")
      ->capture_default_str();
  cmd->add_option("--alpha-box", config.alpha_box,
                  "box-step miscoverage budget")
      ->capture_default_str();
  cmd->add_option("--box-method", flags.box_method, "box score family")
      ->check(CLI::IsMember({"std", "ens", "cqr", "addbonf", "addmax",
                             "multbonf", "multmax", "boxmult"}))
      ->capture_default_str();
  cmd->add_option("--correction", flags.correction,
                  "multiple-testing correction across coordinates "
                  "(default: the method's own)")
      ->check(CLI::IsMember({"maxrank", "bonferroni"}));
  cmd->add_option("--label-method", flags.label_method, "label-set method")
      ->check(CLI::IsMember({"classthr", "top", "naive", "full", "oracle"}))
      ->capture_default_str();
  cmd->add_option("--min-class-count", flags.min_class_count,
                  "classes rarer than this in calibration get +inf quantiles")
      ->capture_default_str();
}

std::string format_quantile(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", x);
  return buffer;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Two-step conformal prediction for object detection: calibrated label "
      "sets feeding multiple-testing-corrected box intervals."};
  app.require_subcommand(1);

  // ---- match ----
  auto* match = app.add_subcommand(
      "match", "pair detection and truth files into matched samples");
  struct {
    std::string detections, truth, output, mapping;
    double iou_threshold = 0.5;
    bool lenient = false;
  } m;
  match->add_option("--detections", m.detections, "detection records, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  match->add_option("--truth", m.truth, "ground-truth objects, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  match->add_option("--output", m.output, "matched-sample output file")
      ->required();
  match->add_option("--iou-threshold", m.iou_threshold,
                    "minimum overlap for a usable pair")
      ->capture_default_str();
  match->add_flag("--lenient", m.lenient, "drop malformed lines instead of failing");
  match->add_option("--class-mapping", m.mapping,
                    "json object mapping truth label names to class ids")
      ->check(CLI::ExistingFile);
  match->callback([&m] {
    const auto options = load_options(m.lenient, m.mapping);
    confbox::io::LoadStats det_stats, truth_stats;
    auto detections =
        confbox::io::load_detections(m.detections, options, &det_stats);
    auto truths =
        confbox::io::load_ground_truth(m.truth, options, &truth_stats);
    report_load(det_stats, "detection");
    report_load(truth_stats, "truth");
    confbox::matching::MatchStats stats;
    const auto samples = confbox::matching::match_dataset(
        by_image(std::move(detections)), by_image(std::move(truths)),
        m.iou_threshold, &stats);
    confbox::io::save_matched(m.output, samples);
    std::cerr << "matched " << stats.matched << " pair(s); "
              << stats.unmatched_predictions << " prediction(s) and "
              << stats.unmatched_truths << " truth(s) left unmatched\n";
  });

  // ---- calibrate ----
  auto* calibrate = app.add_subcommand(
      "calibrate", "fit label and box quantiles from matched samples");
  struct {
    std::string matched, output, mapping;
    bool lenient = false;
    MethodFlags flags;
    MiscoverageConfig config;
  } c;
  calibrate->add_option("--matched", c.matched, "matched samples from `match`")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--output", c.output, "model output file")->required();
  calibrate->add_flag("--lenient", c.lenient,
                      "drop malformed lines instead of failing");
  calibrate->add_option("--class-mapping", c.mapping,
                        "json object mapping truth label names to class ids")
      ->check(CLI::ExistingFile);
  add_method_flags(calibrate, c.flags, c.config);
  calibrate->callback([&c] {
    // Flag consistency first: a bad method/correction pair is a usage
    // problem regardless of what the input file holds.
    const auto method = c.flags.method();
    const auto correction = c.flags.resolved_correction();
    confbox::pipeline::validate_combination(method, correction);
    c.config.validate();
    confbox::io::LoadStats stats;
    const auto samples = confbox::io::load_matched(
        c.matched, load_options(c.lenient, c.mapping), &stats);
    report_load(stats, "matched");
    const auto model = confbox::pipeline::calibrate(
        samples, c.config, method, correction, c.flags.labels(),
        c.flags.min_class_count);
    confbox::io::save_model(c.output, model);
    std::cerr << "calibrated " << model.num_classes << " classes on "
              << samples.size() << " samples; joint guarantee "
              << format_quantile(confbox::pipeline::sequential_guarantee(
                     model.config))
              << '\n';
  });

  // ---- predict ----
  auto* predict = app.add_subcommand(
      "predict", "apply a model: label sets plus box intervals");
  struct {
    std::string detections, matched, model, output, mapping, label_method;
    bool lenient = false;
  } p;
  auto* det_opt =
      predict
          ->add_option("--detections", p.detections,
                       "raw detection records (no truth, no coverage flags)")
          ->check(CLI::ExistingFile);
  auto* matched_opt =
      predict
          ->add_option("--matched", p.matched,
                       "matched samples carrying truth (enables coverage "
                       "flags and the oracle label method)")
          ->check(CLI::ExistingFile);
  det_opt->excludes(matched_opt);
  predict->add_option("--model", p.model, "model file from `calibrate`")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--output", p.output, "prediction output file")
      ->required();
  predict
      ->add_option("--label-method", p.label_method,
                   "override the label method stored in the model")
      ->check(CLI::IsMember({"classthr", "top", "naive", "full", "oracle"}));
  predict->add_flag("--lenient", p.lenient,
                    "drop malformed lines instead of failing");
  predict->add_option("--class-mapping", p.mapping,
                      "json object mapping truth label names to class ids")
      ->check(CLI::ExistingFile);
  predict->callback([&p] {
    if (p.detections.empty() == p.matched.empty())
      throw std::invalid_argument(
          "predict needs exactly one of --detections or --matched");
    auto model = confbox::io::load_model(p.model);
    if (!p.label_method.empty())
      model.label_method =
          confbox::label_sets::label_method_from_string(p.label_method);
    const auto options = load_options(p.lenient, p.mapping);
    confbox::io::LoadStats stats;
    std::vector<confbox::io::PredictionLine> lines;
    if (!p.matched.empty()) {
      const auto samples = confbox::io::load_matched(p.matched, options, &stats);
      lines.reserve(samples.size());
      for (const auto& s : samples) {
        confbox::io::PredictionLine line;
        line.image_id = s.image_id;
        line.box = s.prediction.box;
        line.output = confbox::pipeline::predict(s.prediction, model, &s.truth);
        line.truth = s.truth;
        lines.push_back(std::move(line));
      }
    } else {
      if (model.label_method == confbox::label_sets::LabelMethod::Oracle)
        throw std::invalid_argument(
            "the oracle label method needs --matched input carrying truth");
      const auto records =
          confbox::io::load_detections(p.detections, options, &stats);
      lines.reserve(records.size());
      for (const auto& r : records) {
        confbox::io::PredictionLine line;
        line.image_id = r.image_id;
        line.box = r.box;
        line.output = confbox::pipeline::predict(r, model);
        lines.push_back(std::move(line));
      }
    }
    report_load(stats, "input");
    confbox::io::save_predictions(p.output, lines);
    std::cerr << "predicted " << lines.size() << " record(s)\n";
  });

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand(
      "evaluate", "score predictions that carry truth into a coverage report");
  struct {
    std::string predictions, output;
    bool as_json = false;
  } e;
  evaluate
      ->add_option("--predictions", e.predictions,
                   "prediction file from `predict --matched`")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--output", e.output,
                       "report file (default: standard output)");
  evaluate->add_flag("--json", e.as_json, "emit the report as json instead of tsv");
  evaluate->callback([&e] {
    const auto lines = confbox::io::load_predictions(e.predictions);
    const auto samples = confbox::io::to_evaluated_samples(lines);
    if (samples.empty())
      throw confbox::DataError(e.predictions +
                               ": no prediction lines carry truth");
    const auto report = confbox::metrics::stratified_report(samples);
    write_text(e.output, e.as_json ? confbox::io::report_to_json(report)
                                   : confbox::io::report_to_tsv(report));
  });

  // ---- simulate ----
  auto* simulate = app.add_subcommand(
      "simulate",
      "run the synthetic coverage study, or export one synthetic dataset");
  struct {
    std::string spec, output, name;
    std::string export_detections, export_truth;
    MethodFlags flags;
    MiscoverageConfig config;
  } s;
  simulate->add_option("--spec", s.spec, "simulation spec (json)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--output", s.output,
                       "per-trial summary tsv (default: standard output)");
  simulate->add_option("--name", s.name, "config name in the summary");
  auto* exp_det = simulate->add_option(
      "--export-detections", s.export_detections,
      "write the simulated dataset as detection records and skip the study");
  auto* exp_truth = simulate->add_option(
      "--export-truth", s.export_truth,
      "write the simulated dataset as truth objects and skip the study");
  exp_det->needs(exp_truth);
  exp_truth->needs(exp_det);
  add_method_flags(simulate, s.flags, s.config);
  simulate->callback([&s] {
    confbox::harness::PipelineConfig config;
    config.name = s.name.empty()
                      ? s.flags.label_method + "_" + s.flags.box_method + "_" +
                            confbox::pipeline::to_string(
                                s.flags.resolved_correction())
                      : s.name;
    config.miscoverage = s.config;
    config.box_method = s.flags.method();
    config.correction = s.flags.resolved_correction();
    config.label_method = s.flags.labels();
    config.min_class_count = s.flags.min_class_count;
    confbox::pipeline::validate_combination(config.box_method,
                                            config.correction);
    config.miscoverage.validate();
    const auto spec = confbox::harness::load_simulation_spec(s.spec);
    if (!s.export_detections.empty()) {
      const auto ds = confbox::harness::generate_dataset(spec, spec.seed);
      std::vector<DetectionRecord> detections;
      std::vector<GroundTruthObject> truths;
      for (const auto& [id, dets] : ds.detections)
        detections.insert(detections.end(), dets.begin(), dets.end());
      for (const auto& [id, objs] : ds.truths)
        truths.insert(truths.end(), objs.begin(), objs.end());
      confbox::io::save_detections(s.export_detections, detections);
      confbox::io::save_ground_truth(s.export_truth, truths);
      std::cerr << "exported " << truths.size() << " object(s) across "
                << ds.truths.size() << " image(s)\n";
      return;
    }
    const auto summaries =
        confbox::harness::run_coverage_study(spec, {config});
    write_text(s.output, confbox::harness::summary_to_tsv(summaries));
  });

  // ---- coverage-bounds ----
  auto* bounds = app.add_subcommand(
      "coverage-bounds",
      "exact conditional-coverage law of a calibrated quantile");
  struct {
    std::size_t n = 0;
    double alpha = 0.1;
  } b;
  bounds->add_option("--n", b.n, "calibration set size")->required();
  bounds->add_option("--alpha", b.alpha, "miscoverage budget")->required();
  bounds->callback([&b] {
    const auto dist = confbox::conformal::coverage_distribution(b.n, b.alpha);
    if (dist.degenerate) {
      std::cout << "degenerate: the quantile saturates, coverage = 1 almost "
                   "surely\n";
      return;
    }
    std::cout << "Beta(" << static_cast<long long>(dist.a) << ", "
              << static_cast<long long>(dist.b) << ")\n"
              << "mean: " << format_quantile(dist.mean()) << '\n'
              << "1% quantile: " << format_quantile(dist.quantile(0.01))
              << '\n'
              << "99% quantile: " << format_quantile(dist.quantile(0.99))
              << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const confbox::DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
}
