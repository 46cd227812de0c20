#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "confbox/geometry.hpp"
#include "confbox/metrics.hpp"
#include "confbox/pipeline.hpp"
#include "confbox/types.hpp"

namespace confbox::harness {

// Synthetic detector with a KNOWN class-posterior and a known box-noise law,
// so coverage claims can be checked against exact references. Everything is
// a deterministic function of (spec, seed).

struct ObjectsPerImage {
  int min = 1;
  int max = 4;
};

struct BoxSizeRange {
  double min_side = 8.0;
  double max_side = 300.0;
};

struct NoiseSpec {
  // Per-class and per-coordinate standard-deviation multipliers. Empty means
  // all ones. Zero is allowed: a noiseless detector scores exactly 0.
  Vector class_scale;
  Vector coordinate_scale;
  // Equicorrelation across the 4 coordinates; must keep the matrix positive
  // semi-definite (>= -1/3 for 4 coordinates).
  double correlation = 0.0;
  // Scale the noise with the object's extent (w or h per coordinate) / 100,
  // producing size-dependent error like a real detector.
  bool proportional_to_size = false;
  // 0 disables; otherwise Gaussian noise is multiplied by sqrt(df / chi2_df)
  // giving Student-t tails.
  double heavy_tail_df = 0.0;
};

struct ClassifierSpec {
  // True posterior = sharpness * onehot(z) + (1 - sharpness) * uniform
  // Dirichlet draw; the sampled label is drawn FROM that posterior, so the
  // exported probabilities are perfectly calibrated at temperature 1.
  double sharpness = 0.9;
  // Exported probabilities are temperature-scaled; the generative law is not.
  double temperature = 1.0;
};

struct EnsembleSpec {
  int size = 5;
  double jitter = 1.0;  // member spread relative to the base noise scale
};

struct QuantileHeadSpec {
  double alpha = 0.1;      // nominal band level (alpha/2 per side)
  double distortion = 0.0; // log-normal corruption of the band half-width
};

struct SimulationSpec {
  int num_classes = 3;
  int num_images = 200;
  ObjectsPerImage objects_per_image;
  Vector class_weights;  // empty = uniform
  double image_width = 2048.0;
  double image_height = 2048.0;
  BoxSizeRange box_size;
  NoiseSpec noise;
  ClassifierSpec classifier;
  EnsembleSpec ensemble;
  QuantileHeadSpec quantile_head;
  double confidence_min = 0.5;
  double confidence_max = 1.0;
  double calibration_fraction = 0.5;
  int trials = 1;
  std::uint64_t seed = 1;

  void validate() const;  // std::invalid_argument on degenerate settings
};

SimulationSpec load_simulation_spec(const std::string& path);

struct SyntheticDataset {
  std::map<std::string, std::vector<DetectionRecord>> detections;
  std::map<std::string, std::vector<GroundTruthObject>> truths;
};

SyntheticDataset generate_dataset(const SimulationSpec& spec,
                                  std::uint64_t seed);

struct TrialData {
  std::vector<MatchedSample> calibration;
  std::vector<MatchedSample> test;
};

// Generates a dataset with the trial's derived seed, matches predictions to
// truths, and splits by image so selection acts on both halves equally.
TrialData make_trial(const SimulationSpec& spec, std::uint64_t trial_seed);

struct PipelineConfig {
  std::string name;
  MiscoverageConfig miscoverage;
  box_intervals::BoxMethod box_method = box_intervals::BoxMethod::Std;
  pipeline::Correction correction = pipeline::Correction::MaxRank;
  label_sets::LabelMethod label_method = label_sets::LabelMethod::ClassThr;
  int min_class_count = 2;
};

struct TrialMetrics {
  double label_coverage = 0.0;
  double box_coverage = 0.0;
  double joint_coverage = 0.0;
  Vector per_class_label_coverage;  // NaN where the class never appeared
  Vector per_class_box_coverage;
  Vector per_class_joint_coverage;
  std::map<geometry::SizeStratum, double> per_stratum_box_coverage;
  double mean_set_size = 0.0;
  double mpiw = std::numeric_limits<double>::quiet_NaN();
  int mpiw_excluded = 0;
  double stretch = std::numeric_limits<double>::quiet_NaN();
  int test_count = 0;
};

struct TrialSummary {
  std::string config_name;
  std::vector<TrialMetrics> trials;
  double mean_label_coverage = 0.0;
  double mean_box_coverage = 0.0;
  double mean_joint_coverage = 0.0;
  // Empirical across-trial quantiles of joint coverage, for comparison with
  // the exact coverage law.
  double joint_coverage_q01 = 0.0;
  double joint_coverage_q99 = 0.0;
  double mean_mpiw = std::numeric_limits<double>::quiet_NaN();
  double mean_set_size = 0.0;
};

// Every config sees the identical per-trial datasets, so config-to-config
// comparisons are paired.
std::vector<TrialSummary> run_coverage_study(
    const SimulationSpec& spec, const std::vector<PipelineConfig>& configs);

std::string summary_to_tsv(const std::vector<TrialSummary>& summaries);

struct SweepPoint {
  double temperature = 1.0;
  double naive_label_coverage = 0.0;
  double classthr_label_coverage = 0.0;
  double naive_set_size = 0.0;
  double classthr_set_size = 0.0;
};

// Label-step comparison under miscalibration: the exported probabilities are
// distorted by each temperature while the generative law stays fixed.
std::vector<SweepPoint> temperature_sweep(const SimulationSpec& spec,
                                          double alpha_label,
                                          const std::vector<double>& temperatures);

// Two-sided Kolmogorov-Smirnov distance between the sample and a reference
// CDF evaluated at the sample points.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

// Asymptotic two-sided critical value sqrt(-ln(sig/2) / 2) / sqrt(n).
double ks_critical_value(std::size_t n, double significance);

// Order statistic of a sample at probability p (nearest-rank, for trial
// aggregate reporting; not the conformal quantile).
double empirical_quantile(std::vector<double> values, double p);

}  // namespace confbox::harness
