#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confbox/metrics.hpp"
#include "confbox/pipeline.hpp"
#include "confbox/types.hpp"

namespace confbox::io {

// Maps source label names (or numeric ids rendered as text) onto the
// canonical 1..K ids, merging classes where several names share an id.
using ClassMapping = std::map<std::string, int>;

ClassMapping load_class_mapping(const std::string& path);

struct LoadOptions {
  // Drop invalid records instead of failing the whole file.
  bool lenient = false;
  // Applied to ground-truth labels at load time when present.
  std::optional<ClassMapping> class_mapping;
};

struct LoadStats {
  int loaded = 0;
  int dropped = 0;
  // Quantile bands arriving crossed (q_lo > q_hi) are repaired by swapping;
  // the count is surfaced so a broken head is visible.
  int crossings_repaired = 0;
  std::vector<std::string> warnings;
};

// One structured record per line. Malformed lines raise DataError naming the
// file, line number, and field unless options.lenient drops them.
std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const LoadOptions& options = {},
                                             LoadStats* stats = nullptr);
std::vector<GroundTruthObject> load_ground_truth(
    const std::string& path, const LoadOptions& options = {},
    LoadStats* stats = nullptr);

void save_detections(const std::string& path,
                     const std::vector<DetectionRecord>& records);
void save_ground_truth(const std::string& path,
                       const std::vector<GroundTruthObject>& objects);

std::vector<MatchedSample> load_matched(const std::string& path,
                                        const LoadOptions& options = {},
                                        LoadStats* stats = nullptr);
void save_matched(const std::string& path,
                  const std::vector<MatchedSample>& samples);

// Versioned single-document model file. Round trips byte-identically;
// infinite quantiles use the "inf" sentinel.
void save_model(const std::string& path,
                const pipeline::CalibrationModel& model);
pipeline::CalibrationModel load_model(const std::string& path);

struct PredictionLine {
  std::string image_id;
  Vector box;  // the detection the intervals were built from
  pipeline::TwoStepOutput output;
  std::optional<GroundTruthObject> truth;
};

void save_predictions(const std::string& path,
                      const std::vector<PredictionLine>& lines);
std::vector<PredictionLine> load_predictions(const std::string& path);

// Predictions that carry truth become evaluation samples; lines without
// truth raise DataError since no coverage can be scored.
std::vector<metrics::EvaluatedSample> to_evaluated_samples(
    const std::vector<PredictionLine>& lines);

std::string report_to_tsv(const metrics::EvaluationReport& report);
std::string report_to_json(const metrics::EvaluationReport& report);

}  // namespace confbox::io
