#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "confbox/types.hpp"

namespace confbox::matching {

// One-to-one assignment between predictions (rows) and truths (columns).
struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (prediction index, truth index)
  double total_iou{0.0};
};

// Maximizes total IoU over one-to-one assignments; no threshold applied.
// Deterministic for a given matrix. Pairs are emitted sorted by truth index.
Assignment solve_max_total_iou(const Matrix& iou);

inline constexpr double kDefaultIouThreshold = 0.5;

// Class-agnostic optimal matching within one image; pairs below the threshold
// are discarded (the comparison is inclusive: iou >= threshold survives).
std::vector<MatchedSample> match_image(
    const std::vector<DetectionRecord>& predictions,
    const std::vector<GroundTruthObject>& truths,
    double iou_threshold = kDefaultIouThreshold);

struct MatchStats {
  std::size_t matched{0};
  std::size_t unmatched_predictions{0};
  std::size_t unmatched_truths{0};
  std::size_t images_without_predictions{0};
  std::size_t images_without_truths{0};
};

// Matches image by image; output is ordered by (image id, truth index).
// Images present on only one side are counted, not treated as errors.
std::vector<MatchedSample> match_dataset(
    const std::map<std::string, std::vector<DetectionRecord>>& predictions,
    const std::map<std::string, std::vector<GroundTruthObject>>& truths,
    double iou_threshold = kDefaultIouThreshold, MatchStats* stats = nullptr);

}  // namespace confbox::matching
