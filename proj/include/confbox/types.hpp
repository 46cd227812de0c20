#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace confbox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Floor applied to per-coordinate uncertainty estimates before they are used
// as score denominators or interval scales.
inline constexpr double kSigmaFloor = 1e-6;

// Floor applied to class probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

// Tolerance on the sum of a class probability vector.
inline constexpr double kProbSumTol = 1e-6;

// Raised when the content of a record or file is invalid (as opposed to a
// caller error, which raises std::invalid_argument).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Miscoverage budgets of the two calibration steps. alpha_label = 0 disables
// label filtering: every label set is the full class universe.
struct MiscoverageConfig {
  double alpha_label{0.01};
  double alpha_box{0.10};

  void validate() const {
    if (!(alpha_label >= 0.0 && alpha_label < 1.0))
      throw std::invalid_argument("alpha_label must lie in [0,1)");
    if (!(alpha_box > 0.0 && alpha_box < 1.0))
      throw std::invalid_argument("alpha_box must lie in (0,1)");
  }
};

// One detected object. `box` holds m coordinates (m = 4 means corner order
// x0,y0,x1,y1); `probs` holds K class probabilities, class id y at probs[y-1].
// The optional fields feed the uncertainty-aware scores and interval clamping.
struct DetectionRecord {
  std::string image_id;
  Vector box;
  Vector probs;
  double confidence{1.0};
  std::optional<Vector> sigma;
  std::optional<Vector> q_lo;
  std::optional<Vector> q_hi;
  std::optional<double> image_width;
  std::optional<double> image_height;
};

struct GroundTruthObject {
  std::string image_id;
  Vector box;
  int label{1};  // 1-based class id
};

// A prediction paired with its ground truth by the matcher.
struct MatchedSample {
  std::string image_id;
  DetectionRecord prediction;
  GroundTruthObject truth;
  double iou{0.0};
};

}  // namespace confbox
