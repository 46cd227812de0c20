#pragma once

#include <string>
#include <vector>

#include "confbox/types.hpp"

namespace confbox::box_intervals {

// Two-sided residual methods (Std, Ens, Cqr) conformalize symmetric or banded
// residuals; the remaining methods calibrate signed one-sided corner scores
// and produce outer boxes. AddBonf/MultBonf fix a Bonferroni split, AddMax/
// MultMax calibrate the max-over-coordinates score once, BoxStd1S/BoxEns1S/
// BoxMult pair one-sided scores with a rank-based correction.
enum class BoxMethod {
  Std, Ens, Cqr,
  AddBonf, AddMax, MultBonf, MultMax,
  BoxStd1S, BoxEns1S, BoxMult,
};

bool is_one_sided(BoxMethod m);
const char* to_string(BoxMethod m);
BoxMethod box_method_from_string(const std::string& s);

enum class Sidedness { TwoSided, OneSidedOuter };

// Per-coordinate interval [lo_k, hi_k]. One-sided outer intervals keep their
// unconstrained side at +/-inf (or the image extent once clamped); the pair
// (lo_0, lo_1, hi_2, hi_3) of a corner interval is the outer box. Bounds are
// kept exactly as constructed so that containment stays dual to the score
// comparison; a negative-width coordinate simply contains nothing.
struct BoxInterval {
  Vector lo, hi;
  Sidedness sidedness{Sidedness::TwoSided};

  bool contains(const Vector& coords) const;
  bool bounded() const;  // every bound finite
  int dims() const { return static_cast<int>(lo.size()); }
};

// |pred - truth| per coordinate.
Vector score_std(const Vector& pred, const Vector& truth);

// |pred - truth| / sigma with sigma floored at 1e-6.
Vector score_ens(const Vector& pred, const Vector& sigma, const Vector& truth);

// max(q_lo - truth, truth - q_hi): signed distance outside the quantile band.
Vector score_cqr(const Vector& q_lo, const Vector& q_hi, const Vector& truth);

// Signed one-sided corner scores (pred_x0 - x0, pred_y0 - y0, x1 - pred_x1,
// y1 - pred_y1): positive where the prediction fails to enclose the truth.
// All three require 4-coordinate corner boxes.
Vector score_add(const Vector& pred, const Vector& truth);
// As score_add, scaled by (w, h, w, h) of the predicted box.
Vector score_mult(const Vector& pred, const Vector& truth);
// As score_add, scaled by the per-coordinate uncertainty (floored at 1e-6).
Vector score_signorm(const Vector& pred, const Vector& sigma, const Vector& truth);

// Dispatches on the method and validates that the record carries the fields
// the method needs (sigma for Ens/BoxEns1S, q_lo/q_hi for Cqr).
Vector score_box(const DetectionRecord& pred, const Vector& truth_box,
                 BoxMethod method);

// Interval construction, dual to the scores: a truth lies inside the interval
// exactly when its score is <= the quantile, coordinate by coordinate.
// Non-finite quantiles produce unbounded sides, clamped to the image extent
// when the record carries one (corner boxes only).
BoxInterval build_interval(const DetectionRecord& pred, const Vector& quantiles,
                           BoxMethod method);

// Confidence-weighted coordinate fusion across ensemble members. The spread
// sigma is the population deviation around the unweighted mean; the fused
// confidence is the member mean. All-zero confidences fall back to equal
// weights (flagged).
struct EnsembleMember {
  Vector coords;
  double confidence{1.0};
};

struct FusedBox {
  Vector coords;
  Vector sigma;
  double confidence{0.0};
  bool equal_weight_fallback{false};
};

FusedBox fuse_ensemble(const std::vector<EnsembleMember>& members);

// Width-comparable form of a one-sided outer interval: each coordinate spans
// from the predicted box centre to the outer bound. Only used for reporting.
BoxInterval one_sided_to_two_sided(const BoxInterval& iv, const Vector& pred_box);

}  // namespace confbox::box_intervals
