#include "confbox/box_intervals.hpp"

#include <cmath>

namespace confbox::box_intervals {

bool is_one_sided(BoxMethod m) {
  switch (m) {
    case BoxMethod::Std:
    case BoxMethod::Ens:
    case BoxMethod::Cqr:
      return false;
    default:
      return true;
  }
}

const char* to_string(BoxMethod m) {
  switch (m) {
    case BoxMethod::Std: return "std";
    case BoxMethod::Ens: return "ens";
    case BoxMethod::Cqr: return "cqr";
    case BoxMethod::AddBonf: return "addbonf";
    case BoxMethod::AddMax: return "addmax";
    case BoxMethod::MultBonf: return "multbonf";
    case BoxMethod::MultMax: return "multmax";
    case BoxMethod::BoxStd1S: return "boxstd1s";
    case BoxMethod::BoxEns1S: return "boxens1s";
    case BoxMethod::BoxMult: return "boxmult";
  }
  return "?";
}

BoxMethod box_method_from_string(const std::string& s) {
  if (s == "std") return BoxMethod::Std;
  if (s == "ens") return BoxMethod::Ens;
  if (s == "cqr") return BoxMethod::Cqr;
  if (s == "addbonf") return BoxMethod::AddBonf;
  if (s == "addmax") return BoxMethod::AddMax;
  if (s == "multbonf") return BoxMethod::MultBonf;
  if (s == "multmax") return BoxMethod::MultMax;
  if (s == "boxstd1s") return BoxMethod::BoxStd1S;
  if (s == "boxens1s") return BoxMethod::BoxEns1S;
  if (s == "boxmult") return BoxMethod::BoxMult;
  throw std::invalid_argument("unknown box method: " + s);
}

namespace {

void check_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string("size mismatch in ") + what);
}

void check_corner(const Vector& v, const char* what) {
  if (v.size() != 4)
    throw std::invalid_argument(std::string(what) +
                                " requires 4-coordinate corner boxes");
}

Vector floored(const Vector& sigma) { return sigma.array().max(kSigmaFloor); }

const Vector& require_sigma(const DetectionRecord& r, BoxMethod m) {
  if (!r.sigma)
    throw DataError(std::string("method ") + to_string(m) +
                    " needs per-coordinate sigma, record lacks it");
  if (r.sigma->size() != r.box.size())
    throw DataError("sigma length does not match box coordinates");
  return *r.sigma;
}

void require_band(const DetectionRecord& r) {
  if (!r.q_lo || !r.q_hi)
    throw DataError("method cqr needs q_lo/q_hi quantile bands, record lacks them");
  if (r.q_lo->size() != r.box.size() || r.q_hi->size() != r.box.size())
    throw DataError("quantile band length does not match box coordinates");
}

Eigen::Vector4d mult_scale(const Vector& pred) {
  const double w = pred[2] - pred[0];
  const double h = pred[3] - pred[1];
  if (!(w > 0.0) || !(h > 0.0))
    throw DataError("multiplicative scores need a predicted box with positive extent");
  return {w, h, w, h};
}

}  // namespace

Vector score_std(const Vector& pred, const Vector& truth) {
  check_same_size(pred, truth, "score_std");
  return (pred - truth).cwiseAbs();
}

Vector score_ens(const Vector& pred, const Vector& sigma, const Vector& truth) {
  check_same_size(pred, truth, "score_ens");
  check_same_size(pred, sigma, "score_ens");
  return (pred - truth).cwiseAbs().cwiseQuotient(floored(sigma));
}

Vector score_cqr(const Vector& q_lo, const Vector& q_hi, const Vector& truth) {
  check_same_size(q_lo, truth, "score_cqr");
  check_same_size(q_hi, truth, "score_cqr");
  return (q_lo - truth).cwiseMax(truth - q_hi);
}

Vector score_add(const Vector& pred, const Vector& truth) {
  check_corner(pred, "score_add");
  check_corner(truth, "score_add");
  Vector s(4);
  s << pred[0] - truth[0], pred[1] - truth[1],
       truth[2] - pred[2], truth[3] - pred[3];
  return s;
}

Vector score_mult(const Vector& pred, const Vector& truth) {
  return score_add(pred, truth).cwiseQuotient(Vector(mult_scale(pred)));
}

Vector score_signorm(const Vector& pred, const Vector& sigma, const Vector& truth) {
  check_corner(sigma, "score_signorm");
  return score_add(pred, truth).cwiseQuotient(Vector(floored(sigma)));
}

Vector score_box(const DetectionRecord& pred, const Vector& truth_box,
                 BoxMethod method) {
  switch (method) {
    case BoxMethod::Std:
      return score_std(pred.box, truth_box);
    case BoxMethod::Ens:
      return score_ens(pred.box, require_sigma(pred, method), truth_box);
    case BoxMethod::Cqr:
      require_band(pred);
      return score_cqr(*pred.q_lo, *pred.q_hi, truth_box);
    case BoxMethod::AddBonf:
    case BoxMethod::AddMax:
    case BoxMethod::BoxStd1S:
      return score_add(pred.box, truth_box);
    case BoxMethod::MultBonf:
    case BoxMethod::MultMax:
    case BoxMethod::BoxMult:
      return score_mult(pred.box, truth_box);
    case BoxMethod::BoxEns1S:
      return score_signorm(pred.box, require_sigma(pred, method), truth_box);
  }
  throw std::invalid_argument("unknown box method");
}

bool BoxInterval::contains(const Vector& coords) const {
  if (coords.size() != lo.size())
    throw std::invalid_argument("coordinate count does not match interval");
  for (Eigen::Index k = 0; k < coords.size(); ++k)
    if (!(coords[k] >= lo[k] && coords[k] <= hi[k])) return false;
  return true;
}

bool BoxInterval::bounded() const {
  return lo.allFinite() && hi.allFinite();
}

namespace {

// Replace unbounded sides with the image extent when the record knows it.
void clamp_to_image(const DetectionRecord& pred, BoxInterval& iv) {
  if (!pred.image_width || !pred.image_height || iv.dims() != 4) return;
  for (Eigen::Index k = 0; k < 4; ++k) {
    if (std::isinf(iv.lo[k])) iv.lo[k] = 0.0;
    if (std::isinf(iv.hi[k]))
      iv.hi[k] = (k % 2 == 0) ? *pred.image_width : *pred.image_height;
  }
}

}  // namespace

BoxInterval build_interval(const DetectionRecord& pred, const Vector& quantiles,
                           BoxMethod method) {
  check_same_size(pred.box, quantiles, "build_interval");
  BoxInterval iv;
  switch (method) {
    case BoxMethod::Std:
      iv.lo = pred.box - quantiles;
      iv.hi = pred.box + quantiles;
      break;
    case BoxMethod::Ens: {
      const Vector scale = floored(require_sigma(pred, method));
      iv.lo = pred.box - scale.cwiseProduct(quantiles);
      iv.hi = pred.box + scale.cwiseProduct(quantiles);
      break;
    }
    case BoxMethod::Cqr:
      require_band(pred);
      iv.lo = *pred.q_lo - quantiles;
      iv.hi = *pred.q_hi + quantiles;
      break;
    default: {
      // One-sided outer box: expand the lower corner downward and the upper
      // corner upward, each by its scaled quantile.
      check_corner(pred.box, "build_interval");
      Vector scale = Vector::Ones(4);
      if (method == BoxMethod::MultBonf || method == BoxMethod::MultMax ||
          method == BoxMethod::BoxMult)
        scale = mult_scale(pred.box);
      else if (method == BoxMethod::BoxEns1S)
        scale = floored(require_sigma(pred, method));
      iv.lo = Vector::Constant(4, -kInf);
      iv.hi = Vector::Constant(4, kInf);
      iv.lo[0] = pred.box[0] - scale[0] * quantiles[0];
      iv.lo[1] = pred.box[1] - scale[1] * quantiles[1];
      iv.hi[2] = pred.box[2] + scale[2] * quantiles[2];
      iv.hi[3] = pred.box[3] + scale[3] * quantiles[3];
      iv.sidedness = Sidedness::OneSidedOuter;
      break;
    }
  }
  clamp_to_image(pred, iv);
  return iv;
}

FusedBox fuse_ensemble(const std::vector<EnsembleMember>& members) {
  if (members.empty())
    throw std::invalid_argument("ensemble fusion needs at least one member");
  const auto dims = members.front().coords.size();
  const auto t = static_cast<double>(members.size());

  double wsum = 0.0;
  for (const auto& m : members) {
    if (m.coords.size() != dims)
      throw std::invalid_argument("ensemble members disagree on coordinate count");
    if (!(m.confidence >= 0.0))
      throw std::invalid_argument("member confidence must be nonnegative");
    wsum += m.confidence;
  }

  FusedBox out;
  out.confidence = wsum / t;
  out.equal_weight_fallback = wsum <= 0.0;

  Vector weighted = Vector::Zero(dims);
  Vector mean = Vector::Zero(dims);
  for (const auto& m : members) {
    const double w = out.equal_weight_fallback ? 1.0 : m.confidence;
    weighted += w * m.coords;
    mean += m.coords;
  }
  out.coords = weighted / (out.equal_weight_fallback ? t : wsum);
  mean /= t;

  Vector var = Vector::Zero(dims);
  for (const auto& m : members) var += (m.coords - mean).cwiseAbs2();
  out.sigma = (var / t).cwiseSqrt().cwiseMax(kSigmaFloor);
  return out;
}

BoxInterval one_sided_to_two_sided(const BoxInterval& iv, const Vector& pred_box) {
  if (iv.sidedness != Sidedness::OneSidedOuter)
    throw std::invalid_argument("interval is not one-sided");
  if (iv.dims() != 4 || pred_box.size() != 4)
    throw std::invalid_argument("conversion needs corner boxes");
  const double cx = 0.5 * (pred_box[0] + pred_box[2]);
  const double cy = 0.5 * (pred_box[1] + pred_box[3]);
  const Eigen::Vector4d centre{cx, cy, cx, cy};
  const Eigen::Vector4d outer{iv.lo[0], iv.lo[1], iv.hi[2], iv.hi[3]};

  BoxInterval out;
  out.lo = centre.cwiseMin(outer);
  out.hi = centre.cwiseMax(outer);
  out.sidedness = Sidedness::TwoSided;
  return out;
}

}  // namespace confbox::box_intervals
