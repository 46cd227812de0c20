#include "confbox/label_sets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confbox/conformal.hpp"

namespace confbox::label_sets {

const char* to_string(LabelMethod m) {
  switch (m) {
    case LabelMethod::ClassThr: return "classthr";
    case LabelMethod::Top: return "top";
    case LabelMethod::Naive: return "naive";
    case LabelMethod::Full: return "full";
    case LabelMethod::Oracle: return "oracle";
  }
  return "?";
}

LabelMethod label_method_from_string(const std::string& s) {
  if (s == "classthr") return LabelMethod::ClassThr;
  if (s == "top") return LabelMethod::Top;
  if (s == "naive") return LabelMethod::Naive;
  if (s == "full") return LabelMethod::Full;
  if (s == "oracle") return LabelMethod::Oracle;
  throw std::invalid_argument("unknown label method: " + s);
}

bool LabelSet::contains(int label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

namespace {

int argmax_lowest(const Vector& probs) {
  int best = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;  // first maximum wins: lowest class id on ties
}

void check_probs(const Vector& probs) {
  if (probs.size() == 0) throw std::invalid_argument("empty probability vector");
}

}  // namespace

LabelQuantiles calibrate_labels(const std::vector<MatchedSample>& calibration,
                                int num_classes, double alpha_label) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  if (!(alpha_label >= 0.0 && alpha_label < 1.0))
    throw std::invalid_argument("alpha_label must lie in [0,1)");

  LabelQuantiles lq;
  lq.alpha_label = alpha_label;
  lq.q = Vector::Constant(num_classes, kInf);
  if (alpha_label == 0.0) return lq;  // full-domain sets

  std::vector<std::vector<double>> scores(static_cast<std::size_t>(num_classes));
  for (const auto& s : calibration) {
    const int y = s.truth.label;
    if (y < 1 || y > num_classes)
      throw DataError("true label " + std::to_string(y) +
                      " outside class universe 1.." + std::to_string(num_classes));
    if (s.prediction.probs.size() != num_classes)
      throw DataError("probability vector length mismatch in calibration");
    scores[y - 1].push_back(1.0 - s.prediction.probs[y - 1]);
  }
  for (int y = 0; y < num_classes; ++y) {
    const auto& v = scores[y];
    if (v.empty()) continue;  // stays +inf
    lq.q[y] = conformal::conformal_quantile(
        Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())),
        alpha_label);
  }
  return lq;
}

LabelSet predict_classthr(const Vector& probs, const LabelQuantiles& lq) {
  check_probs(probs);
  if (probs.size() != lq.q.size())
    throw std::invalid_argument("probability vector length does not match quantiles");
  LabelSet set;
  set.method = LabelMethod::ClassThr;
  for (int y = 0; y < probs.size(); ++y)
    if (probs[y] >= 1.0 - lq.q[y]) set.labels.push_back(y + 1);
  if (set.labels.empty()) {
    set.labels.push_back(argmax_lowest(probs) + 1);
    set.fallback = true;
  }
  return set;
}

LabelSet predict_top(const Vector& probs) {
  check_probs(probs);
  LabelSet set;
  set.method = LabelMethod::Top;
  set.labels.push_back(argmax_lowest(probs) + 1);
  return set;
}

LabelSet predict_naive(const Vector& probs, double alpha_label) {
  check_probs(probs);
  if (!(alpha_label >= 0.0 && alpha_label < 1.0))
    throw std::invalid_argument("alpha_label must lie in [0,1)");
  const auto k = probs.size();
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });

  LabelSet set;
  set.method = LabelMethod::Naive;
  double cum = 0.0;
  std::size_t taken = 0;
  while (taken < order.size()) {
    cum += probs[order[taken]];
    set.labels.push_back(order[taken] + 1);
    ++taken;
    if (cum >= 1.0 - alpha_label - 1e-12) break;
  }
  // Labels tied with the crossing label come along.
  const double crossing = probs[order[taken - 1]];
  while (taken < order.size() && probs[order[taken]] == crossing) {
    set.labels.push_back(order[taken] + 1);
    ++taken;
  }
  std::sort(set.labels.begin(), set.labels.end());
  return set;
}

LabelSet predict_full(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  LabelSet set;
  set.method = LabelMethod::Full;
  set.labels.resize(static_cast<std::size_t>(num_classes));
  std::iota(set.labels.begin(), set.labels.end(), 1);
  return set;
}

Vector temperature_scale(const Vector& probs, double temperature) {
  check_probs(probs);
  if (!(temperature > 0.0))
    throw std::invalid_argument("temperature must be positive");
  Vector z = probs.array().max(kProbFloor).log() / temperature;
  z.array() -= z.maxCoeff();
  Vector e = z.array().exp();
  return e / e.sum();
}

double expected_calibration_error(const std::vector<Vector>& probs,
                                  const std::vector<int>& labels, int num_bins) {
  if (probs.empty() || probs.size() != labels.size())
    throw std::invalid_argument("need matching, non-empty probs and labels");
  if (num_bins < 1) throw std::invalid_argument("num_bins must be positive");

  std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<double> acc_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(num_bins), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int top = argmax_lowest(probs[i]);
    const double conf = probs[i][top];
    auto bin = static_cast<std::size_t>(conf * num_bins);
    bin = std::min(bin, static_cast<std::size_t>(num_bins - 1));
    conf_sum[bin] += conf;
    acc_sum[bin] += (top + 1 == labels[i]) ? 1.0 : 0.0;
    ++count[bin];
  }
  double ece = 0.0;
  const auto n = static_cast<double>(probs.size());
  for (int b = 0; b < num_bins; ++b) {
    if (count[b] == 0) continue;
    const auto cnt = static_cast<double>(count[b]);
    ece += cnt / n * std::abs(acc_sum[b] / cnt - conf_sum[b] / cnt);
  }
  return ece;
}

}  // namespace confbox::label_sets
