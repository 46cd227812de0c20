#include "confbox/metrics.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using confbox::DetectionRecord;
using confbox::Vector;
using confbox::box_intervals::BoxInterval;
using confbox::box_intervals::BoxMethod;
using confbox::geometry::SizeStratum;
using namespace confbox::metrics;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

BoxInterval interval_for(const Vector& box, const Vector& q, BoxMethod m) {
  DetectionRecord r;
  r.box = box;
  r.probs = vec({1.0});
  return confbox::box_intervals::build_interval(r, q, m);
}

}  // namespace

TEST_CASE("coverage and set size are simple means") {
  CHECK(empirical_coverage({true, false, true, true}) ==
        doctest::Approx(0.75));
  CHECK_THROWS_AS(empirical_coverage({}), std::invalid_argument);

  confbox::label_sets::LabelSet a, b;
  a.labels = {1, 2, 3};
  b.labels = {2};
  CHECK(mean_set_size({a, b}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mean_set_size({}), std::invalid_argument);
}

TEST_CASE("pinball loss") {
  CHECK(pinball_loss(0.0, 1.0, 0.9) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(pinball_loss(3.0, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pinball_loss(2.0, 2.0, 0.3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pinball_loss(1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pinball_loss(1.0, 0.0, 1.0), std::invalid_argument);
  CHECK(mean_pinball(vec({0, 3}), vec({1, 1}), 0.5) ==
        doctest::Approx((0.5 + 1.0) / 2));
  CHECK_THROWS_AS(mean_pinball(vec({1}), vec({1, 2}), 0.5),
                  std::invalid_argument);
}

TEST_CASE("mean interval width averages over samples and coordinates") {
  const Vector pred = vec({0, 0, 10, 10});
  std::vector<BoxInterval> ivs = {
      interval_for(pred, vec({1, 2, 3, 4}), BoxMethod::Std),  // widths 2,4,6,8
      interval_for(pred, vec({1, 1, 1, 1}), BoxMethod::Std),  // widths 2,2,2,2
  };
  std::vector<Vector> boxes = {pred, pred};
  const auto r = mpiw(ivs, boxes);
  CHECK(r.value == doctest::Approx((20.0 + 8.0) / 8.0));
  CHECK(r.counted == 2);
  CHECK(r.excluded_unbounded == 0);

  SUBCASE("unbounded intervals are excluded and counted") {
    ivs.push_back(interval_for(pred, Vector::Constant(4, confbox::kInf),
                               BoxMethod::Std));
    boxes.push_back(pred);
    const auto r2 = mpiw(ivs, boxes);
    CHECK(r2.value == doctest::Approx(3.5));
    CHECK(r2.excluded_unbounded == 1);
    CHECK(r2.counted == 2);
  }
  SUBCASE("all excluded leaves the value undefined") {
    std::vector<BoxInterval> inf_only = {
        interval_for(pred, Vector::Constant(4, confbox::kInf), BoxMethod::Std)};
    const auto r3 = mpiw(inf_only, {pred});
    CHECK(std::isnan(r3.value));
    CHECK(r3.excluded_unbounded == 1);
  }
  SUBCASE("size mismatch is caller error") {
    CHECK_THROWS_AS(mpiw(ivs, {pred}), std::invalid_argument);
  }
}

TEST_CASE("one-sided intervals enter mpiw through the two-sided conversion") {
  const Vector pred = vec({0, 0, 10, 10});
  const auto iv = interval_for(pred, vec({1, 1, 1, 1}), BoxMethod::AddBonf);
  // Converted spans per coordinate run from the center (5,5,5,5) to the
  // outer bounds (-1,-1,11,11): width 6 each.
  const auto r = mpiw({iv}, {pred});
  CHECK(r.value == doctest::Approx(6.0));
  CHECK(r.excluded_unbounded == 0);
}

TEST_CASE("mpiw is invariant to translating the detection") {
  std::mt19937_64 gen(83);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 50; ++t) {
    Vector pred(4);
    pred << u(gen), u(gen), 10 + u(gen), 10 + u(gen);
    const Vector q = vec({u(gen), u(gen), u(gen), u(gen)});
    const Vector shift = Vector::Constant(4, 100.0);
    for (auto m : {BoxMethod::Std, BoxMethod::AddBonf}) {
      const auto a = mpiw({interval_for(pred, q, m)}, {pred});
      const auto b = mpiw({interval_for(pred + shift, q, m)}, {pred + shift});
      CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("inverted band intervals contribute zero width, not negative") {
  DetectionRecord r;
  r.box = vec({0, 0, 10, 10});
  r.probs = vec({1.0});
  r.q_lo = vec({4, 4, 4, 4});
  r.q_hi = vec({6, 6, 6, 6});
  const auto iv = confbox::box_intervals::build_interval(
      r, vec({-2, -2, -2, -2}), BoxMethod::Cqr);
  CHECK(iv.lo[0] > iv.hi[0]);
  const auto res = mpiw({iv}, {r.box});
  CHECK(res.value == doctest::Approx(0.0));
}

TEST_CASE("stretch is the linear blow-up of the outer box") {
  const Vector pred = vec({0, 0, 10, 10});
  const auto two = stretch({interval_for(pred, vec({1, 1, 1, 1}),
                                          BoxMethod::Std)},
                           {pred});
  CHECK(two.value == doctest::Approx(1.2));  // sqrt(144 / 100)

  // One-sided outer corners give the same outer box directly.
  const auto one = stretch({interval_for(pred, vec({1, 1, 1, 1}),
                                          BoxMethod::AddBonf)},
                           {pred});
  CHECK(one.value == doctest::Approx(1.2));

  SUBCASE("nonnegative quantiles can only stretch, never shrink") {
    std::mt19937_64 gen(89);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int t = 0; t < 100; ++t) {
      const Vector q = vec({u(gen), u(gen), u(gen), u(gen)});
      const auto s = stretch({interval_for(pred, q, BoxMethod::Std)}, {pred});
      CHECK(s.value >= 1.0 - 1e-12);
    }
  }
  SUBCASE("degenerate predictions and unbounded intervals are excluded") {
    const Vector flat = vec({0, 0, 0, 10});
    const auto s = stretch({interval_for(flat, vec({1, 1, 1, 1}),
                                          BoxMethod::Std)},
                           {flat});
    CHECK(s.counted == 0);
    CHECK(s.excluded == 1);
    CHECK(std::isnan(s.value));
    const auto t = stretch({interval_for(pred, Vector::Constant(4, confbox::kInf),
                                          BoxMethod::Std)},
                           {pred});
    CHECK(t.excluded == 1);
  }
}

namespace {

EvaluatedSample make_eval(double area_side, int true_label, int pred_label,
                          bool label_cov, bool box_cov) {
  EvaluatedSample es;
  Vector pred = vec({0, 0, area_side, area_side});
  es.sample.prediction.box = pred;
  Vector probs = Vector::Constant(3, 0.1);
  probs[pred_label - 1] = 0.8;
  es.sample.prediction.probs = probs;
  es.sample.truth.box = pred;
  es.sample.truth.label = true_label;
  es.output.label_set.labels = label_cov ? std::vector<int>{true_label}
                                         : std::vector<int>{true_label % 3 + 1};
  es.output.interval = interval_for(pred, vec({1, 1, 1, 1}), BoxMethod::Std);
  es.output.predicted_label = pred_label;
  es.output.label_covered = label_cov;
  es.output.box_covered = box_cov;
  es.output.joint_covered = label_cov && box_cov;
  return es;
}

}  // namespace

TEST_CASE("stratified report partitions the evaluation") {
  std::mt19937_64 gen(97);
  std::vector<EvaluatedSample> samples;
  const double sides[] = {10.0, 50.0, 200.0};  // small, medium, large areas
  for (int i = 0; i < 90; ++i) {
    const int y = 1 + static_cast<int>(gen() % 3);
    const int yh = 1 + static_cast<int>(gen() % 3);
    samples.push_back(make_eval(sides[gen() % 3], y, yh, gen() % 4 != 0,
                                gen() % 5 != 0));
  }
  const auto report = stratified_report(samples);
  CHECK(report.overall.count == 90);

  const auto check_partition = [&](auto& cells) {
    int total = 0;
    double joint_hits = 0, label_hits = 0;
    for (const auto& [key, cell] : cells) {
      total += cell.count;
      joint_hits += cell.count * cell.joint_coverage;
      label_hits += cell.count * cell.label_coverage;
    }
    CHECK(total == report.overall.count);
    CHECK(joint_hits ==
          doctest::Approx(report.overall.count * report.overall.joint_coverage)
              .epsilon(1e-9));
    CHECK(label_hits ==
          doctest::Approx(report.overall.count * report.overall.label_coverage)
              .epsilon(1e-9));
  };
  check_partition(report.by_class);
  check_partition(report.by_stratum);
  check_partition(report.by_correctness);

  CHECK(report.by_stratum.count(SizeStratum::Small) == 1);
  CHECK(report.by_stratum.count(SizeStratum::Medium) == 1);
  CHECK(report.by_stratum.count(SizeStratum::Large) == 1);
  CHECK(report.by_class.size() == 3);
}

TEST_CASE("reports demand evaluated predictions") {
  CHECK_THROWS_AS(stratified_report({}), std::invalid_argument);
  EvaluatedSample es = make_eval(10.0, 1, 1, true, true);
  es.output.box_covered.reset();
  CHECK_THROWS_AS(stratified_report({es}), std::invalid_argument);
}
