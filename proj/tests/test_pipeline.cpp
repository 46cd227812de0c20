#include "confbox/pipeline.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using confbox::DataError;
using confbox::DetectionRecord;
using confbox::GroundTruthObject;
using confbox::MatchedSample;
using confbox::Matrix;
using confbox::MiscoverageConfig;
using confbox::Vector;
using confbox::box_intervals::BoxMethod;
using confbox::label_sets::LabelMethod;
using namespace confbox::pipeline;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

MatchedSample sample1d(double pred, double truth, const Vector& probs,
                       int label) {
  MatchedSample s;
  s.prediction.box = vec({pred});
  s.prediction.probs = probs;
  s.truth.box = vec({truth});
  s.truth.label = label;
  return s;
}

MiscoverageConfig cfg(double al, double ab) {
  MiscoverageConfig c;
  c.alpha_label = al;
  c.alpha_box = ab;
  return c;
}

}  // namespace

TEST_CASE("correction names round-trip") {
  for (auto c : {Correction::Bonferroni, Correction::MaxRank,
                 Correction::MaxScore})
    CHECK(correction_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(correction_from_string("holm"), std::invalid_argument);
}

TEST_CASE("methods pin or reject corrections") {
  const auto ok = [](BoxMethod m, Correction c) {
    CHECK_NOTHROW(validate_combination(m, c));
  };
  const auto bad = [](BoxMethod m, Correction c) {
    CHECK_THROWS_AS(validate_combination(m, c), std::invalid_argument);
  };
  for (auto m : {BoxMethod::Std, BoxMethod::Ens, BoxMethod::Cqr,
                 BoxMethod::BoxStd1S, BoxMethod::BoxEns1S, BoxMethod::BoxMult}) {
    ok(m, Correction::Bonferroni);
    ok(m, Correction::MaxRank);
    bad(m, Correction::MaxScore);
  }
  for (auto m : {BoxMethod::AddBonf, BoxMethod::MultBonf}) {
    ok(m, Correction::Bonferroni);
    bad(m, Correction::MaxRank);
    bad(m, Correction::MaxScore);
  }
  for (auto m : {BoxMethod::AddMax, BoxMethod::MultMax}) {
    ok(m, Correction::MaxScore);
    bad(m, Correction::Bonferroni);
    bad(m, Correction::MaxRank);
  }
  CHECK(default_correction(BoxMethod::Std) == Correction::MaxRank);
  CHECK(default_correction(BoxMethod::AddBonf) == Correction::Bonferroni);
  CHECK(default_correction(BoxMethod::MultMax) == Correction::MaxScore);
}

TEST_CASE("the two-step guarantee is the product of the step guarantees") {
  CHECK(sequential_guarantee(cfg(0.01, 0.10)) ==
        doctest::Approx(0.891).epsilon(1e-12));
  CHECK(sequential_guarantee(cfg(0.0, 0.10)) ==
        doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("single-class calibration reduces to a plain conformal quantile") {
  // Residual scores are {1, 2, 3}; at alpha_box 0.5 the quantile is the
  // ceil(4 * 0.5) = 2nd smallest, i.e. 2, regardless of correction since
  // there is a single coordinate.
  const Vector sure = vec({1.0});
  std::vector<MatchedSample> cal = {
      sample1d(0.0, 1.0, sure, 1),
      sample1d(0.0, -2.0, sure, 1),
      sample1d(0.0, 3.0, sure, 1),
  };
  for (auto corr : {Correction::Bonferroni, Correction::MaxRank}) {
    const auto model = calibrate(cal, cfg(0.1, 0.5), BoxMethod::Std, corr,
                                 LabelMethod::ClassThr);
    CHECK(model.box_quantiles(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(model.class_counts[0] == 3);

    DetectionRecord rec;
    rec.box = vec({0.0});
    rec.probs = sure;
    GroundTruthObject in;
    in.box = vec({1.5});
    in.label = 1;
    auto out = predict(rec, model, &in);
    CHECK(out.label_set.labels == std::vector<int>{1});
    CHECK(out.selected_quantiles[0] == doctest::Approx(2.0));
    CHECK(*out.box_covered);
    CHECK(*out.joint_covered);

    GroundTruthObject edge;
    edge.box = vec({2.0});  // on the boundary counts as covered
    edge.label = 1;
    CHECK(*predict(rec, model, &edge).box_covered);

    GroundTruthObject outp;
    outp.box = vec({2.5});
    outp.label = 1;
    CHECK_FALSE(*predict(rec, model, &outp).box_covered);
    CHECK(out.predicted_label == 1);
  }
}

TEST_CASE("selected quantiles are the coordinate-wise max over the set") {
  Matrix q(2, 2);
  q << 1, 2, 3, 0.5;
  confbox::label_sets::LabelSet set;
  set.labels = {1};
  CHECK(select_quantiles(set, q).isApprox(vec({1, 2}), 1e-12));
  set.labels = {2};
  CHECK(select_quantiles(set, q).isApprox(vec({3, 0.5}), 1e-12));
  set.labels = {1, 2};
  CHECK(select_quantiles(set, q).isApprox(vec({3, 2}), 1e-12));
  set.labels = {};
  CHECK_THROWS_AS(select_quantiles(set, q), std::invalid_argument);
  set.labels = {3};
  CHECK_THROWS_AS(select_quantiles(set, q), std::invalid_argument);
}

TEST_CASE("thin classes calibrate to +inf instead of fake precision") {
  const Vector p1 = vec({0.9, 0.1});
  const Vector p2 = vec({0.1, 0.9});
  std::vector<MatchedSample> cal = {
      sample1d(0, 1, p1, 1), sample1d(0, 2, p1, 1), sample1d(0, 3, p1, 1),
      sample1d(0, 1, p2, 2),  // a single sample is below min_class_count = 2
  };
  const auto model = calibrate(cal, cfg(0.1, 0.5), BoxMethod::Std,
                               Correction::MaxRank, LabelMethod::Full);
  CHECK(model.class_counts[1] == 1);
  CHECK(std::isinf(model.box_quantiles(1, 0)));
  CHECK(std::isfinite(model.box_quantiles(0, 0)));

  DetectionRecord rec;
  rec.box = vec({0.0});
  rec.probs = p1;
  const auto out = predict(rec, model);  // full set pulls in the +inf row
  CHECK(std::isinf(out.selected_quantiles[0]));
  CHECK_FALSE(out.interval.bounded());
}

TEST_CASE("calibration input is validated") {
  const Vector p = vec({0.9, 0.1});
  CHECK_THROWS_AS(calibrate({}, cfg(0.1, 0.5), BoxMethod::Std,
                            Correction::MaxRank, LabelMethod::ClassThr),
                  DataError);
  std::vector<MatchedSample> bad_label = {sample1d(0, 1, p, 5)};
  CHECK_THROWS_AS(calibrate(bad_label, cfg(0.1, 0.5), BoxMethod::Std,
                            Correction::MaxRank, LabelMethod::ClassThr),
                  DataError);
  std::vector<MatchedSample> ragged = {sample1d(0, 1, p, 1),
                                       sample1d(0, 1, vec({1.0}), 1)};
  CHECK_THROWS_AS(calibrate(ragged, cfg(0.1, 0.5), BoxMethod::Std,
                            Correction::MaxRank, LabelMethod::ClassThr),
                  DataError);
  // One-sided families need the four corner coordinates.
  std::vector<MatchedSample> short_box = {sample1d(0, 1, p, 1)};
  CHECK_THROWS_AS(calibrate(short_box, cfg(0.1, 0.5), BoxMethod::AddBonf,
                            Correction::Bonferroni, LabelMethod::ClassThr),
                  DataError);
  std::vector<MatchedSample> okset = {sample1d(0, 1, p, 1)};
  CHECK_THROWS_AS(calibrate(okset, cfg(0.1, 0.5), BoxMethod::Std,
                            Correction::MaxRank, LabelMethod::ClassThr, 0),
                  std::invalid_argument);
  // Mismatched record at prediction time.
  const auto model = calibrate(okset, cfg(0.1, 0.5), BoxMethod::Std,
                               Correction::MaxRank, LabelMethod::ClassThr, 1);
  DetectionRecord rec;
  rec.box = vec({0.0, 1.0});
  rec.probs = p;
  CHECK_THROWS_AS(predict(rec, model), DataError);
}

TEST_CASE("oracle label sets require truth and collapse to the true class") {
  const Vector p1 = vec({0.6, 0.4});
  std::vector<MatchedSample> cal;
  for (int i = 1; i <= 6; ++i) {
    cal.push_back(sample1d(0, 0.1 * i, p1, 1 + (i % 2)));
  }
  const auto model = calibrate(cal, cfg(0.1, 0.5), BoxMethod::Std,
                               Correction::MaxRank, LabelMethod::Oracle);
  DetectionRecord rec;
  rec.box = vec({0.0});
  rec.probs = p1;
  CHECK_THROWS_AS(predict(rec, model), std::invalid_argument);

  GroundTruthObject t;
  t.box = vec({0.05});
  t.label = 2;
  const auto out = predict(rec, model, &t);
  CHECK(out.label_set.labels == std::vector<int>{2});
  CHECK(out.selected_quantiles[0] ==
        doctest::Approx(model.box_quantiles(1, 0)));
  CHECK(*out.label_covered);
}

namespace {

struct SimDraw {
  std::vector<MatchedSample> samples;
};

// Labels, junk probabilities, and class-scaled Gaussian residuals. The label
// step guarantee is distribution-free, so the probabilities need not be
// informative at all.
SimDraw draw_samples(std::mt19937_64& gen, int n, int num_classes,
                     double noise_base) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  SimDraw out;
  for (int i = 0; i < n; ++i) {
    const int y = 1 + static_cast<int>(gen() % num_classes);
    Vector probs(num_classes);
    for (auto& x : probs.reshaped()) x = u(gen);
    probs /= probs.sum();
    MatchedSample s;
    s.truth.label = y;
    Vector pred(4);
    pred[0] = u(gen) * 50;
    pred[1] = u(gen) * 50;
    pred[2] = pred[0] + 10 + u(gen) * 40;
    pred[3] = pred[1] + 10 + u(gen) * 40;
    const double sd = noise_base * y;
    Vector truth = pred;
    for (auto& x : truth.reshaped()) x += sd * nd(gen);
    s.prediction.box = pred;
    s.prediction.probs = probs;
    s.truth.box = truth;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("oracle box coverage implies two-step box coverage on covered labels") {
  std::mt19937_64 gen(71);
  const auto cal = draw_samples(gen, 240, 3, 2.0).samples;
  const auto test = draw_samples(gen, 200, 3, 2.0).samples;
  const auto two_step = calibrate(cal, cfg(0.1, 0.2), BoxMethod::Std,
                                  Correction::MaxRank, LabelMethod::ClassThr);
  const auto oracle = calibrate(cal, cfg(0.1, 0.2), BoxMethod::Std,
                                Correction::MaxRank, LabelMethod::Oracle);
  for (const auto& s : test) {
    const auto ts = predict(s.prediction, two_step, &s.truth);
    const auto os = predict(s.prediction, oracle, &s.truth);
    // When the label set holds the truth, the selected quantiles dominate
    // the oracle's row, so the two-step interval can only be wider.
    if (*ts.label_covered && *os.box_covered) CHECK(*ts.box_covered);
    if (*ts.label_covered) {
      for (int k = 0; k < 4; ++k)
        CHECK(ts.selected_quantiles[k] >= os.selected_quantiles[k] - 1e-12);
    }
  }
}

TEST_CASE("joint coverage clears the sequential guarantee") {
  std::mt19937_64 gen(73);
  const auto cal = draw_samples(gen, 400, 3, 1.5).samples;
  const auto test = draw_samples(gen, 3000, 3, 1.5).samples;
  const auto config = cfg(0.05, 0.10);
  const auto model = calibrate(cal, config, BoxMethod::Std,
                               Correction::MaxRank, LabelMethod::ClassThr);
  int joint = 0;
  for (const auto& s : test)
    joint += *predict(s.prediction, model, &s.truth).joint_covered;
  const double coverage = static_cast<double>(joint) / test.size();
  // (1 - 0.05)(1 - 0.10) = 0.855; allow calibration and test noise.
  CHECK(coverage > sequential_guarantee(config) - 0.04);
}

TEST_CASE("single-class box coverage sits near the nominal level") {
  std::mt19937_64 gen(79);
  const auto cal = draw_samples(gen, 500, 1, 2.0).samples;
  const auto test = draw_samples(gen, 4000, 1, 2.0).samples;
  for (auto corr : {Correction::MaxRank, Correction::Bonferroni}) {
    const auto model = calibrate(cal, cfg(0.0, 0.10), BoxMethod::Std, corr,
                                 LabelMethod::ClassThr);
    int hits = 0;
    for (const auto& s : test)
      hits += *predict(s.prediction, model, &s.truth).box_covered;
    const double coverage = static_cast<double>(hits) / test.size();
    CHECK(coverage > 0.87);   // guarantee minus sampling noise
    CHECK(coverage < 0.975);  // not degenerately wide either
  }
}
