#include "confbox/matching.hpp"

#include <random>

#include "confbox/geometry.hpp"
#include "doctest.h"

using confbox::DetectionRecord;
using confbox::GroundTruthObject;
using confbox::Matrix;
using confbox::Vector;
using namespace confbox::matching;

namespace {

// Exhaustive oracle: best total IoU over all partial one-to-one assignments.
double brute_force_best(const Matrix& iou, int row = 0, unsigned used = 0) {
  if (row == iou.rows()) return 0.0;
  double best = brute_force_best(iou, row + 1, used);
  for (int j = 0; j < iou.cols(); ++j) {
    if (used >> j & 1u) continue;
    best = std::max(best, iou(row, j) +
                              brute_force_best(iou, row + 1, used | (1u << j)));
  }
  return best;
}

Vector box(double x0, double y0, double x1, double y1) {
  Vector v(4);
  v << x0, y0, x1, y1;
  return v;
}

DetectionRecord det(const std::string& id, const Vector& b) {
  DetectionRecord d;
  d.image_id = id;
  d.box = b;
  d.probs = Vector::Constant(3, 1.0 / 3.0);
  return d;
}

GroundTruthObject truth(const std::string& id, const Vector& b, int label) {
  return GroundTruthObject{id, b, label};
}

}  // namespace

TEST_CASE("assignment solver is optimal on random instances") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 400; ++t) {
    const int rows = 1 + static_cast<int>(gen() % 5);
    const int cols = 1 + static_cast<int>(gen() % 5);
    Matrix iou(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        iou(i, j) = (gen() % 4 == 0) ? 0.0 : u(gen);  // sprinkle exact zeros
    const auto got = solve_max_total_iou(iou);
    CHECK(got.total_iou == doctest::Approx(brute_force_best(iou)).epsilon(1e-9));

    // One-to-one: no row or column repeats.
    std::vector<int> rs, cs;
    for (auto [r, c] : got.pairs) {
      rs.push_back(r);
      cs.push_back(c);
    }
    std::sort(rs.begin(), rs.end());
    std::sort(cs.begin(), cs.end());
    CHECK(std::adjacent_find(rs.begin(), rs.end()) == rs.end());
    CHECK(std::adjacent_find(cs.begin(), cs.end()) == cs.end());
  }
}

TEST_CASE("match_image pairs overlapping boxes and applies the threshold") {
  const std::vector<DetectionRecord> preds = {
      det("img1", box(0, 0, 2, 2)),      // iou 1/7 with t0: below threshold
      det("img1", box(10, 10, 14, 14)),  // iou 1 with t1
  };
  const std::vector<GroundTruthObject> truths = {
      truth("img1", box(1, 1, 3, 3), 2),
      truth("img1", box(10, 10, 14, 14), 1),
  };
  const auto matched = match_image(preds, truths);
  REQUIRE(matched.size() == 1);
  CHECK(matched[0].iou == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(matched[0].truth.label == 1);
  CHECK(matched[0].prediction.box[0] == 10.0);
}

TEST_CASE("threshold comparison is inclusive at 0.5") {
  // iou((0,0,2,1),(0,0,1,1)) = 1/2 exactly.
  const auto matched = match_image({det("i", box(0, 0, 2, 1))},
                                   {truth("i", box(0, 0, 1, 1), 1)});
  REQUIRE(matched.size() == 1);
  CHECK(matched[0].iou == 0.5);
}

TEST_CASE("matching is class-agnostic and one-to-one") {
  // Both predictions overlap both truths; optimal pairing is by position,
  // labels play no role.
  const std::vector<DetectionRecord> preds = {
      det("i", box(0, 0, 4, 4)),
      det("i", box(3, 0, 7, 4)),
  };
  const std::vector<GroundTruthObject> truths = {
      truth("i", box(0.5, 0, 4.5, 4), 9),
      truth("i", box(3.5, 0, 7.5, 4), 9),
  };
  const auto matched = match_image(preds, truths, 0.1);
  REQUIRE(matched.size() == 2);
  CHECK(matched[0].prediction.box[0] == 0.0);
  CHECK(matched[1].prediction.box[0] == 3.0);
}

TEST_CASE("assignment maximizes the total, not greedy per-row picks") {
  // Greedy would give p0 -> t0 (0.9) and strand p1 (p1 only overlaps t0).
  Matrix iou(2, 2);
  iou << 0.9, 0.8, 0.7, 0.0;
  const auto got = solve_max_total_iou(iou);
  CHECK(got.total_iou == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("match_dataset orders output and reports one-sided images") {
  std::map<std::string, std::vector<DetectionRecord>> preds;
  std::map<std::string, std::vector<GroundTruthObject>> truths;
  preds["b"] = {det("b", box(0, 0, 2, 2))};
  truths["b"] = {truth("b", box(0, 0, 2, 2), 1)};
  preds["a"] = {det("a", box(0, 0, 2, 2)), det("a", box(5, 5, 6, 6))};
  truths["a"] = {truth("a", box(0, 0, 2, 2), 3)};
  preds["only_pred"] = {det("only_pred", box(0, 0, 1, 1))};
  truths["only_truth"] = {truth("only_truth", box(0, 0, 1, 1), 2)};

  MatchStats stats;
  const auto matched = match_dataset(preds, truths, 0.5, &stats);
  REQUIRE(matched.size() == 2);
  CHECK(matched[0].image_id == "a");
  CHECK(matched[1].image_id == "b");
  CHECK(stats.matched == 2);
  CHECK(stats.images_without_predictions == 1);
  CHECK(stats.images_without_truths == 1);
  CHECK(stats.unmatched_predictions == 2);  // stray box in "a" + only_pred
  CHECK(stats.unmatched_truths == 1);       // only_truth
}
