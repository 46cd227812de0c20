#include "confbox/matching.hpp"

#include <algorithm>
#include <set>

#include "confbox/geometry.hpp"

namespace confbox::matching {

namespace {

// Shortest-augmenting-path assignment with potentials, O(n^3), minimizing.
// Expects a square cost matrix; returns row -> column.
std::vector<int> solve_min_cost(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Assignment solve_max_total_iou(const Matrix& iou) {
  Assignment out;
  const int rows = static_cast<int>(iou.rows());
  const int cols = static_cast<int>(iou.cols());
  if (rows == 0 || cols == 0) return out;
  if ((iou.array() < 0.0).any() || (iou.array() > 1.0).any())
    throw std::invalid_argument("iou matrix entries must lie in [0,1]");

  // Pad to square with zero-weight cells so unmatched objects cost nothing.
  const int n = std::max(rows, cols);
  Matrix cost = Matrix::Zero(n, n);
  cost.topLeftCorner(rows, cols) = -iou;

  const std::vector<int> row_to_col = solve_min_cost(cost);
  for (int i = 0; i < rows; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && j < cols) {
      out.pairs.emplace_back(i, j);
      out.total_iou += iou(i, j);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

std::vector<MatchedSample> match_image(
    const std::vector<DetectionRecord>& predictions,
    const std::vector<GroundTruthObject>& truths, double iou_threshold) {
  const int np = static_cast<int>(predictions.size());
  const int nt = static_cast<int>(truths.size());
  Matrix iou(np, nt);
  for (int i = 0; i < np; ++i) {
    const auto pb = geometry::Box::from_coords(predictions[i].box);
    for (int j = 0; j < nt; ++j)
      iou(i, j) = geometry::iou(pb, geometry::Box::from_coords(truths[j].box));
  }

  std::vector<MatchedSample> out;
  for (const auto& [pi, tj] : solve_max_total_iou(iou).pairs) {
    if (iou(pi, tj) < iou_threshold) continue;
    MatchedSample s;
    s.image_id = truths[tj].image_id;
    s.prediction = predictions[pi];
    s.truth = truths[tj];
    s.iou = iou(pi, tj);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<MatchedSample> match_dataset(
    const std::map<std::string, std::vector<DetectionRecord>>& predictions,
    const std::map<std::string, std::vector<GroundTruthObject>>& truths,
    double iou_threshold, MatchStats* stats) {
  MatchStats local;
  std::set<std::string> ids;
  for (const auto& [id, _] : predictions) ids.insert(id);
  for (const auto& [id, _] : truths) ids.insert(id);

  std::vector<MatchedSample> out;
  for (const auto& id : ids) {
    const auto pit = predictions.find(id);
    const auto tit = truths.find(id);
    if (pit == predictions.end()) {
      ++local.images_without_predictions;
      local.unmatched_truths += tit->second.size();
      continue;
    }
    if (tit == truths.end()) {
      ++local.images_without_truths;
      local.unmatched_predictions += pit->second.size();
      continue;
    }
    auto matched = match_image(pit->second, tit->second, iou_threshold);
    local.matched += matched.size();
    local.unmatched_predictions += pit->second.size() - matched.size();
    local.unmatched_truths += tit->second.size() - matched.size();
    out.insert(out.end(), std::make_move_iterator(matched.begin()),
               std::make_move_iterator(matched.end()));
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace confbox::matching
