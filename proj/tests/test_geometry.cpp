#include "confbox/geometry.hpp"

#include <random>

#include "doctest.h"

using confbox::geometry::Box;
using confbox::geometry::SizeStratum;

namespace {

// Independent oracle: rasterize both boxes on a fine grid and count cell
// centres falling inside each. Converges to the exact IoU as the grid
// refines; used to pin down expected values before trusting the closed form.
double grid_iou(const Box& a, const Box& b, int cells_per_axis = 2000) {
  const double x_min = std::min(a.x0, b.x0), x_max = std::max(a.x1, b.x1);
  const double y_min = std::min(a.y0, b.y0), y_max = std::max(a.y1, b.y1);
  const double hx = (x_max - x_min) / cells_per_axis;
  const double hy = (y_max - y_min) / cells_per_axis;
  if (hx <= 0.0 || hy <= 0.0) return 0.0;
  long both = 0, either = 0;
  for (int i = 0; i < cells_per_axis; ++i) {
    const double x = x_min + (i + 0.5) * hx;
    const bool in_ax = x > a.x0 && x < a.x1;
    const bool in_bx = x > b.x0 && x < b.x1;
    if (!in_ax && !in_bx) continue;
    for (int j = 0; j < cells_per_axis; ++j) {
      const double y = y_min + (j + 0.5) * hy;
      const bool in_a = in_ax && y > a.y0 && y < a.y1;
      const bool in_b = in_bx && y > b.y0 && y < b.y1;
      if (in_a && in_b) ++both;
      if (in_a || in_b) ++either;
    }
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / either;
}

}  // namespace

TEST_CASE("iou matches the grid-counting oracle on the unit-overlap case") {
  const Box a{0, 0, 2, 2}, b{1, 1, 3, 3};
  // By hand: intersection 1, union 7.
  CHECK(grid_iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(4e-3));
  CHECK(confbox::geometry::iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(confbox::geometry::iou(b, a) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("iou endpoints") {
  const Box a{0, 0, 2, 2};
  CHECK(confbox::geometry::iou(a, a) == 1.0);
  CHECK(confbox::geometry::iou(a, Box{5, 5, 6, 6}) == 0.0);
  CHECK(confbox::geometry::iou(a, Box{2, 0, 4, 2}) == 0.0);  // shared edge only
  // Degenerate zero-area boxes never divide by zero.
  CHECK(confbox::geometry::iou(Box{1, 1, 1, 1}, Box{1, 1, 1, 1}) == 0.0);
}

TEST_CASE("iou agrees with the grid oracle on random boxes") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 25; ++t) {
    auto rand_box = [&] {
      const double x0 = u(gen), y0 = u(gen);
      return Box{x0, y0, x0 + 0.5 + u(gen), y0 + 0.5 + u(gen)};
    };
    const Box a = rand_box(), b = rand_box();
    const double got = confbox::geometry::iou(a, b);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK(got == doctest::Approx(confbox::geometry::iou(b, a)).epsilon(1e-12));
    CHECK(std::abs(got - grid_iou(a, b, 800)) < 8e-3);  // oracle is O(1/cells) accurate
  }
}

TEST_CASE("area strata partition on true-box area") {
  using confbox::geometry::stratum;
  CHECK(stratum(Box{0, 0, 50, 50}) == SizeStratum::Medium);  // area 2500
  CHECK(stratum(Box{0, 0, 32, 32}) == SizeStratum::Small);   // boundary inclusive
  CHECK(stratum(Box{0, 0, 96, 96}) == SizeStratum::Medium);  // boundary inclusive
  CHECK(stratum(Box{0, 0, 96.01, 96}) == SizeStratum::Large);
  CHECK(stratum(Box{0, 0, 1, 1}) == SizeStratum::Small);

  // Every box lands in exactly one stratum.
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> side(0.1, 200.0);
  for (int t = 0; t < 200; ++t) {
    const Box b{0, 0, side(gen), side(gen)};
    const double a = confbox::geometry::area(b);
    const auto s = stratum(b);
    if (a <= 32.0 * 32.0) CHECK(s == SizeStratum::Small);
    else if (a <= 96.0 * 96.0) CHECK(s == SizeStratum::Medium);
    else CHECK(s == SizeStratum::Large);
  }
}

TEST_CASE("box validity and coordinate round trip") {
  const Box b{1, 2, 3, 4};
  CHECK(b.valid());
  CHECK(Box::from_coords(b.coords()).x1 == 3.0);
  CHECK_FALSE(Box{3, 0, 1, 2}.valid());
  CHECK_THROWS_AS(Box::from_coords(confbox::Vector::Zero(3)), std::invalid_argument);
}
