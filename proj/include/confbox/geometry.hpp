#pragma once

#include "confbox/types.hpp"

namespace confbox::geometry {

// Axis-aligned box in corner parameterization. Valid when x0 <= x1, y0 <= y1
// and all coordinates are finite.
struct Box {
  double x0{0}, y0{0}, x1{0}, y1{0};

  static Box from_coords(const Vector& c);  // requires exactly 4 coordinates
  Eigen::Vector4d coords() const { return {x0, y0, x1, y1}; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool valid() const;
};

double area(const Box& b);

// Intersection over union, in [0,1]. Degenerate unions yield 0.
double iou(const Box& a, const Box& b);

// Area strata over ground-truth boxes: Small <= 32^2 < Medium <= 96^2 < Large.
enum class SizeStratum { Small, Medium, Large };

inline constexpr double kSmallMaxArea = 32.0 * 32.0;
inline constexpr double kMediumMaxArea = 96.0 * 96.0;

SizeStratum stratum(const Box& b);
const char* to_string(SizeStratum s);

}  // namespace confbox::geometry
