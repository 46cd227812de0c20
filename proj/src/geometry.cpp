#include "confbox/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace confbox::geometry {

Box Box::from_coords(const Vector& c) {
  if (c.size() != 4)
    throw std::invalid_argument("box requires exactly 4 coordinates");
  return Box{c[0], c[1], c[2], c[3]};
}

bool Box::valid() const {
  return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
         std::isfinite(y1) && x0 <= x1 && y0 <= y1;
}

double area(const Box& b) { return b.width() * b.height(); }

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

SizeStratum stratum(const Box& b) {
  const double a = area(b);
  if (a <= kSmallMaxArea) return SizeStratum::Small;
  if (a <= kMediumMaxArea) return SizeStratum::Medium;
  return SizeStratum::Large;
}

const char* to_string(SizeStratum s) {
  switch (s) {
    case SizeStratum::Small: return "small";
    case SizeStratum::Medium: return "medium";
    case SizeStratum::Large: return "large";
  }
  return "?";
}

}  // namespace confbox::geometry
