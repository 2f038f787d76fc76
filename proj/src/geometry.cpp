#include "osdet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "osdet/error.hpp"

namespace osdet {

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw ValidationError("bounding box has non-finite coordinates");
  }
  if (x2 < x1 || y2 < y1) {
    std::ostringstream msg;
    msg << "bounding box [" << x1 << "," << y1 << "," << x2 << "," << y2
        << "] has inverted corners";
    throw ValidationError(msg.str());
  }
}

double area(const BoundingBox& b) { return b.width() * b.height(); }

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace osdet
