#pragma once

#include <array>

namespace osdet {

/// Axis-aligned box in continuous pixel coordinates, (x1,y1) top-left and
/// (x2,y2) bottom-right. Construction rejects non-finite coordinates and
/// inverted corners with ValidationError, so every live BoundingBox is valid.
class BoundingBox {
 public:
  BoundingBox() = default;
  BoundingBox(double x1, double y1, double x2, double y2);

  static BoundingBox from_array(const std::array<double, 4>& c) {
    return {c[0], c[1], c[2], c[3]};
  }

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }

  std::array<double, 4> to_array() const { return {x1_, y1_, x2_, y2_}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 0.0;
  double y2_ = 0.0;
};

double area(const BoundingBox& b);

/// Intersection over union. Two zero-area boxes give 0, never NaN.
double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace osdet
