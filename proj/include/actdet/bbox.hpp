#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace actdet {

enum class ObjClass { kPerson, kVehicle };

std::string_view to_string(ObjClass c);
ObjClass obj_class_from_string(std::string_view s);

// Axis-aligned box on one frame. (x, y) is the top-left corner, w is the
// horizontal extent and h the vertical one, all in source-frame pixels.
struct BBox {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;
  double score = 1.0;
  ObjClass obj_class = ObjClass::kPerson;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  bool operator==(const BBox&) const = default;
};

// Throws ContractViolation when w/h are not positive, the score is outside
// [0, 1] or the frame index is negative.
void validate(const BBox& b);

// Clamps the box to [0, width) x [0, height). Throws if nothing is left.
BBox clamp_to_frame(const BBox& b, int width, int height);

double iou(const BBox& a, const BBox& b);

using BoxSequence = std::vector<BBox>;

// Axis-aligned rectangle in source-frame pixels (no frame index).
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const Rect&) const = default;
};

}  // namespace actdet
