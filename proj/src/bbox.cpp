#include "actdet/bbox.hpp"

#include <algorithm>
#include <cmath>

#include "actdet/errors.hpp"

namespace actdet {

std::string_view to_string(ObjClass c) {
  return c == ObjClass::kPerson ? "person" : "vehicle";
}

ObjClass obj_class_from_string(std::string_view s) {
  if (s == "person") return ObjClass::kPerson;
  if (s == "vehicle") return ObjClass::kVehicle;
  throw ContractViolation("unknown object class '" + std::string(s) + "'");
}

void validate(const BBox& b) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw ContractViolation("box must have positive width and height");
  if (!(b.score >= 0.0 && b.score <= 1.0)) throw ContractViolation("box score outside [0, 1]");
  if (b.frame < 0) throw ContractViolation("negative frame index");
  if (!std::isfinite(b.x) || !std::isfinite(b.y)) throw ContractViolation("non-finite box corner");
}

BBox clamp_to_frame(const BBox& b, int width, int height) {
  BBox out = b;
  const double x0 = std::clamp(b.x, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(b.y, 0.0, static_cast<double>(height));
  const double x1 = std::clamp(b.right(), 0.0, static_cast<double>(width));
  const double y1 = std::clamp(b.bottom(), 0.0, static_cast<double>(height));
  if (x1 <= x0 || y1 <= y0) throw ContractViolation("box lies outside the frame");
  out.x = x0;
  out.y = y0;
  out.w = x1 - x0;
  out.h = y1 - y0;
  return out;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace actdet
