#include "docqa/geometry.hpp"

#include <algorithm>

namespace docqa {

bool Rect::contains(const Rect& other) const {
  return other.x >= x && other.y >= y && other.right() <= right() && other.bottom() <= bottom();
}

Rect unite(const Rect& a, const Rect& b) {
  const std::int64_t x0 = std::min(a.x, b.x);
  const std::int64_t y0 = std::min(a.y, b.y);
  const std::int64_t x1 = std::max(a.right(), b.right());
  const std::int64_t y1 = std::max(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

std::int64_t intersection_area(const Rect& a, const Rect& b) {
  const std::int64_t w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const std::int64_t h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

}  // namespace docqa
