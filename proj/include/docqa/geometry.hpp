#pragma once

#include <cstdint>

namespace docqa {

// Closed axis-aligned rectangle in integer pixels. Valid rects have w > 0, h > 0.
struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  std::int64_t right() const { return x + w; }
  std::int64_t bottom() const { return y + h; }
  std::int64_t area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }
  bool contains(const Rect& other) const;

  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect unite(const Rect& a, const Rect& b);
std::int64_t intersection_area(const Rect& a, const Rect& b);

}  // namespace docqa
