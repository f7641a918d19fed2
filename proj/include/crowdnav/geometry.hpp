// Copyright (c) 2026 The crowdnav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>

namespace crowdnav
{

struct Vec2
{
  double x{0.0};
  double y{0.0};

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
constexpr double squaredNorm(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline bool isFinite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Unit vector along `a`, or the zero vector when `a` has zero length.
inline Vec2 normalized(const Vec2& a)
{
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec2{};
}

/// Scales `a` down so that its length does not exceed `max_norm`.
inline Vec2 clipNorm(const Vec2& a, double max_norm)
{
  const double n = norm(a);
  return n > max_norm && n > 0.0 ? a * (max_norm / n) : a;
}

/// Cosine of the angle between `a` and `b`; 0 when either is degenerate.
inline double cosAngle(const Vec2& a, const Vec2& b)
{
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    return 0.0;
  }
  const double c = dot(a, b) / (na * nb);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

/// Expresses `v` in a frame rotated so that its x axis is `axis` (unit length).
constexpr Vec2 toFrame(const Vec2& v, const Vec2& axis)
{
  return {dot(v, axis), cross(axis, v)};
}

/// Distance from `p` to the segment [a, b].
inline double segmentDistance(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 ab = b - a;
  const double len2 = squaredNorm(ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return distance(p, a + ab * t);
}

/// Axis-aligned rectangle.
struct Bounds
{
  Vec2 lo{-6.0, -6.0};
  Vec2 hi{6.0, 6.0};

  bool contains(const Vec2& p, double margin = 0.0) const
  {
    return p.x >= lo.x + margin && p.x <= hi.x - margin && p.y >= lo.y + margin &&
           p.y <= hi.y - margin;
  }
};

}  // namespace crowdnav
