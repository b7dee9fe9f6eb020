#pragma once

#include <cmath>

namespace iabsim {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec2 xy() const { return {x, y}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Normalizes an angle to (-pi, pi].
inline double norm_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Azimuth of the direction from `from` to `to`, in (-pi, pi].
inline double azimuth(const Vec2& from, const Vec2& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

}  // namespace iabsim
