#pragma once

#include <cmath>
#include <span>

#include "iabsim/geometry.hpp"
#include "iabsim/mobility.hpp"

namespace iabsim {

// A person-sized obstacle modeled as a vertical cylinder standing on the
// ground, wandering the area like any other pedestrian.
struct Blocker {
  WaypointState motion;
  double radius_m = 2.5;
  double height_m = 2.0;
};

namespace detail {

// Signal height above ground at parameter t along the tx->rx segment; the
// ray between the two endpoints is a straight line, so this is linear.
inline double segment_height(const Vec3& tx, const Vec3& rx, double t) {
  return tx.z + t * (rx.z - tx.z);
}

}  // namespace detail

// True when the cylinder (center, radius, height) interrupts the straight
// path from tx to rx. The test runs on the ground projection: where the
// projected segment touches the circle, the link is cut iff the signal there
// travels at or below the cylinder top. The projected overlap is an interval
// and the height is linear in the path parameter, so checking the interval's
// endpoints is exhaustive.
inline bool los_blocked(const Vec3& tx, const Vec3& rx, const Blocker& blocker) {
  const Vec2 a = tx.xy();
  const Vec2 d = rx.xy() - a;
  const Vec2 m = a - blocker.motion.pos;
  const double qa = d.norm2();
  const double qb = 2.0 * d.dot(m);
  const double qc = m.norm2() - blocker.radius_m * blocker.radius_m;

  constexpr double kDiscTol = 1e-9;
  if (qa <= kDiscTol) {
    // Vertical or zero-length ground projection: a single point.
    if (qc > 0.0) return false;
    return std::min(tx.z, rx.z) <= blocker.height_m;
  }

  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < -kDiscTol) return false;

  if (std::abs(disc) <= kDiscTol) {  // grazing contact at one point
    const double t = -qb / (2.0 * qa);
    if (t < 0.0 || t > 1.0) return false;
    return detail::segment_height(tx, rx, t) <= blocker.height_m;
  }

  const double sq = std::sqrt(disc);
  const double lo = std::max((-qb - sq) / (2.0 * qa), 0.0);
  const double hi = std::min((-qb + sq) / (2.0 * qa), 1.0);
  if (lo > hi) return false;  // overlap lies outside the segment
  return detail::segment_height(tx, rx, lo) <= blocker.height_m ||
         detail::segment_height(tx, rx, hi) <= blocker.height_m;
}

inline bool access_link_blocked(const Vec3& tx, const Vec3& rx,
                                std::span<const Blocker> blockers) {
  for (const Blocker& b : blockers)
    if (los_blocked(tx, rx, b)) return true;
  return false;
}

}  // namespace iabsim
