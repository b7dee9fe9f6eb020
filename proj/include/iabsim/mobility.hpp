#pragma once

#include <cmath>
#include <stdexcept>

#include "iabsim/geometry.hpp"
#include "iabsim/rng.hpp"

namespace iabsim {

enum class MotionPhase { kMoving, kPaused };

struct WaypointState {
  Vec2 pos;
  double heading_rad = 0.0;
  double speed_mps = 0.0;
  MotionPhase phase = MotionPhase::kMoving;
  double phase_remaining_s = 0.0;
};

struct MobilityConfig {
  Vec2 area_min;          // lower-left corner of the rectangle
  Vec2 area_max;          // upper-right corner
  double speed_min_mps = 2.0;
  double speed_max_mps = 20.0;
  double move_min_s = 2.0;
  double move_max_s = 6.0;
  double pause_min_s = 0.0;
  double pause_max_s = 1.0;

  void validate() const {
    if (!(area_max.x > area_min.x && area_max.y > area_min.y))
      throw std::invalid_argument("MobilityConfig: degenerate area");
    if (!(speed_min_mps >= 0 && speed_max_mps >= speed_min_mps) ||
        !(move_min_s >= 0 && move_max_s >= move_min_s) ||
        !(pause_min_s >= 0 && pause_max_s >= pause_min_s))
      throw std::invalid_argument("MobilityConfig: invalid ranges");
  }
};

namespace detail {

// Folds x into [lo, hi] as if the segment were traversed with specular
// reflection at the walls; `flipped` reports whether the direction of travel
// along this axis ends up reversed (odd number of bounces).
struct Fold {
  double value;
  bool flipped;
};

inline Fold reflect_into(double x, double lo, double hi) {
  const double span = hi - lo;
  double r = std::fmod(x - lo, 2.0 * span);
  if (r < 0.0) r += 2.0 * span;
  if (r <= span) return {lo + r, false};
  return {lo + 2.0 * span - r, true};
}

}  // namespace detail

inline WaypointState random_waypoint_init(const MobilityConfig& cfg, Rng& rng) {
  WaypointState s;
  s.pos.x = rng.uniform(cfg.area_min.x, cfg.area_max.x);
  s.pos.y = rng.uniform(cfg.area_min.y, cfg.area_max.y);
  s.heading_rad = rng.uniform(-kPi, kPi);
  s.speed_mps = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps);
  s.phase = MotionPhase::kMoving;
  s.phase_remaining_s = rng.uniform(cfg.move_min_s, cfg.move_max_s);
  return s;
}

// Advances one tick of the move/pause cycle: move for the tick (with wall
// reflection), then burn the phase timer and, once it expires, draw the next
// phase. A new movement leg turns by a uniform angle in [-pi, pi) relative to
// the previous heading and redraws speed.
inline WaypointState waypoint_step(WaypointState s, double dt_s,
                                   const MobilityConfig& cfg, Rng& rng) {
  if (s.phase == MotionPhase::kMoving) {
    const double step = s.speed_mps * dt_s;
    const auto fx = detail::reflect_into(s.pos.x + step * std::cos(s.heading_rad),
                                         cfg.area_min.x, cfg.area_max.x);
    const auto fy = detail::reflect_into(s.pos.y + step * std::sin(s.heading_rad),
                                         cfg.area_min.y, cfg.area_max.y);
    s.pos = {fx.value, fy.value};
    if (fx.flipped || fy.flipped) {
      const double hx = std::cos(s.heading_rad) * (fx.flipped ? -1.0 : 1.0);
      const double hy = std::sin(s.heading_rad) * (fy.flipped ? -1.0 : 1.0);
      s.heading_rad = std::atan2(hy, hx);
    }
  }
  s.phase_remaining_s -= dt_s;
  if (s.phase_remaining_s <= 0.0) {
    if (s.phase == MotionPhase::kMoving) {
      s.phase = MotionPhase::kPaused;
      s.phase_remaining_s = rng.uniform(cfg.pause_min_s, cfg.pause_max_s);
    } else {
      s.phase = MotionPhase::kMoving;
      s.heading_rad = norm_angle(s.heading_rad + rng.uniform(-kPi, kPi));
      s.speed_mps = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps);
      s.phase_remaining_s = rng.uniform(cfg.move_min_s, cfg.move_max_s);
    }
  }
  return s;
}

}  // namespace iabsim
