#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iabsim/geometry.hpp"

namespace iabsim {

// Two-segment log-distance path loss: below the reference distance d0 the
// exponent is k_near, beyond it k_far. At d == d0 the loss equals alpha_db.
struct PathLossParams {
  double alpha_db = 82.02;
  double d0_m = 5.0;
  double k_near = 2.0;
  double k_far = 2.36;
};

inline double path_loss_db(double d_m, const PathLossParams& p) {
  if (!(d_m > 0.0)) throw std::domain_error("path_loss_db: d must be > 0");
  const double k = d_m <= p.d0_m ? p.k_near : p.k_far;
  return p.alpha_db + k * 10.0 * std::log10(d_m / p.d0_m);
}

// Gaussian main-lobe beam pattern, parameterized by half-power beamwidths.
struct AntennaPattern {
  double az_hpbw_rad = kPi / 12.0;
  double el_hpbw_rad = kPi / 4.0;
};

// Peak gain normalizes the pattern so the integral over the sphere is ~4*pi.
inline double boresight_gain_db(const AntennaPattern& p) {
  const double g0 = 16.0 * kPi / (6.76 * p.el_hpbw_rad * p.az_hpbw_rad);
  return 10.0 * std::log10(g0);
}

// Offsets are angular distances from boresight; 3 dB down at half a beamwidth.
inline double antenna_gain_db(const AntennaPattern& p, double el_offset_rad,
                              double az_offset_rad) {
  const double el = el_offset_rad / p.el_hpbw_rad;
  const double az = az_offset_rad / p.az_hpbw_rad;
  return boresight_gain_db(p) - 12.0 * el * el - 12.0 * az * az;
}

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// SINR with power addition done in linear milliwatts.
inline double sinr_db(double signal_dbm, std::span<const double> interferers_dbm,
                      double noise_dbm) {
  double denom_mw = dbm_to_mw(noise_dbm);
  for (double i : interferers_dbm) denom_mw += dbm_to_mw(i);
  return mw_to_dbm(dbm_to_mw(signal_dbm) / denom_mw);
}

// SINR is clamped to this range before MCS lookup so that pathological
// geometry (e.g. a transmitter meters away from an interferer) cannot produce
// unbounded values downstream.
inline constexpr double kSinrClampLoDb = -50.0;
inline constexpr double kSinrClampHiDb = 60.0;

inline double clamp_sinr_db(double s) {
  return std::clamp(s, kSinrClampLoDb, kSinrClampHiDb);
}

struct McsEntry {
  double min_sinr_db = 0.0;        // lowest SINR at which this MCS decodes
  std::int64_t bits_per_slot = 0;  // transport bits carried in one slot
};

// Rate table sorted by threshold; selection picks the fastest entry whose
// threshold the SINR meets, and no entry below the lowest threshold.
class McsTable {
 public:
  McsTable() = default;

  explicit McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("McsTable: empty");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].bits_per_slot <= 0)
        throw std::invalid_argument("McsTable: rates must be positive");
      if (i > 0 && !(entries_[i].min_sinr_db > entries_[i - 1].min_sinr_db &&
                     entries_[i].bits_per_slot > entries_[i - 1].bits_per_slot))
        throw std::invalid_argument("McsTable: thresholds and rates must increase");
    }
  }

  const std::vector<McsEntry>& entries() const { return entries_; }

  // Rate of the most robust entry; the common currency for reward scaling.
  std::int64_t min_rate_bits() const { return entries_.front().bits_per_slot; }

 private:
  std::vector<McsEntry> entries_;
};

struct McsSelection {
  std::size_t index = 0;
  std::int64_t bits_per_slot = 0;
};

inline std::optional<McsSelection> select_mcs(double sinr_db, const McsTable& table) {
  const auto& e = table.entries();
  if (sinr_db < e.front().min_sinr_db) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < e.size(); ++i)
    if (sinr_db >= e[i].min_sinr_db) best = i;
  return McsSelection{best, e[best].bits_per_slot};
}

// One directional link's power budget; receive power falls out directly.
struct LinkBudget {
  double tx_power_dbm = 0.0;
  double tx_gain_db = 0.0;
  double rx_gain_db = 0.0;
  double path_loss_db = 0.0;
  double noise_dbm = 0.0;

  double rx_power_dbm() const {
    return tx_power_dbm + tx_gain_db + rx_gain_db - path_loss_db;
  }
  double snr_db() const { return rx_power_dbm() - noise_dbm; }
};

}  // namespace iabsim
