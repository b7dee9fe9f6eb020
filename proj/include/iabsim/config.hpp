#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iabsim/channel.hpp"
#include "iabsim/geometry.hpp"

namespace iabsim {

using Json = nlohmann::ordered_json;

enum class DuplexMode { kFd, kHd };
enum class PolicyKind { kMarl, kRr, kRnd };

inline std::string to_string(DuplexMode m) { return m == DuplexMode::kFd ? "fd" : "hd"; }
inline std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kMarl: return "marl";
    case PolicyKind::kRr: return "rr";
    default: return "rnd";
  }
}

inline DuplexMode duplex_from_string(const std::string& s) {
  if (s == "fd") return DuplexMode::kFd;
  if (s == "hd") return DuplexMode::kHd;
  throw std::runtime_error("config: duplex must be \"fd\" or \"hd\", got \"" + s + "\"");
}

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "marl") return PolicyKind::kMarl;
  if (s == "rr") return PolicyKind::kRr;
  if (s == "rnd") return PolicyKind::kRnd;
  throw std::runtime_error("config: unknown policy \"" + s + "\"");
}

struct RangeS {
  double lo = 0.0;
  double hi = 0.0;
};

// Full experiment description. Defaults reproduce the reference urban
// scenario: 300x300 m area, donor on the west edge at 25 m, four relays at
// 6 m, 30 pedestrian users, low blocker density, full duplex.
struct ExperimentConfig {
  // Geometry and sites.
  double area_x_m = 300.0;
  double area_y_m = 300.0;
  Vec2 donor_pos{0.0, 150.0};
  double donor_height_m = 25.0;
  double relay_height_m = 6.0;
  double ue_height_m = 1.5;
  int num_relays = 4;
  std::vector<Vec2> relay_positions;  // empty -> sampled from the run seed
  std::vector<int> relay_parents;     // node ids; empty -> all attach to donor
  int num_ues = 30;

  // Radio.
  int num_panels = 4;
  int num_sectors = 5;
  double donor_tx_dbm = 29.3;
  double relay_tx_dbm = 20.3;
  double node_noise_dbm = -84.023;  // backhaul receivers
  double ue_noise_dbm = -82.023;    // access receivers
  AntennaPattern donor_pattern{kPi / 36.0, kPi / 4.0};
  AntennaPattern relay_pattern{kPi / 12.0, kPi / 4.0};
  PathLossParams path_loss;
  std::vector<McsEntry> mcs = default_mcs();
  DuplexMode duplex = DuplexMode::kFd;
  bool no_iab = false;

  // Frame timing.
  int frame_slots = 80;
  double slot_s = 125e-6;

  // Mobility (UEs and blockers share the waypoint model).
  RangeS ue_speed_mps{2.0, 20.0};
  RangeS move_s{2.0, 6.0};
  RangeS pause_s{0.0, 1.0};
  int num_blockers = 15;
  double blocker_radius_m = 2.5;
  double blocker_height_m = 2.0;
  RangeS blocker_speed_mps{2.0, 20.0};

  // Rewards and observation scaling.
  double rho_bh = 0.8;
  double zeta = 1.0;
  double buffer_norm_c_min = 100.0;  // observation normalizer, in units of c_min

  // Training schedule.
  int hidden_dim = 128;
  int episodes = 5000;
  double lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.01;
  double kappa = 0.001;
  int updates_per_cycle = 4;      // consecutive updates per update point
  int update_period_steps = 100;  // tuple-batch/update cadence in slots
  int warmup_episodes = 10;
  std::int64_t replay_capacity = 1'000'000;
  int batch_size = 1024;
  int comm_solution = 2;          // 1: update on batch arrival; 2: fixed timers
  int agent_latency_steps = 0;
  int central_latency_steps = 0;
  int msg_level_bits = 16;        // L: bits per buffer level in agent messages
  int msg_rate_bits = 16;         // B: bits per delivered-bits field (HD)

  // Baselines and evaluation.
  double rr_refill_threshold_c_min = 10.0;
  int eval_frames = 100;
  PolicyKind policy = PolicyKind::kMarl;

  std::uint64_t seed = 1;
  int instances = 1;

  static std::vector<McsEntry> default_mcs() {
    // Eight-step table: thresholds every 4-5 dB, rates = spectral efficiency
    // x 400 MHz x 125 us, covering QPSK 1/4 up to 256-QAM.
    return {{-5.0, 11720},  {-1.0, 30080},  {3.0, 58790},   {7.0, 95705},
            {11.0, 136525}, {15.0, 180470}, {20.0, 226170}, {25.0, 277735}};
  }

  McsTable mcs_table() const { return McsTable(mcs); }

  double buffer_norm_bits() const {
    return buffer_norm_c_min * static_cast<double>(McsTable(mcs).min_rate_bits());
  }

  int effective_relays() const { return no_iab ? 0 : num_relays; }

  void validate() const;

  Json to_json() const;
  static ExperimentConfig from_json(const Json& j);
};

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::runtime_error("config: " + msg); };
  if (!(area_x_m > 0 && area_y_m > 0)) fail("area must be positive");
  if (num_relays < 0) fail("relays.count must be >= 0");
  if (!relay_positions.empty() &&
      static_cast<int>(relay_positions.size()) != num_relays)
    fail("relays.positions must match relays.count");
  if (!relay_parents.empty() && static_cast<int>(relay_parents.size()) != num_relays)
    fail("relays.parents must match relays.count");
  for (int p : relay_parents)
    if (p < 0 || p > num_relays) fail("relays.parents entries must be node ids 0..count");
  if (num_ues < 1) fail("ues.count must be >= 1");
  if (num_panels < 1 || num_sectors < 1) fail("panels/sectors must be >= 1");
  if (!(donor_height_m > 0 && relay_height_m > 0 && ue_height_m > 0))
    fail("heights must be positive");
  for (const auto* pat : {&donor_pattern, &relay_pattern})
    if (!(pat->az_hpbw_rad > 0 && pat->az_hpbw_rad < kPi && pat->el_hpbw_rad > 0 &&
          pat->el_hpbw_rad < kPi))
      fail("antenna beamwidths must lie in (0, pi)");
  if (!(path_loss.d0_m > 0 && path_loss.k_near > 0 && path_loss.k_far > 0))
    fail("path-loss parameters out of range");
  try {
    McsTable t(mcs);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (frame_slots < 1 || !(slot_s > 0)) fail("frame timing out of range");
  for (const auto* r : {&ue_speed_mps, &move_s, &pause_s, &blocker_speed_mps})
    if (!(r->lo >= 0 && r->hi >= r->lo)) fail("mobility ranges must satisfy 0 <= lo <= hi");
  if (num_blockers < 0) fail("blockers.count must be >= 0");
  if (!(blocker_radius_m > 0 && blocker_height_m > 0)) fail("blocker size must be positive");
  if (!(rho_bh >= 0 && zeta >= 0)) fail("reward weights must be non-negative");
  if (!(buffer_norm_c_min > 0)) fail("buffer_norm_c_min must be positive");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (episodes < 1) fail("episodes must be >= 1");
  if (!(lr > 0)) fail("lr must be positive");
  if (!(gamma > 0 && gamma < 1)) fail("gamma must lie in (0,1)");
  if (!(tau >= 0)) fail("tau must be >= 0");
  if (!(kappa >= 0 && kappa <= 1)) fail("kappa must lie in [0,1]");
  if (updates_per_cycle < 1 || update_period_steps < 1 || warmup_episodes < 0)
    fail("schedule counters out of range");
  if (replay_capacity < 1) fail("replay_capacity must be >= 1");
  if (batch_size < 1 || batch_size > replay_capacity)
    fail("batch_size must be in [1, replay_capacity]");
  if (comm_solution != 1 && comm_solution != 2) fail("comm_solution must be 1 or 2");
  if (agent_latency_steps < 0 || central_latency_steps < 0) fail("latencies must be >= 0");
  if (msg_level_bits < 0 || msg_rate_bits < 0) fail("message bit widths must be >= 0");
  if (!(rr_refill_threshold_c_min >= 0)) fail("rr_refill_threshold_c_min must be >= 0");
  if (eval_frames < 1) fail("eval_frames must be >= 1");
  if (instances < 1) fail("instances must be >= 1");
}

namespace detail {

inline Json range_json(const RangeS& r) { return Json::array({r.lo, r.hi}); }

inline RangeS range_from(const Json& j, const char* name) {
  if (!j.is_array() || j.size() != 2)
    throw std::runtime_error(std::string("config: ") + name + " must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (auto it = j.find(key); it != j.end()) return it->get<T>();
  return fallback;
}

}  // namespace detail

inline Json ExperimentConfig::to_json() const {
  Json j;
  j["area"] = {{"x_m", area_x_m}, {"y_m", area_y_m}};
  j["donor"] = {{"pos", {donor_pos.x, donor_pos.y}},
                {"height_m", donor_height_m},
                {"tx_power_dbm", donor_tx_dbm},
                {"az_hpbw_rad", donor_pattern.az_hpbw_rad},
                {"el_hpbw_rad", donor_pattern.el_hpbw_rad}};
  Json relays;
  relays["count"] = num_relays;
  relays["height_m"] = relay_height_m;
  relays["tx_power_dbm"] = relay_tx_dbm;
  relays["az_hpbw_rad"] = relay_pattern.az_hpbw_rad;
  relays["el_hpbw_rad"] = relay_pattern.el_hpbw_rad;
  if (relay_positions.empty()) {
    relays["positions"] = nullptr;
  } else {
    Json pos = Json::array();
    for (const auto& p : relay_positions) pos.push_back({p.x, p.y});
    relays["positions"] = pos;
  }
  if (relay_parents.empty()) {
    relays["parents"] = nullptr;
  } else {
    relays["parents"] = relay_parents;
  }
  j["relays"] = relays;
  j["ues"] = {{"count", num_ues},
              {"height_m", ue_height_m},
              {"speed_mps", detail::range_json(ue_speed_mps)},
              {"move_s", detail::range_json(move_s)},
              {"pause_s", detail::range_json(pause_s)}};
  j["blockers"] = {{"count", num_blockers},
                   {"radius_m", blocker_radius_m},
                   {"height_m", blocker_height_m},
                   {"speed_mps", detail::range_json(blocker_speed_mps)}};
  Json mcs_j = Json::array();
  for (const auto& e : mcs) mcs_j.push_back({e.min_sinr_db, e.bits_per_slot});
  j["radio"] = {{"num_panels", num_panels},
                {"num_sectors", num_sectors},
                {"node_noise_dbm", node_noise_dbm},
                {"ue_noise_dbm", ue_noise_dbm},
                {"path_loss",
                 {{"alpha_db", path_loss.alpha_db},
                  {"d0_m", path_loss.d0_m},
                  {"k_near", path_loss.k_near},
                  {"k_far", path_loss.k_far}}},
                {"mcs", mcs_j}};
  j["frame"] = {{"slots", frame_slots}, {"slot_s", slot_s}};
  j["duplex"] = to_string(duplex);
  j["no_iab"] = no_iab;
  j["rewards"] = {{"rho_bh", rho_bh},
                  {"zeta", zeta},
                  {"buffer_norm_c_min", buffer_norm_c_min}};
  j["training"] = {{"hidden_dim", hidden_dim},
                   {"episodes", episodes},
                   {"lr", lr},
                   {"gamma", gamma},
                   {"tau", tau},
                   {"kappa", kappa},
                   {"updates_per_cycle", updates_per_cycle},
                   {"update_period_steps", update_period_steps},
                   {"warmup_episodes", warmup_episodes},
                   {"replay_capacity", replay_capacity},
                   {"batch_size", batch_size},
                   {"comm_solution", comm_solution},
                   {"agent_latency_steps", agent_latency_steps},
                   {"central_latency_steps", central_latency_steps},
                   {"msg_level_bits", msg_level_bits},
                   {"msg_rate_bits", msg_rate_bits}};
  j["baselines"] = {{"rr_refill_threshold_c_min", rr_refill_threshold_c_min}};
  j["eval_frames"] = eval_frames;
  j["policy"] = to_string(policy);
  j["seed"] = seed;
  j["instances"] = instances;
  return j;
}

inline ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  using detail::get_or;
  ExperimentConfig c;
  if (auto it = j.find("area"); it != j.end()) {
    c.area_x_m = get_or(*it, "x_m", c.area_x_m);
    c.area_y_m = get_or(*it, "y_m", c.area_y_m);
  }
  if (auto it = j.find("donor"); it != j.end()) {
    if (auto p = it->find("pos"); p != it->end())
      c.donor_pos = {(*p)[0].get<double>(), (*p)[1].get<double>()};
    c.donor_height_m = get_or(*it, "height_m", c.donor_height_m);
    c.donor_tx_dbm = get_or(*it, "tx_power_dbm", c.donor_tx_dbm);
    c.donor_pattern.az_hpbw_rad = get_or(*it, "az_hpbw_rad", c.donor_pattern.az_hpbw_rad);
    c.donor_pattern.el_hpbw_rad = get_or(*it, "el_hpbw_rad", c.donor_pattern.el_hpbw_rad);
  }
  if (auto it = j.find("relays"); it != j.end()) {
    c.num_relays = get_or(*it, "count", c.num_relays);
    c.relay_height_m = get_or(*it, "height_m", c.relay_height_m);
    c.relay_tx_dbm = get_or(*it, "tx_power_dbm", c.relay_tx_dbm);
    c.relay_pattern.az_hpbw_rad = get_or(*it, "az_hpbw_rad", c.relay_pattern.az_hpbw_rad);
    c.relay_pattern.el_hpbw_rad = get_or(*it, "el_hpbw_rad", c.relay_pattern.el_hpbw_rad);
    if (auto p = it->find("positions"); p != it->end() && !p->is_null())
      for (const auto& xy : *p) c.relay_positions.push_back({xy[0].get<double>(), xy[1].get<double>()});
    if (auto p = it->find("parents"); p != it->end() && !p->is_null())
      c.relay_parents = p->get<std::vector<int>>();
  }
  if (auto it = j.find("ues"); it != j.end()) {
    c.num_ues = get_or(*it, "count", c.num_ues);
    c.ue_height_m = get_or(*it, "height_m", c.ue_height_m);
    if (auto p = it->find("speed_mps"); p != it->end())
      c.ue_speed_mps = detail::range_from(*p, "ues.speed_mps");
    if (auto p = it->find("move_s"); p != it->end())
      c.move_s = detail::range_from(*p, "ues.move_s");
    if (auto p = it->find("pause_s"); p != it->end())
      c.pause_s = detail::range_from(*p, "ues.pause_s");
  }
  if (auto it = j.find("blockers"); it != j.end()) {
    c.num_blockers = get_or(*it, "count", c.num_blockers);
    c.blocker_radius_m = get_or(*it, "radius_m", c.blocker_radius_m);
    c.blocker_height_m = get_or(*it, "height_m", c.blocker_height_m);
    if (auto p = it->find("speed_mps"); p != it->end())
      c.blocker_speed_mps = detail::range_from(*p, "blockers.speed_mps");
  }
  if (auto it = j.find("radio"); it != j.end()) {
    c.num_panels = get_or(*it, "num_panels", c.num_panels);
    c.num_sectors = get_or(*it, "num_sectors", c.num_sectors);
    c.node_noise_dbm = get_or(*it, "node_noise_dbm", c.node_noise_dbm);
    c.ue_noise_dbm = get_or(*it, "ue_noise_dbm", c.ue_noise_dbm);
    if (auto p = it->find("path_loss"); p != it->end()) {
      c.path_loss.alpha_db = get_or(*p, "alpha_db", c.path_loss.alpha_db);
      c.path_loss.d0_m = get_or(*p, "d0_m", c.path_loss.d0_m);
      c.path_loss.k_near = get_or(*p, "k_near", c.path_loss.k_near);
      c.path_loss.k_far = get_or(*p, "k_far", c.path_loss.k_far);
    }
    if (auto p = it->find("mcs"); p != it->end()) {
      c.mcs.clear();
      for (const auto& e : *p)
        c.mcs.push_back({e[0].get<double>(), e[1].get<std::int64_t>()});
    }
  }
  if (auto it = j.find("frame"); it != j.end()) {
    c.frame_slots = get_or(*it, "slots", c.frame_slots);
    c.slot_s = get_or(*it, "slot_s", c.slot_s);
  }
  if (j.contains("duplex")) c.duplex = duplex_from_string(j["duplex"].get<std::string>());
  c.no_iab = get_or(j, "no_iab", c.no_iab);
  if (auto it = j.find("rewards"); it != j.end()) {
    c.rho_bh = get_or(*it, "rho_bh", c.rho_bh);
    c.zeta = get_or(*it, "zeta", c.zeta);
    c.buffer_norm_c_min = get_or(*it, "buffer_norm_c_min", c.buffer_norm_c_min);
  }
  if (auto it = j.find("training"); it != j.end()) {
    c.hidden_dim = get_or(*it, "hidden_dim", c.hidden_dim);
    c.episodes = get_or(*it, "episodes", c.episodes);
    c.lr = get_or(*it, "lr", c.lr);
    c.gamma = get_or(*it, "gamma", c.gamma);
    c.tau = get_or(*it, "tau", c.tau);
    c.kappa = get_or(*it, "kappa", c.kappa);
    c.updates_per_cycle = get_or(*it, "updates_per_cycle", c.updates_per_cycle);
    c.update_period_steps = get_or(*it, "update_period_steps", c.update_period_steps);
    c.warmup_episodes = get_or(*it, "warmup_episodes", c.warmup_episodes);
    c.replay_capacity = get_or(*it, "replay_capacity", c.replay_capacity);
    c.batch_size = get_or(*it, "batch_size", c.batch_size);
    c.comm_solution = get_or(*it, "comm_solution", c.comm_solution);
    c.agent_latency_steps = get_or(*it, "agent_latency_steps", c.agent_latency_steps);
    c.central_latency_steps = get_or(*it, "central_latency_steps", c.central_latency_steps);
    c.msg_level_bits = get_or(*it, "msg_level_bits", c.msg_level_bits);
    c.msg_rate_bits = get_or(*it, "msg_rate_bits", c.msg_rate_bits);
  }
  if (auto it = j.find("baselines"); it != j.end())
    c.rr_refill_threshold_c_min =
        get_or(*it, "rr_refill_threshold_c_min", c.rr_refill_threshold_c_min);
  c.eval_frames = get_or(j, "eval_frames", c.eval_frames);
  if (j.contains("policy")) c.policy = policy_from_string(j["policy"].get<std::string>());
  c.seed = get_or(j, "seed", c.seed);
  c.instances = get_or(j, "instances", c.instances);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in " + path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

inline void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << cfg.to_json().dump(2) << '\n';
}

}  // namespace iabsim
