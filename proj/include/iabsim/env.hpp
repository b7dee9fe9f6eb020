#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iabsim/blockage.hpp"
#include "iabsim/channel.hpp"
#include "iabsim/config.hpp"
#include "iabsim/geometry.hpp"
#include "iabsim/mobility.hpp"
#include "iabsim/network.hpp"
#include "iabsim/rng.hpp"

namespace iabsim {

enum class ActionKind { kAccess, kBackhaul, kSilent };

// Per-panel decision for one slot: beam a sector towards users, refill one
// reachable child over backhaul, or keep quiet.
struct AgentAction {
  ActionKind kind = ActionKind::kSilent;
  int sector = -1;  // kAccess
  int child = -1;   // kBackhaul: node id
  static AgentAction access(int s) { return {ActionKind::kAccess, s, -1}; }
  static AgentAction backhaul(int child) { return {ActionKind::kBackhaul, -1, child}; }
  static AgentAction silent() { return {}; }
};

// A panel-agent's identity and fixed action set.
struct AgentInfo {
  int node = 0;
  int panel = 0;
  std::vector<int> children;  // node ids reachable over backhaul via this panel
  int num_sectors = 0;
  int obs_dim = 0;

  // Access(0..Ns-1), then Backhaul per child in listed order, then Silent.
  int action_count() const { return num_sectors + static_cast<int>(children.size()) + 1; }
};

inline AgentAction action_from_index(const AgentInfo& a, int idx) {
  if (idx < 0 || idx >= a.action_count())
    throw std::out_of_range("action_from_index: index " + std::to_string(idx));
  if (idx < a.num_sectors) return AgentAction::access(idx);
  if (idx < a.num_sectors + static_cast<int>(a.children.size()))
    return AgentAction::backhaul(a.children[idx - a.num_sectors]);
  return AgentAction::silent();
}

inline int action_index(const AgentInfo& a, const AgentAction& act) {
  switch (act.kind) {
    case ActionKind::kAccess:
      return act.sector;
    case ActionKind::kBackhaul:
      for (std::size_t k = 0; k < a.children.size(); ++k)
        if (a.children[k] == act.child) return a.num_sectors + static_cast<int>(k);
      throw std::invalid_argument("action_index: child not reachable");
    default:
      return a.action_count() - 1;
  }
}

// Local view of one panel-agent. Bit fields are stored as 0/1 doubles so the
// flat vector can feed the networks directly.
struct Observation {
  std::vector<double> ue_presence;       // per sector, current coverage
  std::vector<double> sector_blockage;   // per sector, last-slot failure
  std::vector<double> child_buffer;      // per child, normalized level
  std::vector<double> child_delivered;   // per child, last-slot bits out (HD only)

  std::vector<double> flat() const {
    std::vector<double> v;
    v.reserve(ue_presence.size() + sector_blockage.size() + child_buffer.size() +
              child_delivered.size());
    for (const auto* b : {&ue_presence, &sector_blockage, &child_buffer, &child_delivered})
      v.insert(v.end(), b->begin(), b->end());
    return v;
  }
};

struct RewardParams {
  double rho_bh = 0.8;
  double zeta = 1.0;
};

// Full-duplex reward: throughput scaled by hop depth, backhaul discounted by
// rho, zero for agents whose node has nothing to send, penalty for a wasted
// slot (collision, blockage, silence with pending bits, or no receiver).
inline double reward_fd(std::int64_t bits, int hops, bool empty_buffer, ActionKind kind,
                        bool failed, std::int64_t c_min, const RewardParams& rp) {
  if (empty_buffer) return 0.0;
  if (!failed && bits > 0 && kind == ActionKind::kAccess)
    return (hops + 1) * static_cast<double>(bits) / static_cast<double>(c_min);
  if (!failed && bits > 0 && kind == ActionKind::kBackhaul)
    return rp.rho_bh * (hops + 1) * static_cast<double>(bits) / static_cast<double>(c_min);
  return -rp.zeta;
}

// Half-duplex variant: the zero-reward set also covers agents suppressed by a
// parent's refill, and a successful refill is divided by the child's buffer
// level after reception — stuffing an already full child is worth little.
inline double reward_hd(std::int64_t bits, int hops, bool in_er, ActionKind kind,
                        std::int64_t l_after, bool failed, std::int64_t c_min,
                        const RewardParams& rp) {
  if (in_er) return 0.0;
  if (!failed && bits > 0 && kind == ActionKind::kAccess)
    return (hops + 1) * static_cast<double>(bits) / static_cast<double>(c_min);
  if (!failed && bits > 0 && kind == ActionKind::kBackhaul) {
    assert(l_after >= bits);
    return rp.rho_bh * (hops + 1) * static_cast<double>(bits) /
           (static_cast<double>(c_min) * static_cast<double>(l_after));
  }
  return -rp.zeta;
}

struct AgentOutcome {
  std::int64_t bits_sent = 0;
  double reward = 0.0;
  bool collision = false;
  bool blocked = false;
  bool empty_buffer = false;
  bool rx_suppressed = false;
  bool attempted = false;  // transmitted towards a resolved receiver
  int served_ue = -1;
};

struct SlotOutcome {
  std::vector<AgentOutcome> agents;
  std::vector<std::int64_t> ue_bits;            // delivered per UE
  std::vector<std::int64_t> node_buffer_delta;  // per node, end minus start
  std::vector<std::int64_t> node_tx_bits;       // per node, bits leaving
  std::vector<std::int64_t> node_rx_bits;       // per node, backhaul bits entering
  std::int64_t donor_access_bits = 0;           // delivered directly by the donor
  std::int64_t relay_access_bits = 0;           // delivered via at least one hop
  int collisions = 0;
  int blocked_links = 0;

  std::int64_t delivered_bits() const { return donor_access_bits + relay_access_bits; }
};

struct StepResult {
  std::vector<Observation> obs;
  SlotOutcome outcome;
};

// The slot-stepped downlink engine. One instance owns the whole mutable world
// (sites, users, blockers, buffers, RNG streams) and advances it one slot per
// step() call under either duplex discipline.
class Env {
 public:
  Env(ExperimentConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    reset(seed);
  }

  void reset(std::uint64_t seed) {
    seed_ = seed;
    slot_ = 0;
    mcs_ = cfg_.mcs_table();
    build_sites(seed);
    build_agents();

    ue_mob_ = MobilityConfig{{0.0, 0.0},
                             {cfg_.area_x_m, cfg_.area_y_m},
                             cfg_.ue_speed_mps.lo,
                             cfg_.ue_speed_mps.hi,
                             cfg_.move_s.lo,
                             cfg_.move_s.hi,
                             cfg_.pause_s.lo,
                             cfg_.pause_s.hi};
    blocker_mob_ = ue_mob_;
    blocker_mob_.speed_min_mps = cfg_.blocker_speed_mps.lo;
    blocker_mob_.speed_max_mps = cfg_.blocker_speed_mps.hi;

    ue_state_.clear();
    ue_rng_.clear();
    for (int i = 0; i < cfg_.num_ues; ++i) {
      ue_rng_.emplace_back(derive_seed(seed, rng_tag::kUeMotion, i));
      ue_state_.push_back(random_waypoint_init(ue_mob_, ue_rng_.back()));
    }
    blockers_.clear();
    blocker_rng_.clear();
    for (int i = 0; i < cfg_.num_blockers; ++i) {
      blocker_rng_.emplace_back(derive_seed(seed, rng_tag::kBlockerMotion, i));
      blockers_.push_back(Blocker{random_waypoint_init(blocker_mob_, blocker_rng_.back()),
                                  cfg_.blocker_radius_m, cfg_.blocker_height_m});
    }
    pick_rng_ = Rng(derive_seed(seed, rng_tag::kReceiverPick));

    buffers_.assign(nodes_.size(), 0);
    block_flags_.assign(agents_.size(), std::vector<std::uint8_t>(cfg_.num_sectors, 0));
    prev_down_bits_.assign(nodes_.size(), 0);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Topology& topology() const { return topo_; }
  const std::vector<AgentInfo>& agents() const { return agents_; }
  int num_ues() const { return cfg_.num_ues; }
  const McsTable& mcs() const { return mcs_; }
  std::int64_t c_min() const { return mcs_.min_rate_bits(); }
  std::int64_t buffer_bits(int node) const { return buffers_.at(node); }
  DuplexMode duplex() const { return cfg_.duplex; }
  long slot() const { return slot_; }

  Vec3 ue_pos(int u) const {
    return {ue_state_[u].pos.x, ue_state_[u].pos.y, cfg_.ue_height_m};
  }

  // UE ids currently inside sector s of this agent's panel, ascending.
  std::vector<int> covered_ues(int agent, int sector) const {
    const AgentInfo& a = agents_[agent];
    const Panel& panel = nodes_[a.node].panels[a.panel];
    std::vector<int> out;
    for (int u = 0; u < cfg_.num_ues; ++u)
      if (sector_covers(panel, sector, nodes_[a.node].pos.xy(), ue_state_[u].pos))
        out.push_back(u);
    return out;
  }

  Observation build_observation(int agent) const {
    const AgentInfo& a = agents_[agent];
    Observation o;
    o.ue_presence.assign(cfg_.num_sectors, 0.0);
    for (int s = 0; s < cfg_.num_sectors; ++s)
      if (!covered_ues(agent, s).empty()) o.ue_presence[s] = 1.0;
    o.sector_blockage.assign(cfg_.num_sectors, 0.0);
    for (int s = 0; s < cfg_.num_sectors; ++s)
      o.sector_blockage[s] = block_flags_[agent][s];
    const double norm = cfg_.buffer_norm_bits();
    for (int c : a.children)
      o.child_buffer.push_back(static_cast<double>(buffers_[c]) / norm);
    if (cfg_.duplex == DuplexMode::kHd)
      for (int c : a.children)
        o.child_delivered.push_back(static_cast<double>(prev_down_bits_[c]) / norm);
    return o;
  }

  std::vector<Observation> observations() const {
    std::vector<Observation> obs;
    obs.reserve(agents_.size());
    for (std::size_t a = 0; a < agents_.size(); ++a)
      obs.push_back(build_observation(static_cast<int>(a)));
    return obs;
  }

  StepResult step(const std::vector<AgentAction>& actions) {
    const int num_agents = static_cast<int>(agents_.size());
    if (static_cast<int>(actions.size()) != num_agents)
      throw std::invalid_argument("step: need one action per agent");
    validate_actions(actions);

    const int num_nodes = static_cast<int>(nodes_.size());
    SlotOutcome out;
    out.agents.resize(num_agents);
    out.ue_bits.assign(cfg_.num_ues, 0);
    out.node_buffer_delta.assign(num_nodes, 0);
    out.node_tx_bits.assign(num_nodes, 0);
    out.node_rx_bits.assign(num_nodes, 0);
    const std::vector<std::int64_t> start_buf = buffers_;

    // (1) Half-duplex: a refilled node keeps all its panels quiet this slot.
    std::vector<char> suppressed(num_nodes, 0);
    if (cfg_.duplex == DuplexMode::kHd)
      for (const AgentAction& act : actions)
        if (act.kind == ActionKind::kBackhaul) suppressed[act.child] = 1;
    for (int a = 0; a < num_agents; ++a)
      out.agents[a].rx_suppressed = suppressed[agents_[a].node] != 0;

    // (2) Resolve receivers. An access beam into an empty sector transmits to
    // nobody and is recorded as a wasted attempt.
    struct Link {
      int agent;
      bool is_access;
      int ue = -1;     // access receiver
      int child = -1;  // backhaul receiver
      SectorRef beam;  // transmit (panel, sector) at the source
      bool collision = false;
      bool blocked = false;
      std::int64_t capacity = 0;
    };
    std::vector<Link> links;
    std::vector<char> no_target(num_agents, 0);
    for (int a = 0; a < num_agents; ++a) {
      if (suppressed[agents_[a].node]) continue;
      const AgentAction& act = actions[a];
      if (act.kind == ActionKind::kSilent) continue;
      if (act.kind == ActionKind::kAccess) {
        const std::vector<int> cands = covered_ues(a, act.sector);
        if (cands.empty()) {
          no_target[a] = 1;
          continue;
        }
        Link l{a, true};
        l.ue = cands[pick_rng_.uniform_index(cands.size())];
        l.beam = {agents_[a].panel, act.sector};
        links.push_back(l);
        out.agents[a].served_ue = l.ue;
      } else {
        Link l{a, false};
        l.child = act.child;
        l.beam = topo_.parent_sector[act.child];
        links.push_back(l);
      }
      out.agents[a].attempted = true;
    }

    // (3) A UE picked by more than one panel decodes nothing from any of them.
    std::vector<int> picks(cfg_.num_ues, 0);
    for (const Link& l : links)
      if (l.is_access) ++picks[l.ue];
    for (Link& l : links)
      if (l.is_access && picks[l.ue] > 1) {
        l.collision = true;
        out.agents[l.agent].collision = true;
        ++out.collisions;
      }

    // (4)-(5) SINR per link against all concurrent beams, then MCS capacity.
    for (Link& l : links) {
      const int rx_node = l.is_access ? -1 : l.child;
      if (cfg_.duplex == DuplexMode::kHd && rx_node >= 0)
        for (const Link& t : links)
          if (agents_[t.agent].node == rx_node)
            throw std::logic_error("half-duplex violation: node transmits while receiving");
      const double signal = power_at_dbm(l, l);
      std::vector<double> interferers;
      for (const Link& t : links) {
        if (&t == &l) continue;
        if (rx_node >= 0 && agents_[t.agent].node == rx_node) continue;  // self-IC (FD)
        interferers.push_back(power_at_dbm(t, l));
      }
      const double noise = l.is_access ? cfg_.ue_noise_dbm : cfg_.node_noise_dbm;
      const double sinr = clamp_sinr_db(sinr_db(signal, interferers, noise));
      if (auto sel = select_mcs(sinr, mcs_)) l.capacity = sel->bits_per_slot;
    }

    // (6) Blockage kills access links outright.
    for (Link& l : links)
      if (l.is_access && access_link_blocked(nodes_[agents_[l.agent].node].pos, ue_pos(l.ue),
                                             blockers_)) {
        l.blocked = true;
        out.agents[l.agent].blocked = true;
        ++out.blocked_links;
      }

    // (7) Relay panels split the start-of-slot buffer equally across all the
    // node's activated beams; the donor is capacity-limited only.
    std::vector<int> active_count(num_nodes, 0);
    for (const Link& l : links) ++active_count[agents_[l.agent].node];
    std::vector<std::int64_t> credit(num_nodes, 0);
    for (Link& l : links) {
      const int node = agents_[l.agent].node;
      const bool failed = l.collision || l.blocked || l.capacity == 0;
      std::int64_t bits = 0;
      if (!failed) {
        if (node == topo_.donor_id) {
          bits = l.capacity;
        } else {
          const std::int64_t share = start_buf[node] / active_count[node];
          bits = std::min(l.capacity, share);
        }
      }
      out.agents[l.agent].bits_sent = bits;

      // (8) Move the bits: out of the source now, into the child effective
      // next slot (credited after all shares were computed from start_buf).
      if (node != topo_.donor_id) buffers_[node] -= bits;
      out.node_tx_bits[node] += bits;
      if (l.is_access) {
        out.ue_bits[l.ue] += bits;
        (node == topo_.donor_id ? out.donor_access_bits : out.relay_access_bits) += bits;
      } else {
        credit[l.child] += bits;
      }
    }
    for (int n = 0; n < num_nodes; ++n) {
      buffers_[n] += credit[n];
      out.node_rx_bits[n] = credit[n];
      out.node_buffer_delta[n] = buffers_[n] - start_buf[n];
      assert(buffers_[n] >= 0);
    }

    // (9) Rewards, next-slot blockage flags, downstream accounting, motion.
    const RewardParams rp{cfg_.rho_bh, cfg_.zeta};
    const std::int64_t cmin = mcs_.min_rate_bits();
    std::vector<char> link_failed(num_agents, 0);
    std::vector<std::int64_t> l_after(num_agents, 0);
    for (const Link& l : links) {
      link_failed[l.agent] = l.collision || l.blocked || l.capacity == 0;
      if (!l.is_access) l_after[l.agent] = buffers_[l.child];
    }
    for (int a = 0; a < num_agents; ++a) {
      const AgentInfo& info = agents_[a];
      AgentOutcome& ao = out.agents[a];
      ao.empty_buffer = info.node != topo_.donor_id && start_buf[info.node] == 0;
      const bool failed = no_target[a] != 0 || link_failed[a] != 0;
      if (cfg_.duplex == DuplexMode::kFd) {
        ao.reward = reward_fd(ao.bits_sent, topo_.hops[info.node], ao.empty_buffer,
                              actions[a].kind, failed, cmin, rp);
      } else {
        const bool in_er = ao.empty_buffer || ao.rx_suppressed;
        ao.reward = reward_hd(ao.bits_sent, topo_.hops[info.node], in_er, actions[a].kind,
                              l_after[a], failed, cmin, rp);
      }
    }

    for (auto& flags : block_flags_) flags.assign(cfg_.num_sectors, 0);
    for (const Link& l : links)
      if (l.is_access)
        block_flags_[l.agent][l.beam.sector] =
            (l.collision || l.blocked || l.capacity == 0) ? 1 : 0;

    prev_down_bits_.assign(num_nodes, 0);
    for (const Link& l : links)
      prev_down_bits_[agents_[l.agent].node] += out.agents[l.agent].bits_sent;

    for (int i = 0; i < cfg_.num_ues; ++i)
      ue_state_[i] = waypoint_step(ue_state_[i], cfg_.slot_s, ue_mob_, ue_rng_[i]);
    for (int i = 0; i < cfg_.num_blockers; ++i)
      blockers_[i].motion =
          waypoint_step(blockers_[i].motion, cfg_.slot_s, blocker_mob_, blocker_rng_[i]);
    ++slot_;

    return {observations(), std::move(out)};
  }

 private:
  void build_sites(std::uint64_t seed) {
    nodes_.clear();
    Node donor;
    donor.id = 0;
    donor.kind = NodeKind::kDonor;
    donor.pos = {cfg_.donor_pos.x, cfg_.donor_pos.y, cfg_.donor_height_m};
    donor.tx_power_dbm = cfg_.donor_tx_dbm;
    donor.panels = make_panels(cfg_.donor_pattern);
    nodes_.push_back(donor);

    const int relays = cfg_.effective_relays();
    for (int r = 0; r < relays; ++r) {
      Node n;
      n.id = 1 + r;
      n.kind = NodeKind::kRelay;
      if (!cfg_.relay_positions.empty()) {
        n.pos = {cfg_.relay_positions[r].x, cfg_.relay_positions[r].y, cfg_.relay_height_m};
      } else {
        Rng place(derive_seed(seed, rng_tag::kPlacement, r));
        n.pos = {place.uniform(0.0, cfg_.area_x_m), place.uniform(0.0, cfg_.area_y_m),
                 cfg_.relay_height_m};
      }
      n.tx_power_dbm = cfg_.relay_tx_dbm;
      n.panels = make_panels(cfg_.relay_pattern);
      nodes_.push_back(n);
    }

    std::vector<int> parent_of(nodes_.size(), 0);
    parent_of[0] = -1;
    if (!cfg_.relay_parents.empty() && !cfg_.no_iab)
      for (int r = 0; r < relays; ++r) parent_of[1 + r] = cfg_.relay_parents[r];
    topo_ = build_topology(nodes_, parent_of);
  }

  std::vector<Panel> make_panels(const AntennaPattern& pattern) const {
    std::vector<Panel> panels;
    for (int p = 0; p < cfg_.num_panels; ++p) {
      Panel panel;
      panel.orientation_rad = norm_angle(2.0 * kPi * p / cfg_.num_panels);
      panel.coverage_rad = kPi;
      panel.num_sectors = cfg_.num_sectors;
      panel.pattern = pattern;
      panels.push_back(panel);
    }
    return panels;
  }

  void build_agents() {
    agents_.clear();
    for (const Node& n : nodes_) {
      for (int p = 0; p < static_cast<int>(n.panels.size()); ++p) {
        AgentInfo a;
        a.node = n.id;
        a.panel = p;
        a.children = topo_.children_of[n.id][p];
        a.num_sectors = cfg_.num_sectors;
        const int blocks = cfg_.duplex == DuplexMode::kHd ? 2 : 1;
        a.obs_dim = 2 * cfg_.num_sectors + blocks * static_cast<int>(a.children.size());
        agents_.push_back(a);
      }
    }
  }

  void validate_actions(const std::vector<AgentAction>& actions) const {
    for (std::size_t a = 0; a < actions.size(); ++a) {
      const AgentAction& act = actions[a];
      if (act.kind == ActionKind::kAccess) {
        if (act.sector < 0 || act.sector >= cfg_.num_sectors)
          throw std::invalid_argument("step: sector out of range for agent " +
                                      std::to_string(a));
      } else if (act.kind == ActionKind::kBackhaul) {
        const auto& kids = agents_[a].children;
        if (std::find(kids.begin(), kids.end(), act.child) == kids.end())
          throw std::invalid_argument("step: child " + std::to_string(act.child) +
                                      " not reachable from agent " + std::to_string(a));
      }
    }
  }

  struct LinkView;  // forward declaration for power_at_dbm's doc only

  // Received power (dBm) at link l's receiver from link t's transmitter,
  // with both beams' directional gains applied to the actual geometry.
  template <typename L>
  double power_at_dbm(const L& t, const L& l) const {
    const Node& src = nodes_[agents_[t.agent].node];
    const Panel& tx_panel = src.panels[t.beam.panel];
    const Vec3 tx = src.pos;
    const Vec3 rx = l.is_access ? ue_pos(l.ue) : nodes_[l.child].pos;

    const double ground = distance(tx.xy(), rx.xy());
    const double d3 = distance(tx, rx);
    const double el = std::atan2(rx.z - tx.z, ground);
    const double az_off = norm_angle(azimuth(tx.xy(), rx.xy()) -
                                     tx_panel.sector_direction(t.beam.sector));
    double p = src.tx_power_dbm + antenna_gain_db(tx_panel.pattern, el, az_off) -
               path_loss_db(d3, cfg_.path_loss);
    if (!l.is_access) {
      const Node& dst = nodes_[l.child];
      const Panel& rx_panel = dst.panels[topo_.rx_sector[l.child].panel];
      const double el_r = std::atan2(tx.z - rx.z, ground);
      const double az_r = norm_angle(
          azimuth(rx.xy(), tx.xy()) -
          rx_panel.sector_direction(topo_.rx_sector[l.child].sector));
      p += antenna_gain_db(rx_panel.pattern, el_r, az_r);
    }
    return p;  // UE receivers are omnidirectional (0 dBi)
  }

  ExperimentConfig cfg_;
  std::uint64_t seed_ = 0;
  long slot_ = 0;

  std::vector<Node> nodes_;
  Topology topo_;
  std::vector<AgentInfo> agents_;
  McsTable mcs_{ExperimentConfig::default_mcs()};

  MobilityConfig ue_mob_, blocker_mob_;
  std::vector<WaypointState> ue_state_;
  std::vector<Blocker> blockers_;
  std::vector<Rng> ue_rng_, blocker_rng_;
  Rng pick_rng_{0};

  std::vector<std::int64_t> buffers_;
  std::vector<std::vector<std::uint8_t>> block_flags_;  // [agent][sector]
  std::vector<std::int64_t> prev_down_bits_;            // [node]
};

}  // namespace iabsim
