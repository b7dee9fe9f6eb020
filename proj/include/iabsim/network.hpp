#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "iabsim/channel.hpp"
#include "iabsim/geometry.hpp"

namespace iabsim {

enum class NodeKind { kDonor, kRelay };

// One antenna panel. Sectors split the coverage arc into equal half-open
// slices [dir - w/2, dir + w/2); panels may overlap on purpose, which is what
// makes intra-node beam collisions possible in the first place.
struct Panel {
  double orientation_rad = 0.0;     // azimuth the panel faces
  double coverage_rad = kPi;        // total arc served by the panel
  int num_sectors = 0;
  AntennaPattern pattern;

  double sector_width() const { return coverage_rad / num_sectors; }

  // Azimuth of the beam serving sector s (center of the slice).
  double sector_direction(int s) const {
    return norm_angle(orientation_rad - coverage_rad / 2.0 +
                      (s + 0.5) * sector_width());
  }
};

// A fixed radio site: the donor or a relay. User terminals are not Nodes;
// they carry no panels and live in the environment as mobile endpoints.
struct Node {
  int id = -1;
  NodeKind kind = NodeKind::kRelay;
  Vec3 pos;
  std::vector<Panel> panels;
  double tx_power_dbm = 0.0;
};

// True when `target` falls in sector s of the panel as seen from `origin`.
inline bool sector_covers(const Panel& panel, int sector, const Vec2& origin,
                          const Vec2& target) {
  const double w = panel.sector_width();
  const double off = norm_angle(azimuth(origin, target) - panel.sector_direction(sector));
  return off >= -w / 2.0 && off < w / 2.0;
}

struct SectorRef {
  int panel = -1;
  int sector = -1;
  bool operator==(const SectorRef&) const = default;
};

// The (panel, sector) of `owner` whose beam direction lies closest to the
// azimuth towards `target`; ties break towards the lowest (panel, sector).
inline SectorRef associate_backhaul_sector(const Node& owner, const Vec3& target) {
  if (owner.panels.empty())
    throw std::invalid_argument("associate_backhaul_sector: node has no panels");
  const double az = azimuth(owner.pos.xy(), target.xy());
  SectorRef best;
  double best_off = 0.0;
  for (int p = 0; p < static_cast<int>(owner.panels.size()); ++p) {
    for (int s = 0; s < owner.panels[p].num_sectors; ++s) {
      const double off = std::abs(norm_angle(az - owner.panels[p].sector_direction(s)));
      if (best.panel < 0 || off < best_off) {
        best = {p, s};
        best_off = off;
      }
    }
  }
  return best;
}

// Downlink tree rooted at the donor. Everything is indexed by node id, which
// build_topology requires to be dense (0..n-1).
struct Topology {
  std::vector<int> parent;                 // -1 for the donor
  std::vector<SectorRef> parent_sector;    // beam at the parent towards child
  std::vector<SectorRef> rx_sector;        // beam at the child towards parent
  std::vector<int> hops;                   // donor = 0
  // children_of[node][panel] -> child ids reachable through that panel,
  // ascending. This is the per-panel backhaul action set.
  std::vector<std::vector<std::vector<int>>> children_of;

  int donor_id = -1;

  std::size_t num_nodes() const { return parent.size(); }
};

// Validates and wires the backhaul tree. `parent_of[i]` gives the parent of
// node i and must be -1 exactly for the single donor.
inline Topology build_topology(const std::vector<Node>& nodes,
                               const std::vector<int>& parent_of) {
  const int n = static_cast<int>(nodes.size());
  if (parent_of.size() != nodes.size())
    throw std::invalid_argument("build_topology: parent list size mismatch");

  Topology topo;
  topo.parent = parent_of;
  topo.parent_sector.resize(n);
  topo.rx_sector.resize(n);
  topo.hops.assign(n, -1);
  topo.children_of.resize(n);

  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i)
      throw std::invalid_argument("build_topology: node ids must be 0..n-1 in order");
    const bool is_donor = nodes[i].kind == NodeKind::kDonor;
    if (is_donor) {
      if (topo.donor_id >= 0)
        throw std::invalid_argument("build_topology: more than one donor");
      topo.donor_id = i;
      if (parent_of[i] != -1)
        throw std::invalid_argument("build_topology: donor cannot have a parent");
    } else if (parent_of[i] < 0 || parent_of[i] >= n || parent_of[i] == i) {
      throw std::invalid_argument("build_topology: relay " + std::to_string(i) +
                                  " needs a valid parent");
    }
    topo.children_of[i].resize(nodes[i].panels.size());
  }
  if (topo.donor_id < 0) throw std::invalid_argument("build_topology: no donor");

  // Hop counts; walking up must reach the donor within n steps or there is a
  // cycle somewhere.
  for (int i = 0; i < n; ++i) {
    int cur = i, steps = 0;
    while (cur != topo.donor_id) {
      cur = parent_of[cur];
      if (++steps > n)
        throw std::invalid_argument("build_topology: cycle through node " +
                                    std::to_string(i));
    }
    topo.hops[i] = steps;
  }

  for (int i = 0; i < n; ++i) {
    if (i == topo.donor_id) continue;
    const Node& parent = nodes[parent_of[i]];
    topo.parent_sector[i] = associate_backhaul_sector(parent, nodes[i].pos);
    topo.rx_sector[i] = associate_backhaul_sector(nodes[i], parent.pos);
    topo.children_of[parent_of[i]][topo.parent_sector[i].panel].push_back(i);
  }
  return topo;
}

}  // namespace iabsim
