#pragma once

// Power on/off rail timelines across mode transitions. Two sources driving
// one net at the same time is a transient-contention risk; a protection
// diode is only removable when no such interval exists.

#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "railplan/core.hpp"

namespace railplan {

enum class SourceChip { DriverChip, PowerChip };

inline const char* to_string(SourceChip s) {
  return s == SourceChip::DriverChip ? "DriverChip" : "PowerChip";
}

inline SourceChip source_from_string(const std::string& s) {
  if (s == "DriverChip") return SourceChip::DriverChip;
  if (s == "PowerChip") return SourceChip::PowerChip;
  throw InputError("unknown source chip '" + s + "'");
}

enum class RailAction { On, Off };

struct RailEvent {
  double t_ms = 0.0;
  std::string rail;
  RailAction action = RailAction::On;
  SourceChip source = SourceChip::DriverChip;
};

// A rail drives the net named by the suffix after its last underscore
// ("Idle_PVEE" and "Normal_PVEE" both drive net "PVEE").
inline std::string net_of(const std::string& rail) {
  size_t us = rail.rfind('_');
  return us == std::string::npos ? rail : rail.substr(us + 1);
}

struct RailTimeline {
  std::vector<RailEvent> events;

  // times non-negative, sorted (ties Off-before-On), per-rail alternation
  // starting with On
  void validate() const {
    std::map<std::string, RailAction> last;
    for (size_t i = 0; i < events.size(); ++i) {
      const RailEvent& e = events[i];
      if (e.t_ms < 0.0) throw InputError("timeline: negative event time");
      if (i > 0) {
        const RailEvent& p = events[i - 1];
        if (e.t_ms < p.t_ms)
          throw InputError("timeline: events not sorted by time");
        if (e.t_ms == p.t_ms && p.action == RailAction::On && e.action == RailAction::Off)
          throw InputError("timeline: ties must order Off before On");
      }
      auto it = last.find(e.rail);
      if (it == last.end()) {
        if (e.action != RailAction::On)
          throw InputError("timeline: rail " + e.rail + " turns Off before any On");
      } else if (it->second == e.action) {
        throw InputError("timeline: rail " + e.rail + " does not alternate On/Off");
      }
      last[e.rail] = e.action;
    }
  }
};

struct Interval {
  double start_ms = 0.0;
  double end_ms = 0.0;
};

// Maximal intervals during which two different sources simultaneously drive
// `net`. Drive intervals are closed; a shared endpoint counts as a zero-width
// overlap and is reported. Empty result means the sequence is safe.
inline std::vector<Interval> detect_contention(const RailTimeline& timeline,
                                               const std::string& net) {
  timeline.validate();
  const double inf = std::numeric_limits<double>::infinity();

  struct Drive {
    double start, end;
    SourceChip source;
  };
  std::vector<Drive> drives;
  std::map<std::string, size_t> open;  // rail -> index into drives
  bool net_seen = false;

  for (const RailEvent& e : timeline.events) {
    if (net_of(e.rail) != net) continue;
    net_seen = true;
    if (e.action == RailAction::On) {
      open[e.rail] = drives.size();
      drives.push_back({e.t_ms, inf, e.source});
    } else {
      drives[open.at(e.rail)].end = e.t_ms;
      open.erase(e.rail);
    }
  }
  // an empty timeline is vacuously safe; a populated one that never touches
  // the net indicates a misspelled net name
  if (!net_seen && !timeline.events.empty())
    throw InputError("timeline has no events on net '" + net + "'");

  std::vector<Interval> overlaps;
  for (size_t i = 0; i < drives.size(); ++i) {
    for (size_t j = i + 1; j < drives.size(); ++j) {
      if (drives[i].source == drives[j].source) continue;
      double start = std::max(drives[i].start, drives[j].start);
      double end = std::min(drives[i].end, drives[j].end);
      if (start <= end) overlaps.push_back({start, end});
    }
  }
  std::sort(overlaps.begin(), overlaps.end(),
            [](const Interval& a, const Interval& b) {
              return a.start_ms != b.start_ms ? a.start_ms < b.start_ms
                                              : a.end_ms < b.end_ms;
            });

  // merge touching/overlapping intervals into maximal ones
  std::vector<Interval> merged;
  for (const Interval& iv : overlaps) {
    if (!merged.empty() && iv.start_ms <= merged.back().end_ms)
      merged.back().end_ms = std::max(merged.back().end_ms, iv.end_ms);
    else
      merged.push_back(iv);
  }
  return merged;
}

// Outcome of the protection-diode analysis. When the diode stays, the
// downstream rail span must grow by its forward drop.
struct DiodeDecision {
  bool required = false;
  double vf_v = 0.0;  // forward drop when required

  static DiodeDecision removable() { return {false, 0.0}; }
  static DiodeDecision with_diode(double vf) { return {true, vf}; }
};

// The "turn the earlier supply off slightly before the later one turns on"
// fix; exposed so sequence repairs can be generated, default 2 ms lead.
inline constexpr double kRecommendedOffLeadMs = 2.0;

inline DiodeDecision diode_decision(const RailTimeline& timeline, const std::string& net,
                                    double vf_v) {
  if (!(vf_v > 0.0)) throw InputError("diode forward drop must be > 0 V");
  return detect_contention(timeline, net).empty() ? DiodeDecision::removable()
                                                  : DiodeDecision::with_diode(vf_v);
}

}  // namespace railplan
