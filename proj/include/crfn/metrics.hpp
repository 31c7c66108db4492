#pragma once

#include <span>
#include <string>
#include <vector>

#include "crfn/agent.hpp"
#include "crfn/gridworld.hpp"

namespace crfn {

// One finished episode, the unit all three metrics consume.
struct EpisodeRecord {
  bool success = false;     // S_i
  double geodesic_len = 0;  // l_i
  double path_len = 0;      // p_i
  int action_count = 0;     // a_i
  std::string scenario_id;
  std::string error;  // non-empty when the episode failed with an error
};

struct MetricsReport {
  double sr = 0;
  double spl = 0;
  double sna = 0;
  int n = 0;
};

// Success rate: mean of S_i.
double sr(std::span<const EpisodeRecord> records);
// Success weighted by path length: mean of S_i * l_i / max(p_i, l_i);
// a success that starts on the goal (l = p = 0) contributes 1.
double spl(std::span<const EpisodeRecord> records);
// Success weighted by action count: mean of S_i * l_i / a_i.
double sna(std::span<const EpisodeRecord> records);

MetricsReport compute_report(std::span<const EpisodeRecord> records);

struct Scenario {
  std::string id;
  EpisodeSpec spec;
};

struct Trajectory {
  std::string scenario_id;
  std::string map_name;
  Pose start;
  Cell goal;
  std::vector<Cell> agent_path;     // pose cells, start included
  std::vector<Cell> geodesic_path;  // tie-break shortest path
};

struct EvalResult {
  MetricsReport report;
  std::vector<EpisodeRecord> records;
  std::vector<Trajectory> trajectories;
};

// Runs every scenario once; an env error inside one scenario marks that
// episode failed-with-error instead of aborting the sweep.
EvalResult evaluate(Agent& agent, const std::vector<Scenario>& scenarios);

void write_records_jsonl(const std::vector<EpisodeRecord>& records,
                         const std::string& path);
std::vector<EpisodeRecord> read_records_jsonl(const std::string& path);
void write_trajectories_json(const std::vector<Trajectory>& trajectories,
                             const std::string& path);

}  // namespace crfn
