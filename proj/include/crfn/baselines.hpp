#pragma once

#include <optional>
#include <vector>

#include "crfn/agent.hpp"
#include "crfn/gridworld.hpp"

namespace crfn {

struct DoAEstimate {
  Heading bearing = Heading::N;  // world frame
  double confidence = 0;         // min(1, total received level)
};

// Direction of arrival from the interaural level difference: lateral index
// (R-L)/(R+L) against a dead zone of 0.2. A two-channel level cue cannot
// separate front from back, so a source dead behind reads as "ahead".
DoAEstimate estimate_doa(const Observation& obs, Heading heading);

class RandomAgent : public Agent {
 public:
  void reset(const EpisodeSpec& spec) override;
  Action act(const Observation& obs, const Pose& pose) override;

 private:
  std::optional<Rng> rng_;
};

// Hierarchical baseline: estimate DoA, walk to a waypoint a fixed number of
// cells along it, re-estimate on arrival or blockage; stop on near-source
// loudness in both channels.
class DirectionFollower : public Agent {
 public:
  explicit DirectionFollower(int waypoint_distance = 3)
      : waypoint_distance_(waypoint_distance) {}
  void reset(const EpisodeSpec& spec) override;
  Action act(const Observation& obs, const Pose& pose) override;

 private:
  int waypoint_distance_;
  GridMap map_;
  double stop_threshold_ = 0;
  std::optional<Cell> waypoint_;
};

enum class CellStatus : uint8_t { Unknown = 0, Free = 1, Blocked = 2 };

// What the frontier agent has seen so far.
struct ExplorationMap {
  int width = 0;
  int height = 0;
  std::vector<CellStatus> status;

  void init(int w, int h) {
    width = w;
    height = h;
    status.assign(static_cast<size_t>(w) * h, CellStatus::Unknown);
  }
  CellStatus at(int x, int y) const {
    return status[static_cast<size_t>(y) * width + x];
  }
  void set(int x, int y, CellStatus s) {
    status[static_cast<size_t>(y) * width + x] = s;
  }
  bool free_at(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height &&
           at(x, y) == CellStatus::Free;
  }
  // Known-free cells bordering unknown space.
  std::vector<Cell> frontier() const;
};

// Integrates the depth fan into an ExplorationMap (cells before the hit are
// free, the hit cell is blocked; a capped ray leaves the far cell unknown).
void integrate_rays(ExplorationMap& em, const GridMap& map_bounds,
                    const Pose& pose, const std::vector<double>& visual,
                    int range = kVisualRange);

// Hierarchical baseline steering to the frontier cell nearest the DoA ray,
// planning over explored-free space only.
class FrontierAgent : public Agent {
 public:
  void reset(const EpisodeSpec& spec) override;
  Action act(const Observation& obs, const Pose& pose) override;

  const ExplorationMap& exploration() const { return exploration_; }
  int wander_steps() const { return wander_steps_; }

 private:
  Action wander();

  GridMap map_;
  ExplorationMap exploration_;
  double stop_threshold_ = 0;
  std::optional<Rng> rng_;
  int wander_steps_ = 0;
};

}  // namespace crfn
