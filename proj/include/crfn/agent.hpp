#pragma once

#include "crfn/gridworld.hpp"

namespace crfn {

// Anything that can drive an episode: the learned policy or a scripted
// baseline. Scripted agents receive the pose (map-frame odometry); the
// policy ignores it.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset(const EpisodeSpec& spec) = 0;
  virtual Action act(const Observation& obs, const Pose& pose) = 0;
};

}  // namespace crfn
