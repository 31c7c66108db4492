#include "crfn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

namespace crfn {

namespace {

constexpr double kLateralDeadZone = 0.2;
constexpr double kStopSafety = 0.9;

double row_sum(const Observation& obs, int row) {
  const auto begin = obs.audio.begin() + row * obs.freq_bins;
  return std::accumulate(begin, begin + obs.freq_bins, 0.0);
}

// Near-source loudness: at distance zero each channel carries half the
// spectrum, so threshold at 0.9 * 0.5 * |spectrum|_1.
double stop_threshold_for(const SoundSignature& sig) {
  const double l1 =
      std::accumulate(sig.spectrum.begin(), sig.spectrum.end(), 0.0);
  return kStopSafety * 0.5 * l1;
}

bool loud_enough_to_stop(const Observation& obs, double threshold) {
  return row_sum(obs, 0) > threshold && row_sum(obs, 1) > threshold;
}

// Minimal-rotation turn from `heading` toward `target`; 180 degrees turns
// right.
Action turn_toward(Heading heading, Heading target) {
  const int diff = (static_cast<int>(target) - static_cast<int>(heading) + 4) % 4;
  return diff == 3 ? Action::TurnLeft : Action::TurnRight;
}

}  // namespace

DoAEstimate estimate_doa(const Observation& obs, Heading heading) {
  const double left = row_sum(obs, 0);
  const double right = row_sum(obs, 1);
  const double lateral = (right - left) / (right + left + 1e-9);
  DoAEstimate out;
  if (lateral > kLateralDeadZone) {
    out.bearing = rotate_right(heading);
  } else if (lateral < -kLateralDeadZone) {
    out.bearing = rotate_left(heading);
  } else {
    out.bearing = heading;
  }
  out.confidence = std::min(1.0, left + right);
  return out;
}

void RandomAgent::reset(const EpisodeSpec& spec) {
  rng_.emplace(derive_seed(spec.seed, 0x7a4dULL));
}

Action RandomAgent::act(const Observation&, const Pose&) {
  return static_cast<Action>(rng_->uniform_int(kNumActions));
}

void DirectionFollower::reset(const EpisodeSpec& spec) {
  map_ = spec.map;
  stop_threshold_ = stop_threshold_for(spec.signature);
  waypoint_.reset();
}

Action DirectionFollower::act(const Observation& obs, const Pose& pose) {
  if (loud_enough_to_stop(obs, stop_threshold_)) return Action::Stop;

  if (waypoint_ && pose.cell() == *waypoint_) waypoint_.reset();

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!waypoint_) {
      const Heading bearing = estimate_doa(obs, pose.heading).bearing;
      // farthest free cell along the bearing within the waypoint distance
      Cell wp = pose.cell();
      for (int k = 1; k <= waypoint_distance_; ++k) {
        const int nx = pose.x + k * heading_dx(bearing);
        const int ny = pose.y + k * heading_dy(bearing);
        if (!map_.free_at(nx, ny)) break;
        wp = {nx, ny};
      }
      if (wp == pose.cell()) break;  // blocked immediately
      waypoint_ = wp;
    }

    // greedy walk: turn toward the waypoint, forward when facing and free
    const int dx = waypoint_->x - pose.x;
    const int dy = waypoint_->y - pose.y;
    std::vector<Heading> desired;
    const Heading hx = dx > 0 ? Heading::E : Heading::W;
    const Heading hy = dy > 0 ? Heading::S : Heading::N;
    if (std::abs(dx) >= std::abs(dy)) {
      if (dx != 0) desired.push_back(hx);
      if (dy != 0) desired.push_back(hy);
    } else {
      if (dy != 0) desired.push_back(hy);
      if (dx != 0) desired.push_back(hx);
    }

    for (Heading want : desired) {
      const int nx = pose.x + heading_dx(want);
      const int ny = pose.y + heading_dy(want);
      if (!map_.free_at(nx, ny)) continue;
      if (want == pose.heading) return Action::Forward;
      return turn_toward(pose.heading, want);
    }
    waypoint_.reset();  // every useful direction blocked: re-estimate
  }
  return Action::TurnRight;
}

std::vector<Cell> ExplorationMap::frontier() const {
  std::vector<Cell> out;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (at(x, y) != CellStatus::Free) continue;
      for (int h = 0; h < 4; ++h) {
        const int nx = x + heading_dx(static_cast<Heading>(h));
        const int ny = y + heading_dy(static_cast<Heading>(h));
        if (nx >= 0 && nx < width && ny >= 0 && ny < height &&
            at(nx, ny) == CellStatus::Unknown) {
          out.push_back({x, y});
          break;
        }
      }
    }
  return out;
}

void integrate_rays(ExplorationMap& em, const GridMap& map_bounds,
                    const Pose& pose, const std::vector<double>& visual,
                    int range) {
  const int rays = static_cast<int>(visual.size());
  const double base =
      std::atan2(heading_dy(pose.heading), heading_dx(pose.heading));
  em.set(pose.x, pose.y, CellStatus::Free);
  for (int r = 0; r < rays; ++r) {
    const double offset =
        rays == 1 ? 0.0
                  : (-std::numbers::pi / 4.0 +
                     (std::numbers::pi / 2.0) * r / (rays - 1));
    const double a = base + offset;
    const int depth = static_cast<int>(std::llround(visual[static_cast<size_t>(r)] * range));
    for (int k = 1; k < depth; ++k) {
      const int cx = static_cast<int>(std::llround(pose.x + k * std::cos(a)));
      const int cy = static_cast<int>(std::llround(pose.y + k * std::sin(a)));
      if (map_bounds.in_bounds(cx, cy)) em.set(cx, cy, CellStatus::Free);
    }
    // a full-range reading is the cap: the far cell stays unknown
    if (depth < range) {
      const int cx = static_cast<int>(std::llround(pose.x + depth * std::cos(a)));
      const int cy = static_cast<int>(std::llround(pose.y + depth * std::sin(a)));
      if (map_bounds.in_bounds(cx, cy)) em.set(cx, cy, CellStatus::Blocked);
    }
  }
}

void FrontierAgent::reset(const EpisodeSpec& spec) {
  map_ = spec.map;
  exploration_.init(spec.map.width, spec.map.height);
  stop_threshold_ = stop_threshold_for(spec.signature);
  rng_.emplace(derive_seed(spec.seed, 0xf407ULL));
  wander_steps_ = 0;
}

Action FrontierAgent::wander() {
  ++wander_steps_;
  return static_cast<Action>(rng_->uniform_int(3));  // anything but Stop
}

Action FrontierAgent::act(const Observation& obs, const Pose& pose) {
  integrate_rays(exploration_, map_, pose, obs.visual);
  if (loud_enough_to_stop(obs, stop_threshold_)) return Action::Stop;

  const std::vector<Cell> frontier = exploration_.frontier();
  if (frontier.empty()) return wander();
  auto is_frontier = [&](Cell c) {
    return std::find(frontier.begin(), frontier.end(), c) != frontier.end();
  };

  // waypoint: first frontier cell within one cell of the DoA ray
  const Heading bearing = estimate_doa(obs, pose.heading).bearing;
  std::optional<Cell> waypoint;
  for (int k = 1; map_.in_bounds(pose.x + k * heading_dx(bearing),
                                 pose.y + k * heading_dy(bearing));
       ++k) {
    const Cell rc{pose.x + k * heading_dx(bearing),
                  pose.y + k * heading_dy(bearing)};
    if (is_frontier(rc)) {
      waypoint = rc;
      break;
    }
    bool found = false;
    for (int h = 0; h < 4 && !found; ++h) {
      const Cell nb{rc.x + heading_dx(static_cast<Heading>(h)),
                    rc.y + heading_dy(static_cast<Heading>(h))};
      if (nb.x >= 0 && nb.x < map_.width && nb.y >= 0 && nb.y < map_.height &&
          is_frontier(nb)) {
        waypoint = nb;
        found = true;
      }
    }
    if (found) break;
  }

  // plan over explored-free cells; BFS from the pose doubles as the
  // nearest-frontier fallback
  std::vector<int> dist(static_cast<size_t>(map_.width) * map_.height, -1);
  std::vector<int> back(static_cast<size_t>(map_.width) * map_.height, -1);
  auto idx = [&](Cell c) { return static_cast<size_t>(c.y) * map_.width + c.x; };
  std::deque<Cell> queue;
  dist[idx(pose.cell())] = 0;
  queue.push_back(pose.cell());
  std::optional<Cell> nearest_frontier;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (!nearest_frontier && !(c == pose.cell()) && is_frontier(c))
      nearest_frontier = c;
    for (int h = 0; h < 4; ++h) {
      const Cell nc{c.x + heading_dx(static_cast<Heading>(h)),
                    c.y + heading_dy(static_cast<Heading>(h))};
      if (!exploration_.free_at(nc.x, nc.y) || dist[idx(nc)] != -1) continue;
      dist[idx(nc)] = dist[idx(c)] + 1;
      back[idx(nc)] = static_cast<int>(idx(c));
      queue.push_back(nc);
    }
  }

  if (!waypoint || dist[idx(*waypoint)] == -1 || *waypoint == pose.cell())
    waypoint = nearest_frontier;
  if (!waypoint || dist[idx(*waypoint)] == -1) return wander();

  // walk the BFS parent chain back to the first step
  Cell step = *waypoint;
  while (back[idx(step)] != static_cast<int>(idx(pose.cell()))) {
    const int b = back[idx(step)];
    if (b < 0) return wander();
    step = Cell{b % map_.width, b / map_.width};
  }
  for (int h = 0; h < 4; ++h) {
    const Heading hd = static_cast<Heading>(h);
    if (Cell{pose.x + heading_dx(hd), pose.y + heading_dy(hd)} == step) {
      if (hd == pose.heading) return Action::Forward;
      return turn_toward(pose.heading, hd);
    }
  }
  return wander();
}

}  // namespace crfn
