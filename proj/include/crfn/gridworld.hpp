#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crfn/errors.hpp"
#include "crfn/rng.hpp"

namespace crfn {

enum class Heading : int { N = 0, E = 1, S = 2, W = 3 };

char heading_char(Heading h);
Heading heading_from_char(char c);
Heading rotate_left(Heading h);
Heading rotate_right(Heading h);
// Unit step for a heading; y grows downward (text row order).
int heading_dx(Heading h);
int heading_dy(Heading h);

enum class Action : int { Forward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };
constexpr int kNumActions = 4;
const char* action_name(Action a);

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct Pose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::E;
  Cell cell() const { return {x, y}; }
};

// Occupancy grid; out-of-bounds counts as blocked.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> cells;  // row-major, 0 = free, 1 = blocked
  std::string name;

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool free_at(int x, int y) const {
    return in_bounds(x, y) && cells[static_cast<size_t>(y) * width + x] == 0;
  }
  int free_count() const;
};

struct ParsedMap {
  GridMap map;
  std::optional<Cell> start;
  std::optional<Cell> goal;
};

// ASCII grid: '#' blocked, '.'/'S'/'G' free; rectangular.
ParsedMap parse_map(const std::string& text, const std::string& name = "");
ParsedMap load_map(const std::string& path);

constexpr int kUnreachable = -1;

// BFS distance (in cells) from every free cell to `to`; kUnreachable where
// no path exists, blocked cells included.
std::vector<int> distance_field(const GridMap& map, Cell to);

struct GeodesicResult {
  int distance = kUnreachable;  // kUnreachable when no path
  std::optional<Heading> first_step;  // empty when from == to or unreachable
};

// Shortest-path length and the first move along one shortest path
// (tie-break: N over E over S over W).
GeodesicResult geodesic(const GridMap& map, Cell from, Cell to);

// Cell list of the tie-break shortest path, endpoints included.
std::vector<Cell> shortest_path(const GridMap& map, Cell from, Cell to);

struct SoundSignature {
  std::string id;
  std::vector<double> spectrum;  // nonnegative, L2-normalized

  void validate() const;
};

struct SoundLibrary {
  std::vector<SoundSignature> train;
  std::vector<SoundSignature> val;
  std::vector<SoundSignature> test;

  void validate() const;  // splits pairwise disjoint by id
  const SoundSignature& by_id(const std::string& id) const;
};

// Reproducible library: `counts` signatures per split, F-bin spectra.
SoundLibrary make_sound_library(uint64_t seed, int n_train = 8, int n_val = 2,
                                int n_test = 4, int freq_bins = 16);
SoundLibrary load_sound_library(const std::string& path);
void save_sound_library(const SoundLibrary& lib, const std::string& path);

struct EpisodeSpec {
  GridMap map;
  Pose start;
  Cell goal;
  SoundSignature signature;
  int max_steps = 500;
  double noise_std = 0.01;
  uint64_t seed = 0;
};

struct Observation {
  std::vector<double> visual;  // R normalized ray depths in [0,1]
  std::vector<double> audio;   // 2 x F row-major: left row then right row
  int freq_bins = 0;

  double audio_at(int row, int f) const { return audio[row * freq_bins + f]; }
};

struct StepInfo {
  double geodesic_distance = 0.0;
  bool success = false;
  bool collided = false;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

inline constexpr int kDefaultRays = 9;
inline constexpr int kVisualRange = 10;

// Egocentric depth fan: R rays over 90 degrees centered on the heading,
// each entry = cells to the first blocked cell, capped at D, divided by D.
std::vector<double> render_visual(const GridMap& map, const Pose& pose,
                                  int rays = kDefaultRays,
                                  int range = kVisualRange);

// Binaural received spectrum: geometric attenuation 1/(1+d) over the
// geodesic distance, sine-law panning on the bearing of the geodesic first
// step relative to the heading, additive clamped Gaussian noise.
std::vector<double> render_audio(const GridMap& map, const Pose& pose,
                                 Cell goal, const SoundSignature& sig,
                                 double noise_std, Rng& rng);

// One navigation episode. Reward: (d_prev - d_new) - 0.01 + 10 on success;
// success means Stop executed on the goal cell.
class GridEnv {
 public:
  Observation reset(const EpisodeSpec& spec);
  StepResult step(Action action);

  bool active() const { return active_; }
  bool succeeded() const { return success_; }
  const Pose& pose() const { return pose_; }
  const GridMap& map() const { return spec_.map; }
  const EpisodeSpec& spec() const { return spec_; }
  int action_count() const { return action_count_; }  // a_i
  int path_cells() const { return path_cells_; }      // p_i
  int initial_distance() const { return initial_distance_; }  // l_i
  int current_distance() const;

 private:
  Observation observe();

  EpisodeSpec spec_;
  std::vector<int> dist_field_;
  Pose pose_;
  std::optional<Rng> rng_;
  bool active_ = false;
  bool success_ = false;
  int action_count_ = 0;
  int path_cells_ = 0;
  int initial_distance_ = 0;
};

}  // namespace crfn
