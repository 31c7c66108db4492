#include "crfn/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace crfn {

char heading_char(Heading h) { return "NESW"[static_cast<int>(h)]; }

Heading heading_from_char(char c) {
  switch (c) {
    case 'N': return Heading::N;
    case 'E': return Heading::E;
    case 'S': return Heading::S;
    case 'W': return Heading::W;
  }
  throw DataError(std::string("unknown heading '") + c + "'");
}

Heading rotate_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading rotate_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

int heading_dx(Heading h) {
  switch (h) {
    case Heading::E: return 1;
    case Heading::W: return -1;
    default: return 0;
  }
}

int heading_dy(Heading h) {
  switch (h) {
    case Heading::N: return -1;
    case Heading::S: return 1;
    default: return 0;
  }
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "Forward";
    case Action::TurnLeft: return "TurnLeft";
    case Action::TurnRight: return "TurnRight";
    case Action::Stop: return "Stop";
  }
  return "?";
}

int GridMap::free_count() const {
  return static_cast<int>(std::count(cells.begin(), cells.end(), 0));
}

ParsedMap parse_map(const std::string& text, const std::string& name) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw DataError("parse_map: empty map text");

  ParsedMap out;
  out.map.name = name;
  out.map.height = static_cast<int>(rows.size());
  out.map.width = static_cast<int>(rows[0].size());
  out.map.cells.assign(static_cast<size_t>(out.map.width) * out.map.height, 0);

  for (int y = 0; y < out.map.height; ++y) {
    if (static_cast<int>(rows[y].size()) != out.map.width) {
      throw DataError("parse_map: ragged row " + std::to_string(y) +
                      " (expected width " + std::to_string(out.map.width) +
                      ", got " + std::to_string(rows[y].size()) + ")");
    }
    for (int x = 0; x < out.map.width; ++x) {
      const char c = rows[y][static_cast<size_t>(x)];
      switch (c) {
        case '#':
          out.map.cells[static_cast<size_t>(y) * out.map.width + x] = 1;
          break;
        case '.':
          break;
        case 'S':
          out.start = Cell{x, y};
          break;
        case 'G':
          out.goal = Cell{x, y};
          break;
        default:
          throw DataError(std::string("parse_map: unknown character '") + c +
                          "' at row " + std::to_string(y) + ", col " +
                          std::to_string(x));
      }
    }
  }
  return out;
}

ParsedMap load_map(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("load_map: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_map(ss.str(), path);
}

std::vector<int> distance_field(const GridMap& map, Cell to) {
  if (!map.free_at(to.x, to.y))
    throw ContractError("distance_field: target cell is blocked");
  std::vector<int> dist(static_cast<size_t>(map.width) * map.height,
                        kUnreachable);
  std::deque<Cell> queue;
  dist[static_cast<size_t>(to.y) * map.width + to.x] = 0;
  queue.push_back(to);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int base = dist[static_cast<size_t>(c.y) * map.width + c.x];
    for (int h = 0; h < 4; ++h) {
      const int nx = c.x + heading_dx(static_cast<Heading>(h));
      const int ny = c.y + heading_dy(static_cast<Heading>(h));
      if (!map.free_at(nx, ny)) continue;
      int& d = dist[static_cast<size_t>(ny) * map.width + nx];
      if (d == kUnreachable) {
        d = base + 1;
        queue.push_back(Cell{nx, ny});
      }
    }
  }
  return dist;
}

namespace {

GeodesicResult geodesic_from_field(const GridMap& map,
                                   const std::vector<int>& field, Cell from) {
  GeodesicResult out;
  out.distance = field[static_cast<size_t>(from.y) * map.width + from.x];
  if (out.distance == kUnreachable || out.distance == 0) return out;
  // first move of a shortest path; ties resolved N > E > S > W
  for (int h = 0; h < 4; ++h) {
    const Heading hd = static_cast<Heading>(h);
    const int nx = from.x + heading_dx(hd);
    const int ny = from.y + heading_dy(hd);
    if (!map.free_at(nx, ny)) continue;
    if (field[static_cast<size_t>(ny) * map.width + nx] == out.distance - 1) {
      out.first_step = hd;
      break;
    }
  }
  return out;
}

}  // namespace

GeodesicResult geodesic(const GridMap& map, Cell from, Cell to) {
  if (!map.free_at(from.x, from.y))
    throw ContractError("geodesic: source cell is blocked");
  return geodesic_from_field(map, distance_field(map, to), from);
}

std::vector<Cell> shortest_path(const GridMap& map, Cell from, Cell to) {
  const auto field = distance_field(map, to);
  if (!map.free_at(from.x, from.y))
    throw ContractError("shortest_path: source cell is blocked");
  if (field[static_cast<size_t>(from.y) * map.width + from.x] == kUnreachable)
    return {};
  std::vector<Cell> path{from};
  Cell cur = from;
  while (!(cur == to)) {
    const auto g = geodesic_from_field(map, field, cur);
    const Heading h = *g.first_step;
    cur = Cell{cur.x + heading_dx(h), cur.y + heading_dy(h)};
    path.push_back(cur);
  }
  return path;
}

void SoundSignature::validate() const {
  double norm2 = 0.0;
  for (double v : spectrum) {
    if (v < 0.0)
      throw DataError("sound '" + id + "': negative spectrum entry");
    norm2 += v * v;
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9)
    throw DataError("sound '" + id + "': spectrum is not L2-normalized");
}

void SoundLibrary::validate() const {
  std::set<std::string> seen;
  auto check = [&](const std::vector<SoundSignature>& split) {
    for (const auto& s : split) {
      s.validate();
      if (!seen.insert(s.id).second)
        throw DataError("sound library: id '" + s.id +
                        "' appears in more than one split");
    }
  };
  check(train);
  check(val);
  check(test);
}

const SoundSignature& SoundLibrary::by_id(const std::string& id) const {
  for (const auto* split : {&train, &val, &test})
    for (const auto& s : *split)
      if (s.id == id) return s;
  throw DataError("sound library: unknown id '" + id + "'");
}

SoundLibrary make_sound_library(uint64_t seed, int n_train, int n_val,
                                int n_test, int freq_bins) {
  Rng rng(derive_seed(seed, 0x5053ULL));
  auto make = [&](const std::string& prefix, int count) {
    std::vector<SoundSignature> out;
    for (int i = 0; i < count; ++i) {
      SoundSignature s;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%03d", prefix.c_str(), i);
      s.id = buf;
      s.spectrum.resize(static_cast<size_t>(freq_bins));
      double norm2 = 0.0;
      for (auto& v : s.spectrum) {
        v = rng.uniform(0.05, 1.0);
        norm2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : s.spectrum) v *= inv;
      out.push_back(std::move(s));
    }
    return out;
  };
  SoundLibrary lib;
  lib.train = make("train", n_train);
  lib.val = make("val", n_val);
  lib.test = make("test", n_test);
  lib.validate();
  return lib;
}

SoundLibrary load_sound_library(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("sound library: cannot open '" + path + "'");
  nlohmann::json j;
  is >> j;
  auto parse_split = [&](const char* key) {
    std::vector<SoundSignature> out;
    for (const auto& e : j.at(key)) {
      SoundSignature s;
      s.id = e.at("id").get<std::string>();
      s.spectrum = e.at("spectrum").get<std::vector<double>>();
      out.push_back(std::move(s));
    }
    return out;
  };
  SoundLibrary lib;
  lib.train = parse_split("train");
  lib.val = parse_split("val");
  lib.test = parse_split("test");
  lib.validate();
  return lib;
}

void save_sound_library(const SoundLibrary& lib, const std::string& path) {
  nlohmann::json j;
  auto dump_split = [](const std::vector<SoundSignature>& split) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : split)
      arr.push_back({{"id", s.id}, {"spectrum", s.spectrum}});
    return arr;
  };
  j["train"] = dump_split(lib.train);
  j["val"] = dump_split(lib.val);
  j["test"] = dump_split(lib.test);
  std::ofstream os(path);
  if (!os) throw ConfigError("sound library: cannot write '" + path + "'");
  os << j.dump(2) << "\n";
}

std::vector<double> render_visual(const GridMap& map, const Pose& pose,
                                  int rays, int range) {
  std::vector<double> out(static_cast<size_t>(rays));
  // heading angle in radians; y axis points down, so N is -pi/2
  const double base = std::atan2(heading_dy(pose.heading),
                                 heading_dx(pose.heading));
  for (int r = 0; r < rays; ++r) {
    const double offset =
        rays == 1 ? 0.0
                  : (-std::numbers::pi / 4.0 +
                     (std::numbers::pi / 2.0) * r / (rays - 1));
    const double a = base + offset;
    const double dx = std::cos(a), dy = std::sin(a);
    int depth = range;
    for (int k = 1; k <= range; ++k) {
      const int cx = static_cast<int>(std::llround(pose.x + k * dx));
      const int cy = static_cast<int>(std::llround(pose.y + k * dy));
      if (!map.free_at(cx, cy)) {
        depth = k;
        break;
      }
    }
    out[static_cast<size_t>(r)] = static_cast<double>(depth) / range;
  }
  return out;
}

namespace {

// sin of the bearing of `dir` relative to `heading`: 0 ahead/behind,
// +1 right, -1 left.
double bearing_sin(Heading heading, Heading dir) {
  const int rel = (static_cast<int>(dir) - static_cast<int>(heading) + 4) % 4;
  switch (rel) {
    case 1: return 1.0;
    case 3: return -1.0;
    default: return 0.0;
  }
}

std::vector<double> render_audio_from_field(const GridMap& map,
                                            const std::vector<int>& field,
                                            const Pose& pose,
                                            const SoundSignature& sig,
                                            double noise_std, Rng& rng) {
  const int d = field[static_cast<size_t>(pose.y) * map.width + pose.x];
  if (d == kUnreachable)
    throw ContractError("render_audio: goal unreachable from pose");
  double s = 0.0;
  if (d > 0) {
    const auto g = geodesic_from_field(map, field, {pose.x, pose.y});
    s = bearing_sin(pose.heading, *g.first_step);
  }
  const double atten = 1.0 / (1.0 + d);
  const double gain_l = atten * (1.0 - s) / 2.0;
  const double gain_r = atten * (1.0 + s) / 2.0;
  const int f = static_cast<int>(sig.spectrum.size());
  std::vector<double> audio(static_cast<size_t>(2 * f));
  for (int i = 0; i < f; ++i) audio[static_cast<size_t>(i)] = gain_l * sig.spectrum[static_cast<size_t>(i)];
  for (int i = 0; i < f; ++i) audio[static_cast<size_t>(f + i)] = gain_r * sig.spectrum[static_cast<size_t>(i)];
  if (noise_std > 0.0) {
    for (auto& v : audio) v = std::max(0.0, v + rng.normal(0.0, noise_std));
  }
  return audio;
}

}  // namespace

std::vector<double> render_audio(const GridMap& map, const Pose& pose,
                                 Cell goal, const SoundSignature& sig,
                                 double noise_std, Rng& rng) {
  return render_audio_from_field(map, distance_field(map, goal), pose, sig,
                                 noise_std, rng);
}

Observation GridEnv::observe() {
  Observation obs;
  obs.visual = render_visual(spec_.map, pose_);
  obs.audio = render_audio_from_field(spec_.map, dist_field_, pose_,
                                      spec_.signature, spec_.noise_std, *rng_);
  obs.freq_bins = static_cast<int>(spec_.signature.spectrum.size());
  return obs;
}

Observation GridEnv::reset(const EpisodeSpec& spec) {
  if (spec.map.free_count() == 0)
    throw DataError("reset: map has no free cell");
  if (!spec.map.free_at(spec.start.x, spec.start.y))
    throw DataError("reset: start cell is blocked or out of bounds");
  if (!spec.map.free_at(spec.goal.x, spec.goal.y))
    throw DataError("reset: goal cell is blocked or out of bounds");
  if (spec.max_steps < 1) throw DataError("reset: max_steps must be >= 1");
  spec.signature.validate();

  spec_ = spec;
  dist_field_ = distance_field(spec_.map, spec_.goal);
  initial_distance_ =
      dist_field_[static_cast<size_t>(spec.start.y) * spec_.map.width +
                  spec.start.x];
  if (initial_distance_ == kUnreachable)
    throw DataError("reset: goal not reachable from start");

  pose_ = spec.start;
  rng_.emplace(spec.seed);
  active_ = true;
  success_ = false;
  action_count_ = 0;
  path_cells_ = 0;
  return observe();
}

int GridEnv::current_distance() const {
  return dist_field_[static_cast<size_t>(pose_.y) * spec_.map.width + pose_.x];
}

StepResult GridEnv::step(Action action) {
  if (!active_) throw ContractError("step: episode is not active");

  const int d_prev = current_distance();
  bool collided = false;
  bool stopped = false;

  switch (action) {
    case Action::Forward: {
      const int nx = pose_.x + heading_dx(pose_.heading);
      const int ny = pose_.y + heading_dy(pose_.heading);
      if (spec_.map.free_at(nx, ny)) {
        pose_.x = nx;
        pose_.y = ny;
        ++path_cells_;
      } else {
        collided = true;
      }
      break;
    }
    case Action::TurnLeft:
      pose_.heading = rotate_left(pose_.heading);
      break;
    case Action::TurnRight:
      pose_.heading = rotate_right(pose_.heading);
      break;
    case Action::Stop:
      stopped = true;
      break;
  }
  ++action_count_;

  const int d_new = current_distance();
  StepResult res;
  if (stopped) {
    success_ = pose_.cell() == spec_.goal;
    active_ = false;
  } else if (action_count_ >= spec_.max_steps) {
    active_ = false;
  }
  res.reward = static_cast<double>(d_prev - d_new) - 0.01 +
               (stopped && success_ ? 10.0 : 0.0);
  res.done = !active_;
  res.info.geodesic_distance = d_new;
  res.info.success = success_;
  res.info.collided = collided;
  res.obs = observe();
  return res;
}

}  // namespace crfn
