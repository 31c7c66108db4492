#include "crfn/scenarios.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace crfn {

namespace {

const char* kRoom9 =
    ".........\n.........\n.........\n.........\n.........\n"
    ".........\n.........\n.........\n.........\n";

const char* kOpen11 =
    "...........\n...........\n...........\n...........\n...........\n"
    "...........\n...........\n...........\n...........\n...........\n"
    "...........\n";

// two rooms, one door in the dividing wall
const char* kRoomsA =
    ".........\n"
    ".........\n"
    ".........\n"
    ".........\n"
    "####.####\n"
    ".........\n"
    ".........\n"
    ".........\n"
    ".........\n";

// four quadrants with offset doorways
const char* kRoomsB =
    "....#....\n"
    "....#....\n"
    ".........\n"
    "....#....\n"
    "##.######\n"
    "....#....\n"
    "....#....\n"
    ".........\n"
    "....#....\n";

// spiral corridor
const char* kRoomsC =
    ".........\n"
    ".#######.\n"
    ".#.....#.\n"
    ".#.###.#.\n"
    ".#.#.#.#.\n"
    ".#.#.#.#.\n"
    ".#.#...#.\n"
    ".#.#####.\n"
    ".#.......\n";

const char* kCorridor = "S.G\n";

}  // namespace

const std::map<std::string, std::string>& builtin_map_sources() {
  static const std::map<std::string, std::string> maps = {
      {"room9", kRoom9},     {"open11", kOpen11},   {"rooms_a", kRoomsA},
      {"rooms_b", kRoomsB},  {"rooms_c", kRoomsC},  {"corridor", kCorridor},
  };
  return maps;
}

GridMap builtin_map(const std::string& name) {
  const auto& maps = builtin_map_sources();
  auto it = maps.find(name);
  if (it == maps.end())
    throw ConfigError("builtin_map: unknown map '" + name + "'");
  return parse_map(it->second, name).map;
}

namespace {

Cell random_free_cell(const GridMap& map, Rng& rng) {
  for (;;) {
    const Cell c{rng.uniform_int(map.width), rng.uniform_int(map.height)};
    if (map.free_at(c.x, c.y)) return c;
  }
}

Scenario random_scenario(const GridMap& map, const SoundSignature& sig,
                         const std::string& id, uint64_t seed, double noise,
                         int max_steps, Rng& rng) {
  Scenario sc;
  sc.id = id;
  sc.spec.map = map;
  for (;;) {
    const Cell start = random_free_cell(map, rng);
    const Cell goal = random_free_cell(map, rng);
    if (start == goal) continue;
    if (geodesic(map, start, goal).distance == kUnreachable) continue;
    sc.spec.start = {start.x, start.y, static_cast<Heading>(rng.uniform_int(4))};
    sc.spec.goal = goal;
    break;
  }
  sc.spec.signature = sig;
  sc.spec.noise_std = noise;
  sc.spec.max_steps = max_steps;
  sc.spec.seed = seed;
  return sc;
}

}  // namespace

std::vector<Scenario> make_smoke_suite(const SoundLibrary& lib) {
  const GridMap map = builtin_map("room9");
  const SoundSignature& sig = lib.train[0];  // the one heard sound
  Rng rng(4242);
  std::vector<Scenario> out;
  std::vector<Pose> used;
  while (out.size() < 20) {
    const Cell start = random_free_cell(map, rng);
    const Heading h = static_cast<Heading>(rng.uniform_int(4));
    bool dup = false;
    for (const auto& p : used)
      if (p.x == start.x && p.y == start.y && p.heading == h) dup = true;
    if (dup) continue;
    Cell goal = random_free_cell(map, rng);
    while (goal == start) goal = random_free_cell(map, rng);
    Scenario sc;
    sc.id = "smoke_" + std::to_string(out.size());
    sc.spec.map = map;
    sc.spec.start = {start.x, start.y, h};
    sc.spec.goal = goal;
    sc.spec.signature = sig;
    sc.spec.noise_std = 0.01;
    sc.spec.max_steps = 60;
    sc.spec.seed = 7000 + out.size();
    used.push_back(sc.spec.start);
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<Scenario> make_open_suite(const SoundLibrary& lib, int count,
                                      uint64_t seed) {
  const GridMap map = builtin_map("open11");
  Rng rng(seed);
  std::vector<Scenario> out;
  for (int i = 0; i < count; ++i) {
    const auto& sig =
        lib.train[static_cast<size_t>(rng.uniform_int(static_cast<int>(lib.train.size())))];
    out.push_back(random_scenario(map, sig, "open_" + std::to_string(i),
                                  derive_seed(seed, static_cast<uint64_t>(i)),
                                  0.01, 200, rng));
  }
  return out;
}

std::vector<Scenario> make_multiroom_suite(const SoundLibrary& lib,
                                           int per_map, uint64_t seed) {
  Rng rng(seed);
  std::vector<Scenario> out;
  for (const std::string name : {"rooms_a", "rooms_b", "rooms_c"}) {
    const GridMap map = builtin_map(name);
    for (int i = 0; i < per_map; ++i) {
      const auto& sig =
          lib.train[static_cast<size_t>(rng.uniform_int(static_cast<int>(lib.train.size())))];
      out.push_back(random_scenario(
          map, sig, name + "_" + std::to_string(i),
          derive_seed(seed, out.size()), 0.01, 120, rng));
    }
  }
  return out;
}

std::pair<std::vector<Scenario>, std::vector<Scenario>>
make_heard_unheard_suites(const SoundLibrary& lib, int per_map,
                          uint64_t seed) {
  auto build = [&](const std::vector<SoundSignature>& split,
                   const std::string& tag, uint64_t s) {
    Rng rng(s);
    std::vector<Scenario> out;
    for (const std::string name : {"rooms_a", "rooms_b", "rooms_c"}) {
      const GridMap map = builtin_map(name);
      for (int i = 0; i < per_map; ++i) {
        const auto& sig =
            split[static_cast<size_t>(rng.uniform_int(static_cast<int>(split.size())))];
        out.push_back(random_scenario(
            map, sig, tag + "_" + name + "_" + std::to_string(i),
            derive_seed(s, out.size()), 0.01, 120, rng));
      }
    }
    return out;
  };
  // identical geometry stream, disjoint sound splits
  return {build(lib.train, "heard", seed), build(lib.test, "unheard", seed)};
}

SpecSampler make_training_sampler(const SamplerOptions& opts,
                                  std::vector<SoundSignature> signatures) {
  if (opts.map_names.empty())
    throw ConfigError("training sampler: no maps configured");
  if (signatures.empty())
    throw ConfigError("training sampler: no signatures configured");
  std::vector<GridMap> maps;
  for (const auto& name : opts.map_names) maps.push_back(builtin_map(name));
  return [maps, signatures, opts](uint64_t episode) {
    Rng rng(derive_seed(opts.seed, episode));
    const GridMap& map = maps[episode % maps.size()];
    EpisodeSpec spec;
    spec.map = map;
    for (;;) {
      const Cell start = random_free_cell(map, rng);
      const Heading h = static_cast<Heading>(rng.uniform_int(4));
      bool excluded = false;
      for (const auto& p : opts.held_out)
        if (p.x == start.x && p.y == start.y && p.heading == h) excluded = true;
      if (excluded) continue;
      const Cell goal = random_free_cell(map, rng);
      if (geodesic(map, start, goal).distance == kUnreachable) continue;
      spec.start = {start.x, start.y, h};
      spec.goal = goal;
      break;
    }
    spec.signature =
        signatures[static_cast<size_t>(rng.uniform_int(static_cast<int>(signatures.size())))];
    spec.noise_std = opts.noise_std;
    spec.max_steps = opts.max_steps;
    spec.seed = derive_seed(opts.seed ^ 0x9e1ULL, episode);
    return spec;
  };
}

std::vector<Scenario> load_scenarios(const std::string& path,
                                     const SoundLibrary& lib) {
  std::ifstream is(path);
  if (!is) throw ConfigError("scenarios: cannot open '" + path + "'");
  nlohmann::json arr;
  is >> arr;
  const auto base = std::filesystem::path(path).parent_path();

  std::vector<Scenario> out;
  std::map<std::string, GridMap> map_cache;
  for (const auto& j : arr) {
    Scenario sc;
    sc.id = j.at("id").get<std::string>();
    const std::string map_ref = j.at("map").get<std::string>();
    auto it = map_cache.find(map_ref);
    if (it == map_cache.end()) {
      std::filesystem::path mp(map_ref);
      if (mp.is_relative()) mp = base / mp;
      GridMap m = load_map(mp.string()).map;
      m.name = map_ref;
      it = map_cache.emplace(map_ref, std::move(m)).first;
    }
    sc.spec.map = it->second;
    const auto& start = j.at("start");
    sc.spec.start = {start.at(0).get<int>(), start.at(1).get<int>(),
                     heading_from_char(start.at(2).get<std::string>().at(0))};
    sc.spec.goal = {j.at("goal").at(0).get<int>(), j.at("goal").at(1).get<int>()};
    sc.spec.signature = lib.by_id(j.at("signature").get<std::string>());
    sc.spec.seed = j.at("seed").get<uint64_t>();
    sc.spec.noise_std = j.at("noise_std").get<double>();
    sc.spec.max_steps = j.at("max_steps").get<int>();
    out.push_back(std::move(sc));
  }
  return out;
}

void save_scenarios(const std::vector<Scenario>& scenarios,
                    const std::vector<std::string>& map_paths,
                    const std::string& path) {
  if (map_paths.size() != scenarios.size())
    throw ContractError("save_scenarios: one map path per scenario required");
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    arr.push_back(
        {{"id", sc.id},
         {"map", map_paths[i]},
         {"start",
          {sc.spec.start.x, sc.spec.start.y,
           std::string(1, heading_char(sc.spec.start.heading))}},
         {"goal", {sc.spec.goal.x, sc.spec.goal.y}},
         {"signature", sc.spec.signature.id},
         {"seed", sc.spec.seed},
         {"noise_std", sc.spec.noise_std},
         {"max_steps", sc.spec.max_steps}});
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("scenarios: cannot write '" + path + "'");
  os << arr.dump(2) << "\n";
}

}  // namespace crfn
