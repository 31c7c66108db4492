#pragma once

#include <map>
#include <string>
#include <vector>

#include "crfn/metrics.hpp"
#include "crfn/ppo.hpp"

namespace crfn {

// ASCII sources of the stock maps (written out by the gen command; suites
// below use them directly).
const std::map<std::string, std::string>& builtin_map_sources();
GridMap builtin_map(const std::string& name);

// 20 held-out start poses with varying goals on the open 9x9 room, one
// heard (train-split) signature.
std::vector<Scenario> make_smoke_suite(const SoundLibrary& lib);

// 100 random scenarios on the open 11x11 map, heard signatures.
std::vector<Scenario> make_open_suite(const SoundLibrary& lib, int count = 100,
                                      uint64_t seed = 2024);

// Fixed evaluation suite over the three multi-room maps.
std::vector<Scenario> make_multiroom_suite(const SoundLibrary& lib,
                                           int per_map = 10,
                                           uint64_t seed = 512);

// Same geometry, disjoint sound splits: first = heard (train split),
// second = unheard (test split).
std::pair<std::vector<Scenario>, std::vector<Scenario>>
make_heard_unheard_suites(const SoundLibrary& lib, int per_map = 8,
                          uint64_t seed = 640);

// Training episode stream over `map_names`, sampling start/goal/signature
// per episode; start poses listed in `held_out` are never sampled.
struct SamplerOptions {
  std::vector<std::string> map_names;
  std::vector<Pose> held_out;  // matched by (x, y, heading)
  double noise_std = 0.01;
  int max_steps = 60;
  uint64_t seed = 1;
};

SpecSampler make_training_sampler(const SamplerOptions& opts,
                                  std::vector<SoundSignature> signatures);

// Scenario files: JSON array of {id, map, start [x,y,heading], goal [x,y],
// signature, seed, noise_std, max_steps}; map paths resolve relative to the
// scenario file's directory.
std::vector<Scenario> load_scenarios(const std::string& path,
                                     const SoundLibrary& lib);
void save_scenarios(const std::vector<Scenario>& scenarios,
                    const std::vector<std::string>& map_paths,
                    const std::string& path);

}  // namespace crfn
