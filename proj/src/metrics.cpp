#include "crfn/metrics.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace crfn {

namespace {

void require_nonempty(std::span<const EpisodeRecord> records) {
  if (records.empty())
    throw ContractError("metrics: empty record set");
}

}  // namespace

double sr(std::span<const EpisodeRecord> records) {
  require_nonempty(records);
  double acc = 0;
  for (const auto& r : records) acc += r.success ? 1.0 : 0.0;
  return acc / static_cast<double>(records.size());
}

double spl(std::span<const EpisodeRecord> records) {
  require_nonempty(records);
  double acc = 0;
  for (const auto& r : records) {
    if (!r.success) continue;
    if (r.geodesic_len == 0.0 && r.path_len == 0.0) {
      acc += 1.0;  // started on the goal
    } else {
      acc += r.geodesic_len / std::max(r.path_len, r.geodesic_len);
    }
  }
  return acc / static_cast<double>(records.size());
}

double sna(std::span<const EpisodeRecord> records) {
  require_nonempty(records);
  double acc = 0;
  for (const auto& r : records) {
    if (!r.success) continue;
    if (r.action_count < 1)
      throw DataError("sna: successful record '" + r.scenario_id +
                      "' has action_count 0");
    acc += r.geodesic_len / static_cast<double>(r.action_count);
  }
  return acc / static_cast<double>(records.size());
}

MetricsReport compute_report(std::span<const EpisodeRecord> records) {
  MetricsReport rep;
  rep.sr = sr(records);
  rep.spl = spl(records);
  rep.sna = sna(records);
  rep.n = static_cast<int>(records.size());
  return rep;
}

EvalResult evaluate(Agent& agent, const std::vector<Scenario>& scenarios) {
  EvalResult out;
  for (const auto& sc : scenarios) {
    EpisodeRecord rec;
    rec.scenario_id = sc.id;
    Trajectory traj;
    traj.scenario_id = sc.id;
    traj.map_name = sc.spec.map.name;
    traj.start = sc.spec.start;
    traj.goal = sc.spec.goal;
    try {
      GridEnv env;
      Observation obs = env.reset(sc.spec);
      agent.reset(sc.spec);
      traj.agent_path.push_back(env.pose().cell());
      traj.geodesic_path =
          shortest_path(sc.spec.map, sc.spec.start.cell(), sc.spec.goal);
      bool done = false;
      while (!done) {
        const Action a = agent.act(obs, env.pose());
        StepResult res = env.step(a);
        traj.agent_path.push_back(env.pose().cell());
        obs = std::move(res.obs);
        done = res.done;
      }
      rec.success = env.succeeded();
      rec.geodesic_len = env.initial_distance();
      rec.path_len = env.path_cells();
      rec.action_count = env.action_count();
    } catch (const std::exception& e) {
      rec.success = false;
      rec.error = e.what();
      if (rec.action_count < 1) rec.action_count = 1;
    }
    out.records.push_back(std::move(rec));
    out.trajectories.push_back(std::move(traj));
  }
  out.report = compute_report(out.records);
  return out;
}

void write_records_jsonl(const std::vector<EpisodeRecord>& records,
                         const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("records: cannot write '" + path + "'");
  for (const auto& r : records) {
    nlohmann::json j{{"scenario_id", r.scenario_id},
                     {"success", r.success},
                     {"geodesic_len", r.geodesic_len},
                     {"path_len", r.path_len},
                     {"action_count", r.action_count}};
    if (!r.error.empty()) j["error"] = r.error;
    os << j.dump() << "\n";
  }
}

std::vector<EpisodeRecord> read_records_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("records: cannot open '" + path + "'");
  std::vector<EpisodeRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EpisodeRecord r;
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.success = j.at("success").get<bool>();
    r.geodesic_len = j.at("geodesic_len").get<double>();
    r.path_len = j.at("path_len").get<double>();
    r.action_count = j.at("action_count").get<int>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_trajectories_json(const std::vector<Trajectory>& trajectories,
                             const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trajectories) {
    nlohmann::json agent_path = nlohmann::json::array();
    for (size_t i = 0; i < t.agent_path.size(); ++i)
      agent_path.push_back({t.agent_path[i].x, t.agent_path[i].y,
                            static_cast<int>(i)});
    nlohmann::json geo = nlohmann::json::array();
    for (const auto& c : t.geodesic_path) geo.push_back({c.x, c.y});
    arr.push_back({{"scenario_id", t.scenario_id},
                   {"map", t.map_name},
                   {"start", {t.start.x, t.start.y}},
                   {"heading", std::string(1, heading_char(t.start.heading))},
                   {"goal", {t.goal.x, t.goal.y}},
                   {"agent_path", agent_path},
                   {"geodesic_path", geo}});
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("trajectories: cannot write '" + path + "'");
  os << arr.dump(2) << "\n";
}

}  // namespace crfn
