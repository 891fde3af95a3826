#include "lanegnn/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lanegnn/evaluator.hpp"
#include "lanegnn/util.hpp"

namespace lanegnn {

namespace {

constexpr const char* kTrajectoryHeader =
    "step,t,vehicle_id,role,x,y,theta,v,delta,lane_id";
constexpr const char* kEpisodeHeader = "step,accel,steer_rate,reward,status";

const char* role_name(ControllerTag tag) {
  return tag == ControllerTag::ego ? "ego" : "idm";
}

ControllerTag role_from_string(const std::string& s, const std::string& where) {
  if (s == "ego") return ControllerTag::ego;
  if (s == "idm") return ControllerTag::idm;
  throw ParseError(where + ": unknown role \"" + s + "\"");
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

long parse_long(const std::string& s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty integer field");
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    throw ParseError(where + ": malformed integer \"" + s + "\"");
  return v;
}

double parse_field_double(const std::string& s, const std::string& where) {
  return parse_double(s, where);
}

// Reads non-empty lines, checks the header, and hands (line_no, fields) to fn.
template <typename Fn>
void read_csv(const std::string& path, const char* expected_header,
              std::size_t n_fields, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!saw_header) {
      if (line != expected_header)
        throw ParseError(where + ": expected header \"" + expected_header + "\"");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != n_fields)
      throw ParseError(where + ": expected " + std::to_string(n_fields) +
                       " fields, got " + std::to_string(fields.size()));
    fn(where, fields);
  }
  if (!saw_header) throw ParseError(path + ": empty file");
}

}  // namespace

void write_trajectory_csv(const std::string& path, const EpisodeDump& dump) {
  std::ofstream out = open_for_write(path);
  out << kTrajectoryHeader << "\n";
  for (std::size_t step = 0; step < dump.worlds.size(); ++step) {
    const WorldState& world = dump.worlds[step];
    for (const Vehicle& veh : world.vehicles) {
      out << step << ',' << format_double(world.t) << ',' << veh.id << ','
          << role_name(veh.tag) << ',' << format_double(veh.state.x) << ','
          << format_double(veh.state.y) << ',' << format_double(veh.state.theta)
          << ',' << format_double(veh.state.v) << ','
          << format_double(veh.state.delta) << ',' << veh.state.lane_id << "\n";
    }
  }
}

void write_episode_csv(const std::string& path, const EpisodeDump& dump) {
  std::ofstream out = open_for_write(path);
  out << kEpisodeHeader << "\n";
  for (const EpisodeRow& row : dump.rows) {
    out << row.step << ',' << format_double(row.control.accel) << ','
        << format_double(row.control.steer_rate) << ','
        << format_double(row.reward) << ',' << to_string(row.status) << "\n";
  }
}

std::vector<WorldState> read_trajectory_csv(const std::string& path) {
  std::vector<WorldState> worlds;
  read_csv(path, kTrajectoryHeader, 10, [&](const std::string& where,
                                            const std::vector<std::string>& f) {
    const long step = parse_long(f[0], where);
    if (step < 0) throw ParseError(where + ": negative step");
    if (static_cast<std::size_t>(step) == worlds.size()) {
      worlds.emplace_back();
      worlds.back().t = parse_field_double(f[1], where);
      worlds.back().step_count = static_cast<int>(step);
    } else if (static_cast<std::size_t>(step) + 1 != worlds.size()) {
      throw ParseError(where + ": steps out of order");
    }
    Vehicle veh;
    veh.id = static_cast<int>(parse_long(f[2], where));
    veh.tag = role_from_string(f[3], where);
    veh.state.x = parse_field_double(f[4], where);
    veh.state.y = parse_field_double(f[5], where);
    veh.state.theta = parse_field_double(f[6], where);
    veh.state.v = parse_field_double(f[7], where);
    veh.state.delta = parse_field_double(f[8], where);
    veh.state.lane_id = static_cast<int>(parse_long(f[9], where));
    worlds.back().vehicles.push_back(veh);
  });
  if (worlds.empty()) throw ParseError(path + ": no trajectory rows");
  return worlds;
}

std::vector<EpisodeRow> read_episode_csv(const std::string& path) {
  std::vector<EpisodeRow> rows;
  read_csv(path, kEpisodeHeader, 5, [&](const std::string& where,
                                        const std::vector<std::string>& f) {
    EpisodeRow row;
    row.step = static_cast<int>(parse_long(f[0], where));
    row.control.accel = parse_field_double(f[1], where);
    row.control.steer_rate = parse_field_double(f[2], where);
    row.reward = parse_field_double(f[3], where);
    try {
      row.status = terminal_status_from_string(f[4]);
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    rows.push_back(row);
  });
  return rows;
}

ReplayResult replay_episode(const std::string& trajectory_path,
                            const std::string& episode_path,
                            const EnvConfig& env_cfg) {
  const std::vector<WorldState> worlds = read_trajectory_csv(trajectory_path);
  const std::vector<EpisodeRow> rows = read_episode_csv(episode_path);

  ReplayResult result;
  result.steps = static_cast<int>(rows.size());

  auto fail = [&](int step, const std::string& msg) {
    result.ok = false;
    result.message = "step " + std::to_string(step) + ": " + msg;
    return result;
  };

  if (worlds.size() != rows.size() + 1)
    return fail(0, "trajectory has " + std::to_string(worlds.size()) +
                       " states but episode lists " + std::to_string(rows.size()) +
                       " steps");

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const EpisodeRow& row = rows[k];
    if (row.step != static_cast<int>(k) + 1)
      return fail(row.step, "episode rows out of order");
    const WorldState& after = worlds[k + 1];

    StepEvents events;
    events.collisions = check_collision(after, env_cfg.sim);
    const TerminalStatus status = check_terminal(after, events, env_cfg.goal,
                                                 env_cfg.episode.max_steps,
                                                 env_cfg.sim);
    if (status != row.status)
      return fail(row.step, std::string("status mismatch: stored ") +
                                to_string(row.status) + ", recomputed " +
                                to_string(status));
    const double reward = compute_reward(after, row.control, status, env_cfg.goal,
                                         env_cfg.weights, env_cfg.sim.bounds);
    if (!(std::abs(reward - row.reward) <= 1e-9))
      return fail(row.step, "reward mismatch: stored " + format_double(row.reward) +
                                ", recomputed " + format_double(reward));
    const bool last = k + 1 == rows.size();
    if (!last && status != TerminalStatus::running)
      return fail(row.step, "episode continues past a terminal step");
    if (last && status == TerminalStatus::running)
      return fail(row.step, "episode ends while still running");
    if (last) result.final_status = status;
  }
  return result;
}

MetricsWriter::MetricsWriter(const std::string& path)
    : path_(path), out_(std::make_unique<std::ofstream>(path)) {
  if (!*out_) throw ParseError("cannot open " + path + " for writing");
  *out_ << "update,mean_return,success_rate,collision_rate,timeout_rate,"
           "actor_loss,critic_loss,mean_sigma\n";
  out_->flush();
}

MetricsWriter::~MetricsWriter() = default;

void MetricsWriter::add(int update, const EpisodeStats& stats,
                        const UpdateStats& update_stats) {
  *out_ << update << ',' << format_double(stats.mean_return) << ','
        << format_double(stats.success_rate()) << ','
        << format_double(stats.collision_rate()) << ','
        << format_double(stats.timeout_rate()) << ','
        << format_double(update_stats.actor_loss) << ','
        << format_double(update_stats.critic_loss) << ','
        << format_double(update_stats.mean_sigma) << "\n";
  out_->flush();
}

void append_eval_curve_row(const std::string& path, int update,
                           const EvalReport& report, bool write_header) {
  std::ofstream out(path, write_header ? std::ios::trunc : std::ios::app);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  if (write_header)
    out << "update,success_rate,collision_rate,timeout_rate,mean_return\n";
  out << update << ',' << format_double(report.success_rate) << ','
      << format_double(report.collision_rate) << ','
      << format_double(report.timeout_rate) << ','
      << format_double(report.mean_return) << "\n";
}

void write_eval_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out = open_for_write(path);
  out << "episodes,successes,collisions,timeouts,success_rate,collision_rate,"
         "timeout_rate,mean_return\n";
  out << report.episodes << ',' << report.successes << ',' << report.collisions
      << ',' << report.timeouts << ',' << format_double(report.success_rate)
      << ',' << format_double(report.collision_rate) << ','
      << format_double(report.timeout_rate) << ','
      << format_double(report.mean_return) << "\n";
}

std::string format_eval_report(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "episodes %d | success %.1f%% | collision %.1f%% | timeout "
                "%.1f%% | mean return %.4f",
                report.episodes, 100.0 * report.success_rate,
                100.0 * report.collision_rate, 100.0 * report.timeout_rate,
                report.mean_return);
  return buf;
}

void write_comparison_csv(const std::string& path,
                          const std::vector<ComparisonRow>& rows,
                          std::uint64_t seed, std::uint64_t config_hash) {
  std::ofstream out = open_for_write(path);
  char meta[128];
  std::snprintf(meta, sizeof(meta), "# seed=%llu\n# config_hash=%016llx\n",
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(config_hash));
  out << meta;
  out << "scenario,network,noise_stddev,success_rate,collision_rate,"
         "timeout_rate,mean_return,delta_success,delta_collision\n";
  for (const ComparisonRow& row : rows) {
    out << row.scenario << ',' << row.network << ','
        << format_double(row.noise_stddev) << ','
        << format_double(row.report.success_rate) << ','
        << format_double(row.report.collision_rate) << ','
        << format_double(row.report.timeout_rate) << ','
        << format_double(row.report.mean_return) << ','
        << format_double(row.delta_success) << ','
        << format_double(row.delta_collision) << "\n";
  }
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-8s %-8s %-10s %-10s %-10s\n",
                "scenario", "network", "noise", "success", "collision", "timeout");
  out << line;
  for (const ComparisonRow& row : rows) {
    std::snprintf(line, sizeof(line),
                  "%-10s %-8s %-8.3g %8.1f%% %9.1f%% %8.1f%%\n",
                  row.scenario.c_str(), row.network.c_str(), row.noise_stddev,
                  100.0 * row.report.success_rate,
                  100.0 * row.report.collision_rate,
                  100.0 * row.report.timeout_rate);
    out << line;
  }
  return out.str();
}

}  // namespace lanegnn
