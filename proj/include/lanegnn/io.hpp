#pragma once

// CSV I/O: trajectory and per-step episode dumps (with enough precision to
// round-trip every double exactly), training metrics, evaluation reports,
// and the replay verifier that recomputes rewards and termination from a
// dumped trajectory and cross-checks the stored values.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lanegnn/env.hpp"
#include "lanegnn/ppo.hpp"

namespace lanegnn {

// Per-step record of the executed ego control, the resulting reward, and the
// post-step status; rows correspond to steps 1..K of an episode.
struct EpisodeRow {
  int step = 0;
  Control control;
  double reward = 0.0;
  TerminalStatus status = TerminalStatus::running;
};

// Full dump of one episode: worlds[k] is the world after step k (worlds[0]
// is the initial world), rows[k-1] describes step k.
struct EpisodeDump {
  std::vector<WorldState> worlds;
  std::vector<EpisodeRow> rows;
};

void write_trajectory_csv(const std::string& path, const EpisodeDump& dump);
void write_episode_csv(const std::string& path, const EpisodeDump& dump);

// Strict readers; throw ParseError with file:line on malformed input.
std::vector<WorldState> read_trajectory_csv(const std::string& path);
std::vector<EpisodeRow> read_episode_csv(const std::string& path);

struct ReplayResult {
  bool ok = true;
  std::string message;  // first mismatch, when !ok
  int steps = 0;
  TerminalStatus final_status = TerminalStatus::running;
};

// Recomputes collision/goal/timeout status and the reward of every step from
// the dumped worlds and controls, and compares against the stored values.
ReplayResult replay_episode(const std::string& trajectory_path,
                            const std::string& episode_path,
                            const EnvConfig& env_cfg);

// Appends one row per training update; flushed per row so an aborted run
// keeps everything written so far.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  ~MetricsWriter();
  void add(int update, const EpisodeStats& stats, const UpdateStats& update_stats);

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> out_;
};

// Held-out evaluation curve during training: one row per evaluation.
void append_eval_curve_row(const std::string& path, int update,
                           const EvalReport& report, bool write_header);

void write_eval_report_csv(const std::string& path, const EvalReport& report);
std::string format_eval_report(const EvalReport& report);

// One evaluation under one noise level for one network.
struct ComparisonRow {
  std::string scenario;  // "Nominal" or "Ablation"
  std::string network;   // "GNN" or "NN"
  double noise_stddev = 0.0;
  EvalReport report;
  double delta_success = 0.0;    // success_nominal - success_noise
  double delta_collision = 0.0;  // collision_noise - collision_nominal
};

void write_comparison_csv(const std::string& path,
                          const std::vector<ComparisonRow>& rows,
                          std::uint64_t seed, std::uint64_t config_hash);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace lanegnn
