#include "lanegnn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lanegnn/util.hpp"

namespace lanegnn {

using json = nlohmann::ordered_json;

GoalSpec ExperimentConfig::goal_spec() const {
  return default_goal(sim.road, goal.v_des, goal.speed_tol, goal.heading_tol);
}

EnvConfig ExperimentConfig::env_config() const {
  return env_config(observer.noise_stddev);
}

EnvConfig ExperimentConfig::env_config(double noise_override) const {
  EnvConfig env;
  env.sim = sim;
  env.scenario = scenario;
  env.goal = goal_spec();
  env.weights = reward;
  env.observer = observer;
  env.observer.noise_stddev = noise_override;
  env.episode = episode;
  return env;
}

void ExperimentConfig::validate() const {
  if (!(sim.road.lane_width > 0)) throw ConfigError("sim.lane_width must be positive");
  if (sim.road.num_lanes < 2) throw ConfigError("sim.num_lanes must be >= 2");
  if (!(sim.road.length > 0)) throw ConfigError("sim.road_length must be positive");
  if (!(sim.road.wheelbase > 0)) throw ConfigError("sim.wheelbase must be positive");
  if (!(sim.road.dt > 0)) throw ConfigError("sim.dt must be positive");
  if (!(sim.geom.length > 0 && sim.geom.width > 0))
    throw ConfigError("sim vehicle footprint must be positive");
  if (!(sim.geom.delta_max > 0)) throw ConfigError("sim.steer_max must be positive");
  if (!(sim.bounds.accel_min < sim.bounds.accel_max))
    throw ConfigError("sim.accel_min must be below sim.accel_max");
  if (!(sim.bounds.steer_rate_max > 0))
    throw ConfigError("sim.steer_rate_max must be positive");
  if (!(sim.idm.v0 > 0 && sim.idm.T > 0 && sim.idm.s0 > 0 && sim.idm.a > 0 &&
        sim.idm.b > 0 && sim.idm.emergency_decel > 0))
    throw ConfigError("sim.idm parameters must be positive");
  if (scenario.min_vehicles < 1) throw ConfigError("scenario.min_vehicles must be >= 1");
  if (scenario.max_vehicles < scenario.min_vehicles)
    throw ConfigError("scenario.max_vehicles must be >= scenario.min_vehicles");
  if (!(scenario.min_gap > 0)) throw ConfigError("scenario.min_gap must be positive");
  if (!(scenario.speed_min >= 0 && scenario.speed_max >= scenario.speed_min))
    throw ConfigError("scenario speed range malformed");
  if (!(scenario.ego_x_min >= 0 && scenario.ego_x_max >= scenario.ego_x_min))
    throw ConfigError("scenario ego x range malformed");
  if (scenario.max_place_attempts < 1)
    throw ConfigError("scenario.max_place_attempts must be >= 1");
  if (!(goal.v_des > 0)) throw ConfigError("goal.v_des must be positive");
  if (!(goal.speed_tol > 0)) throw ConfigError("goal.speed_tol must be positive");
  if (!(goal.heading_tol > 0)) throw ConfigError("goal.heading_tol must be positive");
  reward.validate();
  if (observer.n_near < 1) throw ConfigError("observer.n_near must be >= 1");
  if (!(observer.r_near > 0)) throw ConfigError("observer.r_near must be positive");
  if (observer.noise_stddev < 0) throw ConfigError("observer.noise_stddev must be >= 0");
  if (observer.max_agents_flat < 1)
    throw ConfigError("observer.max_agents_flat must be >= 1");
  if (!(observer.velocity_scale > 0))
    throw ConfigError("observer.velocity_scale must be positive");
  if (episode.max_steps < 1) throw ConfigError("episode.max_steps must be >= 1");
  network.validate();
  train.validate();
  if (eval.n_scenarios < 1) throw ConfigError("eval.n_scenarios must be >= 1");
  for (double s : ablation.noise_stddev)
    if (s < 0) throw ConfigError("ablation.noise_stddev entries must be >= 0");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  goal_spec().validate();
}

std::string backbone_to_string(BackboneKind kind) {
  return kind == BackboneKind::gnn ? "gnn" : "flat";
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "gnn") return BackboneKind::gnn;
  if (s == "flat") return BackboneKind::flat;
  throw ConfigError("network.backbone must be \"gnn\" or \"flat\", got \"" + s + "\"");
}

namespace {

// One section of the config object: reads typed fields, remembers which keys
// were touched, and rejects everything else on close().
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      throw ConfigError(path_ + " must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  void number(const char* key, double& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(locate(key) + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(locate(key) + " must be finite");
  }

  void integer(const char* key, int& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(locate(key) + " must be an integer");
    out = v.get<int>();
  }

  void unsigned64(const char* key, std::uint64_t& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw ConfigError(locate(key) + " must be a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
      throw ConfigError(locate(key) + " must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void boolean(const char* key, bool& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(locate(key) + " must be a boolean");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(locate(key) + " must be a string");
    out = v.get<std::string>();
  }

  void number_list(const char* key, std::vector<double>& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(locate(key) + " must be an array of numbers");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(locate(key) + " must contain only numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back()))
        throw ConfigError(locate(key) + " entries must be finite");
    }
  }

  void integer_list(const char* key, std::vector<int>& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(locate(key) + " must be an array of integers");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number_integer())
        throw ConfigError(locate(key) + " must contain only integers");
      out.push_back(e.get<int>());
    }
  }

  const json& child(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  // Rejects keys that no reader consumed.
  void close() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown config key " + locate(item.key().c_str()));
  }

 private:
  std::string locate(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_sim(const json& obj, SimConfig& sim) {
  Section s(obj, "sim");
  s.number("lane_width", sim.road.lane_width);
  s.integer("num_lanes", sim.road.num_lanes);
  s.number("road_length", sim.road.length);
  s.number("wheelbase", sim.road.wheelbase);
  s.number("dt", sim.road.dt);
  s.number("vehicle_length", sim.geom.length);
  s.number("vehicle_width", sim.geom.width);
  s.number("steer_max", sim.geom.delta_max);
  s.number("accel_min", sim.bounds.accel_min);
  s.number("accel_max", sim.bounds.accel_max);
  s.number("steer_rate_max", sim.bounds.steer_rate_max);
  if (s.has("idm")) {
    Section i(s.child("idm"), "sim.idm");
    i.number("v0", sim.idm.v0);
    i.number("headway", sim.idm.T);
    i.number("min_gap", sim.idm.s0);
    i.number("accel", sim.idm.a);
    i.number("decel", sim.idm.b);
    i.number("emergency_decel", sim.idm.emergency_decel);
    i.close();
  }
  if (s.has("lateral")) {
    Section l(s.child("lateral"), "sim.lateral");
    l.number("k_y", sim.lateral.k_y);
    l.number("k_theta", sim.lateral.k_theta);
    l.close();
  }
  s.close();
}

void parse_scenario(const json& obj, ScenarioConfig& scn) {
  Section s(obj, "scenario");
  s.integer("min_vehicles", scn.min_vehicles);
  s.integer("max_vehicles", scn.max_vehicles);
  s.number("min_gap", scn.min_gap);
  s.number("speed_min", scn.speed_min);
  s.number("speed_max", scn.speed_max);
  s.number("ego_x_min", scn.ego_x_min);
  s.number("ego_x_max", scn.ego_x_max);
  s.integer("max_place_attempts", scn.max_place_attempts);
  s.close();
}

void parse_goal(const json& obj, GoalConfig& goal) {
  Section s(obj, "goal");
  s.number("v_des", goal.v_des);
  s.number("speed_tol", goal.speed_tol);
  s.number("heading_tol", goal.heading_tol);
  s.close();
}

void parse_reward(const json& obj, RewardWeights& w) {
  Section s(obj, "reward");
  s.number("w_goal_dist", w.w_goal_dist);
  s.number("w_vel", w.w_vel);
  s.number("w_act", w.w_act);
  s.close();
}

void parse_observer(const json& obj, ObserverConfig& o) {
  Section s(obj, "observer");
  s.integer("n_near", o.n_near);
  s.number("r_near", o.r_near);
  s.number("noise_stddev", o.noise_stddev);
  s.integer("max_agents_flat", o.max_agents_flat);
  s.number("velocity_scale", o.velocity_scale);
  s.close();
}

void parse_episode(const json& obj, EpisodeParams& e) {
  Section s(obj, "episode");
  s.integer("max_steps", e.max_steps);
  s.close();
}

void parse_network(const json& obj, NetworkConfig& n) {
  Section s(obj, "network");
  std::string backbone = backbone_to_string(n.backbone);
  s.string("backbone", backbone);
  n.backbone = backbone_from_string(backbone);
  s.integer("gnn_hidden", n.gnn_hidden);
  s.integer("gnn_layers", n.gnn_layers);
  s.integer_list("flat_hidden", n.flat_hidden);
  s.integer_list("head_hidden", n.head_hidden);
  s.number("sigma_init_frac", n.sigma_init_frac);
  s.close();
}

void parse_train(const json& obj, TrainConfig& t) {
  Section s(obj, "train");
  s.number("gamma", t.gamma);
  s.number("gae_lambda", t.gae_lambda);
  s.number("clip_eps", t.clip_eps);
  s.number("lr", t.lr);
  s.integer("epochs_per_update", t.epochs_per_update);
  s.integer("minibatch_size", t.minibatch_size);
  s.integer("steps_per_update", t.steps_per_update);
  s.number("value_coef", t.value_coef);
  s.number("entropy_coef", t.entropy_coef);
  s.number("max_grad_norm", t.max_grad_norm);
  s.integer("total_updates", t.total_updates);
  s.boolean("normalize_advantages", t.normalize_advantages);
  s.unsigned64("seed", t.seed);
  s.integer("checkpoint_every", t.checkpoint_every);
  s.integer("eval_every", t.eval_every);
  s.integer("eval_scenarios", t.eval_scenarios);
  s.number("early_stop_success_rate", t.early_stop_success_rate);
  s.number("early_stop_max_collision_rate", t.early_stop_max_collision_rate);
  s.close();
}

void parse_eval(const json& obj, EvalConfig& e) {
  Section s(obj, "eval");
  s.integer("n_scenarios", e.n_scenarios);
  s.unsigned64("seed", e.seed);
  s.close();
}

void parse_ablation(const json& obj, AblationConfig& a) {
  Section s(obj, "ablation");
  s.number_list("noise_stddev", a.noise_stddev);
  s.close();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin) {
  json root;
  try {
    root = json::parse(text, /*cb=*/nullptr, /*allow_exceptions=*/true,
                       /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  ExperimentConfig cfg;
  try {
    Section top(root, "");
    if (top.has("sim")) parse_sim(top.child("sim"), cfg.sim);
    if (top.has("scenario")) parse_scenario(top.child("scenario"), cfg.scenario);
    if (top.has("goal")) parse_goal(top.child("goal"), cfg.goal);
    if (top.has("reward")) parse_reward(top.child("reward"), cfg.reward);
    if (top.has("observer")) parse_observer(top.child("observer"), cfg.observer);
    if (top.has("episode")) parse_episode(top.child("episode"), cfg.episode);
    if (top.has("network")) parse_network(top.child("network"), cfg.network);
    if (top.has("train")) parse_train(top.child("train"), cfg.train);
    if (top.has("eval")) parse_eval(top.child("eval"), cfg.eval);
    if (top.has("ablation")) parse_ablation(top.child("ablation"), cfg.ablation);
    top.string("out_dir", cfg.out_dir);
    top.close();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path);
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json root;
  root["sim"] = {
      {"lane_width", cfg.sim.road.lane_width},
      {"num_lanes", cfg.sim.road.num_lanes},
      {"road_length", cfg.sim.road.length},
      {"wheelbase", cfg.sim.road.wheelbase},
      {"dt", cfg.sim.road.dt},
      {"vehicle_length", cfg.sim.geom.length},
      {"vehicle_width", cfg.sim.geom.width},
      {"steer_max", cfg.sim.geom.delta_max},
      {"accel_min", cfg.sim.bounds.accel_min},
      {"accel_max", cfg.sim.bounds.accel_max},
      {"steer_rate_max", cfg.sim.bounds.steer_rate_max},
      {"idm",
       {{"v0", cfg.sim.idm.v0},
        {"headway", cfg.sim.idm.T},
        {"min_gap", cfg.sim.idm.s0},
        {"accel", cfg.sim.idm.a},
        {"decel", cfg.sim.idm.b},
        {"emergency_decel", cfg.sim.idm.emergency_decel}}},
      {"lateral", {{"k_y", cfg.sim.lateral.k_y}, {"k_theta", cfg.sim.lateral.k_theta}}},
  };
  root["scenario"] = {
      {"min_vehicles", cfg.scenario.min_vehicles},
      {"max_vehicles", cfg.scenario.max_vehicles},
      {"min_gap", cfg.scenario.min_gap},
      {"speed_min", cfg.scenario.speed_min},
      {"speed_max", cfg.scenario.speed_max},
      {"ego_x_min", cfg.scenario.ego_x_min},
      {"ego_x_max", cfg.scenario.ego_x_max},
      {"max_place_attempts", cfg.scenario.max_place_attempts},
  };
  root["goal"] = {
      {"v_des", cfg.goal.v_des},
      {"speed_tol", cfg.goal.speed_tol},
      {"heading_tol", cfg.goal.heading_tol},
  };
  root["reward"] = {
      {"w_goal_dist", cfg.reward.w_goal_dist},
      {"w_vel", cfg.reward.w_vel},
      {"w_act", cfg.reward.w_act},
  };
  root["observer"] = {
      {"n_near", cfg.observer.n_near},
      {"r_near", cfg.observer.r_near},
      {"noise_stddev", cfg.observer.noise_stddev},
      {"max_agents_flat", cfg.observer.max_agents_flat},
      {"velocity_scale", cfg.observer.velocity_scale},
  };
  root["episode"] = {{"max_steps", cfg.episode.max_steps}};
  root["network"] = {
      {"backbone", backbone_to_string(cfg.network.backbone)},
      {"gnn_hidden", cfg.network.gnn_hidden},
      {"gnn_layers", cfg.network.gnn_layers},
      {"flat_hidden", cfg.network.flat_hidden},
      {"head_hidden", cfg.network.head_hidden},
      {"sigma_init_frac", cfg.network.sigma_init_frac},
  };
  root["train"] = {
      {"gamma", cfg.train.gamma},
      {"gae_lambda", cfg.train.gae_lambda},
      {"clip_eps", cfg.train.clip_eps},
      {"lr", cfg.train.lr},
      {"epochs_per_update", cfg.train.epochs_per_update},
      {"minibatch_size", cfg.train.minibatch_size},
      {"steps_per_update", cfg.train.steps_per_update},
      {"value_coef", cfg.train.value_coef},
      {"entropy_coef", cfg.train.entropy_coef},
      {"max_grad_norm", cfg.train.max_grad_norm},
      {"total_updates", cfg.train.total_updates},
      {"normalize_advantages", cfg.train.normalize_advantages},
      {"seed", cfg.train.seed},
      {"checkpoint_every", cfg.train.checkpoint_every},
      {"eval_every", cfg.train.eval_every},
      {"eval_scenarios", cfg.train.eval_scenarios},
      {"early_stop_success_rate", cfg.train.early_stop_success_rate},
      {"early_stop_max_collision_rate", cfg.train.early_stop_max_collision_rate},
  };
  root["eval"] = {
      {"n_scenarios", cfg.eval.n_scenarios},
      {"seed", cfg.eval.seed},
  };
  root["ablation"] = {{"noise_stddev", cfg.ablation.noise_stddev}};
  root["out_dir"] = cfg.out_dir;
  return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a64(resolved_config_json(cfg));
}

}  // namespace lanegnn
