#include "climadapt/config.hpp"

#include <set>

#include <fmt/format.h>

#include "climadapt/text_io.hpp"

namespace climadapt {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", label()));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, double& out) {
    if (const json* v = child(key)) {
      if (!v->is_number()) throw ConfigError(fmt::format("{}: expected a number", field(key)));
      out = v->get<double>();
    }
  }
  void get(const std::string& key, int& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", field(key)));
      out = v->get<int>();
    }
  }
  void get(const std::string& key, long long& out) {
    if (const json* v = child(key)) {
      if (v->is_number_float() && v->get<double>() == static_cast<double>(static_cast<long long>(v->get<double>()))) {
        out = static_cast<long long>(v->get<double>());  // allow 4.5e6
        return;
      }
      if (!v->is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", field(key)));
      out = v->get<long long>();
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a non-negative integer", field(key)));
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const json* v = child(key)) {
      if (!v->is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", field(key)));
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = child(key)) {
      if (!v->is_string()) throw ConfigError(fmt::format("{}: expected a string", field(key)));
      out = v->get<std::string>();
    }
  }
  void get_optional(const std::string& key, std::optional<double>& out) {
    if (const json* v = child(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ConfigError(fmt::format("{}: expected a number or null", field(key)));
      }
    }
  }
  void get_modes(const std::string& key, std::array<double, kNumModes>& out) {
    if (const json* v = child(key)) {
      Section s(*v, field(key));
      for (int m = 0; m < kNumModes; ++m) s.get(std::string(kModeNames[static_cast<std::size_t>(m)]), out[static_cast<std::size_t>(m)]);
      s.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(fmt::format("{}: unknown key", field(it.key())));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void parse_catalog(const json& j, InterventionCatalog& cat) {
  Section s(j, "catalog");
  for (int k = 1; k < kNumKinds; ++k) {
    const std::string name(kKindNames[static_cast<std::size_t>(k)]);
    const json* v = s.child(name);
    if (!v) continue;
    Section e(*v, s.field(name));
    auto& spec = cat[kind_at(k)];
    e.get("capacity_m3", spec.capacity_m3);
    e.get("lifetime_years", spec.lifetime_years);
    e.get("implementation_cost_dkk", spec.implementation_cost_dkk);
    e.get("maintenance_cost_dkk_per_year", spec.maintenance_cost_dkk_per_year);
    e.get_optional("min_green_fraction", spec.applicability.min_green_fraction);
    e.get_optional("max_slope", spec.applicability.max_slope);
    e.get_optional("min_road_length_m", spec.applicability.min_road_length_m);
    e.finish();
  }
  s.finish();
}

void parse_valuation(const json& j, ValuationParams& v) {
  Section s(j, "valuation");
  if (const json* curve = s.child("damage_curve")) {
    if (!curve->is_array()) throw ConfigError("valuation.damage_curve: expected an array of [depth_m, fraction] pairs");
    std::vector<DepthDamageCurve::Knot> knots;
    for (std::size_t i = 0; i < curve->size(); ++i) {
      const json& p = (*curve)[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ConfigError(fmt::format("valuation.damage_curve[{}]: expected [depth_m, fraction]", i));
      }
      knots.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    v.damage_curve = DepthDamageCurve(std::move(knots));
  }
  s.get_modes("value_of_time_dkk_per_hour", v.value_of_time_dkk_per_hour);
  s.get_modes("cancelled_trip_cost_dkk", v.cancelled_trip_cost_dkk);
  s.get("annualization", v.annualization);
  s.finish();
}

void parse_city_spec(const json& j, CitySpec& c) {
  Section s(j, "city");
  s.get("zones", c.zones);
  s.get("width", c.width);
  s.get("height", c.height);
  s.get("cell_size_m", c.cell_size_m);
  s.get("trips", c.trips);
  s.get("street_stride", c.street_stride);
  s.get("depressions", c.depressions);
  s.get("relief_m", c.relief_m);
  s.get("trip_weight", c.trip_weight);
  s.finish();
}

}  // namespace

nlohmann::json to_json(const PolicyConfig& c) {
  return json{{"hidden", c.hidden},
              {"layers", c.layers},
              {"aggregation", c.aggregation == Aggregation::Mean ? "mean" : "sum"},
              {"feature_clip", c.feature_clip}};
}

PolicyConfig parse_policy_config(const nlohmann::json& j, const std::string& where) {
  PolicyConfig c;
  Section s(j, where);
  s.get("hidden", c.hidden);
  s.get("layers", c.layers);
  std::string agg = c.aggregation == Aggregation::Mean ? "mean" : "sum";
  s.get("aggregation", agg);
  if (agg == "mean") {
    c.aggregation = Aggregation::Mean;
  } else if (agg == "sum") {
    c.aggregation = Aggregation::Sum;
  } else {
    throw ConfigError(fmt::format("{}: '{}' is not one of mean, sum", s.field("aggregation"), agg));
  }
  s.get("feature_clip", c.feature_clip);
  s.finish();
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"rollout_steps_per_update", c.rollout_steps_per_update},
              {"epochs_per_update", c.epochs_per_update},
              {"entropy_coefficient", c.entropy_coefficient},
              {"value_coefficient", c.value_coefficient},
              {"kl_limit", c.kl_limit},
              {"clip_range", c.clip_range},
              {"learning_rate", c.learning_rate},
              {"max_grad_norm", c.max_grad_norm},
              {"parallel_envs", c.parallel_envs},
              {"worker_threads", c.worker_threads},
              {"max_env_steps", c.max_env_steps},
              {"early_stop_patience", c.early_stop_patience},
              {"early_stop_min_improvement", c.early_stop_min_improvement},
              {"gamma", c.gamma},
              {"gae_lambda", c.gae_lambda},
              {"reward_scale", c.reward_scale},
              {"normalize_advantages", c.normalize_advantages},
              {"seed", c.seed},
              {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig parse_train_config(const nlohmann::json& j, const std::string& where) {
  TrainConfig c;
  Section s(j, where);
  s.get("batch_size", c.batch_size);
  s.get("rollout_steps_per_update", c.rollout_steps_per_update);
  s.get("epochs_per_update", c.epochs_per_update);
  s.get("entropy_coefficient", c.entropy_coefficient);
  s.get("value_coefficient", c.value_coefficient);
  s.get("kl_limit", c.kl_limit);
  s.get("clip_range", c.clip_range);
  s.get("learning_rate", c.learning_rate);
  s.get("max_grad_norm", c.max_grad_norm);
  s.get("parallel_envs", c.parallel_envs);
  s.get("worker_threads", c.worker_threads);
  s.get("max_env_steps", c.max_env_steps);
  s.get("early_stop_patience", c.early_stop_patience);
  s.get("early_stop_min_improvement", c.early_stop_min_improvement);
  s.get("gamma", c.gamma);
  s.get("gae_lambda", c.gae_lambda);
  s.get("reward_scale", c.reward_scale);
  s.get("normalize_advantages", c.normalize_advantages);
  s.get("seed", c.seed);
  s.get("checkpoint_every", c.checkpoint_every);
  s.finish();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (!city_bundle) city.validate();
  env.validate();
  policy.validate();
  train.validate();
  if (eval.seeds.empty()) throw ConfigError("eval.seeds: at least one seed is required");
  if (!(eur_per_dkk > 0.0)) throw ConfigError("display.eur_per_dkk: must be > 0");
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section s(j, "");
  std::string bundle;
  s.get("city_bundle", bundle);
  if (!bundle.empty()) c.city_bundle = resolve(base_dir, bundle);
  if (const json* v = s.child("city")) parse_city_spec(*v, c.city);
  s.get("city_seed", c.city_seed);

  if (const json* v = s.child("horizon")) {
    Section h(*v, "horizon");
    h.get("first_year", c.env.horizon.first_year);
    h.get("last_year", c.env.horizon.last_year);
    h.finish();
  }
  if (const json* v = s.child("forcing")) {
    Section f(*v, "forcing");
    f.get("blend_slices", c.env.forcing.blend_slices);
    if (const json* files = f.child("scenario_files")) {
      Section sf(*files, "forcing.scenario_files");
      for (Scenario sc : kAllScenarios) {
        std::string path;
        sf.get(std::string(name_of(sc)), path);
        if (!path.empty()) c.env.scenarios[static_cast<std::size_t>(index_of(sc))] = load_scenario_stats(resolve(base_dir, path));
      }
      sf.finish();
    }
    f.finish();
  }
  std::string boundary = c.env.boundary == BoundaryMode::Open ? "open" : "closed";
  s.get("boundary", boundary);
  if (boundary == "open") {
    c.env.boundary = BoundaryMode::Open;
  } else if (boundary == "closed") {
    c.env.boundary = BoundaryMode::Closed;
  } else {
    throw ConfigError(fmt::format("boundary: '{}' is not one of open, closed", boundary));
  }
  std::string element = c.env.element_depth == ElementDepthMode::Max ? "max" : "mean";
  s.get("element_depth", element);
  if (element == "max") {
    c.env.element_depth = ElementDepthMode::Max;
  } else if (element == "mean") {
    c.env.element_depth = ElementDepthMode::Mean;
  } else {
    throw ConfigError(fmt::format("element_depth: '{}' is not one of max, mean", element));
  }
  if (const json* v = s.child("disruption")) {
    Section d(*v, "disruption");
    d.get_modes("cutoff_m", c.env.disruption.cutoff_m);
    d.get("linear_coefficient", c.env.disruption.linear_coefficient);
    d.get_modes("max_speed_kmh", c.env.disruption.max_speed_kmh);
    d.finish();
  }
  if (const json* v = s.child("valuation")) parse_valuation(*v, c.env.valuation);
  if (const json* v = s.child("catalog")) parse_catalog(*v, c.env.catalog);
  if (const json* v = s.child("decay")) {
    Section d(*v, "decay");
    std::string schedule = c.env.decay.schedule == DecaySchedule::Linear ? "linear" : "exponential";
    d.get("schedule", schedule);
    if (schedule == "linear") {
      c.env.decay.schedule = DecaySchedule::Linear;
    } else if (schedule == "exponential") {
      c.env.decay.schedule = DecaySchedule::Exponential;
    } else {
      throw ConfigError(fmt::format("decay.schedule: '{}' is not one of linear, exponential", schedule));
    }
    d.get("half_life_years", c.env.decay.half_life_years);
    d.finish();
  }
  s.get("resample_trips_on_reset", c.env.resample_trips_on_reset);
  if (const json* v = s.child("policy")) c.policy = parse_policy_config(*v);
  if (const json* v = s.child("train")) c.train = parse_train_config(*v);
  if (const json* v = s.child("eval")) {
    Section e(*v, "eval");
    if (const json* seeds = e.child("seeds")) {
      if (!seeds->is_array()) throw ConfigError("eval.seeds: expected an array of non-negative integers");
      c.eval.seeds.clear();
      for (std::size_t i = 0; i < seeds->size(); ++i) {
        if (!(*seeds)[i].is_number_unsigned()) throw ConfigError(fmt::format("eval.seeds[{}]: expected a non-negative integer", i));
        c.eval.seeds.push_back((*seeds)[i].get<std::uint64_t>());
      }
    }
    e.get("deterministic", c.eval.deterministic);
    e.finish();
  }
  if (const json* v = s.child("display")) {
    Section d(*v, "display");
    d.get("eur_per_dkk", c.eur_per_dkk);
    d.finish();
  }
  s.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
  return parse_run_config(j, path.parent_path());
}

CityBundle make_city(const RunConfig& config) {
  if (config.city_bundle) return load_city(*config.city_bundle);
  return generate_synthetic_city(config.city, config.city_seed);
}

}  // namespace climadapt
