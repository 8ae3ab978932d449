#include "climadapt/cli.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "climadapt/config.hpp"
#include "climadapt/evaluation.hpp"
#include "climadapt/manifest.hpp"
#include "climadapt/text_io.hpp"
#include "climadapt/training.hpp"

namespace climadapt {

namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(text, ',')) {
    const std::string p = trim(part);
    if (p.empty()) throw ConfigError(fmt::format("--seeds: empty entry in '{}'", text));
    const auto dash = p.find('-', 1);
    try {
      if (dash == std::string::npos) {
        const long long v = parse_int(p, "--seeds");
        if (v < 0) throw ConfigError("");
        seeds.push_back(static_cast<std::uint64_t>(v));
      } else {
        const long long a = parse_int(p.substr(0, dash), "--seeds");
        const long long b = parse_int(p.substr(dash + 1), "--seeds");
        if (a < 0 || b < a) throw ConfigError("");
        for (long long s = a; s <= b; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("--seeds: '{}' is not a seed, a range a-b or a comma list of those", p));
    }
  }
  if (seeds.empty()) throw ConfigError("--seeds: no seeds given");
  return seeds;
}

namespace {

struct Options {
  std::string config;
  std::string city;
  std::string scenario;
  std::string belief;
  std::string reality;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::vector<std::string> checkpoints;
  std::string baseline;
  std::string actions;
  bool matrix = false;
  bool sample = false;
  std::optional<long long> max_env_steps;
  std::optional<int> zones, width, height, trips;
};

RunConfig load_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.city.empty()) c.city_bundle = fs::path(o.city);
  return c;
}

std::shared_ptr<const CityModel> make_model(const RunConfig& c) {
  return std::make_shared<const CityModel>(make_city(c), c.env);
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out: an output directory is required");
  return fs::path(o.out);
}

std::vector<std::string> scenario_names(std::initializer_list<Scenario> list) {
  std::vector<std::string> v;
  for (Scenario s : list) v.emplace_back(name_of(s));
  return v;
}

int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o);
  CitySpec spec = c.city;
  if (o.zones) spec.zones = *o.zones;
  if (o.width) spec.width = *o.width;
  if (o.height) spec.height = *o.height;
  if (o.trips) spec.trips = *o.trips;
  const std::uint64_t seed = o.seed.value_or(c.city_seed);
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    // Name the flag when the field came from one.
    static const std::map<std::string, std::string> flags = {
        {"city.zones:", "--zones"}, {"city.width/height:", "--width/--height"}, {"city.trips:", "--trips"}};
    std::string msg = e.what();
    for (const auto& [field, flag] : flags) {
      if (msg.rfind(field, 0) == 0) msg = flag + ": " + msg;
    }
    throw ConfigError(msg);
  }
  const fs::path dir = require_out(o);
  const auto city = generate_synthetic_city(spec, seed);
  auto files = save_city(city, dir);
  RunManifest m;
  m.command = "generate";
  m.config_path = o.config;
  m.seeds = {seed};
  m.output_dir = dir.string();
  m.artifacts = checksum_files(dir, files);
  append_manifest(dir, m);
  fmt::print(out, "wrote {}-zone city ({}x{} cells, {} nodes, {} edges, {} trips) to {}\n", city.num_zones(),
             city.terrain.width, city.terrain.height, city.network.nodes().size(), city.network.edges().size(),
             city.trips.trips.size(), dir.string());
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o);
  if (o.seed) c.train.seed = *o.seed;
  if (o.max_env_steps) c.train.max_env_steps = *o.max_env_steps;
  c.train.validate();
  const fs::path dir = require_out(o);
  const auto model = make_model(c);

  std::unique_ptr<Trainer> trainer;
  Scenario scenario = Scenario::Rcp45;
  if (!o.checkpoints.empty()) {
    if (o.checkpoints.size() > 1) throw ConfigError("--checkpoint: train resumes from exactly one checkpoint");
    Checkpoint ck = load_checkpoint(o.checkpoints.front());
    if (!o.scenario.empty() && require_scenario(o.scenario) != ck.scenario) {
      throw ConfigError(fmt::format("--scenario: checkpoint was trained under {}", name_of(ck.scenario)));
    }
    ck.train_config.max_env_steps = c.train.max_env_steps;
    scenario = ck.scenario;
    trainer = std::make_unique<Trainer>(model, ck);
    fmt::print(out, "resuming at update {} ({} env steps)\n", ck.progress.updates, ck.progress.env_steps);
  } else {
    if (o.scenario.empty()) throw ConfigError("--scenario: the training scenario is required");
    scenario = require_scenario(o.scenario);
    trainer = std::make_unique<Trainer>(model, scenario, c.policy, c.train);
  }
  const auto result = trainer->run(dir, [&](const TrainingLogRow& r) {
    fmt::print(out, "update {} env_steps {} mean_return {} entropy {:.3f} kl {:.4f}\n", r.update, r.env_steps,
               std::isnan(r.mean_return) ? std::string("n/a") : fmt::format("{:.4g}", r.mean_return),
               r.loss.entropy, r.approx_kl);
  });
  std::vector<fs::path> files{dir / "train_log.csv", dir / "checkpoint.json"};
  files.insert(files.end(), result.checkpoints.begin(), result.checkpoints.end());
  RunManifest m;
  m.command = "train";
  m.config_path = o.config;
  m.seeds = {result.final_state.train_config.seed};
  m.scenarios = scenario_names({scenario});
  m.output_dir = dir.string();
  m.artifacts = checksum_files(dir, files);
  append_manifest(dir, m);
  fmt::print(out, "{} after {} updates; checkpoint {}\n", result.early_stopped ? "plateau reached" : "step budget reached",
             result.final_state.progress.updates, (dir / "checkpoint.json").string());
  return kExitOk;
}

// CSV with columns step, zone, action (kind name).
std::vector<std::vector<Kind>> load_script(const fs::path& path, int zones) {
  const auto t = read_csv(path);
  const auto cs = t.column("step"), cz = t.column("zone"), ca = t.column("action");
  std::vector<std::vector<Kind>> script;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto step = parse_int(t.rows[r][cs], t.where(r));
    const auto zone = parse_int(t.rows[r][cz], t.where(r));
    const auto kind = parse_kind(trim(t.rows[r][ca]));
    if (step < 0 || zone < 0 || zone >= zones) throw DataError(fmt::format("{}: step or zone out of range", t.where(r)));
    if (!kind) throw DataError(fmt::format("{}: unknown action '{}'", t.where(r), t.rows[r][ca]));
    if (script.size() <= static_cast<std::size_t>(step)) {
      script.resize(static_cast<std::size_t>(step) + 1, std::vector<Kind>(static_cast<std::size_t>(zones), Kind::DoNothing));
    }
    script[static_cast<std::size_t>(step)][static_cast<std::size_t>(zone)] = *kind;
  }
  return script;
}

int cmd_eval_matrix(const Options& o, const RunConfig& c, const std::vector<std::uint64_t>& seeds, std::ostream& out) {
  const fs::path dir = require_out(o);
  const auto model = make_model(c);
  std::array<std::shared_ptr<const GraphPolicy>, kNumScenarios> policies;
  std::array<std::string, kNumScenarios> notes;
  for (auto& n : notes) n = "no checkpoint given";
  for (const auto& spec : o.checkpoints) {
    std::optional<Scenario> belief;
    fs::path path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      belief = require_scenario(spec.substr(0, eq));
      path = spec.substr(eq + 1);
    }
    try {
      const auto ck = load_checkpoint(path);
      if (belief && *belief != ck.scenario) {
        throw DataError(fmt::format("{}: trained under {}, listed as {}", path.string(), name_of(ck.scenario),
                                    name_of(*belief)));
      }
      policies[static_cast<std::size_t>(index_of(ck.scenario))] = policy_from_checkpoint(ck);
    } catch (const DataError& e) {
      if (!belief) throw;
      // A missing or unreadable checkpoint leaves its row absent.
      notes[static_cast<std::size_t>(index_of(*belief))] = e.what();
      fmt::print(out, "warning: {}\n", e.what());
    }
  }
  const auto m = cross_scenario_eval(model, policies, notes, seeds);
  std::vector<fs::path> files{dir / "matrix.csv", dir / "matrix.txt"};
  write_matrix_csv(files[0], m);
  write_text_file(files[1], format_matrix_table(m));
  // Per-episode totals behind every present cell.
  std::string episodes = "belief,reality,seed,total_reward_dkk\n";
  for (const auto& row : m.cells) {
    for (const auto& cell : row) {
      for (std::size_t i = 0; i < cell.episode_rewards.size(); ++i) {
        episodes += fmt::format("{},{},{},{}\n", name_of(cell.belief), name_of(cell.reality), seeds[i],
                                format_number(cell.episode_rewards[i]));
      }
    }
  }
  files.push_back(dir / "matrix_episodes.csv");
  write_text_file(files.back(), episodes);
  RunManifest man;
  man.command = "eval --matrix";
  man.config_path = o.config;
  man.seeds = seeds;
  man.scenarios = scenario_names({Scenario::Rcp26, Scenario::Rcp45, Scenario::Rcp85});
  man.output_dir = dir.string();
  man.artifacts = checksum_files(dir, files);
  append_manifest(dir, man);
  out << format_matrix_table(m);
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o);
  const auto seeds = o.seeds.empty() ? c.eval.seeds : parse_seed_list(o.seeds);
  if (o.matrix) {
    if (!o.baseline.empty() || !o.actions.empty()) throw ConfigError("--matrix: evaluates checkpoints only");
    return cmd_eval_matrix(o, c, seeds, out);
  }
  if (o.reality.empty()) throw ConfigError("--reality: the evaluation scenario is required");
  const Scenario reality = require_scenario(o.reality);
  const int sources = (o.checkpoints.empty() ? 0 : 1) + (o.baseline.empty() ? 0 : 1) + (o.actions.empty() ? 0 : 1);
  if (sources != 1) throw ConfigError("--checkpoint/--baseline/--actions: give exactly one controller");
  if (o.checkpoints.size() > 1) throw ConfigError("--checkpoint: give one checkpoint (or use --matrix)");

  const auto model = make_model(c);
  std::unique_ptr<Controller> controller;
  std::string belief = "-";
  if (!o.checkpoints.empty()) {
    const auto ck = load_checkpoint(o.checkpoints.front());
    belief = std::string(name_of(ck.scenario));
    if (!o.belief.empty() && require_scenario(o.belief) != ck.scenario) {
      throw ConfigError(fmt::format("--belief: checkpoint was trained under {}", belief));
    }
    controller = std::make_unique<PolicyControl>(policy_from_checkpoint(ck), model->horizon_steps(),
                                                 c.eval.deterministic && !o.sample);
  } else if (!o.baseline.empty()) {
    if (o.baseline == "NoControl") {
      controller = std::make_unique<NoControl>();
    } else if (o.baseline == "RandomControl") {
      controller = std::make_unique<RandomControl>();
    } else {
      throw ConfigError(fmt::format("--baseline: '{}' is not one of NoControl, RandomControl", o.baseline));
    }
    if (!o.belief.empty()) belief = std::string(name_of(require_scenario(o.belief)));
  } else {
    controller = std::make_unique<ScriptedControl>(load_script(o.actions, model->num_zones()));
  }

  const fs::path dir = require_out(o);
  const auto report = evaluate(model, *controller, belief, reality, seeds);
  std::vector<fs::path> files{dir / "trace.csv", dir / "pathways.csv", dir / "components.csv", dir / "summary.csv",
                              dir / "components.svg"};
  write_trace_csv(files[0], report.traces);
  write_pathways_csv(files[1], report.traces);
  write_components_csv(files[2], report.traces);
  write_summary_csv(files[3], report);
  write_components_svg(files[4], report.traces,
                       fmt::format("{} under {}: mean annual cost components", controller->name(), name_of(reality)));
  RunManifest m;
  m.command = "eval";
  m.config_path = o.config;
  m.seeds = seeds;
  m.scenarios = scenario_names({reality});
  m.output_dir = dir.string();
  m.artifacts = checksum_files(dir, files);
  append_manifest(dir, m);

  const auto r = report.summarize(&EpisodeTotals::reward);
  fmt::print(out, "{} (belief {}, reality {}) over {} seeds\n", controller->name(), belief, name_of(reality),
             seeds.size());
  fmt::print(out, "  total reward {:.4e} ± {:.3e} DKK ({:.4e} EUR)\n", r.mean, r.std, r.mean * c.eur_per_dkk);
  const std::array<std::pair<const char*, double EpisodeTotals::*>, 5> comps = {
      {{"impact I", &EpisodeTotals::impact},
       {"delay D", &EpisodeTotals::delay},
       {"cancellation C", &EpisodeTotals::cancellation},
       {"investment A", &EpisodeTotals::investment},
       {"maintenance M", &EpisodeTotals::maintenance}}};
  for (const auto& [label, field] : comps) {
    const auto s = report.summarize(field);
    fmt::print(out, "  {:<15} {:.4e} ± {:.3e} DKK\n", label, s.mean, s.std);
  }
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  if (!o.checkpoints.empty()) {
    for (const auto& path : o.checkpoints) {
      const auto ck = load_checkpoint(path);
      const auto p = policy_from_checkpoint(ck);
      fmt::print(out, "checkpoint {}\n  scenario {}\n  updates {} env_steps {} episodes {}\n  parameters {}\n", path,
                 name_of(ck.scenario), ck.progress.updates, ck.progress.env_steps, ck.progress.episodes,
                 p->num_params());
      for (const auto& t : p->tensors()) fmt::print(out, "  {:<24} {}x{}\n", t.name, t.rows, t.cols);
    }
    return kExitOk;
  }
  RunConfig c = load_config(o);
  const auto model = make_model(c);
  const auto& city = model->city();
  fmt::print(out, "city: {} zones, {}x{} cells of {} m, {} nodes, {} edges, {} trips\n", city.num_zones(),
             city.terrain.width, city.terrain.height, format_number(city.terrain.cell_size_m),
             city.network.nodes().size(), city.network.edges().size(), city.trips.trips.size());
  fmt::print(out, "horizon {}-{} ({} steps)\n", c.env.horizon.first_year, c.env.horizon.last_year,
             model->horizon_steps());
  fmt::print(out, "zone  area_m2  green  slope  road_m  allowed\n");
  for (int z = 0; z < city.num_zones(); ++z) {
    const auto& a = model->zone_attributes()[static_cast<std::size_t>(z)];
    std::string allowed;
    for (int k = 1; k < kNumKinds; ++k) {
      if (model->applicable(z, kind_at(k))) allowed += fmt::format("{}{}", allowed.empty() ? "" : ",", name_of(kind_at(k)));
    }
    fmt::print(out, "{:<5} {:<8.0f} {:<6.2f} {:<6.3f} {:<7.0f} {}\n", z, a.area_m2, a.green_fraction, a.mean_slope,
               a.road_length_m, allowed);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Climate adaptation planning: city generation, training and evaluation", "climadapt"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "write a synthetic city bundle");
  gen->add_option("--config", o.config, "run config (JSON)");
  gen->add_option("--seed", o.seed, "city seed");
  gen->add_option("--zones", o.zones, "number of zones");
  gen->add_option("--width", o.width, "terrain width in cells");
  gen->add_option("--height", o.height, "terrain height in cells");
  gen->add_option("--trips", o.trips, "number of trips");
  gen->add_option("--out", o.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a graph policy with PPO");
  train->add_option("--config", o.config, "run config (JSON)");
  train->add_option("--city", o.city, "city bundle directory (overrides the config)");
  train->add_option("--scenario", o.scenario, "training (belief) scenario: RCP2.6, RCP4.5 or RCP8.5");
  train->add_option("--seed", o.seed, "training seed");
  train->add_option("--max-env-steps", o.max_env_steps, "environment step budget");
  train->add_option("--checkpoint", o.checkpoints, "resume from this checkpoint");
  train->add_option("--out", o.out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, a baseline or an action script");
  eval->add_option("--config", o.config, "run config (JSON)");
  eval->add_option("--city", o.city, "city bundle directory (overrides the config)");
  eval->add_option("--checkpoint", o.checkpoints, "checkpoint; with --matrix, [BELIEF=]PATH per belief");
  eval->add_option("--baseline", o.baseline, "NoControl or RandomControl");
  eval->add_option("--actions", o.actions, "scripted actions CSV (step,zone,action)");
  eval->add_option("--belief", o.belief, "belief scenario label");
  eval->add_option("--reality", o.reality, "evaluation scenario");
  eval->add_option("--seeds", o.seeds, "seeds: 7, 0-9 or 1,3,5");
  eval->add_flag("--matrix", o.matrix, "belief x reality matrix over all scenarios");
  eval->add_flag("--sample", o.sample, "sample policy actions instead of argmax");
  eval->add_option("--out", o.out, "output directory")->required();

  auto* inspect = app.add_subcommand("inspect", "summarize a city or checkpoints");
  inspect->add_option("--config", o.config, "run config (JSON)");
  inspect->add_option("--city", o.city, "city bundle directory");
  inspect->add_option("--checkpoint", o.checkpoints, "checkpoint file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    return cmd_inspect(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << "\n";
    if (!o.out.empty()) {
      const auto path = fs::path(o.out) / "diverged_params.json";
      write_text_file(path, nlohmann::json(std::vector<double>(e.snapshot().data(),
                                                               e.snapshot().data() + e.snapshot().size()))
                                .dump() +
                                "\n");
      err << "parameter snapshot written to " << path.string() << "\n";
    }
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace climadapt
