#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "climadapt/env.hpp"
#include "climadapt/policy.hpp"

namespace climadapt {

// Chooses one kind per zone from the current observation.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Kind> act(const EnvState& state, Rng& rng) = 0;
};

// DoNothing everywhere.
class NoControl final : public Controller {
 public:
  std::string name() const override { return "NoControl"; }
  std::vector<Kind> act(const EnvState& state, Rng& rng) override;
};

// Uniform over the unmasked kinds, DoNothing included, per zone and step.
class RandomControl final : public Controller {
 public:
  std::string name() const override { return "RandomControl"; }
  std::vector<Kind> act(const EnvState& state, Rng& rng) override;
};

// Graph policy; argmax per zone unless sampling is requested.
class PolicyControl final : public Controller {
 public:
  PolicyControl(std::shared_ptr<const GraphPolicy> policy, int horizon_steps, bool deterministic = true,
                std::string label = "Policy");
  std::string name() const override { return label_; }
  std::vector<Kind> act(const EnvState& state, Rng& rng) override;

 private:
  std::shared_ptr<const GraphPolicy> policy_;
  int horizon_;
  bool deterministic_;
  std::string label_;
};

// Fixed action table indexed by step; missing rows mean DoNothing.
class ScriptedControl final : public Controller {
 public:
  explicit ScriptedControl(std::vector<std::vector<Kind>> script) : script_(std::move(script)) {}
  std::string name() const override { return "Scripted"; }
  std::vector<Kind> act(const EnvState& state, Rng& rng) override;

 private:
  std::vector<std::vector<Kind>> script_;
};

struct StepRecord {
  int step = 0;
  int year = 0;
  double rainfall_mm = 0.0;
  double reward = 0.0;
  std::vector<Kind> actions;
  std::vector<ZoneCosts> zones;
};

// Cumulative city-wide components of one episode, DKK.
struct EpisodeTotals {
  double reward = 0.0;
  double impact = 0.0;
  double delay = 0.0;
  double cancellation = 0.0;
  double investment = 0.0;
  double maintenance = 0.0;

  double cost() const { return impact + delay + cancellation + investment + maintenance; }
};

struct EpisodeTrace {
  std::string controller;
  Scenario reality = Scenario::Rcp45;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  EpisodeTotals totals;
};

// Runs one full episode. Controller randomness is drawn from a stream
// derived from the seed, so equal seeds reproduce the trace.
EpisodeTrace run_episode(const std::shared_ptr<const CityModel>& model, Controller& controller, Scenario reality,
                         std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (ddof 0)
};
MeanStd mean_std(std::span<const double> values);

struct EvalRow {
  std::string controller;
  std::string belief;  // training scenario of the policy, "-" for baselines
  Scenario reality = Scenario::Rcp45;
  std::uint64_t seed = 0;
  EpisodeTotals totals;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EpisodeTrace> traces;  // aligned with rows

  // Mean and std across rows of one component selected by the accessor.
  MeanStd summarize(double EpisodeTotals::*field) const;
};

EvalReport evaluate(const std::shared_ptr<const CityModel>& model, Controller& controller, const std::string& belief,
                    Scenario reality, std::span<const std::uint64_t> seeds);

// One belief x reality cell; absent when the belief's policy is missing.
struct MatrixCell {
  Scenario belief = Scenario::Rcp45;
  Scenario reality = Scenario::Rcp45;
  bool present = false;
  std::string note;  // why the cell is absent
  MeanStd reward;
  std::vector<double> episode_rewards;  // per seed, DKK
};

struct ScenarioMatrix {
  std::array<std::array<MatrixCell, kNumScenarios>, kNumScenarios> cells;  // [belief][reality]
};

// Policies indexed by belief scenario; a null entry yields absent cells
// explained by the matching note.
ScenarioMatrix cross_scenario_eval(const std::shared_ptr<const CityModel>& model,
                                   const std::array<std::shared_ptr<const GraphPolicy>, kNumScenarios>& policies,
                                   const std::array<std::string, kNumScenarios>& missing_notes,
                                   std::span<const std::uint64_t> seeds);

// File exports. Every writer produces byte-identical output for equal input.
void write_trace_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces);
void write_pathways_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces);
// Per-year mean over episodes of the five components, the total cost and the reward.
void write_components_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces);
void write_summary_csv(const std::filesystem::path& path, const EvalReport& report);
void write_components_svg(const std::filesystem::path& path, std::span<const EpisodeTrace> traces,
                          const std::string& title);
// Delimited belief/reality table in units of 1e9 DKK ("mean ± std").
std::string format_matrix_table(const ScenarioMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const ScenarioMatrix& m);

// Relative change of total cost (positive means cheaper):
// (cost_baseline - cost_policy) / cost_baseline.
double cost_reduction(double policy_cost, double baseline_cost);

}  // namespace climadapt
