#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "doctest.h"

#include "climadapt/evaluation.hpp"
#include "climadapt/text_io.hpp"
#include "support/toy_city.hpp"

using namespace climadapt;

namespace {

std::shared_ptr<const CityModel> small_model() {
  static const auto model = std::make_shared<const CityModel>(generate_synthetic_city(CitySpec{}, 7), EnvConfig{});
  return model;
}

std::filesystem::path scratch_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "climadapt_unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("NoControl never invests or pays maintenance") {
  NoControl ctl;
  const auto trace = run_episode(small_model(), ctl, Scenario::Rcp85, 3);
  CHECK(trace.steps.size() == static_cast<std::size_t>(small_model()->horizon_steps()));
  CHECK(trace.totals.investment == 0.0);
  CHECK(trace.totals.maintenance == 0.0);
  CHECK(trace.totals.impact > 0.0);
  for (const auto& s : trace.steps) {
    for (Kind k : s.actions) CHECK(k == Kind::DoNothing);
  }
}

TEST_CASE("episode totals reconcile with step records and rewards") {
  RandomControl ctl;
  const auto trace = run_episode(small_model(), ctl, Scenario::Rcp45, 11);
  double reward = 0.0;
  EpisodeTotals sum;
  for (const auto& s : trace.steps) {
    double step_cost = 0.0;
    for (const auto& z : s.zones) {
      step_cost += z.total();
      sum.impact += z.impact_dkk;
      sum.delay += z.delay_dkk;
      sum.cancellation += z.cancellation_dkk;
      sum.investment += z.investment_dkk;
      sum.maintenance += z.maintenance_dkk;
    }
    CHECK(rel_err(s.reward, -step_cost) < 1e-12);
    reward += s.reward;
  }
  CHECK(rel_err(trace.totals.reward, reward) < 1e-12);
  CHECK(rel_err(trace.totals.reward, -trace.totals.cost()) < 1e-9);
  CHECK(rel_err(trace.totals.investment, sum.investment) < 1e-12);
  CHECK(rel_err(trace.totals.maintenance, sum.maintenance) < 1e-12);
  CHECK(trace.totals.investment > 0.0);
}

TEST_CASE("RandomControl is uniform over the unmasked kinds") {
  EnvState s;
  s.num_zones = 2;
  s.mask.assign(2 * kNumKinds, 1);
  // Zone 0 allows DoNothing, Soakaway and GridPavers only.
  for (int k = 0; k < kNumKinds; ++k) s.mask[static_cast<std::size_t>(k)] = 0;
  s.mask[index_of(Kind::DoNothing)] = 1;
  s.mask[index_of(Kind::Soakaway)] = 1;
  s.mask[index_of(Kind::GridPavers)] = 1;
  RandomControl ctl;
  Rng rng(5);
  const int n = 10000;
  std::vector<std::vector<int>> counts(2, std::vector<int>(kNumKinds, 0));
  for (int i = 0; i < n; ++i) {
    const auto a = ctl.act(s, rng);
    for (int z = 0; z < 2; ++z) {
      REQUIRE(s.allowed(z, a[static_cast<std::size_t>(z)]));
      ++counts[static_cast<std::size_t>(z)][static_cast<std::size_t>(index_of(a[static_cast<std::size_t>(z)]))];
    }
  }
  for (int k = 0; k < kNumKinds; ++k) {
    const double f0 = counts[0][static_cast<std::size_t>(k)] / static_cast<double>(n);
    const double f1 = counts[1][static_cast<std::size_t>(k)] / static_cast<double>(n);
    CHECK(std::abs(f0 - (s.allowed(0, kind_at(k)) ? 1.0 / 3.0 : 0.0)) < 0.02);
    CHECK(std::abs(f1 - 1.0 / kNumKinds) < 0.02);
  }
}

TEST_CASE("RandomControl with only DoNothing allowed does nothing") {
  EnvState s;
  s.num_zones = 1;
  s.mask.assign(kNumKinds, 0);
  s.mask[0] = 1;
  RandomControl ctl;
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(ctl.act(s, rng)[0] == Kind::DoNothing);
}

TEST_CASE("ScriptedControl pads with DoNothing") {
  const auto model = testing::toy_model(40.0);
  ScriptedControl ctl({{Kind::Soakaway}});
  const auto trace = run_episode(model, ctl, Scenario::Rcp45, 0);
  CHECK(trace.steps[0].actions[0] == Kind::Soakaway);
  CHECK(trace.steps[0].zones[0].investment_dkk == doctest::Approx(1000.0));
  CHECK(trace.steps[1].actions[0] == Kind::DoNothing);
}

TEST_CASE("mean_std is the population statistic") {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  const auto ms = mean_std(v);
  CHECK(ms.mean == doctest::Approx(2.0));
  CHECK(ms.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{}).mean == 0.0);
}

TEST_CASE("cost_reduction is relative to the baseline") {
  CHECK(cost_reduction(60.0, 100.0) == doctest::Approx(0.4));
  CHECK(cost_reduction(150.0, 100.0) == doctest::Approx(-0.5));
}

TEST_CASE("equal seeds give byte-identical exports") {
  const std::vector<std::uint64_t> seeds = {4, 5};
  auto export_once = [&](const char* name) {
    RandomControl ctl;
    const auto report = evaluate(small_model(), ctl, "-", Scenario::Rcp26, seeds);
    const auto dir = scratch_dir(name);
    write_trace_csv(dir / "trace.csv", report.traces);
    write_pathways_csv(dir / "pathways.csv", report.traces);
    write_components_csv(dir / "components.csv", report.traces);
    write_summary_csv(dir / "summary.csv", report);
    write_components_svg(dir / "components.svg", report.traces, "test");
    return dir;
  };
  const auto a = export_once("export_a");
  const auto b = export_once("export_b");
  for (const char* f : {"trace.csv", "pathways.csv", "components.csv", "summary.csv", "components.svg"}) {
    CAPTURE(f);
    CHECK(read_text_file(a / f) == read_text_file(b / f));
  }
  const auto pathways = read_text_file(a / "pathways.csv");
  CHECK(pathways.rfind("controller,reality,seed,zone,2024,", 0) == 0);
}

TEST_CASE("scenario matrix reconciles with single evaluations and marks absent beliefs") {
  const auto model = testing::toy_model(35.0);
  PolicyConfig pc;
  pc.hidden = 8;
  pc.layers = 1;
  std::array<std::shared_ptr<const GraphPolicy>, kNumScenarios> policies = {
      std::make_shared<const GraphPolicy>(pc, 1), nullptr, std::make_shared<const GraphPolicy>(pc, 2)};
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const auto m = cross_scenario_eval(model, policies, {"", "run diverged", ""}, seeds);
  int present = 0;
  for (Scenario b : kAllScenarios) {
    for (Scenario r : kAllScenarios) {
      const auto& cell = m.cells[static_cast<std::size_t>(index_of(b))][static_cast<std::size_t>(index_of(r))];
      CHECK(cell.belief == b);
      CHECK(cell.reality == r);
      if (b == Scenario::Rcp45) {
        CHECK_FALSE(cell.present);
        CHECK(cell.note == "run diverged");
        continue;
      }
      ++present;
      REQUIRE(cell.episode_rewards.size() == seeds.size());
      PolicyControl ctl(policies[static_cast<std::size_t>(index_of(b))], model->horizon_steps());
      const auto report = evaluate(model, ctl, std::string(name_of(b)), r, seeds);
      for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(cell.episode_rewards[i] == report.rows[i].totals.reward);
      CHECK(cell.reward.mean == doctest::Approx(report.summarize(&EpisodeTotals::reward).mean));
    }
  }
  CHECK(present == 6);
  const auto table = format_matrix_table(m);
  CHECK(table.find("absent (run diverged)") != std::string::npos);
  CHECK(table.find("Belief | Reality") != std::string::npos);
}
