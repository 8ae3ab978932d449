#include "climadapt/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "climadapt/text_io.hpp"

namespace climadapt {

std::vector<Kind> NoControl::act(const EnvState& state, Rng&) {
  return std::vector<Kind>(static_cast<std::size_t>(state.num_zones), Kind::DoNothing);
}

std::vector<Kind> RandomControl::act(const EnvState& state, Rng& rng) {
  std::vector<Kind> out;
  std::vector<Kind> allowed;
  for (int z = 0; z < state.num_zones; ++z) {
    allowed.clear();
    for (int k = 0; k < kNumKinds; ++k) {
      if (state.allowed(z, kind_at(k))) allowed.push_back(kind_at(k));
    }
    out.push_back(allowed[uniform_index(rng, allowed.size())]);
  }
  return out;
}

PolicyControl::PolicyControl(std::shared_ptr<const GraphPolicy> policy, int horizon_steps, bool deterministic,
                             std::string label)
    : policy_(std::move(policy)), horizon_(horizon_steps), deterministic_(deterministic), label_(std::move(label)) {
  if (!policy_) throw ContractViolation("policy controller needs a policy");
}

std::vector<Kind> PolicyControl::act(const EnvState& state, Rng& rng) {
  return policy_->act(policy_->prepare(state, horizon_), rng, deterministic_).actions;
}

std::vector<Kind> ScriptedControl::act(const EnvState& state, Rng&) {
  const auto t = static_cast<std::size_t>(state.step);
  if (t < script_.size()) return script_[t];
  return std::vector<Kind>(static_cast<std::size_t>(state.num_zones), Kind::DoNothing);
}

EpisodeTrace run_episode(const std::shared_ptr<const CityModel>& model, Controller& controller, Scenario reality,
                         std::uint64_t seed) {
  Environment env(model);
  env.reset(reality, seed);
  Rng rng(derive_seed(seed, 0xC0DE));
  EpisodeTrace trace;
  trace.controller = controller.name();
  trace.reality = reality;
  trace.seed = seed;
  while (!env.done()) {
    const auto actions = controller.act(env.state(), rng);
    auto r = env.step(actions);
    StepRecord rec;
    rec.step = r.event.step_index;
    rec.year = r.event.year;
    rec.rainfall_mm = r.event.depth_mm;
    rec.reward = r.reward;
    rec.actions = std::move(r.actions);
    rec.zones = std::move(r.costs.zones);
    auto& t = trace.totals;
    t.reward += rec.reward;
    for (const auto& z : rec.zones) {
      t.impact += z.impact_dkk;
      t.delay += z.delay_dkk;
      t.cancellation += z.cancellation_dkk;
      t.investment += z.investment_dkk;
      t.maintenance += z.maintenance_dkk;
    }
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

MeanStd EvalReport::summarize(double EpisodeTotals::*field) const {
  std::vector<double> v;
  for (const auto& row : rows) v.push_back(row.totals.*field);
  return mean_std(v);
}

EvalReport evaluate(const std::shared_ptr<const CityModel>& model, Controller& controller, const std::string& belief,
                    Scenario reality, std::span<const std::uint64_t> seeds) {
  EvalReport report;
  for (std::uint64_t seed : seeds) {
    auto trace = run_episode(model, controller, reality, seed);
    report.rows.push_back({controller.name(), belief, reality, seed, trace.totals});
    report.traces.push_back(std::move(trace));
  }
  return report;
}

ScenarioMatrix cross_scenario_eval(const std::shared_ptr<const CityModel>& model,
                                   const std::array<std::shared_ptr<const GraphPolicy>, kNumScenarios>& policies,
                                   const std::array<std::string, kNumScenarios>& missing_notes,
                                   std::span<const std::uint64_t> seeds) {
  ScenarioMatrix m;
  for (Scenario belief : kAllScenarios) {
    const auto b = static_cast<std::size_t>(index_of(belief));
    for (Scenario reality : kAllScenarios) {
      auto& cell = m.cells[b][static_cast<std::size_t>(index_of(reality))];
      cell.belief = belief;
      cell.reality = reality;
      if (!policies[b]) {
        cell.note = missing_notes[b].empty() ? "no policy" : missing_notes[b];
        continue;
      }
      PolicyControl ctl(policies[b], model->horizon_steps());
      for (std::uint64_t seed : seeds) cell.episode_rewards.push_back(run_episode(model, ctl, reality, seed).totals.reward);
      cell.reward = mean_std(cell.episode_rewards);
      cell.present = true;
    }
  }
  return m;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces) {
  std::string out = "controller,reality,seed,step,year,rainfall_mm,zone,action,impact_dkk,delay_dkk,"
                    "cancellation_dkk,investment_dkk,maintenance_dkk,zone_total_dkk,step_reward_dkk\n";
  for (const auto& tr : traces) {
    for (const auto& s : tr.steps) {
      for (std::size_t z = 0; z < s.zones.size(); ++z) {
        const auto& c = s.zones[z];
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", tr.controller, name_of(tr.reality), tr.seed,
                           s.step, s.year, format_number(s.rainfall_mm), z, name_of(s.actions[z]),
                           format_number(c.impact_dkk), format_number(c.delay_dkk), format_number(c.cancellation_dkk),
                           format_number(c.investment_dkk), format_number(c.maintenance_dkk), format_number(c.total()),
                           format_number(s.reward));
      }
    }
  }
  write_text_file(path, out);
}

void write_pathways_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces) {
  std::string out = "controller,reality,seed,zone";
  if (!traces.empty()) {
    for (const auto& s : traces.front().steps) out += fmt::format(",{}", s.year);
  }
  out += '\n';
  for (const auto& tr : traces) {
    const std::size_t zones = tr.steps.empty() ? 0 : tr.steps.front().actions.size();
    for (std::size_t z = 0; z < zones; ++z) {
      out += fmt::format("{},{},{},{}", tr.controller, name_of(tr.reality), tr.seed, z);
      for (const auto& s : tr.steps) out += fmt::format(",{}", name_of(s.actions[z]));
      out += '\n';
    }
  }
  write_text_file(path, out);
}

namespace {

struct YearSeries {
  std::vector<int> years;
  std::vector<std::array<double, 5>> components;  // I, D, C, A, M
  std::vector<double> reward;
};

YearSeries mean_by_year(std::span<const EpisodeTrace> traces) {
  YearSeries ys;
  if (traces.empty()) return ys;
  const std::size_t n = traces.front().steps.size();
  ys.components.assign(n, {0, 0, 0, 0, 0});
  ys.reward.assign(n, 0.0);
  for (const auto& s : traces.front().steps) ys.years.push_back(s.year);
  for (const auto& tr : traces) {
    if (tr.steps.size() != n) throw ShapeError("episodes of different length cannot be averaged by year");
    for (std::size_t t = 0; t < n; ++t) {
      for (const auto& c : tr.steps[t].zones) {
        ys.components[t][0] += c.impact_dkk;
        ys.components[t][1] += c.delay_dkk;
        ys.components[t][2] += c.cancellation_dkk;
        ys.components[t][3] += c.investment_dkk;
        ys.components[t][4] += c.maintenance_dkk;
      }
      ys.reward[t] += tr.steps[t].reward;
    }
  }
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (std::size_t t = 0; t < n; ++t) {
    for (double& v : ys.components[t]) v *= inv;
    ys.reward[t] *= inv;
  }
  return ys;
}

constexpr std::array<const char*, 5> kComponentNames = {"impact_dkk", "delay_dkk", "cancellation_dkk",
                                                        "investment_dkk", "maintenance_dkk"};

}  // namespace

void write_components_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces) {
  const auto ys = mean_by_year(traces);
  std::string out = "year";
  for (const char* c : kComponentNames) out += fmt::format(",{}", c);
  out += ",total_cost_dkk,reward_dkk\n";
  for (std::size_t t = 0; t < ys.years.size(); ++t) {
    out += fmt::format("{}", ys.years[t]);
    double total = 0.0;
    for (double v : ys.components[t]) {
      out += fmt::format(",{}", format_number(v));
      total += v;
    }
    out += fmt::format(",{},{}\n", format_number(total), format_number(ys.reward[t]));
  }
  write_text_file(path, out);
}

void write_summary_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::string out = "controller,belief,reality,seed,total_reward_dkk,impact_dkk,delay_dkk,cancellation_dkk,"
                    "investment_dkk,maintenance_dkk\n";
  auto line = [&](const std::string& ctl, const std::string& belief, const std::string& reality,
                  const std::string& seed, const std::array<double, 6>& v) {
    out += fmt::format("{},{},{},{}", ctl, belief, reality, seed);
    for (double x : v) out += fmt::format(",{}", format_number(x));
    out += '\n';
  };
  for (const auto& r : report.rows) {
    const auto& t = r.totals;
    line(r.controller, r.belief, std::string(name_of(r.reality)), std::to_string(r.seed),
         {t.reward, t.impact, t.delay, t.cancellation, t.investment, t.maintenance});
  }
  if (!report.rows.empty()) {
    const auto& f = report.rows.front();
    std::array<double EpisodeTotals::*, 6> fields = {&EpisodeTotals::reward,       &EpisodeTotals::impact,
                                                     &EpisodeTotals::delay,        &EpisodeTotals::cancellation,
                                                     &EpisodeTotals::investment,   &EpisodeTotals::maintenance};
    std::array<double, 6> mean{}, sd{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto s = report.summarize(fields[i]);
      mean[i] = s.mean;
      sd[i] = s.std;
    }
    line(f.controller, f.belief, std::string(name_of(f.reality)), "mean", mean);
    line(f.controller, f.belief, std::string(name_of(f.reality)), "std", sd);
  }
  write_text_file(path, out);
}

void write_components_svg(const std::filesystem::path& path, std::span<const EpisodeTrace> traces,
                          const std::string& title) {
  const auto ys = mean_by_year(traces);
  constexpr double w = 720, h = 400, left = 80, right = 170, top = 40, bottom = 50;
  constexpr std::array<const char*, 5> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  constexpr std::array<const char*, 5> labels = {"Impact (I)", "Delay (D)", "Cancellation (C)", "Investment (A)",
                                                 "Maintenance (M)"};
  double ymax = 0.0;
  for (const auto& c : ys.components) {
    for (double v : c) ymax = std::max(ymax, v);
  }
  if (ymax <= 0.0) ymax = 1.0;
  const std::size_t n = ys.years.size();
  auto px = [&](std::size_t t) { return left + (n > 1 ? (w - left - right) * static_cast<double>(t) / static_cast<double>(n - 1) : 0.0); };
  auto py = [&](double v) { return h - bottom - (h - top - bottom) * v / ymax; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n",
      w, h, left, title);
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left, h - bottom, w - right,
                     h - bottom);
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left, top, left, h - bottom);
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 6, py(v) + 4, v);
  }
  for (std::size_t t = 0; t < n; t += 19) {
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(t), h - bottom + 18,
                       ys.years[t]);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">year</text>\n", (left + w - right) / 2, h - 10);
  out += fmt::format("<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">DKK per year "
                     "(mean over episodes)</text>\n",
                     (top + h - bottom) / 2, (top + h - bottom) / 2);
  for (std::size_t c = 0; c < 5; ++c) {
    std::string pts;
    for (std::size_t t = 0; t < n; ++t) pts += fmt::format("{:.1f},{:.1f} ", px(t), py(ys.components[t][c]));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colors[c], pts);
    const double ly = top + 18.0 * static_cast<double>(c);
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
                       w - right + 12, ly, w - right + 32, ly, colors[c]);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", w - right + 38, ly + 4, labels[c]);
  }
  out += "</svg>\n";
  write_text_file(path, out);
}

std::string format_matrix_table(const ScenarioMatrix& m) {
  std::string out = "Belief | Reality | Total reward (1e9 DKK)\n";
  for (const auto& row : m.cells) {
    for (const auto& c : row) {
      if (c.present) {
        out += fmt::format("{} | {} | {:.2f} ± {:.2f}\n", name_of(c.belief), name_of(c.reality), c.reward.mean / 1e9,
                           c.reward.std / 1e9);
      } else {
        out += fmt::format("{} | {} | absent ({})\n", name_of(c.belief), name_of(c.reality), c.note);
      }
    }
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const ScenarioMatrix& m) {
  std::string out = "belief,reality,present,episodes,mean_reward_dkk,std_reward_dkk,note\n";
  for (const auto& row : m.cells) {
    for (const auto& c : row) {
      out += fmt::format("{},{},{},{},{},{},{}\n", name_of(c.belief), name_of(c.reality), c.present ? 1 : 0,
                         c.episode_rewards.size(), c.present ? format_number(c.reward.mean) : "",
                         c.present ? format_number(c.reward.std) : "", c.note);
    }
  }
  write_text_file(path, out);
}

double cost_reduction(double policy_cost, double baseline_cost) {
  if (baseline_cost == 0.0) throw ContractViolation("cost reduction needs a nonzero baseline cost");
  return (baseline_cost - policy_cost) / baseline_cost;
}

}  // namespace climadapt
