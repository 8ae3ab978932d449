#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "climadapt/policy.hpp"

using namespace climadapt;

namespace {

struct RandomGraph {
  Eigen::MatrixXd x;
  std::vector<ZoneEdge> edges;
  std::vector<std::uint8_t> mask;
};

RandomGraph random_graph(Rng& rng, int n) {
  RandomGraph g;
  g.x = Eigen::MatrixXd(n, kPolicyInputs);
  for (Eigen::Index i = 0; i < g.x.size(); ++i) g.x.data()[i] = 2.0 * uniform01(rng) - 1.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (uniform01(rng) < 0.4) g.edges.emplace_back(a, b);
    }
  }
  g.mask.assign(static_cast<std::size_t>(n * kNumKinds), 1);
  for (int z = 0; z < n; ++z) {
    for (int k = 1; k < kNumKinds; ++k) g.mask[static_cast<std::size_t>(z * kNumKinds + k)] = uniform01(rng) < 0.7;
  }
  return g;
}

// Scalar objective sum(G .* logits) + c * value, used for gradient checks.
double objective(const GraphPolicy& p, const PolicyInput& in, const Eigen::MatrixXd& g, double c) {
  const auto out = p.forward(in);
  return (g.array() * out.logits.array()).sum() + c * out.value;
}

}  // namespace

TEST_CASE("parameter count does not depend on the zone count") {
  GraphPolicy p(PolicyConfig{}, 1);
  const Eigen::Index h = 64;
  const Eigen::Index trunk = kPolicyInputs * h + h + 2 * (h * h + h);
  CHECK(p.num_params() == 2 * trunk + h * kNumKinds + kNumKinds + h + 1);
  Rng rng(2);
  for (int n : {1, 3, 12}) {
    const auto g = random_graph(rng, n);
    const auto out = p.forward(p.prepare_raw(g.x, g.edges, g.mask));
    CHECK(out.probs.rows() == n);
  }
}

TEST_CASE("masked kinds get exactly zero probability") {
  GraphPolicy p(PolicyConfig{}, 3);
  Rng rng(4);
  const auto g = random_graph(rng, 6);
  const auto in = p.prepare_raw(g.x, g.edges, g.mask);
  const auto out = p.forward(in);
  for (int z = 0; z < 6; ++z) {
    CHECK(out.probs.row(z).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < kNumKinds; ++k) {
      if (!g.mask[static_cast<std::size_t>(z * kNumKinds + k)]) CHECK(out.probs(z, k) == 0.0);
    }
  }
  for (int t = 0; t < 200; ++t) {
    const auto a = p.act(in, rng, false);
    for (int z = 0; z < 6; ++z) {
      CHECK(g.mask[static_cast<std::size_t>(z * kNumKinds + index_of(a.actions[static_cast<std::size_t>(z)]))]);
    }
  }
}

TEST_CASE("outputs are equivariant under zone relabelling") {
  GraphPolicy p(PolicyConfig{}, 5);
  p.params() *= 3.0;  // sharpen so the check is not trivially near-uniform
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 9));
    const auto g = random_graph(rng, n);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);  // new index of old zone i is perm[i]
    Eigen::MatrixXd px(n, kPolicyInputs);
    std::vector<std::uint8_t> pm(g.mask.size());
    for (int i = 0; i < n; ++i) {
      px.row(perm[static_cast<std::size_t>(i)]) = g.x.row(i);
      std::copy_n(g.mask.begin() + i * kNumKinds, kNumKinds, pm.begin() + perm[static_cast<std::size_t>(i)] * kNumKinds);
    }
    std::vector<ZoneEdge> pe;
    for (auto [a, b] : g.edges) pe.emplace_back(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
    const auto o1 = p.forward(p.prepare_raw(g.x, g.edges, g.mask));
    const auto o2 = p.forward(p.prepare_raw(px, pe, pm));
    CHECK(std::abs(o1.value - o2.value) <= 1e-10);
    for (int i = 0; i < n; ++i) {
      CHECK((o1.logits.row(i) - o2.logits.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("zero weights give the uniform distribution over allowed kinds") {
  GraphPolicy p(PolicyConfig{}, 7);
  p.params().setZero();
  Rng rng(8);
  const auto g = random_graph(rng, 5);
  const auto out = p.forward(p.prepare_raw(g.x, g.edges, g.mask));
  for (int z = 0; z < 5; ++z) {
    int allowed = 0;
    for (int k = 0; k < kNumKinds; ++k) allowed += g.mask[static_cast<std::size_t>(z * kNumKinds + k)];
    for (int k = 0; k < kNumKinds; ++k) {
      const double expect = g.mask[static_cast<std::size_t>(z * kNumKinds + k)] ? 1.0 / allowed : 0.0;
      CHECK(out.probs(z, k) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  CHECK(out.value == 0.0);
}

TEST_CASE("without message passing, identical zones act identically") {
  PolicyConfig cfg;
  cfg.layers = 0;
  GraphPolicy p(cfg, 9);
  Rng rng(10);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, kPolicyInputs);
  x.row(3) = x.row(0);
  const std::vector<std::uint8_t> mask(4 * kNumKinds, 1);
  const auto out = p.forward(p.prepare_raw(x, {{0, 1}, {1, 2}}, mask));
  CHECK((out.probs.row(0) - out.probs.row(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampling frequencies match the distribution") {
  GraphPolicy p(PolicyConfig{}, 11);
  p.params() *= 40.0;
  Rng rng(12);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(1, kPolicyInputs);
  const std::vector<std::uint8_t> mask(kNumKinds, 1);
  const auto in = p.prepare_raw(x, {}, mask);
  const auto out = p.forward(in);
  std::vector<int> counts(kNumKinds, 0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(index_of(p.act(in, rng, false).actions[0]))];
  for (int k = 0; k < kNumKinds; ++k) {
    const double pk = out.probs(0, k);
    const double se = std::sqrt(pk * (1.0 - pk) / draws);
    CHECK(std::abs(counts[static_cast<std::size_t>(k)] / static_cast<double>(draws) - pk) <= 5.0 * se + 1e-12);
  }
  const auto det = p.act(in, rng, true);
  Eigen::Index best;
  out.probs.row(0).maxCoeff(&best);
  CHECK(index_of(det.actions[0]) == best);
}

TEST_CASE("a zone with only DoNothing allowed always does nothing") {
  GraphPolicy p(PolicyConfig{}, 13);
  Rng rng(14);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, kPolicyInputs);
  std::vector<std::uint8_t> mask(2 * kNumKinds, 1);
  std::fill_n(mask.begin() + 1, kNumKinds - 1, 0);
  const auto in = p.prepare_raw(x, {{0, 1}}, mask);
  for (int i = 0; i < 100; ++i) {
    const auto a = p.act(in, rng, false);
    CHECK(a.actions[0] == Kind::DoNothing);
    CHECK(a.log_probs[0] == 0.0);
  }
}

TEST_CASE("backward matches central finite differences") {
  for (auto agg : {Aggregation::Mean, Aggregation::Sum}) {
    PolicyConfig cfg;
    cfg.hidden = 6;
    cfg.aggregation = agg;
    GraphPolicy p(cfg, 15);
    p.params() *= 2.0;
    Rng rng(16);
    const auto g = random_graph(rng, 5);
    const auto in = p.prepare_raw(g.x, g.edges, g.mask);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(5, kNumKinds);
    const double c = 0.7;
    const auto out = p.forward(in);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.num_params());
    p.backward(in, out, w, c, grad);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.num_params(); ++i) {
      const double keep = p.params()[i];
      const double h = 1e-6;
      p.params()[i] = keep + h;
      const double up = objective(p, in, w, c);
      p.params()[i] = keep - h;
      const double down = objective(p, in, w, c);
      p.params()[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("running statistics merge like one pass") {
  Rng rng(17);
  RunningNorm all, a, b;
  for (int i = 0; i < 500; ++i) {
    const std::array<double, 3> v{uniform01(rng) * 1e6, uniform01(rng), 5.0};
    all.add(v);
    (i < 123 ? a : b).add(v);
  }
  a.merge(b);
  CHECK(a.count == all.count);
  for (int f = 0; f < 3; ++f) {
    CHECK(a.mean[static_cast<std::size_t>(f)] == doctest::Approx(all.mean[static_cast<std::size_t>(f)]).epsilon(1e-12));
    CHECK(a.stddev(f) == doctest::Approx(all.stddev(f)).epsilon(1e-9));
  }
  RunningNorm empty;
  empty.merge(all);
  CHECK(empty.count == all.count);
}

TEST_CASE("prepare standardizes impacts and appends progress") {
  GraphPolicy p(PolicyConfig{}, 18);
  EnvState s;
  s.step = 7;
  s.num_zones = 2;
  s.features.assign(2 * kZoneFeatures, 0.0);
  s.features[0] = 3e9;  // far outside the statistics: clipped
  s.features[3] = 0.25;
  s.mask.assign(2 * kNumKinds, 1);
  s.adjacency = {{0, 1}};
  // No statistics yet: impact inputs carry no information.
  auto in = p.prepare(s, 70);
  CHECK(in.x(0, 0) == 0.0);
  CHECK(in.x(0, 3) == 0.25);
  CHECK(in.x(1, kZoneFeatures) == doctest::Approx(0.1));
  p.norm().add(std::array<double, 3>{0.0, 0.0, 0.0});
  p.norm().add(std::array<double, 3>{2.0, 2.0, 2.0});
  in = p.prepare(s, 70);
  CHECK(in.x(0, 0) == 10.0);
  CHECK(in.x(1, 1) == doctest::Approx(-1.0).epsilon(1e-6));
  s.features.pop_back();
  CHECK_THROWS_AS(p.prepare(s, 70), ShapeError);
}
