#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "infnet/composition.hpp"
#include "infnet/pipeline.hpp"
#include "scenario_gains.hpp"

#include <cmath>

using namespace infnet;
using testing::kScenarios;
using testing::model_of;

namespace {

GainModel uniform(double omega, int card, double kappa = 1.0) {
  GainModel g;
  // alpha_lo = 1 so that omega = rho / kappa
  g.classes.push_back({"u", kappa, 1.0, 2.0, omega * kappa});
  g.topology = card == 1 ? Topology::Cascade : Topology::ForwardBand;
  g.card = card;
  return g;
}

}  // namespace

TEST_CASE("gain entries") {
  const GainEntry a = build_gain_entry(5.0876e3, 9.4701e5, 0.1);
  CHECK(a.omega == doctest::Approx(0.0537).epsilon(1e-3));
  CHECK(a.theta == doctest::Approx(5.0876e3 / 9.4701e5));
  const GainEntry b = build_gain_entry(0.3242, 236.9447, 2.0);
  CHECK(b.omega == doctest::Approx(6.8411e-4).epsilon(1e-3));
  const GainEntry z = build_gain_entry(0.0, 3.0, 1.0);
  CHECK(z.omega == 0.0);
  CHECK_THROWS_AS(build_gain_entry(1.0, 0.0, 1.0), CompositionError);
  CHECK_THROWS_AS(build_gain_entry(1.0, -2.0, 1.0), CompositionError);
}

TEST_CASE("column-sum bounds of the case studies") {
  for (const auto& s : kScenarios) {
    INFO(s.name);
    const GainModel g = model_of(s);
    CHECK(omega_norm_11(g) == doctest::Approx(s.norm11).epsilon(1e-3));
    const SmallGainVerdict v = small_gain(g);
    CHECK(v.pass);
    CHECK(v.bound == doctest::Approx(s.norm11).epsilon(1e-3));
  }
  // the entries quoted for the dense cases
  CHECK(build_gain_entry(2.0774, 2.6191e5, 0.1).omega == doctest::Approx(7.9318e-5).epsilon(1e-3));
  CHECK(build_gain_entry(1.2649e4, 2.0224e5, 0.5).omega == doctest::Approx(0.1251).epsilon(1e-3));
  CHECK(build_gain_entry(284.3797, 4.4815e5, 0.5).omega == doctest::Approx(1.2691e-3).epsilon(1e-3));
}

TEST_CASE("small gain failure and zero gains") {
  const SmallGainVerdict f = small_gain(uniform(0.01, 200));
  CHECK(f.bound == doctest::Approx(2.0));
  CHECK_FALSE(f.pass);
  const SmallGainVerdict z = small_gain(uniform(0.0, 7));
  CHECK(z.bound == 0.0);
  CHECK(z.pass);
  // exactly one is not < 1
  CHECK_FALSE(small_gain(uniform(0.25, 4)).pass);
}

TEST_CASE("closed form agrees with materialized truncations") {
  for (const auto& s : kScenarios) {
    if (s.card > 10) continue;
    const GainModel g = model_of(s);
    CHECK(materialized_norm11(g, 4) <= omega_norm_11(g) * (1 + 1e-15));
    CHECK(materialized_norm11(g, 30) == doctest::Approx(omega_norm_11(g)));
  }
  const GainModel g = uniform(0.01, 50);
  CHECK(materialized_norm11(g, 120) == doctest::Approx(0.5));
}

TEST_CASE("monotonicity") {
  const GainModel base = model_of(kScenarios[4]);
  const double b = omega_norm_11(base);
  GainModel more_rho = base;
  more_rho.classes[0].rho *= 1.5;
  CHECK(omega_norm_11(more_rho) >= b);
  GainModel more_card = base;
  more_card.card += 1;
  CHECK(omega_norm_11(more_card) >= b);
  GainModel less_alpha = base;
  less_alpha.classes[0].alpha_lo *= 0.5;
  CHECK(omega_norm_11(less_alpha) >= b);
  GainModel less_kappa = base;
  less_kappa.classes[0].kappa *= 0.5;
  CHECK(omega_norm_11(less_kappa) >= b);
}

TEST_CASE("scale invariance of V") {
  for (const auto& s : kScenarios) {
    GainModel g = model_of(s);
    const double before = omega_norm_11(g);
    const bool pass = small_gain(g).pass;
    g.classes[0].alpha_lo *= 37.0;
    g.classes[0].alpha_hi *= 37.0;
    g.classes[0].rho *= 37.0;
    CHECK(omega_norm_11(g) == doctest::Approx(before).epsilon(1e-14));
    CHECK(small_gain(g).pass == pass);
  }
}

TEST_CASE("mu and kappa_inf") {
  const MuKappa a = compute_mu_kappa(model_of(kScenarios[0]));
  REQUIRE(a.mu.size() == 1);
  CHECK(a.mu[0] == 1.0);
  CHECK(a.kappa_inf == doctest::Approx(0.09463).epsilon(1e-4));
  CHECK(a.column_lhs == doctest::Approx(5.372e-3).epsilon(1e-3));
  CHECK(a.column_lhs <= a.column_rhs);

  const MuKappa z = compute_mu_kappa(uniform(0.0, 3, 0.7));
  CHECK(z.kappa_inf == doctest::Approx(0.7 - 1e-9).epsilon(1e-14));

  const MuKappa c = compute_mu_kappa(model_of(kScenarios[5]));
  CHECK(c.kappa_inf == doctest::Approx(0.1827).epsilon(1e-3));
  CHECK(c.kappa_inf >= (1.0 - omega_norm_11(model_of(kScenarios[5]))) * 0.5 - 1e-9 - 1e-15);

  CHECK_THROWS_AS(compute_mu_kappa(uniform(0.01, 200)), CompositionError);
}

TEST_CASE("network CLF coefficients") {
  const GainModel g = model_of(kScenarios[0]);
  const ClfParams p = compose_clf(g, {1.0}, 0.09);
  CHECK(p.alpha_lo == doctest::Approx(9.4701e5));
  CHECK(p.alpha_hi == doctest::Approx(2.0351e6));
  CHECK(p.kappa == 0.09);

  const ClfParams q = compose_clf(g, {3.0}, 0.09);
  CHECK(q.alpha_lo == doctest::Approx(3.0 * p.alpha_lo));
  CHECK(q.alpha_hi == doctest::Approx(3.0 * p.alpha_hi));
  CHECK(q.kappa == p.kappa);

  GainModel two;
  two.classes = {{"a", 1.0, 1.0, 4.0, 0.0}, {"b", 1.0, 2.0, 3.0, 0.0}};
  const ClfParams t = compose_clf(two, {1.0, 1.0}, 0.5);
  CHECK(t.alpha_lo == 1.0);
  CHECK(t.alpha_hi == 4.0);
}

TEST_CASE("compose chain") {
  const CompositionResult ok = compose(model_of(kScenarios[3]));
  CHECK(ok.pass);
  CHECK(ok.norm11 < 1.0);
  CHECK(ok.kappa_inf > 0.0);
  CHECK(ok.clf_alpha_lo == doctest::Approx(236.9447));
  const CompositionResult bad = compose(uniform(0.01, 200));
  CHECK_FALSE(bad.pass);
  CHECK(bad.kappa_inf == 0.0);

  const std::string csv = gain_table_csv(model_of(kScenarios[3]), ok);
  CHECK(csv.rfind("class,kappa,alpha_lo,alpha_hi,rho,theta,omega_entry,card,norm11,pass", 0) == 0);
  CHECK(csv.find("lorenz-knownD") != std::string::npos);
}

TEST_CASE("network decrease on a synthesized spacecraft cascade") {
  const PipelineConfig cfg = preset("spacecraft-unknownD");
  const CollectOutput data = run_collect(cfg);
  const SynthesisOutcome out = synthesize(make_problem(cfg, data.record, data.card));
  REQUIRE(out.success);
  const SynthesisResult& r = out.result;
  GainModel g;
  g.classes.push_back({"spacecraft", r.kappa, r.alpha_lo, r.alpha_hi, r.rho});
  g.card = 1;
  const CompositionResult c = compose(g);
  REQUIRE(c.pass);

  const SubsystemClass& cls = cfg.network.classes[0];
  const TruncatedNetwork net = instantiate_truncation(cfg.network, 10, Boundary::Clip);
  const DecreaseReport d = network_decrease_check(net, cls, r, c.mu, c.kappa_inf, 500, 10.0);
  CHECK(d.pass);
  CHECK(d.worst_slack <= 1e-6);

  // decoupled subsystems keep their own decay rate
  SubsystemClass lone = cls;
  lone.d_block.setZero();
  const TruncatedNetwork two = instantiate_truncation(cfg.network, 2, Boundary::Clip);
  CHECK(network_decrease_check(two, lone, r, {1.0}, r.kappa - 1e-9, 200, 10.0).pass);
}
