#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sdp_suite.hpp"

#include <sstream>

using namespace infnet;

TEST_CASE("analytic suite") {
  const auto suite = testing::analytic_suite();
  CHECK(suite.size() >= 10);
  for (const auto& c : suite) {
    const auto o = testing::run_case(c);
    INFO(c.name << ": " << o.detail);
    CHECK(o.ok);
  }
}

TEST_CASE("trace problem recovers X22") {
  const auto suite = testing::analytic_suite();
  const SdpSolution s = solve(suite[1].problem);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(std::abs(s.blocks[0](1, 1) - 1.0) < 1e-7);
  CHECK(s.eq_residual < 1e-8);
  CHECK(s.gap < 1e-6);
}

TEST_CASE("margin blocks carry t back") {
  const auto suite = testing::analytic_suite();
  const SdpSolution s = solve_feasibility_with_margin(suite[2].problem);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.margin_ok);
  CHECK(std::abs(s.blocks[0](0, 0) - 2.0) < 1e-7);
  CHECK(std::abs(s.blocks[0](1, 0) - 1.0) < 1e-7);
}

TEST_CASE("negative margin is not accepted") {
  // X11 = -1 is infeasible as a PSD problem; with the margin it gives t* = -1
  SdpProblem p;
  const int b = p.add_block(2);
  testing::fix(p, b, 0, 0, -1.0);
  testing::fix(p, b, 1, 1, 3.0);
  const SdpSolution s = solve_feasibility_with_margin(p);
  REQUIRE(s.margin.has_value());
  CHECK(*s.margin == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_FALSE(s.margin_ok);
}

TEST_CASE("evaluate counts off-diagonals once") {
  LinearFunctional f;
  f.add_block(0, 0, 1, 2.0);
  f.add_free(0, 3.0);
  SymMatrix x(2);
  x(1, 0) = 5.0;
  Vec fr(1);
  fr << 1.0;
  CHECK(evaluate(f, fr, {x}) == 13.0);
}

TEST_CASE("validation") {
  SdpProblem p;
  CHECK_THROWS_AS(p.validate(), SdpError);
  p.add_block(2);
  p.objective.add_block(1, 0, 0, 1.0);
  CHECK_THROWS_AS(p.validate(), SdpError);
  SdpProblem q;
  q.add_block(2);
  q.objective.add_block(0, 2, 0, 1.0);
  CHECK_THROWS_AS(q.validate(), SdpError);
}

TEST_CASE("dump lists every equality") {
  const auto suite = testing::analytic_suite();
  std::ostringstream os;
  suite[1].problem.dump(os);
  const std::string s = os.str();
  CHECK(s.find("blocks 1 2") == 0);
  CHECK(s.find("rhs 1 1") != std::string::npos);
}
