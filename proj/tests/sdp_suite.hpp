#pragma once

// SDPs with closed-form optima, shared by the sdp unit test and the
// acceptance binary.

#include "infnet/sdp.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace infnet::testing {

struct AnalyticCase {
  std::string name;
  SdpProblem problem;
  bool margin = false;      // solve_feasibility_with_margin, compare t*
  bool infeasible = false;
  double optimum = 0.0;
};

inline void fix(SdpProblem& p, int b, int i, int j, double rhs) {
  Equality e;
  e.f.add_block(b, i, j, 1.0);
  e.rhs = rhs;
  p.equalities.push_back(e);
}

inline std::vector<AnalyticCase> analytic_suite() {
  std::vector<AnalyticCase> out;

  {  // min x, x - 1 >= 0
    AnalyticCase c{"scalar lower bound", {}, false, false, 1.0};
    const int x = c.problem.add_free();
    const int b = c.problem.add_block(1);
    Equality e;
    e.f.add_free(x, 1.0);
    e.f.add_block(b, 0, 0, -1.0);
    e.rhs = 1.0;
    c.problem.equalities.push_back(e);
    c.problem.objective.add_free(x, 1.0);
    out.push_back(c);
  }
  {  // min tr X, X11 = X12 = 1: Schur bound X22 >= 1
    AnalyticCase c{"trace with fixed row", {}, false, false, 2.0};
    const int b = c.problem.add_block(2);
    fix(c.problem, b, 0, 0, 1.0);
    fix(c.problem, b, 1, 0, 1.0);
    c.problem.objective.add_block(b, 0, 0, 1.0);
    c.problem.objective.add_block(b, 1, 1, 1.0);
    out.push_back(c);
  }
  {  // X = [[2,1],[1,2]] fixed, eigenvalues {1,3}
    AnalyticCase c{"margin of fixed 2x2", {}, true, false, 1.0};
    const int b = c.problem.add_block(2);
    fix(c.problem, b, 0, 0, 2.0);
    fix(c.problem, b, 1, 1, 2.0);
    fix(c.problem, b, 1, 0, 1.0);
    out.push_back(c);
  }
  {  // min t, t I - diag(1,3) >= 0
    AnalyticCase c{"largest eigenvalue of diag(1,3)", {}, false, false, 3.0};
    const int t = c.problem.add_free();
    const int b = c.problem.add_block(2);
    const double d[2] = {1.0, 3.0};
    for (int i = 0; i < 2; ++i) {
      Equality e;
      e.f.add_block(b, i, i, 1.0);
      e.f.add_free(t, -1.0);
      e.rhs = -d[i];
      c.problem.equalities.push_back(e);
    }
    fix(c.problem, b, 1, 0, 0.0);
    c.problem.objective.add_free(t, 1.0);
    out.push_back(c);
  }
  {  // max t, [[2,1],[1,2]] - t I >= 0
    AnalyticCase c{"smallest eigenvalue as max", {}, false, false, -1.0};
    const int t = c.problem.add_free();
    const int b = c.problem.add_block(2);
    for (int i = 0; i < 2; ++i) {
      Equality e;
      e.f.add_block(b, i, i, 1.0);
      e.f.add_free(t, 1.0);
      e.rhs = 2.0;
      c.problem.equalities.push_back(e);
    }
    fix(c.problem, b, 1, 0, 1.0);
    c.problem.objective.add_free(t, -1.0);
    out.push_back(c);
  }
  {  // min <C,X>, tr X = 1, C = [[1,2],[2,5]] -> lambda_min(C)
    AnalyticCase c{"lambda_min via trace", {}, false, false, 3.0 - 2.0 * std::sqrt(2.0)};
    const int b = c.problem.add_block(2);
    Equality e;
    e.f.add_block(b, 0, 0, 1.0);
    e.f.add_block(b, 1, 1, 1.0);
    e.rhs = 1.0;
    c.problem.equalities.push_back(e);
    c.problem.objective.add_block(b, 0, 0, 1.0);
    c.problem.objective.add_block(b, 1, 1, 5.0);
    c.problem.objective.add_block(b, 1, 0, 4.0);
    out.push_back(c);
  }
  {  // min <diag(3,1,2), X>, tr X = 1
    AnalyticCase c{"diagonal 3x3 cost", {}, false, false, 1.0};
    const int b = c.problem.add_block(3);
    Equality e;
    for (int i = 0; i < 3; ++i) e.f.add_block(b, i, i, 1.0);
    e.rhs = 1.0;
    c.problem.equalities.push_back(e);
    c.problem.objective.add_block(b, 0, 0, 3.0);
    c.problem.objective.add_block(b, 1, 1, 1.0);
    c.problem.objective.add_block(b, 2, 2, 2.0);
    out.push_back(c);
  }
  {  // LP on two 1x1 blocks
    AnalyticCase c{"linear program", {}, false, false, 1.0};
    const int b0 = c.problem.add_block(1);
    const int b1 = c.problem.add_block(1);
    Equality e;
    e.f.add_block(b0, 0, 0, 1.0);
    e.f.add_block(b1, 0, 0, 1.0);
    e.rhs = 1.0;
    c.problem.equalities.push_back(e);
    c.problem.objective.add_block(b0, 0, 0, 1.0);
    c.problem.objective.add_block(b1, 0, 0, 2.0);
    out.push_back(c);
  }
  {  // min t, [[t,1],[1,t]] >= 0
    AnalyticCase c{"symmetric toeplitz", {}, false, false, 1.0};
    const int t = c.problem.add_free();
    const int b = c.problem.add_block(2);
    for (int i = 0; i < 2; ++i) {
      Equality e;
      e.f.add_block(b, i, i, 1.0);
      e.f.add_free(t, -1.0);
      c.problem.equalities.push_back(e);
    }
    fix(c.problem, b, 1, 0, 1.0);
    c.problem.objective.add_free(t, 1.0);
    out.push_back(c);
  }
  {  // [[1,2],[2,x]] >= 0 -> x >= 4
    AnalyticCase c{"schur lower bound", {}, false, false, 4.0};
    const int b = c.problem.add_block(2);
    fix(c.problem, b, 0, 0, 1.0);
    fix(c.problem, b, 1, 0, 2.0);
    c.problem.objective.add_block(b, 1, 1, 1.0);
    out.push_back(c);
  }
  {  // max X12 with unit diagonal
    AnalyticCase c{"correlation bound", {}, false, false, -1.0};
    const int b = c.problem.add_block(2);
    fix(c.problem, b, 0, 0, 1.0);
    fix(c.problem, b, 1, 1, 1.0);
    c.problem.objective.add_block(b, 1, 0, -1.0);
    out.push_back(c);
  }
  {  // Lovasz theta of the 5-cycle is sqrt(5)
    AnalyticCase c{"theta of C5", {}, false, false, -std::sqrt(5.0)};
    const int b = c.problem.add_block(5);
    Equality tr;
    for (int i = 0; i < 5; ++i) tr.f.add_block(b, i, i, 1.0);
    tr.rhs = 1.0;
    c.problem.equalities.push_back(tr);
    for (int i = 0; i < 5; ++i) fix(c.problem, b, (i + 1) % 5, i, 0.0);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j <= i; ++j) c.problem.objective.add_block(b, i, j, i == j ? -1.0 : -2.0);
    out.push_back(c);
  }
  {  // X11 = 1 and X11 = 2
    AnalyticCase c{"contradictory equalities", {}, false, true, 0.0};
    const int b = c.problem.add_block(2);
    fix(c.problem, b, 0, 0, 1.0);
    fix(c.problem, b, 0, 0, 2.0);
    c.problem.objective.add_block(b, 1, 1, 1.0);
    out.push_back(c);
  }
  {  // 1x1 block fixed negative
    AnalyticCase c{"negative scalar block", {}, false, true, 0.0};
    const int b = c.problem.add_block(1);
    fix(c.problem, b, 0, 0, -1.0);
    c.problem.objective.add_block(b, 0, 0, 1.0);
    out.push_back(c);
  }
  {  // X + diag(d) = 0 with free d: margin grows until the cap
    AnalyticCase c{"unbounded margin hits cap", {}, true, false, 1e3};
    const int d = c.problem.add_free(2);
    const int b = c.problem.add_block(2);
    for (int i = 0; i < 2; ++i) {
      Equality e;
      e.f.add_block(b, i, i, 1.0);
      e.f.add_free(d + i, 1.0);
      c.problem.equalities.push_back(e);
    }
    fix(c.problem, b, 1, 0, 0.0);
    out.push_back(c);
  }
  return out;
}

struct CaseOutcome {
  bool ok = false;
  double value = 0.0;  // objective or margin
  std::string detail;
};

inline CaseOutcome run_case(const AnalyticCase& c) {
  CaseOutcome o;
  const SdpSolution s = c.margin ? solve_feasibility_with_margin(c.problem) : solve(c.problem);
  if (c.infeasible) {
    o.ok = s.status == SdpStatus::Infeasible;
    o.detail = to_string(s.status);
    return o;
  }
  o.value = c.margin ? s.margin.value_or(NAN) : s.objective;
  o.ok = s.status == SdpStatus::Optimal && std::abs(o.value - c.optimum) <= 1e-7;
  o.detail = to_string(s.status) + " value " + std::to_string(o.value);
  return o;
}

}  // namespace infnet::testing
