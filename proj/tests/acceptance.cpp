// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero only when a failure is outside the known set
// (academic presets: synthesis is infeasible for the generated data).

#include "infnet/pipeline.hpp"
#include "scenario_gains.hpp"
#include "sdp_suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace infnet;

namespace {

struct Line {
  bool pass = true;
  bool unexpected = false;
  std::vector<std::string> notes;
  std::set<std::string> known;  // items allowed to fail

  void item(const std::string& what, bool ok, const std::string& detail) {
    notes.push_back(std::string(ok ? "ok   " : "bad  ") + what + ": " + detail);
    if (ok) return;
    pass = false;
    if (!known.count(what)) unexpected = true;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool rel_close(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::abs(want);
}

Mat sym(std::initializer_list<double> upper, int n, double scale) {
  Mat m(n, n);
  auto it = upper.begin();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = scale * *it++;
  return m;
}

// Printed P matrices of the six case studies with their bounds.
struct PrintedP {
  const char* name;
  Mat P;
  double alpha_lo, alpha_hi;
};

std::vector<PrintedP> printed_P() {
  return {
      {"spacecraft-unknownD", sym({1.5232, 0.1830, -0.2349, 1.0210, 0.0435, 1.9255}, 3, 1e6), 9.4701e5, 2.0351e6},
      {"spacecraft-knownD", sym({2.8221, 0.3032, -0.3600, 3.0950, -0.7946, 6.0998}, 3, 1e5), 2.6191e5, 6.3477e5},
      {"lorenz-unknownD", sym({365.8842, 1.3187, 78.7867, 330.5682, 103.2651, 448.7929}, 3, 1.0), 254.7642, 537.23},
      {"lorenz-knownD", sym({271.6894, -3.4691, 20.2664, 275.7661, 37.4651, 289.2950}, 3, 1.0), 236.9447, 324.1947},
      {"academic-unknownD", sym({1.5811, 0.4921, 0.3779}, 2, 1e6), 2.0224e5, 1.7567e6},
      {"academic-knownD", sym({2.3486, 1.2416, 1.2594}, 2, 1e6), 4.4815e5, 3.1598e6},
  };
}

Line noise_bounds() {
  Line l;
  struct C { int n; double b; int T; double want; };
  const C cs[] = {{3, 0.01, 70, 0.021},  {3, 0.01, 50, 0.015}, {3, 0.001, 25, 7.5e-5},
                  {3, 0.001, 80, 2.4e-4}, {2, 0.01, 21, 0.0042}, {2, 0.01, 50, 0.01}};
  for (const C& c : cs) {
    const SymMatrix s = noise_bound(c.b, c.n, c.T);
    double worst = 0.0;
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j <= i; ++j) worst = std::max(worst, std::abs(s(i, j) - (i == j ? c.want : 0.0)));
    l.item(fmt("n=%g b=%g T=%g", c.n, c.b, c.T), worst <= 1e-12, fmt("diag %.17g, max error %.2e", s(0, 0), worst));
  }
  return l;
}

Line gain_arithmetic() {
  Line l;
  for (const auto& s : testing::kScenarios) {
    const PipelineConfig cfg = preset(s.name);
    GainModel g = testing::model_of(s);
    g.classes[0].kappa = cfg.synth.kappa;
    g.card = cfg.network.card();
    g.topology = cfg.network.topology;
    const double v = omega_norm_11(g);
    l.item(s.name, rel_close(v, s.norm11, 1e-3) && small_gain(g).pass,
           fmt("norm11 %.6g vs %.4g", v, s.norm11));
  }
  return l;
}

Line rho_formula() {
  Line l;
  const std::map<std::string, double> want = {
      {"spacecraft-unknownD", 5.0876e3}, {"lorenz-unknownD", 1.0745}, {"academic-unknownD", 1.2649e4}};
  for (const auto& p : printed_P()) {
    const auto it = want.find(p.name);
    if (it == want.end()) continue;
    const PipelineConfig cfg = preset(p.name);
    const double rho = lambda_max(p.P) * cfg.synth.varkappa * cfg.synth.varkappa / cfg.synth.vartheta;
    l.item(p.name, rel_close(rho, it->second, 1e-3), fmt("rho %.6g vs %.5g", rho, it->second));
  }
  return l;
}

Line eigen_extraction() {
  Line l;
  for (const auto& p : printed_P()) {
    const EigResult e = sym_eig(p.P);
    const double lo = e.values(0), hi = e.values(e.values.size() - 1);
    l.item(p.name, rel_close(lo, p.alpha_lo, 1e-3) && rel_close(hi, p.alpha_hi, 1e-3),
           fmt("(%.6g, %.6g)", lo, hi) + fmt(" vs (%.5g, %.5g)", p.alpha_lo, p.alpha_hi));
  }
  return l;
}

Line end_to_end(std::map<std::string, PipelineReport>& reports) {
  Line l;
  l.known = {"academic-unknownD", "academic-knownD"};
  for (const auto& name : preset_names()) {
    const PipelineConfig cfg = preset(name);
    const auto t0 = std::chrono::steady_clock::now();
    PipelineReport r = run_pipeline(cfg);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = r.verdict == Verdict::UgasCertified && r.margin >= 1e-7 && r.P.size() > 0 &&
                    lambda_min(r.P) > 0.0 && r.sos_pass && r.oracle_checked &&
                    cfg.checks.oracle_samples >= 1000 && r.oracle_worst_slack <= 1e-6 &&
                    r.composition.pass && r.composition.norm11 < 1.0 && sec <= 60.0;
    std::string d = to_string(r.verdict) + fmt(", margin %.3g, sos min %.3g", r.margin, r.sos_min_eig) +
                    fmt(", oracle %.3g, norm11 %.4g, %.1f s", r.oracle_worst_slack,
                        r.composition.norm11, sec);
    if (!ok && !r.message.empty()) d += " [" + r.message + "]";
    l.item(name, ok, d);
    reports[name] = std::move(r);
  }
  return l;
}

Line closed_loop(const std::map<std::string, PipelineReport>& reports) {
  Line l;
  l.known = {"academic-unknownD", "academic-knownD"};
  for (const auto& name : preset_names()) {
    const PipelineReport& r = reports.at(name);
    if (r.verdict != Verdict::UgasCertified) {
      l.item(name, false, "no certified controller to simulate (" + to_string(r.verdict) + ")");
      continue;
    }
    try {
      const SimSummary s = run_simulation(r, r.config.sim, r.seed, false);
      l.item(name, s.ratio <= 1e-2,
             fmt("N=%g ic %.3g, ratio %.3g", r.config.sim.N_sim, s.initial_norm, s.ratio));
    } catch (const std::exception& e) {
      l.item(name, false, std::string("certificate-contradiction: ") + e.what());
    }
  }
  const PipelineReport& lz = reports.at("lorenz-unknownD");
  try {
    const SimSummary s = run_simulation(lz, lz.config.sim, lz.seed, true);
    // the attractor keeps |x| well above 1
    l.item("lorenz open loop", s.min_late_norm >= 1.0,
           fmt("min norm over second half %.4g", s.min_late_norm));
  } catch (const std::exception& e) {
    l.item("lorenz open loop", false, e.what());
  }
  return l;
}

Line data_consistency() {
  Line l;
  for (const auto& name : preset_names()) {
    PipelineConfig cfg = preset(name);
    const SubsystemClass& cls = cfg.network.classes[0];
    const EmbeddedTruth emb = embed_truth(cls);
    int fails = 0;
    double worst = -INFINITY;
    for (int seed = 1; seed <= 100; ++seed) {
      cfg.data.seed = static_cast<std::uint64_t>(seed);
      const CollectOutput d = run_collect(cfg);
      const DataMatrices dm = build_regressors(d.record, cls.dict_F, cls.dict_G);
      const Mat D = assemble_D(cls.d_block, d.card);
      Mat S, Q, Xd = d.record.Xd;
      if (cfg.synth.mode == DMode::Unknown) {
        S.resize(cls.n, emb.A.cols() + emb.B.cols() + D.cols());
        S << emb.A, emb.B, D;
        Q = dm.Q;
      } else {
        S.resize(cls.n, emb.A.cols() + emb.B.cols());
        S << emb.A, emb.B;
        Q = dm.L;
        Xd -= D * d.record.W;
      }
      const double zn = z_norm(Xd, Q, d.record.lambda_sq);
      const double lm = lambda_max(consistency_matrix(Xd, S, Q, d.record.lambda_sq));
      worst = std::max(worst, lm / zn);
      if (lm > 1e-8 * zn) ++fails;
    }
    l.item(name, fails == 0, fmt("%g failures in 100, worst lambda_max/|Z| %.3g", fails, worst));
  }
  return l;
}

Line sdp_suite() {
  Line l;
  const auto suite = testing::analytic_suite();
  int closed = 0, infeasible = 0;
  for (const auto& c : suite) {
    const auto o = testing::run_case(c);
    (c.infeasible ? infeasible : closed)++;
    l.item(c.name, o.ok, o.detail);
  }
  l.item("suite size", closed >= 10 && infeasible >= 1, fmt("%g closed form, %g infeasible", closed, infeasible));
  return l;
}

Line forward_difference_order() {
  Line l;
  // x(t) = 1 - 2t + 3t^2 on each row, second derivative 6
  const double c2 = 3.0;
  for (double t0 : {0.0, 0.7, 2.5}) {
    double prev = 0.0;
    for (int h = 0; h < 4; ++h) {
      const double tau = 0.1 / std::pow(2.0, h);
      Mat X(1, 2);
      for (int k = 0; k < 2; ++k) {
        const double t = t0 + k * tau;
        X(0, k) = 1.0 - 2.0 * t + c2 * t * t;
      }
      const double err = std::abs(forward_difference(X, tau)(0, 0) - (-2.0 + 2.0 * c2 * t0));
      const double expect = tau * 2.0 * c2 / 2.0;
      bool ok = rel_close(err, expect, 0.05);
      std::string d = fmt("tau %.4g error %.6g (tau|x''|/2 = %.6g)", tau, err, expect);
      if (h > 0) {
        ok = ok && rel_close(prev / err, 2.0, 0.05);
        d += fmt(", halving ratio %.4f", prev / err);
      }
      l.item(fmt("t0=%g", t0) + fmt(" step %g", h), ok, d);
      prev = err;
    }
  }
  return l;
}

}  // namespace

int main() {
  bool unexpected = false;
  auto report = [&](int id, const char* title, Line l) {
    std::printf("%s  %d  %s\n", l.pass ? "PASS" : "FAIL", id, title);
    for (const auto& n : l.notes) std::printf("        %s\n", n.c_str());
    if (!l.pass && !l.unexpected) std::printf("        (failures limited to the known infeasible academic presets)\n");
    std::fflush(stdout);
    unexpected = unexpected || l.unexpected;
  };

  std::map<std::string, PipelineReport> reports;
  report(1, "noise-bound arithmetic", noise_bounds());
  report(2, "gain-pipeline arithmetic", gain_arithmetic());
  report(3, "rho formula", rho_formula());
  report(4, "eigen extraction", eigen_extraction());
  report(5, "end-to-end synthesis", end_to_end(reports));
  report(6, "closed-loop convergence", closed_loop(reports));
  report(7, "data-consistency soundness", data_consistency());
  report(8, "solver correctness", sdp_suite());
  report(9, "forward-difference order", forward_difference_order());
  return unexpected ? 1 : 0;
}
