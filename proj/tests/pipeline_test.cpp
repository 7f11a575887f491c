#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "infnet/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace infnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("infnet_test_" + std::to_string(::getpid())) / tag;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct Run {
  int code = -1;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(INFNET_CLI) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.err = slurp(err);
  return r;
}

// x1' = -x1 + x2, x2' = x1 + u: one input for two states.
PipelineConfig chain_config(double kappa) {
  SubsystemClass c;
  c.name = "chain";
  c.n = 2;
  c.m = 1;
  c.dict_F = monomials_from_exponents({{1, 0}, {0, 1}});
  c.dict_G = PolyMatrix::constant(Mat::Ones(1, 1), 2);
  GroundTruth t;
  t.a_star = Mat(2, 2);
  t.a_star << -1, 1, 1, 0;
  t.b_star = Mat(2, 1);
  t.b_star << 0, 1;
  t.f_star_dict = c.dict_F;
  t.g_star_dict = c.dict_G;
  c.truth = t;
  c.d_block = 1e-3 * Mat::Identity(2, 2);

  PipelineConfig cfg;
  cfg.name = "chain";
  cfg.network.classes = {c};
  cfg.data.T = 20;
  cfg.data.b = 1e-3;
  cfg.synth.kappa = kappa;
  cfg.synth.vartheta = 0.1;
  cfg.synth.varkappa = 0.01;
  cfg.synth.deg_K = 0;
  cfg.checks.oracle_x_radius = cfg.checks.oracle_w_radius = 10.0;
  // let the config parser attach the synthesis parameters to the class
  return config_from_json(config_to_json(cfg));
}

// One certified run shared by several cases.
const PipelineReport& spacecraft_report() {
  static const PipelineReport r = run_pipeline(preset("spacecraft-unknownD"));
  return r;
}

}  // namespace

TEST_CASE("preset configs echo the case study parameters") {
  struct Want {
    const char* name;
    int T;
    double tau, kappa, vartheta, varkappa, b;
    int card;
    double lambda;
  };
  const Want w[] = {
      {"spacecraft-unknownD", 70, 0.1, 0.1, 1.0, 0.05, 0.01, 1, 0.021},
      {"spacecraft-knownD", 50, 0.1, 0.1, 5.5, 0.0, 0.01, 1800, 0.015},
      {"lorenz-unknownD", 25, 0.001, 0.1, 0.8, 0.04, 0.001, 1, 7.5e-5},
      {"lorenz-knownD", 80, 0.001, 2.0, 1.0, 0.0, 0.001, 1000, 2.4e-4},
      {"academic-unknownD", 21, 0.008, 0.5, 0.5, 0.06, 0.01, 5, 0.0042},
      {"academic-knownD", 50, 0.01, 0.5, 0.5, 0.0, 0.01, 500, 0.01},
  };
  CHECK(preset_names().size() == 6);
  for (const Want& e : w) {
    INFO(e.name);
    const PipelineConfig c = preset(e.name);
    CHECK(c.data.T == e.T);
    CHECK(c.data.tau == e.tau);
    CHECK(c.synth.kappa == e.kappa);
    CHECK(c.synth.vartheta == e.vartheta);
    CHECK(c.data.b == e.b);
    CHECK(c.network.card() == e.card);
    CHECK((c.synth.mode == DMode::Unknown) == (e.varkappa > 0.0));
    if (e.varkappa > 0.0) CHECK(c.synth.varkappa == e.varkappa);
    const int n = c.network.classes[0].n;
    CHECK(noise_bound(c.data.b, n, c.data.T)(0, 0) == doctest::Approx(e.lambda).epsilon(1e-12));
  }
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("config json round trip") {
  for (const auto& name : preset_names()) {
    const std::string a = config_to_json(preset(name));
    const std::string b = config_to_json(config_from_json(a));
    CHECK(a == b);
  }
  CHECK_THROWS(config_from_json("{not json"));
  CHECK_THROWS_AS(config_from_json(R"({"preset": "spacecraft-unknownD", "synthesis": {"kappa": -1}})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"preset": "spacecraft-unknownD", "synth": {"kappa": 2}})"),
                  ConfigError);
  const PipelineConfig k = config_from_json(R"({"preset": "lorenz-knownD", "synthesis": {"kappa": 3}})");
  CHECK(k.synth.kappa == 3.0);
  CHECK(k.network.classes[0].kappa == 3.0);
}

TEST_CASE("certified report satisfies every recorded check") {
  const PipelineReport& r = spacecraft_report();
  REQUIRE(r.verdict == Verdict::UgasCertified);
  CHECK(r.margin >= 1e-7);
  CHECK(lambda_min(r.P) > 0.0);
  CHECK(r.sos_pass);
  CHECK(r.sos_min_eig >= -1e-6 * (1.0 + r.sos_norm));
  CHECK(r.oracle_checked);
  CHECK(r.oracle_worst_slack <= 1e-6);
  CHECK(r.composed);
  CHECK(r.composition.pass);
  CHECK(r.composition.norm11 < 1.0);
  CHECK(r.rank.pass);
}

TEST_CASE("report json and rendering are fixpoints") {
  const PipelineReport& r = spacecraft_report();
  const std::string j = report_to_json(r);
  const PipelineReport back = report_from_json(j);
  CHECK(report_to_json(back) == j);
  CHECK(render_report(back) == render_report(r));
  CHECK(render_report(report_from_json(report_to_json(back))) == render_report(back));
  CHECK_THROWS(report_from_json("[1, 2"));
}

TEST_CASE("rendered controller has degree-2 terms") {
  const std::string text = render_report(spacecraft_report());
  const auto at = text.find("u_1 = ");
  REQUIRE(at != std::string::npos);
  const std::string line = text.substr(at, text.find('\n', at) - at);
  CHECK((line.find("^2") != std::string::npos || line.find("*x") != std::string::npos));
  CHECK(text.find("UGAS-certified") != std::string::npos);
}

TEST_CASE("pipeline runs are reproducible") {
  const PipelineConfig cfg = preset("spacecraft-unknownD");
  const PipelineReport a = run_pipeline(cfg);
  CHECK(report_to_json(a) == report_to_json(spacecraft_report()));

  SimParams sp = cfg.sim;
  sp.N_sim = 4;
  sp.horizon = 1.0;
  const fs::path d1 = scratch("repro1"), d2 = scratch("repro2");
  write_trajectory_csvs(d1.string(), run_simulation(a, sp, 3, false).sim, 3, 3);
  write_trajectory_csvs(d2.string(), run_simulation(a, sp, 3, false).sim, 3, 3);
  for (int i = 1; i <= 4; ++i) {
    const std::string f = "traj_" + std::to_string(i) + ".csv";
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  CHECK(slurp(d1 / "traj_1.csv").rfind("t,x_1,x_2,x_3,u_1,u_2,u_3\n", 0) == 0);
}

TEST_CASE("spacecraft closed loop from large initial conditions") {
  SimParams sp = preset("spacecraft-unknownD").sim;
  sp.N_sim = 20;
  sp.ic_magnitude = 1e4;
  sp.horizon = 5.0;
  const SimSummary s = run_simulation(spacecraft_report(), sp, 1, false);
  CHECK(s.initial_norm > 1e4);
  CHECK(s.ratio <= 1e-2);
}

TEST_CASE("zero initial condition in the harness") {
  SimParams sp = preset("spacecraft-unknownD").sim;
  sp.N_sim = 3;
  sp.ic_magnitude = 0.0;
  sp.horizon = 1.0;
  const SimSummary s = run_simulation(spacecraft_report(), sp, 1, false);
  CHECK(s.final_norm == 0.0);
  for (const Mat& x : s.sim.X) CHECK(x.isZero(0.0));
}

TEST_CASE("absurd decay requirement is infeasible") {
  const PipelineReport ok = run_pipeline(chain_config(0.3));
  CHECK(ok.verdict == Verdict::UgasCertified);

  const PipelineConfig cfg = chain_config(1e3);
  const PipelineReport r = run_pipeline(cfg);
  CHECK(r.verdict == Verdict::SynthesisInfeasible);
  CHECK_FALSE(r.synthesis_ok);
  CHECK(r.margin < 1e-7);
  CHECK_THROWS_AS(run_simulation(r, cfg.sim, 1, false), ConfigError);
}

TEST_CASE("fully actuated spacecraft reaches a decay of 1e3") {
  // every state has its own input, so high gain buys any decay rate; the
  // oracle on the true model confirms the certificate
  PipelineConfig cfg = preset("spacecraft-unknownD");
  cfg.synth.kappa = 1e3;
  cfg.network.classes[0].kappa = 1e3;
  const PipelineReport r = run_pipeline(cfg);
  CHECK(r.verdict == Verdict::UgasCertified);
  CHECK(r.oracle_checked);
  CHECK(r.oracle_worst_slack <= 1e-6);
}

TEST_CASE("cli pipeline writes its outputs") {
  const fs::path d = scratch("cli_pipeline");
  const Run r = cli("pipeline --preset spacecraft-unknownD --seed 1 --out " + d.string(), d);
  CHECK(r.code == 0);
  for (const char* f : {"report.json", "gains.csv", "summary.txt", "traj_1.csv", "traj_20.csv"})
    CHECK(fs::exists(d / f));
  const PipelineReport rep = report_from_json(slurp(d / "report.json"));
  CHECK(rep.verdict == Verdict::UgasCertified);

  const Run shown = cli("report " + (d / "report.json").string(), d);
  CHECK(shown.code == 0);
  CHECK(slurp(d / "stdout.txt").find("UGAS-certified") != std::string::npos);
}

TEST_CASE("cli infeasible config exits with the synthesis code") {
  const fs::path d = scratch("cli_kappa");
  spit(d / "cfg.json", config_to_json(chain_config(1e3)));
  const Run r = cli("pipeline --config " + (d / "cfg.json").string() + " --out " + (d / "out").string(), d);
  CHECK(r.code == 3);
  const PipelineReport rep = report_from_json(slurp(d / "out" / "report.json"));
  CHECK(rep.verdict == Verdict::SynthesisInfeasible);
}

TEST_CASE("cli small-gain failure prints the remediation hint") {
  const fs::path d = scratch("cli_gain");
  PipelineConfig cfg = preset("spacecraft-unknownD");
  cfg.synth.varkappa = 2.0;
  cfg.network.classes[0].varkappa = 2.0;
  spit(d / "cfg.json", config_to_json(cfg));
  const Run r = cli("pipeline --no-sim --config " + (d / "cfg.json").string() + " --out " + (d / "out").string(), d);
  CHECK(r.code == 2);
  CHECK(r.err.find("more collected samples T") != std::string::npos);
}

TEST_CASE("cli missing files name the path") {
  const fs::path d = scratch("cli_missing");
  const std::string ghost = (d / "no_such_report.json").string();
  const Run r = cli("report " + ghost, d);
  CHECK(r.code != 0);
  CHECK(r.err.find(ghost) != std::string::npos);

  const Run c = cli("pipeline --config " + (d / "missing.json").string(), d);
  CHECK(c.code == 1);
  CHECK(c.err.find("missing.json") != std::string::npos);

  const Run s = cli("simulate --report " + ghost, d);
  CHECK(s.code != 0);
  CHECK(s.err.find(ghost) != std::string::npos);
}

TEST_CASE("cli staged run matches the one-shot pipeline") {
  const fs::path d = scratch("cli_stages");
  CHECK(cli("collect --preset spacecraft-unknownD --out " + d.string(), d).code == 0);
  CHECK(fs::exists(d / "record.json"));
  CHECK(cli("synthesize --out " + d.string(), d).code == 0);
  CHECK(cli("compose --report " + (d / "report.json").string() + " --out " + d.string(), d).code == 0);
  CHECK(fs::exists(d / "gains.csv"));
  CHECK(cli("simulate --report " + (d / "report.json").string() + " --out " + d.string() +
                " --N-sim 3 --horizon 1",
            d).code == 0);
  CHECK(fs::exists(d / "traj_3.csv"));
  const PipelineReport rep = report_from_json(slurp(d / "report.json"));
  CHECK(rep.verdict == Verdict::UgasCertified);
  CHECK(rep.P.isApprox(spacecraft_report().P, 1e-12));
}
