// infnet: collect, synthesize, compose, simulate and report from the command line.
#include "infnet/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace infnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSmallGain = 2, kInfeasible = 3, kFailed = 4 };

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void spit(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

struct Common {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool open_loop = false;
};

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg;
  if (!c.config.empty()) cfg = config_from_json(slurp(c.config));
  else if (!c.preset.empty()) cfg = preset(c.preset);
  else throw ConfigError("need --preset NAME or --config PATH");
  if (c.seed) cfg.data.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

int verdict_exit(const PipelineReport& r) {
  switch (r.verdict) {
    case Verdict::UgasCertified: return kOk;
    case Verdict::SmallGainFailed: return kSmallGain;
    case Verdict::SynthesisInfeasible: return kInfeasible;
    default: return kFailed;
  }
}

void print_verdict(const PipelineReport& r) {
  std::cout << "verdict: " << to_string(r.verdict) << "\n" << r.message << "\n";
  if (r.verdict == Verdict::SmallGainFailed)
    std::cerr << "hint: Repeat Steps 4-14 with more collected samples T or different "
                 "parameters kappa_i, vartheta_i\n";
}

std::string gains_csv(const PipelineReport& r) {
  const auto& cls = r.config.network.classes.front();
  GainModel g;
  g.classes = {ClassGains{cls.name, r.config.synth.kappa, r.alpha_lo, r.alpha_hi, r.rho}};
  g.topology = r.config.network.topology;
  g.card = r.config.network.card();
  return gain_table_csv(g, r.composition);
}

void write_outputs(const PipelineReport& r, const fs::path& out) {
  spit(out / "report.json", report_to_json(r));
  if (r.composed) spit(out / "gains.csv", gains_csv(r));
}

// Simulates (closed loop when certified, open loop on request) into `out`.
int simulate_into(const PipelineReport& r, const SimParams& sp, std::uint64_t seed,
                  bool open_loop, const fs::path& out) {
  const auto& cls = r.config.network.classes.front();
  try {
    const SimSummary s = run_simulation(r, sp, seed, open_loop);
    write_trajectory_csvs(out.string(), s.sim, cls.n, cls.m);
    spit(out / "summary.txt", sim_summary_text(s));
    std::cout << sim_summary_text(s);
    return kOk;
  } catch (const IntegrationDiverged& e) {
    const std::string msg = std::string("certificate-contradiction: ") + e.what() + "\n";
    spit(out / "summary.txt", msg);
    std::cerr << msg;
    return kFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven controller synthesis for infinite networks"};
  app.require_subcommand(1);

  Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--preset", c.preset, "preset name");
    sub->add_option("--config", c.config, "JSON config path");
    sub->add_option("--seed", c.seed, "data seed");
    sub->add_option("--out", c.out, "output directory");
  };

  auto* pipeline = app.add_subcommand("pipeline", "collect, synthesize, compose, simulate");
  add_common(pipeline);
  pipeline->add_flag("--open-loop", c.open_loop, "simulate without the controller");
  bool no_sim = false;
  pipeline->add_flag("--no-sim", no_sim, "skip the closed-loop simulation");

  auto* collect_cmd = app.add_subcommand("collect", "collect one representative trajectory");
  add_common(collect_cmd);

  auto* synth_cmd = app.add_subcommand("synthesize", "synthesize from <out>/record.json");
  add_common(synth_cmd);

  auto* compose_cmd = app.add_subcommand("compose", "small-gain composition of <out>/report.json");
  std::string report_path;
  compose_cmd->add_option("--report", report_path, "report path");
  compose_cmd->add_option("--out", c.out, "output directory");

  auto* sim_cmd = app.add_subcommand("simulate", "simulate a truncated network");
  sim_cmd->add_option("--report", report_path, "report path");
  sim_cmd->add_option("--out", c.out, "output directory");
  sim_cmd->add_option("--seed", c.seed, "initial-condition seed");
  sim_cmd->add_flag("--open-loop", c.open_loop, "simulate without the controller");
  std::optional<int> n_sim;
  std::optional<double> horizon, ic;
  sim_cmd->add_option("--N-sim", n_sim, "truncation size");
  sim_cmd->add_option("--horizon", horizon, "horizon in seconds");
  sim_cmd->add_option("--ic", ic, "initial-condition magnitude");

  auto* report_cmd = app.add_subcommand("report", "render a report as text");
  std::string render_path;
  report_cmd->add_option("path", render_path, "report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pipeline) {
      const PipelineConfig cfg = load_config(c);
      const fs::path out = cfg.out_dir;
      Timing timing;
      const PipelineReport r = run_pipeline(cfg, &timing);
      write_outputs(r, out);
      spit(out / "timing.json", timing_to_json(timing));
      print_verdict(r);
      int code = verdict_exit(r);
      if (!no_sim && (r.verdict == Verdict::UgasCertified || c.open_loop)) {
        const int sc = simulate_into(r, cfg.sim, cfg.data.seed, c.open_loop, out);
        if (code == kOk) code = sc;
      }
      return code;
    }
    if (*collect_cmd) {
      const PipelineConfig cfg = load_config(c);
      const fs::path out = cfg.out_dir;
      const CollectOutput data = run_collect(cfg);
      spit(out / "config.json", config_to_json(cfg));
      spit(out / "record.json", record_to_json(data.record));
      std::cout << "subsystem " << data.representative << ": T=" << data.record.T
                << " sigma=" << data.record.W.rows() << " -> " << (out / "record.json") << "\n";
      return kOk;
    }
    if (*synth_cmd) {
      PipelineConfig cfg;
      if (c.config.empty() && c.preset.empty() && !c.out.empty() &&
          fs::exists(fs::path(c.out) / "config.json"))
        c.config = (fs::path(c.out) / "config.json").string();
      cfg = load_config(c);
      const fs::path out = cfg.out_dir;
      CollectOutput data;
      data.record = record_from_json(slurp((out / "record.json").string()));
      data.representative = data.record.index;
      const auto net = instantiate_truncation(cfg.network, data_truncation_size(cfg), Boundary::Clip);
      data.card = static_cast<int>(net.neighbors(data.record.index).size());
      Timing timing;
      PipelineReport r = run_synthesis(cfg, data, &timing);
      write_outputs(r, out);
      spit(out / "timing.json", timing_to_json(timing));
      std::cout << "synthesis: " << (r.synthesis_ok ? "ok" : "infeasible") << " margin "
                << r.margin << "\n";
      return r.synthesis_ok ? kOk : kInfeasible;
    }
    if (*compose_cmd) {
      const fs::path path = report_path.empty() ? fs::path(c.out.empty() ? "." : c.out) / "report.json"
                                                : fs::path(report_path);
      PipelineReport r = report_from_json(slurp(path.string()));
      run_composition(r);
      const fs::path out = c.out.empty() ? path.parent_path() : fs::path(c.out);
      write_outputs(r, out);
      print_verdict(r);
      return verdict_exit(r);
    }
    if (*sim_cmd) {
      const fs::path path = report_path.empty() ? fs::path(c.out.empty() ? "." : c.out) / "report.json"
                                                : fs::path(report_path);
      const PipelineReport r = report_from_json(slurp(path.string()));
      SimParams sp = r.config.sim;
      if (n_sim) sp.N_sim = *n_sim;
      if (horizon) sp.horizon = *horizon;
      if (ic) {
        sp.ic_magnitude = *ic;
        sp.open_loop_ic = 0.0;
      }
      const fs::path out = c.out.empty() ? path.parent_path() : fs::path(c.out);
      return simulate_into(r, sp, c.seed.value_or(r.seed), c.open_loop, out);
    }
    if (*report_cmd) {
      const PipelineReport r = report_from_json(slurp(render_path));
      const fs::path timing = fs::path(render_path).parent_path() / "timing.json";
      std::string tj;
      if (fs::exists(timing)) tj = slurp(timing.string());
      std::cout << render_report(r, tj);
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
