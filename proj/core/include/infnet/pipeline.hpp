#pragma once

#include "infnet/composition.hpp"
#include "infnet/datagen.hpp"
#include "infnet/simulate.hpp"
#include "infnet/synthesis.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace infnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataParams {
  int T = 0;
  double tau = 0.1;
  double b = 0.0;
  double amplitude = 1.0;
  double x0_amplitude = 1.0;
  std::uint64_t seed = 1;
  NoiseMode noise = NoiseMode::Explicit;
  int N_data = 0;  // 0: 2 for cascades, 2K for bands
  int substeps = 20;
};

struct SynthParams {
  double kappa = 0.0;
  double vartheta = 0.0;
  DMode mode = DMode::Unknown;
  double varkappa = 0.0;
  int deg_K = 2;
  int deg_gamma = 0;
  int gram_degree = 0;
};

struct CheckParams {
  int oracle_samples = 1000;
  double oracle_x_radius = 1.0;
  double oracle_w_radius = 1.0;
  double sos_radius = 1.0;
  int sos_density = 9;
  int decrease_samples = 200;
  int decrease_N = 10;
};

struct SimParams {
  int N_sim = 20;
  double horizon = 10.0;
  double ic_magnitude = 1.0;
  double open_loop_ic = 0.0;  // 0: same as ic_magnitude
  Boundary boundary = Boundary::Clip;
  double sample_dt = 0.01;
};

struct PipelineConfig {
  std::string name;
  NetworkDescriptor network;
  DataParams data;
  SynthParams synth;
  double epsilon = 1e-9;
  CheckParams checks;
  SimParams sim;
  std::string out_dir = "out";
};

std::vector<std::string> preset_names();
PipelineConfig preset(const std::string& name);

// System classes used by the presets (with ground truth attached).
SubsystemClass spacecraft_class();
SubsystemClass lorenz_class();
SubsystemClass academic_class();

std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);

enum class Verdict { UgasCertified, SmallGainFailed, SynthesisInfeasible, Error };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct PipelineReport {
  PipelineConfig config;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::Error;
  std::string message;
  int representative = 0;
  int card = 0;

  RankDiagnostic rank;
  int record_T = 0;
  int sigma = 0;

  bool synthesis_ok = false;
  std::string sdp_status;
  int sdp_iterations = 0;
  double sdp_eq_residual = 0.0;
  double sdp_gap = 0.0;
  int sdp_constraints = 0;
  std::vector<int> sdp_blocks;
  double margin = 0.0;
  double scale = 1.0;
  Mat P;
  Mat Phi;
  PolyMatrix K;
  Polynomial gamma;
  double alpha_lo = 0.0, alpha_hi = 0.0, rho = 0.0, d_norm_sq = 0.0;

  double sos_min_eig = 0.0;
  double sos_norm = 0.0;
  bool sos_pass = false;
  bool oracle_checked = false;  // needs ground truth in the config
  double oracle_worst_slack = 0.0;
  bool oracle_pass = false;
  bool decrease_checked = false;
  double decrease_worst_slack = 0.0;
  bool decrease_pass = false;

  bool composed = false;
  CompositionResult composition;

  double peak_memory_mb = 0.0;  // estimate from problem sizes

  // Rebuilds a result usable for control and certificate evaluation.
  // Condition data (Z, whitening) are not stored, so only P, K, rho are live.
  SynthesisResult controller() const;
};

std::string report_to_json(const PipelineReport& r);
PipelineReport report_from_json(const std::string& text);
// Human-readable rendering.
std::string render_report(const PipelineReport& r, const std::string& timing_json = "");

struct Timing {
  double collect_s = 0.0;
  double synthesis_s = 0.0;
  double checks_s = 0.0;
  double total_s = 0.0;
};
std::string timing_to_json(const Timing& t);

// Stage helpers shared by the cli subcommands.
struct CollectOutput {
  TrajectoryRecord record;
  TruncatedNetwork net;
  int representative = 0;
  int card = 0;
};
// Truncation used for data generation: N_data, or 2 for cascades and 2K for bands.
int data_truncation_size(const PipelineConfig& cfg);
CollectOutput run_collect(const PipelineConfig& cfg);

std::string record_to_json(const TrajectoryRecord& r);
TrajectoryRecord record_from_json(const std::string& text);

SynthesisProblem make_problem(const PipelineConfig& cfg, const TrajectoryRecord& rec, int card);

// Synthesis + certificate checks; fills the synthesis part of the report.
PipelineReport run_synthesis(const PipelineConfig& cfg, const CollectOutput& data, Timing* timing = nullptr);

// Composition stage; sets verdict.
void run_composition(PipelineReport& r);

PipelineReport run_pipeline(const PipelineConfig& cfg, Timing* timing = nullptr);

struct SimSummary {
  double initial_norm = 0.0;
  double final_norm = 0.0;
  double ratio = 0.0;
  double min_late_norm = 0.0;  // min state norm over the second half
  bool open_loop = false;
  SimResult sim;
};
SimSummary run_simulation(const PipelineReport& r, const SimParams& sp, std::uint64_t seed, bool open_loop);

// One CSV per subsystem: t, x_1.., u_1.. at 17 significant digits.
void write_trajectory_csvs(const std::string& dir, const SimResult& s, int n, int m,
                           const std::string& prefix = "traj_");
std::string sim_summary_text(const SimSummary& s);

}  // namespace infnet
