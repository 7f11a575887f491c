#include "infnet/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace infnet {

namespace {

Monomial mono(std::vector<int> e) { return Monomial(std::move(e)); }

Polynomial poly(int n, std::initializer_list<std::pair<std::vector<int>, double>> terms) {
  Polynomial p(n);
  for (const auto& [e, c] : terms) p.add_term(mono(e), c);
  return p;
}

PolyMatrix identity_poly(int k, int n) { return PolyMatrix::constant(Mat::Identity(k, k), n); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SubsystemClass spacecraft_class() {
  SubsystemClass c;
  c.name = "spacecraft";
  c.n = 3;
  c.m = 3;
  c.dict_F = {mono({1, 0, 0}), mono({0, 1, 0}), mono({0, 0, 1}),
              mono({1, 1, 0}), mono({0, 1, 1}), mono({1, 0, 1})};
  c.dict_G = identity_poly(3, 3);
  PolyMatrix psi(6, 3, 3);
  for (int i = 0; i < 3; ++i) psi(i, i) = Polynomial::constant(3, 1.0);
  psi(3, 0) = poly(3, {{{0, 1, 0}, 1.0}});
  psi(4, 1) = poly(3, {{{0, 0, 1}, 1.0}});
  psi(5, 2) = poly(3, {{{1, 0, 0}, 1.0}});
  c.psi_override = psi;

  // Euler rigid body with J = (2, 1.5, 1)
  const double J1 = 2.0, J2 = 1.5, J3 = 1.0;
  GroundTruth t;
  t.f_star_dict = {mono({0, 1, 1}), mono({1, 0, 1}), mono({1, 1, 0})};
  t.a_star = Mat::Zero(3, 3);
  t.a_star(0, 0) = (J2 - J3) / J1;
  t.a_star(1, 1) = (J3 - J1) / J2;
  t.a_star(2, 2) = (J1 - J2) / J3;
  t.b_star = Vec(Eigen::Vector3d(1 / J1, 1 / J2, 1 / J3)).asDiagonal();
  t.g_star_dict = identity_poly(3, 3);
  c.truth = t;

  c.d_block = Mat::Zero(3, 3);
  c.d_block(0, 2) = c.d_block(1, 0) = c.d_block(2, 1) = -1e-4;
  return c;
}

SubsystemClass lorenz_class() {
  SubsystemClass c;
  c.name = "lorenz";
  c.n = 3;
  c.m = 3;
  c.dict_F = {mono({1, 0, 0}), mono({0, 1, 0}), mono({0, 0, 1}),
              mono({1, 0, 1}), mono({1, 1, 0}), mono({0, 1, 1})};
  c.dict_G = identity_poly(3, 3);
  PolyMatrix psi(6, 3, 3);
  for (int i = 0; i < 3; ++i) psi(i, i) = Polynomial::constant(3, 1.0);
  psi(3, 0) = poly(3, {{{0, 0, 1}, 1.0}});
  psi(4, 1) = poly(3, {{{1, 0, 0}, 1.0}});
  psi(5, 2) = poly(3, {{{0, 1, 0}, 1.0}});
  c.psi_override = psi;

  GroundTruth t;
  t.f_star_dict = {mono({1, 0, 0}), mono({0, 1, 0}), mono({0, 0, 1}), mono({1, 0, 1}),
                   mono({1, 1, 0})};
  t.a_star = Mat::Zero(3, 5);
  t.a_star << -10, 10, 0, 0, 0,
              28, -1, 0, -1, 0,
              0, 0, -8.0 / 3.0, 0, 1;
  t.b_star = Mat::Identity(3, 3);
  t.g_star_dict = identity_poly(3, 3);
  c.truth = t;

  c.d_block = Mat::Zero(3, 3);
  c.d_block(0, 0) = 1e-3;
  c.d_block(2, 2) = -1e-3;
  return c;
}

SubsystemClass academic_class() {
  SubsystemClass c;
  c.name = "academic";
  c.n = 2;
  c.m = 1;
  c.dict_F = {mono({1, 0}), mono({0, 1}), mono({1, 1}), mono({2, 0}), mono({0, 2})};
  PolyMatrix g(3, 1, 2);
  g(0, 0) = Polynomial::constant(2, 1.0);
  g(1, 0) = poly(2, {{{1, 0}, 1.0}});
  g(2, 0) = poly(2, {{{0, 1}, 1.0}});
  c.dict_G = g;
  PolyMatrix psi(5, 2, 2);
  psi(0, 0) = Polynomial::constant(2, 1.0);
  psi(1, 1) = Polynomial::constant(2, 1.0);
  psi(2, 1) = poly(2, {{{1, 0}, 1.0}});
  psi(3, 0) = poly(2, {{{1, 0}, 1.0}});
  psi(4, 1) = poly(2, {{{0, 1}, 1.0}});
  c.psi_override = psi;

  GroundTruth t;
  t.f_star_dict = {mono({1, 0}), mono({0, 1}), mono({1, 1})};
  t.a_star = Mat::Zero(2, 3);
  t.a_star << 0, 1, 0,
              -1, -1, 1;
  t.b_star = Mat::Zero(2, 1);
  t.b_star(1, 0) = 1.0;
  PolyMatrix gs(1, 1, 2);
  gs(0, 0) = poly(2, {{{0, 1}, 1.0}});
  t.g_star_dict = gs;
  c.truth = t;

  c.d_block = Mat::Zero(2, 2);
  c.d_block(1, 0) = 3e-4;
  return c;
}

std::vector<std::string> preset_names() {
  return {"spacecraft-unknownD", "spacecraft-knownD", "lorenz-unknownD",
          "lorenz-knownD",       "academic-unknownD", "academic-knownD"};
}

PipelineConfig preset(const std::string& name) {
  PipelineConfig c;
  c.name = name;
  SubsystemClass cls;
  double ic = 1.0;
  if (name.rfind("spacecraft", 0) == 0) {
    cls = spacecraft_class();
    c.data.amplitude = 0.6;
    c.data.x0_amplitude = 0.4;
    c.data.tau = 0.1;
    c.data.b = 0.01;
    c.synth.kappa = 0.1;
    ic = 1e4;
  } else if (name.rfind("lorenz", 0) == 0) {
    cls = lorenz_class();
    c.data.amplitude = 0.04;
    c.data.x0_amplitude = 0.004;
    c.data.tau = 0.001;
    c.data.b = 0.001;
    ic = 1e6;
  } else if (name.rfind("academic", 0) == 0) {
    cls = academic_class();
    c.data.amplitude = 1.0;
    c.data.x0_amplitude = 0.5;
    c.data.b = 0.01;
    c.synth.kappa = 0.5;
    c.synth.vartheta = 0.5;
    c.synth.deg_K = 1;
    ic = 10.0;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.synth.deg_gamma = 2;

  if (name == "spacecraft-unknownD") {
    c.network.topology = Topology::Cascade;
    c.data.T = 70;
    c.synth.vartheta = 1.0;
    c.synth.varkappa = 0.05;
  } else if (name == "spacecraft-knownD") {
    c.network.topology = Topology::ForwardBand;
    c.network.band = 1800;
    c.data.T = 50;
    c.synth.vartheta = 5.5;
    c.synth.mode = DMode::Known;
  } else if (name == "lorenz-unknownD") {
    c.network.topology = Topology::Cascade;
    c.data.T = 25;
    c.synth.kappa = 0.1;
    c.synth.vartheta = 0.8;
    c.synth.varkappa = 0.04;
  } else if (name == "lorenz-knownD") {
    c.network.topology = Topology::ForwardBand;
    c.network.band = 1000;
    c.data.T = 80;
    c.synth.kappa = 2.0;
    c.synth.vartheta = 1.0;
    c.synth.mode = DMode::Known;
  } else if (name == "academic-unknownD") {
    c.network.topology = Topology::ForwardBand;
    c.network.band = 5;
    c.data.T = 21;
    c.data.tau = 0.008;
    c.synth.varkappa = 0.06;
  } else if (name == "academic-knownD") {
    c.network.topology = Topology::ForwardBand;
    c.network.band = 500;
    c.data.T = 50;
    c.data.tau = 0.01;
    c.synth.mode = DMode::Known;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }

  cls.kappa = c.synth.kappa;
  cls.vartheta = c.synth.vartheta;
  if (c.synth.mode == DMode::Unknown) cls.varkappa = c.synth.varkappa;
  c.network.classes = {cls};

  c.checks.oracle_x_radius = ic;
  c.checks.oracle_w_radius = ic;
  c.sim.ic_magnitude = ic;
  // open-loop Lorenz rotates at a rate ~|x|; start on the attractor scale
  if (cls.name == "lorenz") c.sim.open_loop_ic = 10.0;
  c.sim.N_sim = c.network.topology == Topology::Cascade ? 20 : 50;
  c.sim.horizon = 10.0;
  c.sim.boundary = Boundary::Clip;
  c.out_dir = "out/" + name;
  return c;
}

// ---------------------------------------------------------------- stages

int data_truncation_size(const PipelineConfig& cfg) {
  if (cfg.data.N_data > 0) return cfg.data.N_data;
  return cfg.network.topology == Topology::Cascade ? 2 : 2 * cfg.network.band;
}

CollectOutput run_collect(const PipelineConfig& cfg) {
  if (cfg.network.classes.empty()) throw ConfigError("network has no subsystem class");
  const SubsystemClass& cls = cfg.network.classes.front();
  cls.validate();
  const int N = data_truncation_size(cfg);

  CollectOutput out;
  out.net = instantiate_truncation(cfg.network, N, Boundary::Clip);
  out.representative = representative_index(cfg.network, out.net);
  out.card = static_cast<int>(out.net.neighbors(out.representative).size());

  CollectConfig cc;
  cc.T = cfg.data.T;
  cc.tau = cfg.data.tau;
  cc.b = cfg.data.b;
  cc.amplitude = cfg.data.amplitude;
  cc.x0_amplitude = cfg.data.x0_amplitude;
  cc.seed = cfg.data.seed;
  cc.noise = cfg.data.noise;
  cc.substeps = cfg.data.substeps;
  out.record = collect(out.net, cls, cc, {out.representative}).front();
  return out;
}

SynthesisProblem make_problem(const PipelineConfig& cfg, const TrajectoryRecord& rec, int card) {
  const SubsystemClass& cls = cfg.network.classes.front();
  SynthesisProblem p;
  p.record = &rec;
  p.dict_F = cls.dict_F;
  p.dict_G = cls.dict_G;
  p.psi = factor_transformation(cls.dict_F, cls.n, cls.psi_override);
  p.n = cls.n;
  p.m = cls.m;
  p.kappa = cfg.synth.kappa;
  p.vartheta = cfg.synth.vartheta;
  p.mode = cfg.synth.mode;
  p.varkappa = cfg.synth.varkappa;
  if (p.mode == DMode::Known) p.D = assemble_D(cls.d_block, card);
  p.deg_K = cfg.synth.deg_K;
  p.deg_gamma = cfg.synth.deg_gamma;
  p.gram_degree = cfg.synth.gram_degree;
  return p;
}

namespace {

double memory_estimate_mb(const SdpProblem& sdp, const TrajectoryRecord& rec) {
  double m = static_cast<double>(sdp.equalities.size());
  double blocks = 0.0;
  for (int d : sdp.blocks) blocks += static_cast<double>(d) * d;
  const double nfree = sdp.free_vars;
  // Schur matrix, ~12 dense copies per block (iterates, scalings, directions),
  // the data record, and the free-variable columns.
  const double doubles = m * m + 12.0 * blocks + 4.0 * rec.W.size() + 2.0 * nfree * m;
  return 8.0 * doubles / (1024.0 * 1024.0);
}

}  // namespace

PipelineReport run_synthesis(const PipelineConfig& cfg, const CollectOutput& data, Timing* timing) {
  PipelineReport r;
  r.config = cfg;
  r.seed = cfg.data.seed;
  r.representative = data.representative;
  r.card = data.card;
  r.record_T = data.record.T;
  r.sigma = static_cast<int>(data.record.W.rows());

  const SubsystemClass& cls = cfg.network.classes.front();
  const DataMatrices dm = build_regressors(data.record, cls.dict_F, cls.dict_G);
  r.rank = rank_check(cfg.synth.mode == DMode::Unknown ? dm.Q : dm.L);

  const SynthesisProblem prob = make_problem(cfg, data.record, data.card);
  const auto t0 = std::chrono::steady_clock::now();
  const SynthesisOutcome out = synthesize(prob);
  if (timing) timing->synthesis_s = out.seconds;

  r.sdp_status = to_string(out.sdp.status);
  r.sdp_iterations = out.sdp.iterations;
  r.sdp_eq_residual = out.sdp.eq_residual;
  r.sdp_gap = out.sdp.gap;
  r.margin = out.sdp.margin.value_or(0.0);
  {
    const CompiledSdp compiled = compile_condition(prob);
    r.sdp_constraints = static_cast<int>(compiled.sdp.equalities.size());
    r.sdp_blocks = compiled.sdp.blocks;
    r.peak_memory_mb = memory_estimate_mb(compiled.sdp, data.record);
  }
  if (!out.success) {
    r.verdict = Verdict::SynthesisInfeasible;
    r.message = out.message;
    return r;
  }

  const SynthesisResult& res = out.result;
  r.synthesis_ok = true;
  r.margin = res.margin;
  r.scale = res.cond.scale;
  r.P = res.P.dense();
  r.Phi = res.Phi.dense();
  r.K = res.K;
  r.gamma = res.gamma;
  r.alpha_lo = res.alpha_lo;
  r.alpha_hi = res.alpha_hi;
  r.rho = res.rho;
  r.d_norm_sq = res.d_norm_sq;

  const auto t1 = std::chrono::steady_clock::now();
  const SosResidual sos = verify_sos_residual(res, cfg.checks.sos_radius, cfg.checks.sos_density);
  r.sos_min_eig = sos.min_eig;
  r.sos_norm = sos.s_norm;
  r.sos_pass = sos.pass;

  if (cls.truth) {
    const CertificateReport cert =
        certify_iss_oracle(res, *cls.truth, assemble_D(cls.d_block, data.card),
                           cfg.checks.oracle_samples, cfg.checks.oracle_x_radius,
                           cfg.checks.oracle_w_radius);
    r.oracle_checked = true;
    r.oracle_worst_slack = cert.worst_slack;
    r.oracle_pass = cert.pass;
  }
  if (timing) timing->checks_s = seconds_since(t1);
  (void)t0;
  r.verdict = Verdict::Error;
  r.message = "not composed";
  return r;
}

void run_composition(PipelineReport& r) {
  if (!r.synthesis_ok) return;
  const PipelineConfig& cfg = r.config;
  const SubsystemClass& cls = cfg.network.classes.front();
  GainModel g;
  g.classes = {ClassGains{cls.name, cfg.synth.kappa, r.alpha_lo, r.alpha_hi, r.rho}};
  g.topology = cfg.network.topology;
  g.card = cfg.network.card();
  r.composition = compose(g, cfg.epsilon);
  r.composed = true;

  if (r.composition.pass && cls.truth) {
    const int N = std::max(2, cfg.checks.decrease_N);
    const TruncatedNetwork net = instantiate_truncation(cfg.network, N, Boundary::Clip);
    const DecreaseReport dec =
        network_decrease_check(net, cls, r.controller(), r.composition.mu,
                               r.composition.kappa_inf, cfg.checks.decrease_samples,
                               cfg.checks.oracle_x_radius);
    r.decrease_checked = true;
    r.decrease_worst_slack = dec.worst_slack;
    r.decrease_pass = dec.pass;
  }

  if (!r.composition.pass) {
    r.verdict = Verdict::SmallGainFailed;
    r.message =
        "small-gain condition fails: repeat the data collection and synthesis steps with "
        "more collected samples T or different parameters kappa_i, vartheta_i";
    return;
  }
  const bool margin_ok = r.margin > 0.0;
  const bool oracle_ok = !r.oracle_checked || r.oracle_pass;
  const bool decrease_ok = !r.decrease_checked || r.decrease_pass;
  if (margin_ok && oracle_ok && r.sos_pass && decrease_ok) {
    r.verdict = Verdict::UgasCertified;
    r.message = r.oracle_checked ? "all checks passed"
                                 : "all checks passed (no ground truth, oracle skipped)";
  } else {
    r.verdict = Verdict::Error;
    std::string why;
    if (!margin_ok) why += " margin";
    if (!r.sos_pass) why += " sos-residual";
    if (!oracle_ok) why += " oracle";
    if (!decrease_ok) why += " network-decrease";
    r.message = "certificate check failed:" + why;
  }
}

PipelineReport run_pipeline(const PipelineConfig& cfg, Timing* timing) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineReport r;
  r.config = cfg;
  r.seed = cfg.data.seed;
  try {
    const auto tc = std::chrono::steady_clock::now();
    const CollectOutput data = run_collect(cfg);
    if (timing) timing->collect_s = seconds_since(tc);
    r = run_synthesis(cfg, data, timing);
    run_composition(r);
  } catch (const std::exception& e) {
    r.verdict = Verdict::Error;
    r.message = std::string("stage error: ") + e.what();
  }
  if (timing) timing->total_s = seconds_since(t0);
  return r;
}

SynthesisResult PipelineReport::controller() const {
  SynthesisResult s;
  s.P = SymMatrix::from_dense(P);
  s.Phi = SymMatrix::from_dense(Phi);
  s.K = K;
  s.gamma = gamma;
  s.alpha_lo = alpha_lo;
  s.alpha_hi = alpha_hi;
  s.rho = rho;
  s.kappa = config.synth.kappa;
  s.vartheta = config.synth.vartheta;
  s.margin = margin;
  s.d_norm_sq = d_norm_sq;
  s.cond.n = config.network.classes.front().n;
  s.cond.m = config.network.classes.front().m;
  s.cond.scale = scale;
  return s;
}

// ---------------------------------------------------------------- simulation

SimSummary run_simulation(const PipelineReport& r, const SimParams& sp, std::uint64_t seed,
                          bool open_loop) {
  if (!open_loop && r.verdict != Verdict::UgasCertified)
    throw ConfigError("closed-loop simulation needs a UGAS-certified report");
  const SubsystemClass& cls = r.config.network.classes.front();
  const TruncatedNetwork net = instantiate_truncation(r.config.network, sp.N_sim, sp.boundary);
  const double mag = open_loop && sp.open_loop_ic > 0.0 ? sp.open_loop_ic : sp.ic_magnitude;
  Mat x0(cls.n, sp.N_sim);
  for (int i = 0; i < sp.N_sim; ++i) {
    const CounterRng rng{seed, static_cast<std::uint64_t>(i + 1), kStreamHarness};
    for (int c = 0; c < cls.n; ++c)
      x0(c, i) = rng.uniform(static_cast<std::uint64_t>(c), -mag, mag);
  }
  FeedbackLaw law;
  if (open_loop) {
    const int m = cls.m;
    law = [m](const Vec&) { return Vec(Vec::Zero(m)); };
  } else {
    const SynthesisResult ctl = r.controller();
    law = [ctl](const Vec& x) { return ctl.control(x); };
  }
  SimConfig sc;
  sc.horizon = sp.horizon;
  sc.sample_dt = sp.sample_dt;
  sc.method = open_loop ? Integrator::DormandPrince : Integrator::Rosenbrock;

  SimSummary s;
  s.open_loop = open_loop;
  s.sim = simulate_network(net, cls, law, x0, sc);
  s.initial_norm = s.sim.initial_norm;
  s.final_norm = s.sim.final_norm;
  s.ratio = s.initial_norm > 0.0 ? s.final_norm / s.initial_norm : 0.0;
  s.min_late_norm = std::numeric_limits<double>::infinity();
  const std::size_t K = s.sim.t.size();
  for (std::size_t k = K / 2; k < K; ++k) {
    double sq = 0.0;
    for (const Mat& X : s.sim.X) sq += X.col(static_cast<Eigen::Index>(k)).squaredNorm();
    s.min_late_norm = std::min(s.min_late_norm, std::sqrt(sq));
  }
  if (K == 0) s.min_late_norm = 0.0;
  return s;
}

void write_trajectory_csvs(const std::string& dir, const SimResult& s, int n, int m,
                           const std::string& prefix) {
  std::filesystem::create_directories(dir);
  char buf[64];
  for (std::size_t i = 0; i < s.X.size(); ++i) {
    const std::string path = dir + "/" + prefix + std::to_string(i + 1) + ".csv";
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "t";
    for (int c = 1; c <= n; ++c) f << ",x_" << c;
    for (int c = 1; c <= m; ++c) f << ",u_" << c;
    f << "\n";
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", s.t[k]);
      f << buf;
      for (int c = 0; c < n; ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", s.X[i](c, static_cast<Eigen::Index>(k)));
        f << buf;
      }
      for (int c = 0; c < m; ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", s.U[i](c, static_cast<Eigen::Index>(k)));
        f << buf;
      }
      f << "\n";
    }
  }
}

std::string sim_summary_text(const SimSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "mode %s\nsubsystems %zu\ninitial_norm %.17g\nfinal_norm %.17g\nratio %.17g\n"
                "min_late_norm %.17g\nsteps %ld\nrejected %ld\n",
                s.open_loop ? "open-loop" : "closed-loop", s.sim.X.size(), s.initial_norm,
                s.final_norm, s.ratio, s.min_late_norm, s.sim.steps, s.sim.rejected);
  return buf;
}

}  // namespace infnet
