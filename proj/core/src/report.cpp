#include "infnet/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace infnet {

using ojson = nlohmann::ordered_json;

namespace {

// Non-finite numbers are not valid JSON; keep them as strings.
ojson num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double get_num(const ojson& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("bad number '" + s + "'");
  }
  return j.get<double>();
}

ojson mat_json(const Mat& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Row count is explicit so that r x 0 matrices survive.
ojson mat_obj(const Mat& m) {
  ojson o;
  o["rows"] = m.rows();
  o["cols"] = m.cols();
  ojson data = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(num(m(i, j)));
  o["data"] = std::move(data);
  return o;
}

Mat mat_from(const ojson& j) {
  if (j.is_object()) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    const auto& d = j.at("data");
    if (static_cast<Eigen::Index>(d.size()) != r * c) throw ConfigError("matrix size mismatch");
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = get_num(d[static_cast<std::size_t>(i * c + k)]);
    return m;
  }
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != c) throw ConfigError("ragged matrix");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = get_num(j[i][k]);
  }
  return m;
}

ojson monos_json(const std::vector<Monomial>& d) {
  ojson a = ojson::array();
  for (const auto& m : d) a.push_back(m.exps);
  return a;
}

std::vector<Monomial> monos_from(const ojson& j) {
  return monomials_from_exponents(j.get<std::vector<std::vector<int>>>());
}

ojson poly_json(const Polynomial& p) {
  ojson terms = ojson::array();
  for (const auto& [m, c] : p.terms()) {
    ojson t = ojson::array();
    t.push_back(m.exps);
    t.push_back(num(c));
    terms.push_back(std::move(t));
  }
  return terms;
}

Polynomial poly_from(const ojson& j, int n) {
  Polynomial p(n);
  for (const auto& t : j) {
    auto e = t.at(0).get<std::vector<int>>();
    if (static_cast<int>(e.size()) != n) throw ConfigError("monomial has wrong variable count");
    p.add_term(Monomial(std::move(e)), get_num(t.at(1)));
  }
  return p;
}

ojson polymat_json(const PolyMatrix& P) {
  ojson o;
  o["rows"] = P.rows();
  o["cols"] = P.cols();
  o["nvars"] = P.nvars();
  ojson cells = ojson::array();
  for (int i = 0; i < P.rows(); ++i)
    for (int k = 0; k < P.cols(); ++k) cells.push_back(poly_json(P(i, k)));
  o["cells"] = std::move(cells);
  return o;
}

PolyMatrix polymat_from(const ojson& j) {
  const int r = j.at("rows").get<int>(), c = j.at("cols").get<int>(), n = j.at("nvars").get<int>();
  PolyMatrix P(r, c, n);
  const auto& cells = j.at("cells");
  if (static_cast<int>(cells.size()) != r * c) throw ConfigError("polynomial matrix size mismatch");
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) P(i, k) = poly_from(cells[static_cast<std::size_t>(i * c + k)], n);
  return P;
}

std::string noise_str(NoiseMode m) { return m == NoiseMode::Explicit ? "explicit" : "implicit"; }
NoiseMode noise_from(const std::string& s) {
  if (s == "explicit") return NoiseMode::Explicit;
  if (s == "implicit") return NoiseMode::Implicit;
  throw ConfigError("unknown noise mode '" + s + "'");
}
std::string dmode_str(DMode m) { return m == DMode::Known ? "known" : "unknown"; }
DMode dmode_from(const std::string& s) {
  if (s == "known") return DMode::Known;
  if (s == "unknown") return DMode::Unknown;
  throw ConfigError("unknown D mode '" + s + "'");
}

ojson class_json(const SubsystemClass& c) {
  ojson o;
  o["name"] = c.name;
  o["n"] = c.n;
  o["m"] = c.m;
  o["dict_F"] = monos_json(c.dict_F);
  o["dict_G"] = polymat_json(c.dict_G);
  if (c.psi_override) o["psi"] = polymat_json(*c.psi_override);
  o["D_block"] = mat_json(c.d_block);
  if (c.truth) {
    ojson t;
    t["A_star"] = mat_obj(c.truth->a_star);
    t["B_star"] = mat_obj(c.truth->b_star);
    t["F_star"] = monos_json(c.truth->f_star_dict);
    t["G_star"] = polymat_json(c.truth->g_star_dict);
    o["truth"] = std::move(t);
  }
  return o;
}

SubsystemClass class_from(const ojson& o) {
  SubsystemClass c;
  c.name = o.value("name", std::string("class"));
  c.n = o.at("n").get<int>();
  c.m = o.at("m").get<int>();
  c.dict_F = monos_from(o.at("dict_F"));
  c.dict_G = polymat_from(o.at("dict_G"));
  if (o.contains("psi")) c.psi_override = polymat_from(o.at("psi"));
  c.d_block = o.contains("D_block") ? mat_from(o.at("D_block")) : Mat::Zero(c.n, c.n);
  if (o.contains("truth")) {
    const auto& t = o.at("truth");
    GroundTruth g;
    g.a_star = mat_from(t.at("A_star"));
    g.b_star = mat_from(t.at("B_star"));
    g.f_star_dict = monos_from(t.at("F_star"));
    g.g_star_dict = polymat_from(t.at("G_star"));
    c.truth = std::move(g);
  }
  return c;
}

ojson config_obj(const PipelineConfig& c) {
  ojson o;
  o["name"] = c.name;
  ojson net;
  net["topology"] = to_string(c.network.topology);
  net["band"] = c.network.band;
  net["card"] = c.network.card();
  ojson classes = ojson::array();
  for (const auto& cl : c.network.classes) classes.push_back(class_json(cl));
  net["classes"] = std::move(classes);
  o["network"] = std::move(net);

  ojson d;
  d["T"] = c.data.T;
  d["tau"] = num(c.data.tau);
  d["b"] = num(c.data.b);
  d["amplitude"] = num(c.data.amplitude);
  d["x0_amplitude"] = num(c.data.x0_amplitude);
  d["seed"] = c.data.seed;
  d["noise"] = noise_str(c.data.noise);
  d["N_data"] = c.data.N_data;
  d["substeps"] = c.data.substeps;
  o["data"] = std::move(d);

  ojson s;
  s["kappa"] = num(c.synth.kappa);
  s["vartheta"] = num(c.synth.vartheta);
  s["D_mode"] = dmode_str(c.synth.mode);
  s["varkappa"] = num(c.synth.varkappa);
  s["deg_K"] = c.synth.deg_K;
  s["deg_gamma"] = c.synth.deg_gamma;
  s["gram_degree"] = c.synth.gram_degree;
  o["synthesis"] = std::move(s);

  o["epsilon"] = num(c.epsilon);

  ojson k;
  k["oracle_samples"] = c.checks.oracle_samples;
  k["oracle_x_radius"] = num(c.checks.oracle_x_radius);
  k["oracle_w_radius"] = num(c.checks.oracle_w_radius);
  k["sos_radius"] = num(c.checks.sos_radius);
  k["sos_density"] = c.checks.sos_density;
  k["decrease_samples"] = c.checks.decrease_samples;
  k["decrease_N"] = c.checks.decrease_N;
  o["checks"] = std::move(k);

  ojson sim;
  sim["N_sim"] = c.sim.N_sim;
  sim["horizon"] = num(c.sim.horizon);
  sim["ic_magnitude"] = num(c.sim.ic_magnitude);
  sim["open_loop_ic"] = num(c.sim.open_loop_ic);
  sim["boundary"] = to_string(c.sim.boundary);
  sim["sample_dt"] = num(c.sim.sample_dt);
  o["simulation"] = std::move(sim);
  o["out_dir"] = c.out_dir;
  return o;
}

template <class T>
void opt(const ojson& o, const char* key, T& dst) {
  if (o.contains(key)) dst = o.at(key).get<T>();
}
void optd(const ojson& o, const char* key, double& dst) {
  if (o.contains(key)) dst = get_num(o.at(key));
}

PipelineConfig config_from_obj(const ojson& o) {
  PipelineConfig c;
  static const std::set<std::string> known = {"preset", "name",   "network",    "data",   "synthesis",
                                              "epsilon", "checks", "simulation", "out_dir"};
  if (!o.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : o.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  // A preset name with no network section loads the preset as a base.
  if (o.contains("preset")) c = preset(o.at("preset").get<std::string>());
  opt(o, "name", c.name);
  if (o.contains("network")) {
    const auto& net = o.at("network");
    if (net.contains("topology")) c.network.topology = topology_from_string(net.at("topology"));
    opt(net, "band", c.network.band);
    if (net.contains("classes")) {
      c.network.classes.clear();
      for (const auto& cl : net.at("classes")) c.network.classes.push_back(class_from(cl));
    }
  }
  if (o.contains("data")) {
    const auto& d = o.at("data");
    opt(d, "T", c.data.T);
    optd(d, "tau", c.data.tau);
    optd(d, "b", c.data.b);
    optd(d, "amplitude", c.data.amplitude);
    optd(d, "x0_amplitude", c.data.x0_amplitude);
    opt(d, "seed", c.data.seed);
    if (d.contains("noise")) c.data.noise = noise_from(d.at("noise"));
    opt(d, "N_data", c.data.N_data);
    opt(d, "substeps", c.data.substeps);
  }
  if (o.contains("synthesis")) {
    const auto& s = o.at("synthesis");
    optd(s, "kappa", c.synth.kappa);
    optd(s, "vartheta", c.synth.vartheta);
    if (s.contains("D_mode")) c.synth.mode = dmode_from(s.at("D_mode"));
    optd(s, "varkappa", c.synth.varkappa);
    opt(s, "deg_K", c.synth.deg_K);
    opt(s, "deg_gamma", c.synth.deg_gamma);
    opt(s, "gram_degree", c.synth.gram_degree);
  }
  optd(o, "epsilon", c.epsilon);
  if (o.contains("checks")) {
    const auto& k = o.at("checks");
    opt(k, "oracle_samples", c.checks.oracle_samples);
    optd(k, "oracle_x_radius", c.checks.oracle_x_radius);
    optd(k, "oracle_w_radius", c.checks.oracle_w_radius);
    optd(k, "sos_radius", c.checks.sos_radius);
    opt(k, "sos_density", c.checks.sos_density);
    opt(k, "decrease_samples", c.checks.decrease_samples);
    opt(k, "decrease_N", c.checks.decrease_N);
  }
  if (o.contains("simulation")) {
    const auto& s = o.at("simulation");
    opt(s, "N_sim", c.sim.N_sim);
    optd(s, "horizon", c.sim.horizon);
    optd(s, "ic_magnitude", c.sim.ic_magnitude);
    optd(s, "open_loop_ic", c.sim.open_loop_ic);
    if (s.contains("boundary")) c.sim.boundary = boundary_from_string(s.at("boundary"));
    optd(s, "sample_dt", c.sim.sample_dt);
  }
  opt(o, "out_dir", c.out_dir);

  if (c.network.classes.empty()) throw ConfigError("config defines no subsystem class");
  if (c.data.T <= 0) throw ConfigError("data.T must be positive");
  if (!(c.data.tau > 0.0)) throw ConfigError("data.tau must be positive");
  if (!(c.synth.kappa > 0.0) || !(c.synth.vartheta > 0.0))
    throw ConfigError("kappa and vartheta must be positive");
  if (c.synth.mode == DMode::Unknown && !(c.synth.varkappa > 0.0))
    throw ConfigError("varkappa must be positive when D is unknown");
  for (auto& cl : c.network.classes) {
    cl.kappa = c.synth.kappa;
    cl.vartheta = c.synth.vartheta;
    if (c.synth.mode == DMode::Unknown) cl.varkappa = c.synth.varkappa;
    else cl.varkappa.reset();
    try {
      cl.validate();
    } catch (const NetworkError& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

ojson parse(const std::string& text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string config_to_json(const PipelineConfig& cfg) { return config_obj(cfg).dump(2) + "\n"; }

PipelineConfig config_from_json(const std::string& text) {
  const ojson o = parse(text, "config parse error");
  try {
    return config_from_obj(o);
  } catch (const ojson::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::UgasCertified: return "UGAS-certified";
    case Verdict::SmallGainFailed: return "small-gain-failed";
    case Verdict::SynthesisInfeasible: return "synthesis-infeasible";
    case Verdict::Error: return "error";
  }
  return "error";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "UGAS-certified") return Verdict::UgasCertified;
  if (s == "small-gain-failed") return Verdict::SmallGainFailed;
  if (s == "synthesis-infeasible") return Verdict::SynthesisInfeasible;
  if (s == "error") return Verdict::Error;
  throw ConfigError("unknown verdict '" + s + "'");
}

namespace {

std::string controller_line(const PolyMatrix& K, const Mat& P, int row) {
  // u_row = sum_c (K P)(row, c) x_c, expanded.
  const int n = K.nvars();
  Polynomial u(n);
  const PolyMatrix KP = K * P;
  for (int c = 0; c < KP.cols(); ++c) u = u + KP(row, c) * Polynomial::monomial(Monomial::var(n, c));
  return "u_" + std::to_string(row + 1) + " = " + u.pruned(0.0).str(8);
}

}  // namespace

std::string report_to_json(const PipelineReport& r) {
  ojson o;
  o["config"] = config_obj(r.config);
  o["seed"] = r.seed;
  o["verdict"] = to_string(r.verdict);
  o["message"] = r.message;

  ojson d;
  d["representative"] = r.representative;
  d["card"] = r.card;
  d["T"] = r.record_T;
  d["sigma"] = r.sigma;
  d["rank"] = r.rank.rank;
  d["rank_required"] = r.rank.required;
  d["rank_full"] = r.rank.pass;
  o["data"] = std::move(d);

  ojson s;
  s["ok"] = r.synthesis_ok;
  s["sdp_status"] = r.sdp_status;
  s["sdp_iterations"] = r.sdp_iterations;
  s["sdp_eq_residual"] = num(r.sdp_eq_residual);
  s["sdp_gap"] = num(r.sdp_gap);
  s["sdp_constraints"] = r.sdp_constraints;
  s["sdp_blocks"] = r.sdp_blocks;
  s["margin"] = num(r.margin);
  s["scale"] = num(r.scale);
  s["P"] = mat_obj(r.P);
  s["Phi"] = mat_obj(r.Phi);
  s["K"] = polymat_json(r.K);
  s["gamma"] = poly_json(r.gamma);
  s["gamma_nvars"] = r.gamma.nvars();
  ojson ctl = ojson::array();
  if (r.synthesis_ok)
    for (int i = 0; i < r.K.rows(); ++i) ctl.push_back(controller_line(r.K, r.P, i));
  s["controller"] = std::move(ctl);
  s["alpha_lo"] = num(r.alpha_lo);
  s["alpha_hi"] = num(r.alpha_hi);
  s["rho"] = num(r.rho);
  s["kappa"] = num(r.config.synth.kappa);
  s["d_norm_sq"] = num(r.d_norm_sq);
  s["peak_memory_mb"] = num(r.peak_memory_mb);
  o["synthesis"] = std::move(s);

  ojson c;
  c["sos_min_eig"] = num(r.sos_min_eig);
  c["sos_norm"] = num(r.sos_norm);
  c["sos_pass"] = r.sos_pass;
  c["oracle_checked"] = r.oracle_checked;
  c["oracle_worst_slack"] = num(r.oracle_worst_slack);
  c["oracle_pass"] = r.oracle_pass;
  c["decrease_checked"] = r.decrease_checked;
  c["decrease_worst_slack"] = num(r.decrease_worst_slack);
  c["decrease_pass"] = r.decrease_pass;
  o["checks"] = std::move(c);

  ojson g;
  g["composed"] = r.composed;
  g["theta"] = num(r.composition.theta);
  g["omega_entry"] = num(r.composition.omega_entry);
  g["norm11"] = num(r.composition.norm11);
  g["pass"] = r.composition.pass;
  ojson mu = ojson::array();
  for (double v : r.composition.mu) mu.push_back(num(v));
  g["mu"] = std::move(mu);
  g["kappa_inf"] = num(r.composition.kappa_inf);
  g["clf_alpha_lo"] = num(r.composition.clf_alpha_lo);
  g["clf_alpha_hi"] = num(r.composition.clf_alpha_hi);
  g["epsilon"] = num(r.composition.epsilon);
  o["composition"] = std::move(g);
  return o.dump(2) + "\n";
}

PipelineReport report_from_json(const std::string& text) {
  const ojson o = parse(text, "report parse error");
  PipelineReport r;
  try {
    r.config = config_from_obj(o.at("config"));
    r.seed = o.at("seed").get<std::uint64_t>();
    r.verdict = verdict_from_string(o.at("verdict"));
    r.message = o.at("message").get<std::string>();

    const auto& d = o.at("data");
    r.representative = d.at("representative");
    r.card = d.at("card");
    r.record_T = d.at("T");
    r.sigma = d.at("sigma");
    r.rank.rank = d.at("rank");
    r.rank.required = d.at("rank_required");
    r.rank.pass = d.at("rank_full");

    const auto& s = o.at("synthesis");
    r.synthesis_ok = s.at("ok");
    r.sdp_status = s.at("sdp_status");
    r.sdp_iterations = s.at("sdp_iterations");
    r.sdp_eq_residual = get_num(s.at("sdp_eq_residual"));
    r.sdp_gap = get_num(s.at("sdp_gap"));
    r.sdp_constraints = s.at("sdp_constraints");
    r.sdp_blocks = s.at("sdp_blocks").get<std::vector<int>>();
    r.margin = get_num(s.at("margin"));
    r.scale = get_num(s.at("scale"));
    r.P = mat_from(s.at("P"));
    r.Phi = mat_from(s.at("Phi"));
    r.K = polymat_from(s.at("K"));
    r.gamma = poly_from(s.at("gamma"), s.at("gamma_nvars").get<int>());
    r.alpha_lo = get_num(s.at("alpha_lo"));
    r.alpha_hi = get_num(s.at("alpha_hi"));
    r.rho = get_num(s.at("rho"));
    r.d_norm_sq = get_num(s.at("d_norm_sq"));
    r.peak_memory_mb = get_num(s.at("peak_memory_mb"));

    const auto& c = o.at("checks");
    r.sos_min_eig = get_num(c.at("sos_min_eig"));
    r.sos_norm = get_num(c.at("sos_norm"));
    r.sos_pass = c.at("sos_pass");
    r.oracle_checked = c.at("oracle_checked");
    r.oracle_worst_slack = get_num(c.at("oracle_worst_slack"));
    r.oracle_pass = c.at("oracle_pass");
    r.decrease_checked = c.at("decrease_checked");
    r.decrease_worst_slack = get_num(c.at("decrease_worst_slack"));
    r.decrease_pass = c.at("decrease_pass");

    const auto& g = o.at("composition");
    r.composed = g.at("composed");
    r.composition.theta = get_num(g.at("theta"));
    r.composition.omega_entry = get_num(g.at("omega_entry"));
    r.composition.norm11 = get_num(g.at("norm11"));
    r.composition.pass = g.at("pass");
    r.composition.mu.clear();
    for (const auto& v : g.at("mu")) r.composition.mu.push_back(get_num(v));
    r.composition.kappa_inf = get_num(g.at("kappa_inf"));
    r.composition.clf_alpha_lo = get_num(g.at("clf_alpha_lo"));
    r.composition.clf_alpha_hi = get_num(g.at("clf_alpha_hi"));
    r.composition.epsilon = get_num(g.at("epsilon"));
  } catch (const ojson::exception& e) {
    throw ConfigError(std::string("report schema error: ") + e.what());
  }
  return r;
}

std::string timing_to_json(const Timing& t) {
  ojson o;
  o["collect_s"] = t.collect_s;
  o["synthesis_s"] = t.synthesis_s;
  o["checks_s"] = t.checks_s;
  o["total_s"] = t.total_s;
  return o.dump(2) + "\n";
}

std::string render_report(const PipelineReport& r, const std::string& timing_json) {
  std::ostringstream os;
  char buf[256];
  auto line = [&](const char* fmt, auto... a) {
    std::snprintf(buf, sizeof buf, fmt, a...);
    os << buf << "\n";
  };
  const auto& cls = r.config.network.classes.front();
  os << "preset      " << r.config.name << "\n";
  os << "class       " << cls.name << " (n=" << cls.n << ", m=" << cls.m << ")\n";
  os << "topology    " << to_string(r.config.network.topology)
     << " card=" << r.config.network.card() << "\n";
  line("data        T=%d tau=%.10g b=%.10g seed=%llu rank=%d/%d", r.config.data.T,
       r.config.data.tau, r.config.data.b, static_cast<unsigned long long>(r.seed), r.rank.rank,
       r.rank.required);
  line("design      kappa=%.10g vartheta=%.10g D=%s", r.config.synth.kappa,
       r.config.synth.vartheta, r.config.synth.mode == DMode::Known ? "known" : "unknown");
  os << "verdict     " << to_string(r.verdict) << "\n";
  os << "message     " << r.message << "\n";
  line("sdp         status=%s iterations=%d margin=%.6e", r.sdp_status.c_str(), r.sdp_iterations,
       r.margin);
  if (r.synthesis_ok) {
    os << "\nP =\n";
    for (Eigen::Index i = 0; i < r.P.rows(); ++i) {
      os << " ";
      for (Eigen::Index j = 0; j < r.P.cols(); ++j) {
        std::snprintf(buf, sizeof buf, " %16.8e", r.P(i, j));
        os << buf;
      }
      os << "\n";
    }
    os << "\ncontroller\n";
    for (int i = 0; i < r.K.rows(); ++i) os << "  " << controller_line(r.K, r.P, i) << "\n";
    os << "\nISS quadruple\n";
    line("  alpha_lo %.6e", r.alpha_lo);
    line("  alpha_hi %.6e", r.alpha_hi);
    line("  kappa    %.6e", r.config.synth.kappa);
    line("  rho      %.6e", r.rho);
    os << "\nchecks\n";
    line("  sos residual   min_eig=%.3e (%s)", r.sos_min_eig, r.sos_pass ? "pass" : "FAIL");
    if (r.oracle_checked)
      line("  oracle         worst_slack=%.3e (%s)", r.oracle_worst_slack,
           r.oracle_pass ? "pass" : "FAIL");
    if (r.decrease_checked)
      line("  network decay  worst_slack=%.3e (%s)", r.decrease_worst_slack,
           r.decrease_pass ? "pass" : "FAIL");
  }
  if (r.composed) {
    os << "\ngain table\n";
    line("  theta=%.6e omega=%.6e norm11=%.6e (%s)", r.composition.theta,
         r.composition.omega_entry, r.composition.norm11, r.composition.pass ? "< 1" : ">= 1");
    line("  kappa_inf=%.6e clf alpha_lo=%.6e alpha_hi=%.6e", r.composition.kappa_inf,
         r.composition.clf_alpha_lo, r.composition.clf_alpha_hi);
  }
  os << "\ntimings\n";
  line("  peak memory estimate %.3f MB", r.peak_memory_mb);
  if (!timing_json.empty()) {
    try {
      const ojson t = ojson::parse(timing_json);
      for (const auto& [k, v] : t.items())
        if (v.is_number()) line("  %-12s %.3f", k.c_str(), v.get<double>());
    } catch (const ojson::exception&) {
      os << "  (timing file unreadable)\n";
    }
  }
  return os.str();
}

std::string record_to_json(const TrajectoryRecord& r) {
  ojson o;
  o["index"] = r.index;
  o["tau"] = num(r.tau);
  o["T"] = r.T;
  o["seed"] = r.seed;
  o["U"] = mat_obj(r.U);
  o["W"] = mat_obj(r.W);
  o["X"] = mat_obj(r.X);
  o["Xd"] = mat_obj(r.Xd);
  o["E"] = mat_obj(r.E);
  o["lambda_sq"] = mat_obj(r.lambda_sq.dense());
  return o.dump() + "\n";
}

TrajectoryRecord record_from_json(const std::string& text) {
  const ojson o = parse(text, "record parse error");
  TrajectoryRecord r;
  try {
    r.index = o.at("index");
    r.tau = get_num(o.at("tau"));
    r.T = o.at("T");
    r.seed = o.at("seed");
    r.U = mat_from(o.at("U"));
    r.W = mat_from(o.at("W"));
    r.X = mat_from(o.at("X"));
    r.Xd = mat_from(o.at("Xd"));
    r.E = mat_from(o.at("E"));
    r.lambda_sq = SymMatrix::from_lower(mat_from(o.at("lambda_sq")));
  } catch (const ojson::exception& e) {
    throw ConfigError(std::string("record schema error: ") + e.what());
  }
  return r;
}

}  // namespace infnet
