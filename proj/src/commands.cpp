#include "polaron/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "polaron/acceptance.hpp"
#include "polaron/cltlab.hpp"
#include "polaron/pathmc.hpp"
#include "polaron/spectral.hpp"

namespace polaron {

namespace {

using io::number;
using Cells = std::vector<io::Cell>;

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json estimate(const MCEstimate& e) {
  return {{"mean", number(e.mean)},
          {"stderr", number(e.stderr_)},
          {"tau_int", number(e.tau_int)},
          {"samples", e.samples},
          {"plateau", e.plateau}};
}

RunResult start(const char* name, const Config& config) {
  RunResult r;
  r.subcommand = name;
  r.config = to_json(config);
  r.seeds.push_back(config.seed);
  return r;
}

void add_flags(RunResult& r, const std::vector<std::string>& flags) {
  r.flags.insert(r.flags.end(), flags.begin(), flags.end());
}

}  // namespace

const char* to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

RunResult cmd_kernel(const Config& config, const RunOptions&) {
  RunResult r = start("kernel", config);
  const ModelSpec base = config.model.build();
  const bool froehlich = base.form_factor.singular_at_origin();
  std::vector<double> kappas = config.kernel.kappa;
  if (!froehlich) {
    kappas = {base.form_factor.kappa};
    r.flags.push_back("kappa_ladder_ignored_for_gaussian_form_factor");
  }
  std::sort(kappas.begin(), kappas.end());
  std::vector<double> xs = config.kernel.x;
  std::stable_sort(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  std::vector<double> ts = config.kernel.t;
  std::sort(ts.begin(), ts.end());

  io::Table table;
  table.columns = {"kappa", "x", "t", "W_continuum", "W_continuum_abs_error", "W_discrete", "W_limit"};
  bool continuum_failed = false;
  bool monotone = true;
  for (double kappa : kappas) {
    ModelSpec m = base;
    if (froehlich) m.form_factor.kappa = kappa;
    m.validate();
    for (double x : xs) {
      for (double t : ts) {
        const Vec3 X{x, 0.0, 0.0};
        double wc = NAN, err = NAN;
        try {
          const auto v = eval_W_continuum(m, X, t);
          wc = v.value;
          err = v.abs_error;
        } catch (const std::exception&) {
          continuum_failed = true;
        }
        const double limit = froehlich && m.d == 3 && m.dispersion.is_constant() && m.dispersion.c0 == 1.0 && x != 0.0
                                 ? froehlich_kernel(std::abs(x), t)
                                 : NAN;
        table.add(Cells{kappa, x, t, wc, err, eval_W_discrete(m, X, t), limit});
      }
    }
  }
  // Monotonicity of the continuum column along the kappa ladder at fixed (x, t).
  const std::size_t block = xs.size() * ts.size();
  for (std::size_t ik = 1; ik < kappas.size(); ++ik)
    for (std::size_t j = 0; j < block; ++j) {
      const double a = std::get<double>(table.rows[(ik - 1) * block + j][3]);
      const double b = std::get<double>(table.rows[ik * block + j][3]);
      if (std::isfinite(a) && std::isfinite(b) && b < a) monotone = false;
    }
  if (continuum_failed) r.flags.push_back("continuum_kernel_undefined");
  if (!monotone) r.flags.push_back("continuum_not_monotone_in_kappa");
  r.outputs["rows"] = table.rows.size();
  r.outputs["monotone_in_kappa"] = monotone;
  r.outputs["discrete_g_norm2"] = number(discrete_g_norm2(base));
  r.outputs["tolerances"] = {{"continuum_rel_tol", 1e-8}, {"continuum_abs_tol", 1e-12}};
  r.tables.emplace_back("kernel", std::move(table));
  return r;
}

RunResult cmd_spectrum(const Config& config, const RunOptions& options) {
  RunResult r = start("spectrum", config);
  r.seeds.push_back(config.fock.lanczos.seed);
  const auto& s = config.spectral;
  SpectralSolver solver(config.model.build(), config.fock.settings(options.threads));
  const Vec3 e = axis_vector(s.axis);
  std::vector<Vec3> P;
  for (double p : s.P) P.push_back(p * e);
  const auto curve = solver.energy_curve(P, s.energy_tol);

  io::Table energies;
  energies.columns = {"P", "E", "residual", "overlap", "gap", "iterations", "degenerate"};
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto& pt = curve.points[i];
    energies.add(Cells{s.P[i], pt.E, pt.residual, pt.overlap, pt.gap, as_int(pt.iterations),
                       std::string(pt.degenerate ? "true" : "false")});
  }
  r.outputs["basis_size"] = solver.basis().size();
  r.outputs["modes"] = solver.basis().modes();
  r.outputs["minimum_at_zero"] = curve.minimum_at_zero;
  r.outputs["worst_violation"] = number(curve.worst_violation);
  r.outputs["energy_lower_bound"] = number(solver.energy_lower_bound());
  r.outputs["tolerances"] = {{"energy_tol", number(s.energy_tol)},
                             {"lanczos_tol", number(config.fock.lanczos.tol)},
                             {"krylov_tol", number(config.fock.krylov.tol)}};
  add_flags(r, curve.warnings);
  r.tables.emplace_back("energy", std::move(energies));

  io::Table charfn;
  charfn.columns = {"k", "t", "boundary", "value", "error_bound"};
  for (double k : s.charfn_k) {
    const auto c = solver.char_fn(k * e, s.charfn_t, s.boundary, s.two_sided);
    charfn.add(Cells{k, s.charfn_t, std::string(to_string(s.boundary)), c.value, c.error_bound});
  }
  r.tables.emplace_back("charfn", std::move(charfn));

  if (s.essential_n > 0) {
    io::Table edge;
    edge.columns = {"P", "E_ess", "E_ess_minus_E0", "argmin_n", "boundary_argmin"};
    for (int n = 1; n <= s.essential_n; ++n) edge.columns.push_back("E" + std::to_string(n));
    const double E0 = solver.ground_zero().E;
    for (double p : s.P) {
      const auto ed = solver.essential_edge(p * e, s.essential_n);
      Cells row{p, ed.E_ess, ed.E_ess - E0, std::int64_t{ed.argmin_n}, std::string(ed.boundary_argmin ? "true" : "false")};
      for (double th : ed.thresholds) row.emplace_back(th);
      edge.add(std::move(row));
      add_flags(r, ed.warnings);
    }
    r.tables.emplace_back("essential_edge", std::move(edge));
  }
  return r;
}

RunResult cmd_mass(const Config& config, const RunOptions& options) {
  RunResult r = start("mass", config);
  r.seeds.push_back(config.fock.lanczos.seed);
  const auto& s = config.spectral;
  const ModelSpec model = config.model.build();
  SpectralSolver solver(model, config.fock.settings(options.threads));
  const auto mass = solver.effective_mass(s.mass_h, s.mass_levels, s.axis);
  io::Table diffs;
  diffs.columns = {"h", "second_difference"};
  for (std::size_t i = 0; i < mass.h.size(); ++i) diffs.add(Cells{mass.h[i], mass.raw[i]});
  r.tables.emplace_back("mass", std::move(diffs));
  add_flags(r, mass.warnings);

  const auto sigma = solver.sigma_from_scaling(axis_vector(s.axis), s.sigma_t, s.sigma_eps, s.boundary, s.two_sided);
  io::Table scaling;
  scaling.columns = {"eps", "G", "sigma2"};
  for (std::size_t i = 0; i < sigma.eps.size(); ++i) scaling.add(Cells{sigma.eps[i], sigma.G[i], sigma.sigma2[i]});
  r.tables.emplace_back("sigma_scaling", std::move(scaling));
  add_flags(r, sigma.warnings);

  const double E0 = solver.ground_zero().E;
  r.outputs["basis_size"] = solver.basis().size();
  r.outputs["E0"] = number(E0);
  r.outputs["inverse_mass"] = {{"value", number(mass.extrapolated)}, {"error", number(mass.error)}};
  r.outputs["sigma2"] = {{"value", number(sigma.extrapolated)},
                         {"error", number(sigma.error)},
                         {"converged", sigma.converged},
                         {"boundary", to_string(s.boundary)},
                         {"t", number(s.sigma_t)}};
  const double slope = perturbative_slope(model);
  r.outputs["perturbative"] = {{"slope", number(slope)},
                               {"E0_over_alpha", model.alpha > 0.0 ? number(E0 / model.alpha) : number(NAN)}};
  const double diff = std::abs(mass.extrapolated - sigma.extrapolated);
  r.outputs["identity"] = {{"difference", number(diff)},
                           {"combined_error", number(std::hypot(mass.error, sigma.error))}};
  return r;
}

RunResult cmd_mc(const Config& config, const RunOptions& options) {
  RunResult r = start("mc", config);
  MCConfig mc = config.mc;
  mc.seed = config.seed;
  mc.threads = options.threads;
  const ModelSpec model = config.model.build();
  const MCRun run = run_mc(model, config.path, mc);

  io::Table chains;
  chains.columns = {"chain", "stream_key", "segment", "acceptance", "capped_pairs"};
  for (std::size_t c = 0; c < run.chains.size(); ++c) {
    const auto& ch = run.chains[c];
    r.seeds.push_back(ch.stream_key);
    chains.add(Cells{as_int(c), std::to_string(ch.stream_key), as_int(ch.segment), ch.acceptance, as_int(ch.capped)});
    if (mc.record_trace) {
      io::Table trace;
      trace.columns = {"sweep", "S_int", "dq_x", "dq_y", "dq_z"};
      for (const auto& row : ch.trace)
        trace.add(Cells{as_int(row.sweep), row.S, row.displacement[0], row.displacement[1], row.displacement[2]});
      r.traces.push_back(std::move(trace));
    }
  }
  r.tables.emplace_back("chains", std::move(chains));

  io::Table charfn;
  charfn.columns = {"k", "t", "re", "re_stderr", "re_tau_int", "im", "im_stderr", "imaginary_consistent"};
  for (const auto& e : run.charfn) {
    charfn.add(Cells{e.k, config.path.t, e.re.mean, e.re.stderr_, e.re.tau_int, e.im.mean, e.im.stderr_,
                     std::string(e.imaginary_consistent ? "true" : "false")});
  }
  r.tables.emplace_back("charfn", std::move(charfn));

  const auto& s2 = run.sigma2;
  io::Table lags;
  lags.columns = {"lag", "msd", "msd_stderr"};
  for (std::size_t l = 0; l < s2.lags.size(); ++l) lags.add(Cells{s2.lags[l], s2.msd_mean[l], s2.msd_stderr[l]});
  r.tables.emplace_back("msd", std::move(lags));

  r.outputs["sigma2"] = {{"slope", estimate(s2.slope)},
                         {"intercept", number(s2.intercept)},
                         {"chi2_per_dof", number(s2.chi2_per_dof)},
                         {"lags", vec(s2.lags)},
                         {"alternative", estimate(s2.alternative)},
                         {"alt_tau_lo", number(s2.alt_tau_lo)},
                         {"alt_tau_hi", number(s2.alt_tau_hi)},
                         {"k_alt", number(s2.k_alt)},
                         {"discrepancy", s2.discrepancy}};
  r.outputs["acceptance"] = number(run.acceptance);
  r.outputs["capped_pairs"] = run.capped;
  r.outputs["points"] = config.path.points();
  add_flags(r, run.flags);
  return r;
}

RunResult cmd_clt_toy(const Config& config, const RunOptions&) {
  RunResult r = start("clt-toy", config);
  const auto& t = config.toy;
  const auto ladder = pinned_limit_ladder(t.model, t.k, t.t, t.T);
  io::Table rungs;
  rungs.columns = {"T", "G_T", "limit", "rel_error"};
  for (std::size_t i = 0; i < ladder.T.size(); ++i)
    rungs.add(Cells{ladder.T[i], ladder.values[i], ladder.limit, ladder.rel_error[i]});
  r.tables.emplace_back("ladder", std::move(rungs));
  Json terms = Json::array();
  for (const auto& term : ladder.terms)
    terms.push_back({{"Q", number(term.Q)}, {"n", term.n}, {"weight", number(term.weight)}, {"value", number(term.value)}});
  r.outputs["limit"] = {{"case", to_string(ladder.limit_case)},
                        {"k", number(t.k)},
                        {"t", number(t.t)},
                        {"value", number(ladder.limit)},
                        {"terms", std::move(terms)},
                        {"usable_T", vec(ladder.usable_T)},
                        {"empirical_rate", number(ladder.empirical_rate)},
                        {"predicted_rate", number(ladder.predicted_rate)}};

  io::Table eps_rows;
  eps_rows.columns = {"minimum", "cos_angle", "eps", "value"};
  Json eps_summary = Json::array();
  for (std::size_t l = 0; l < t.model.minima.size(); ++l) {
    if (t.model.minima[l].n != 2) continue;
    std::vector<double> angles{1.0};
    if (t.model.minima[l].Q > 0.0) angles.push_back(0.0);
    for (double c : angles) {
      const auto e = epsilon_limit(t.model, l, t.eps_k, c, t.eps_t, t.eps, t.eps_tol);
      for (std::size_t i = 0; i < e.eps.size(); ++i) eps_rows.add(Cells{as_int(l), c, e.eps[i], e.values[i]});
      eps_summary.push_back({{"minimum", l},
                             {"cos_angle", number(c)},
                             {"extrapolated", number(e.extrapolated)},
                             {"error", number(e.error)},
                             {"target", number(e.target)},
                             {"converged", e.converged}});
      if (!e.converged) r.flags.push_back("epsilon_ladder_not_converged");
    }
  }
  r.tables.emplace_back("epsilon", std::move(eps_rows));
  r.outputs["epsilon"] = {{"k", number(t.eps_k)}, {"t", number(t.eps_t)}, {"tol", number(t.eps_tol)}, {"ladders", eps_summary}};

  const auto clt = clt_classify(t.model, t.clt_k, t.clt_t, t.clt_eps);
  r.outputs["clt"] = {{"verdict", to_string(clt.verdict)},
                      {"sigma2", number(clt.sigma2)},
                      {"residual", number(clt.residual)},
                      {"limit_case", to_string(clt.limit_case)},
                      {"t", number(t.clt_t)},
                      {"k", vec(clt.k)},
                      {"minus_log_G", vec(clt.minus_log_G)}};
  return r;
}

RunResult cmd_verify(const Config& config, const RunOptions& options) {
  RunResult r = start("verify", config);
  AcceptanceOptions opts;
  opts.criteria = config.verify.criteria;
  opts.mutation_check = config.verify.mutation_check;
  opts.threads = options.threads;
  const auto report = run_acceptance(opts, [&](const CriterionResult& c) {
    if (options.progress) options.progress(summary_line(c));
  });
  r.outputs = to_json(report);
  io::Table summary;
  summary.columns = {"criterion", "name", "passed", "detail"};
  for (const auto& c : report.criteria)
    summary.add(Cells{std::int64_t{c.id}, c.name, std::string(c.passed ? "true" : "false"), c.detail});
  if (report.mutation)
    summary.add(Cells{std::int64_t{0}, report.mutation->name, std::string(report.mutation->passed ? "true" : "false"),
                      report.mutation->detail});
  r.tables.emplace_back("report", std::move(summary));
  if (!report.passed()) {
    r.exit_code = 1;
    r.flags.push_back("acceptance_failed");
  }
  return r;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"kernel", "spectrum", "mass", "mc", "clt-toy", "verify"};
  return names;
}

RunResult run_command(const std::string& name, const Config& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  if (name == "kernel")
    r = cmd_kernel(config, options);
  else if (name == "spectrum")
    r = cmd_spectrum(config, options);
  else if (name == "mass")
    r = cmd_mass(config, options);
  else if (name == "mc")
    r = cmd_mc(config, options);
  else if (name == "clt-toy")
    r = cmd_clt_toy(config, options);
  else if (name == "verify")
    r = cmd_verify(config, options);
  else
    throw std::invalid_argument("unknown subcommand: " + name);
  std::sort(r.flags.begin(), r.flags.end());
  r.flags.erase(std::unique(r.flags.begin(), r.flags.end()), r.flags.end());
  r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

std::string table_file(const RunResult& r, const std::string& name) { return r.subcommand + "_" + name + ".csv"; }
std::string trace_file(const RunResult& r, std::size_t c) {
  return r.subcommand + "_trace_chain" + std::to_string(c) + ".csv";
}

io::Table table_from_json(const Json& j) {
  io::Table t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    std::vector<io::Cell> cells;
    for (const auto& c : row) {
      if (c.is_number_integer())
        cells.emplace_back(c.get<std::int64_t>());
      else if (c.is_number())
        cells.emplace_back(c.get<double>());
      else
        cells.emplace_back(c.get<std::string>());
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace

Json to_json(const RunResult& r, OutputFormat format) {
  Json j;
  j["subcommand"] = r.subcommand;
  j["seeds"] = r.seeds;
  j["config"] = r.config;
  j["outputs"] = r.outputs;
  Json tables = Json::object();
  for (const auto& [name, table] : r.tables)
    tables[name] = format == OutputFormat::Json ? io::to_json(table) : Json(table_file(r, name));
  j["tables"] = std::move(tables);
  Json traces = Json::array();
  for (std::size_t c = 0; c < r.traces.size(); ++c) traces.push_back(trace_file(r, c));
  j["traces"] = std::move(traces);
  j["flags"] = r.flags;
  j["exit_code"] = r.exit_code;
  return j;
}

RunResult result_from_json(const Json& j) {
  RunResult r;
  r.subcommand = j.at("subcommand").get<std::string>();
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  r.config = j.at("config");
  r.outputs = j.at("outputs");
  for (auto it = j.at("tables").begin(); it != j.at("tables").end(); ++it) {
    if (!it.value().is_object()) throw std::invalid_argument("result: table " + it.key() + " is stored as CSV");
    r.tables.emplace_back(it.key(), table_from_json(it.value()));
  }
  r.flags = j.at("flags").get<std::vector<std::string>>();
  r.exit_code = j.at("exit_code").get<int>();
  return r;
}

std::vector<std::filesystem::path> write_result(const RunResult& r, const std::filesystem::path& dir,
                                                OutputFormat format) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    written.push_back(path);
  };
  emit(r.subcommand + ".json", io::dump_json(to_json(r, format)));
  if (format == OutputFormat::Csv)
    for (const auto& [name, table] : r.tables) emit(table_file(r, name), io::to_csv(table));
  for (std::size_t c = 0; c < r.traces.size(); ++c) emit(trace_file(r, c), io::to_csv(r.traces[c]));
  return written;
}

}  // namespace polaron
