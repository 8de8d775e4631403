#include "polaron/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

namespace polaron {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

const EnumName<DispersionSpec::Kind> kDispersion[] = {
    {DispersionSpec::Kind::Constant, "constant"},
    {DispersionSpec::Kind::MassiveQuadratic, "massive-quadratic"},
    {DispersionSpec::Kind::Tabulated, "tabulated"}};
const EnumName<FormFactorSpec::Kind> kFormFactor[] = {
    {FormFactorSpec::Kind::Gaussian, "gaussian"},
    {FormFactorSpec::Kind::FroehlichSharpCutoff, "froehlich-sharp-cutoff"},
    {FormFactorSpec::Kind::FroehlichExpCutoff, "froehlich-exp-cutoff"}};
const EnumName<Boundary> kBoundary[] = {
    {Boundary::OneSided, "one-sided"}, {Boundary::Relaxed, "relaxed"}, {Boundary::TwoSided, "two-sided"}};
const EnumName<PathBoundary> kPathBoundary[] = {
    {PathBoundary::DeltaStartFreeEnd, "delta-start-free-end"},
    {PathBoundary::FreeBoth, "free-both"},
    {PathBoundary::TwoSidedPinned, "two-sided-pinned"}};
const EnumName<KernelKind> kKernel[] = {{KernelKind::Discrete, "discrete"}, {KernelKind::Continuum, "continuum"}};

template <class E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

class Reader {
 public:
  Reader(const Json* j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (j_ && !j_->is_object()) {
      problems_.push_back(where() + ": expected an object");
      j_ = nullptr;
    }
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  ~Reader() {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key())) problems_.push_back(key_path(it.key()) + ": unknown key");
  }

  Reader child(const std::string& key) { return Reader(find(key), key_path(key), problems_); }

  void get(const std::string& key, double& out) {
    if (const Json* v = find(key)) as_double(*v, key_path(key), out);
  }
  template <class I>
    requires(std::is_integral_v<I> && !std::is_same_v<I, bool>)
  void get(const std::string& key, I& out) {
    get_integer(key, out);
  }
  void get(const std::string& key, bool& out) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_boolean())
      out = v->get<bool>();
    else
      problems_.push_back(key_path(key) + ": expected a boolean");
  }
  void get(const std::string& key, std::vector<double>& out) {
    const Json* v = find(key);
    if (!v) return;
    if (!v->is_array()) {
      problems_.push_back(key_path(key) + ": expected an array of numbers");
      return;
    }
    std::vector<double> tmp(v->size());
    bool ok = true;
    for (std::size_t i = 0; i < v->size(); ++i)
      ok = as_double((*v)[i], key_path(key) + "[" + std::to_string(i) + "]", tmp[i]) && ok;
    if (ok) out = std::move(tmp);
  }
  void get(const std::string& key, std::vector<int>& out) {
    const Json* v = find(key);
    if (!v) return;
    if (!v->is_array()) {
      problems_.push_back(key_path(key) + ": expected an array of integers");
      return;
    }
    std::vector<int> tmp;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) {
        problems_.push_back(key_path(key) + ": expected an array of integers");
        return;
      }
      tmp.push_back(e.get<int>());
    }
    out = std::move(tmp);
  }
  template <class E, std::size_t N>
  void get_enum(const std::string& key, const EnumName<E> (&table)[N], E& out) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_string()) {
      for (const auto& e : table)
        if (v->get<std::string>() == e.name) {
          out = e.value;
          return;
        }
    }
    std::string allowed;
    for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
    problems_.push_back(key_path(key) + ": expected one of " + allowed);
  }

  /// Array of objects, each read by fn(Reader&, index).
  template <class Fn>
  void each(const std::string& key, Fn&& fn) {
    const Json* v = find(key);
    if (!v) return;
    if (!v->is_array()) {
      problems_.push_back(key_path(key) + ": expected an array of objects");
      return;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      Reader r(&(*v)[i], key_path(key) + "[" + std::to_string(i) + "]", problems_);
      fn(r, i);
    }
  }
  bool has(const std::string& key) const { return j_ && j_->contains(key); }

 private:
  const Json* find(const std::string& key) {
    seen_.insert(key);
    if (!j_) return nullptr;
    auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool as_double(const Json& v, const std::string& at, double& out) {
    if (v.is_number()) {
      out = v.get<double>();
      return true;
    }
    if (v.is_string()) {
      try {
        out = io::parse_double(v.get<std::string>());
        return true;
      } catch (const std::exception&) {
      }
    }
    problems_.push_back(at + ": expected a number");
    return false;
  }

  template <class I>
  void get_integer(const std::string& key, I& out) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_number_unsigned() || (v->is_number_integer() && std::is_signed_v<I>)) {
      if constexpr (std::is_signed_v<I>) {
        const auto x = v->get<std::int64_t>();
        if (x >= std::numeric_limits<I>::min() && x <= std::numeric_limits<I>::max()) {
          out = static_cast<I>(x);
          return;
        }
      } else {
        const auto x = v->get<std::uint64_t>();
        if (x <= std::numeric_limits<I>::max()) {
          out = static_cast<I>(x);
          return;
        }
      }
      problems_.push_back(key_path(key) + ": integer out of range");
      return;
    }
    problems_.push_back(key_path(key) + (std::is_signed_v<I> ? ": expected an integer" : ": expected a nonnegative integer"));
  }

  const Json* j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

void read_model(Reader r, ModelSection& m) {
  r.get("dimension", m.dimension);
  r.get("alpha", m.alpha);
  {
    Reader d = r.child("dispersion");
    d.get_enum("kind", kDispersion, m.dispersion.kind);
    d.get("c0", m.dispersion.c0);
    d.get("a", m.dispersion.a);
    d.get("table_k", m.dispersion.table_k);
    d.get("table_omega", m.dispersion.table_omega);
  }
  {
    Reader f = r.child("form_factor");
    f.get_enum("kind", kFormFactor, m.form_factor.kind);
    f.get("g0", m.form_factor.g0);
    f.get("width", m.form_factor.width);
    f.get("kappa", m.form_factor.kappa);
  }
  Reader g = r.child("grid");
  g.get("dk", m.dk);
  g.get("kmax", m.kmax);
}

void read_fock(Reader r, FockSection& f) {
  r.get("N_max", f.N_max);
  r.get("basis_limit", f.basis_limit);
  {
    Reader l = r.child("lanczos");
    l.get("tol", f.lanczos.tol);
    l.get("max_iter", f.lanczos.max_iter);
    l.get("krylov_dim", f.lanczos.krylov_dim);
    l.get("seed", f.lanczos.seed);
  }
  Reader k = r.child("krylov");
  k.get("tol", f.krylov.tol);
  k.get("max_dim", f.krylov.max_dim);
  k.get("max_steps", f.krylov.max_steps);
}

void read_spectral(Reader r, SpectralSection& s) {
  r.get("axis", s.axis);
  r.get("P", s.P);
  r.get("energy_tol", s.energy_tol);
  r.get("essential_n", s.essential_n);
  r.get("mass_h", s.mass_h);
  r.get("mass_levels", s.mass_levels);
  r.get("charfn_k", s.charfn_k);
  r.get("charfn_t", s.charfn_t);
  r.get_enum("boundary", kBoundary, s.boundary);
  {
    Reader t = r.child("two_sided");
    t.get("T", s.two_sided.T);
    t.get("phi_width", s.two_sided.phi_width);
    t.get("radius", s.two_sided.radius);
    t.get("nodes", s.two_sided.nodes);
  }
  r.get("sigma_t", s.sigma_t);
  r.get("sigma_eps", s.sigma_eps);
}

void read_kernel(Reader r, KernelSection& k) {
  r.get("x", k.x);
  r.get("t", k.t);
  r.get("kappa", k.kappa);
}

void read_path(Reader r, PathConfig& p) {
  r.get("t", p.t);
  r.get("T_minus", p.T_minus);
  r.get("T_plus", p.T_plus);
  r.get("dt", p.dt);
  r.get_enum("boundary", kPathBoundary, p.boundary);
  r.get("phi_r", p.phi_r);
  r.get("phi_value", p.phi_value);
  r.get("phi_width", p.phi_width);
}

void read_mc(Reader r, MCConfig& mc) {
  r.get("chains", mc.chains);
  r.get("sweeps", mc.sweeps);
  r.get("burn_in", mc.burn_in);
  r.get("thin", mc.thin);
  r.get_enum("kernel", kKernel, mc.kernel);
  r.get("initial_segment", mc.initial_segment);
  r.get("tune_every", mc.tune_every);
  r.get("k_list", mc.k_list);
  r.get("lags", mc.lags);
  r.get("k_alt", mc.k_alt);
  r.get("jackknife_blocks", mc.jackknife_blocks);
  r.get("record_trace", mc.record_trace);
  r.get("coupling_sign", mc.coupling_sign);
}

void read_toy(Reader r, ToySection& t) {
  ToyFiberModel& m = t.model;
  r.get("d", m.d);
  if (r.has("minima")) {
    std::vector<ToyMinimum> minima;
    r.each("minima", [&](Reader& e, std::size_t) {
      ToyMinimum mm;
      e.get("Q", mm.Q);
      e.get("n", mm.n);
      e.get("a", mm.a);
      minima.push_back(mm);
    });
    m.minima = std::move(minima);
  }
  r.get("theta0", m.theta0);
  r.get("theta1", m.theta1);
  r.get("gap0", m.gap0);
  r.get("gap1", m.gap1);
  r.get("phi_width", m.phi_width);
  r.get("k", t.k);
  r.get("t", t.t);
  r.get("T", t.T);
  r.get("eps_k", t.eps_k);
  r.get("eps_t", t.eps_t);
  r.get("eps", t.eps);
  r.get("eps_tol", t.eps_tol);
  r.get("clt_k", t.clt_k);
  r.get("clt_t", t.clt_t);
  r.get("clt_eps", t.clt_eps);
}

void read_verify(Reader r, VerifySection& v) {
  r.get("criteria", v.criteria);
  r.get("mutation_check", v.mutation_check);
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(io::number(x));
  return a;
}

template <class Fn>
void check(std::vector<std::string>& problems, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration:" + join(problems)), problems_(std::move(problems)) {}

MCConfig default_mc() {
  MCConfig mc;
  mc.record_trace = true;
  return mc;
}

ModelSpec ModelSection::build() const {
  return ModelSpec::make(dimension, dispersion, form_factor, alpha, dk, kmax);
}

SolverSettings FockSection::settings(unsigned threads) const {
  SolverSettings s;
  s.N_max = N_max;
  s.basis_limit = basis_limit;
  s.lanczos = lanczos;
  s.lanczos.threads = threads;
  s.krylov = krylov;
  s.krylov.threads = threads;
  s.threads = threads;
  return s;
}

void Config::validate() const {
  std::vector<std::string> problems;
  check(problems, [&] { model.build(); });
  if (fock.N_max < 0) problems.push_back("fock.N_max: must be >= 0");
  if (!(fock.lanczos.tol > 0.0)) problems.push_back("fock.lanczos.tol: must be positive");
  if (fock.lanczos.krylov_dim < 2) problems.push_back("fock.lanczos.krylov_dim: must be >= 2");
  if (!(fock.krylov.tol > 0.0)) problems.push_back("fock.krylov.tol: must be positive");
  if (fock.krylov.max_dim < 2) problems.push_back("fock.krylov.max_dim: must be >= 2");
  if (spectral.axis < 0 || spectral.axis >= model.dimension) problems.push_back("spectral.axis: outside the model dimension");
  if (spectral.essential_n < 0) problems.push_back("spectral.essential_n: must be >= 0");
  if (!(spectral.mass_h > 0.0)) problems.push_back("spectral.mass_h: must be positive");
  if (spectral.mass_levels < 1) problems.push_back("spectral.mass_levels: must be >= 1");
  if (!(spectral.charfn_t >= 0.0)) problems.push_back("spectral.charfn_t: must be >= 0");
  if (!(spectral.sigma_t > 0.0)) problems.push_back("spectral.sigma_t: must be positive");
  if (spectral.sigma_eps.empty()) problems.push_back("spectral.sigma_eps: must not be empty");
  for (double e : spectral.sigma_eps)
    if (!(e > 0.0)) problems.push_back("spectral.sigma_eps: entries must be positive");
  if (spectral.two_sided.nodes < 1) problems.push_back("spectral.two_sided.nodes: must be >= 1");
  for (double x : kernel.x)
    if (!std::isfinite(x)) problems.push_back("kernel.x: entries must be finite");
  for (double t : kernel.t)
    if (!std::isfinite(t)) problems.push_back("kernel.t: entries must be finite");
  for (double k : kernel.kappa)
    if (!(k > 0.0)) problems.push_back("kernel.kappa: entries must be positive");
  check(problems, [&] { path.validate(); });
  check(problems, [&] { mc.validate(path); });
  check(problems, [&] { toy.model.validate(); });
  if (toy.T.empty()) problems.push_back("toy.T: must not be empty");
  if (toy.eps.size() < 2) problems.push_back("toy.eps: needs at least two entries");
  if (toy.clt_k.empty()) problems.push_back("toy.clt_k: must not be empty");
  if (toy.clt_eps.size() < 2) problems.push_back("toy.clt_eps: needs at least two entries");
  for (int c : verify.criteria)
    if (c < 1 || c > 9) problems.push_back("verify.criteria: entries must be in 1..9");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

Config config_from_json(const Json& j) {
  Config c;
  std::vector<std::string> problems;
  {
    Reader r(&j, "", problems);
    r.get("seed", c.seed);
    read_model(r.child("model"), c.model);
    read_fock(r.child("fock"), c.fock);
    read_spectral(r.child("spectral"), c.spectral);
    read_kernel(r.child("kernel"), c.kernel);
    read_path(r.child("path"), c.path);
    read_mc(r.child("mc"), c.mc);
    read_toy(r.child("toy"), c.toy);
    read_verify(r.child("verify"), c.verify);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  c.mc.seed = c.seed;
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError({"cannot open " + file.string()});
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError({file.string() + ": " + e.what()});
  }
  return config_from_json(j);
}

Json to_json(const Config& c) {
  Json j;
  j["seed"] = c.seed;

  const auto& m = c.model;
  Json model;
  model["dimension"] = m.dimension;
  model["dispersion"] = {{"kind", name_of(kDispersion, m.dispersion.kind)},
                         {"c0", io::number(m.dispersion.c0)},
                         {"a", io::number(m.dispersion.a)},
                         {"table_k", vec(m.dispersion.table_k)},
                         {"table_omega", vec(m.dispersion.table_omega)}};
  model["form_factor"] = {{"kind", name_of(kFormFactor, m.form_factor.kind)},
                          {"g0", io::number(m.form_factor.g0)},
                          {"width", io::number(m.form_factor.width)},
                          {"kappa", io::number(m.form_factor.kappa)}};
  model["alpha"] = io::number(m.alpha);
  model["grid"] = {{"dk", io::number(m.dk)}, {"kmax", io::number(m.kmax)}};
  j["model"] = std::move(model);

  const auto& f = c.fock;
  j["fock"] = {{"N_max", f.N_max},
               {"basis_limit", f.basis_limit},
               {"lanczos",
                {{"tol", io::number(f.lanczos.tol)},
                 {"max_iter", f.lanczos.max_iter},
                 {"krylov_dim", f.lanczos.krylov_dim},
                 {"seed", f.lanczos.seed}}},
               {"krylov",
                {{"tol", io::number(f.krylov.tol)}, {"max_dim", f.krylov.max_dim}, {"max_steps", f.krylov.max_steps}}}};

  const auto& s = c.spectral;
  j["spectral"] = {{"axis", s.axis},
                   {"P", vec(s.P)},
                   {"energy_tol", io::number(s.energy_tol)},
                   {"essential_n", s.essential_n},
                   {"mass_h", io::number(s.mass_h)},
                   {"mass_levels", s.mass_levels},
                   {"charfn_k", vec(s.charfn_k)},
                   {"charfn_t", io::number(s.charfn_t)},
                   {"boundary", name_of(kBoundary, s.boundary)},
                   {"two_sided",
                    {{"T", io::number(s.two_sided.T)},
                     {"phi_width", io::number(s.two_sided.phi_width)},
                     {"radius", io::number(s.two_sided.radius)},
                     {"nodes", s.two_sided.nodes}}},
                   {"sigma_t", io::number(s.sigma_t)},
                   {"sigma_eps", vec(s.sigma_eps)}};

  j["kernel"] = {{"x", vec(c.kernel.x)}, {"t", vec(c.kernel.t)}, {"kappa", vec(c.kernel.kappa)}};

  const auto& p = c.path;
  j["path"] = {{"t", io::number(p.t)},
               {"T_minus", io::number(p.T_minus)},
               {"T_plus", io::number(p.T_plus)},
               {"dt", io::number(p.dt)},
               {"boundary", name_of(kPathBoundary, p.boundary)},
               {"phi_r", vec(p.phi_r)},
               {"phi_value", vec(p.phi_value)},
               {"phi_width", io::number(p.phi_width)}};

  const auto& mc = c.mc;
  j["mc"] = {{"chains", mc.chains},
             {"sweeps", mc.sweeps},
             {"burn_in", mc.burn_in},
             {"thin", mc.thin},
             {"kernel", name_of(kKernel, mc.kernel)},
             {"initial_segment", mc.initial_segment},
             {"tune_every", mc.tune_every},
             {"k_list", vec(mc.k_list)},
             {"lags", vec(mc.lags)},
             {"k_alt", io::number(mc.k_alt)},
             {"jackknife_blocks", mc.jackknife_blocks},
             {"record_trace", mc.record_trace},
             {"coupling_sign", io::number(mc.coupling_sign)}};

  const auto& t = c.toy;
  Json minima = Json::array();
  for (const auto& mm : t.model.minima) minima.push_back({{"Q", io::number(mm.Q)}, {"n", mm.n}, {"a", io::number(mm.a)}});
  j["toy"] = {{"d", t.model.d},
              {"minima", std::move(minima)},
              {"theta0", io::number(t.model.theta0)},
              {"theta1", io::number(t.model.theta1)},
              {"gap0", io::number(t.model.gap0)},
              {"gap1", io::number(t.model.gap1)},
              {"phi_width", io::number(t.model.phi_width)},
              {"k", io::number(t.k)},
              {"t", io::number(t.t)},
              {"T", vec(t.T)},
              {"eps_k", io::number(t.eps_k)},
              {"eps_t", io::number(t.eps_t)},
              {"eps", vec(t.eps)},
              {"eps_tol", io::number(t.eps_tol)},
              {"clt_k", vec(t.clt_k)},
              {"clt_t", io::number(t.clt_t)},
              {"clt_eps", vec(t.clt_eps)}};

  j["verify"] = {{"criteria", c.verify.criteria}, {"mutation_check", c.verify.mutation_check}};
  return j;
}

}  // namespace polaron
