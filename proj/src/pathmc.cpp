#include "polaron/pathmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polaron/parallel.hpp"

namespace polaron {

namespace {

std::size_t to_steps(double x, double dt, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string("path: ") + what + " must be finite and >= 0");
  const double r = x / dt;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument(std::string("path: ") + what + " is not a multiple of dt");
  return static_cast<std::size_t>(n);
}

constexpr std::size_t kRecenterEvery = 64;

}  // namespace

const char* to_string(PathBoundary b) {
  switch (b) {
    case PathBoundary::DeltaStartFreeEnd: return "delta-start-free-end";
    case PathBoundary::FreeBoth: return "free-both";
    case PathBoundary::TwoSidedPinned: return "two-sided-pinned";
  }
  return "?";
}

const char* to_string(KernelKind k) { return k == KernelKind::Discrete ? "discrete" : "continuum"; }

const char* to_string(Move m) {
  switch (m) {
    case Move::BridgeRegenerate: return "bridge-regenerate";
    case Move::EndpointExtendLeft: return "endpoint-extend-left";
    case Move::EndpointExtendRight: return "endpoint-extend-right";
    case Move::GlobalTranslate: return "global-translate";
  }
  return "?";
}

std::size_t PathConfig::steps_minus() const { return to_steps(T_minus, dt, "T_minus"); }
std::size_t PathConfig::steps_window() const { return to_steps(t, dt, "t"); }
std::size_t PathConfig::steps_plus() const { return to_steps(T_plus, dt, "T_plus"); }

double PathConfig::phi(double r) const {
  if (phi_r.empty()) return std::exp(-0.5 * r * r / (phi_width * phi_width));
  if (r <= phi_r.front()) return phi_value.front();
  if (r > phi_r.back()) return 0.0;
  const auto it = std::upper_bound(phi_r.begin(), phi_r.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - phi_r.begin());
  if (i >= phi_r.size()) return phi_value.back();
  const double w = (r - phi_r[i - 1]) / (phi_r[i] - phi_r[i - 1]);
  return (1.0 - w) * phi_value[i - 1] + w * phi_value[i];
}

void PathConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("path: dt must be positive");
  steps_minus();
  if (steps_window() == 0) throw std::invalid_argument("path: t must be at least dt");
  steps_plus();
  if (boundary == PathBoundary::DeltaStartFreeEnd && T_minus != 0.0)
    throw std::invalid_argument("path: delta-start boundary requires T_minus = 0");
  if (boundary == PathBoundary::TwoSidedPinned) {
    if (phi_r.size() != phi_value.size()) throw std::invalid_argument("path: phi table sizes differ");
    if (phi_r.empty() && !(phi_width > 0.0)) throw std::invalid_argument("path: phi_width must be positive");
    for (std::size_t i = 0; i < phi_r.size(); ++i) {
      if (!(phi_value[i] > 0.0)) throw std::invalid_argument("path: phi values must be positive");
      if (i > 0 && !(phi_r[i] > phi_r[i - 1])) throw std::invalid_argument("path: phi radii must increase");
    }
    if (!phi_r.empty() && phi_r.front() != 0.0) throw std::invalid_argument("path: phi table must start at r = 0");
  }
}

// ---------------------------------------------------------------------------

ActionKernel::ActionKernel(const ModelSpec& model, KernelKind kind, double dt, double coupling_sign)
    : model_(model), kind_(kind), alpha_(coupling_sign * model.alpha), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("kernel: dt must be positive");
  if (kind == KernelKind::Discrete) {
    modes_ = kernel_modes(model);
    decay_.reserve(modes_.size());
    for (const auto& m : modes_) decay_.push_back(std::exp(-m.omega * dt));
  } else if (model.form_factor.singular_at_origin() && model.d < 3) {
    throw ModelError("froehlich coupling diverges in the continuum for d < 3");
  }
}

double ActionKernel::W(const Vec3& x, std::size_t lag, std::size_t* capped) const {
  const double t = static_cast<double>(lag) * dt_;
  if (kind_ == KernelKind::Discrete) {
    double sum = 0.0;
    for (const auto& m : modes_) sum += m.weight * std::cos(dot(m.k, x)) * std::exp(-m.omega * t);
    return sum;
  }
  if (model_.form_factor.singular_at_origin() && norm(x) < x_min) {
    if (capped) ++*capped;
    return eval_W_continuum(model_, Vec3{x_min, 0.0, 0.0}, t).value;
  }
  return eval_W_continuum(model_, x, t).value;
}

double ActionKernel::W00() const {
  if (kind_ == KernelKind::Discrete) return discrete_g_norm2(model_);
  return W(Vec3{0.0, 0.0, 0.0}, 0, nullptr);
}

double interaction_action_reference(const Path& path, const ActionKernel& kernel, std::size_t* capped) {
  if (kernel.alpha() == 0.0) return 0.0;
  const std::size_t n = path.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) row += kernel.W(path.q[i] - path.q[j], j - i, capped);
    total += row;
  }
  return -kernel.alpha() * path.dt * path.dt * total;
}

double interaction_action(const Path& path, const ActionKernel& kernel, std::size_t* capped) {
  if (kernel.alpha() == 0.0) return 0.0;
  // Tiles of rows and columns; each row accumulator sees its columns in
  // ascending order, so the result equals the reference bit for bit.
  constexpr std::size_t tile = 64;
  const std::size_t n = path.size();
  std::vector<double> row(n, 0.0);
  for (std::size_t i0 = 0; i0 < n; i0 += tile) {
    const std::size_t i1 = std::min(n, i0 + tile);
    for (std::size_t j0 = i0; j0 < n; j0 += tile) {
      const std::size_t j1 = std::min(n, j0 + tile);
      for (std::size_t i = i0; i < i1; ++i) {
        double acc = row[i];
        for (std::size_t j = std::max(j0, i + 1); j < j1; ++j) acc += kernel.W(path.q[i] - path.q[j], j - i, capped);
        row[i] = acc;
      }
    }
  }
  double total = 0.0;
  for (double r : row) total += r;
  return -kernel.alpha() * path.dt * path.dt * total;
}

double acceptance_probability(double S_old, double S_new, double boundary_ratio) {
  if (!(boundary_ratio > 0.0)) return 0.0;
  const double log_ratio = -(S_new - S_old) + std::log(boundary_ratio);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

// ---------------------------------------------------------------------------

PathSampler::PathSampler(const ModelSpec& model, const PathConfig& cfg, KernelKind kernel, Philox4x32 rng,
                         double coupling_sign)
    : cfg_(cfg), kernel_(model, kernel, cfg.dt, coupling_sign), rng_(rng) {
  cfg_.validate();
  path_.d = model.d;
  path_.dt = cfg.dt;
  const std::size_t n = cfg_.points();
  interacting_ = model.alpha != 0.0;
  // Initial state: an exact draw from the reference measure.
  path_.q.assign(n, Vec3{0.0, 0.0, 0.0});
  const double s = std::sqrt(cfg_.dt);
  for (std::size_t j = 1; j < n; ++j)
    for (int c = 0; c < path_.d; ++c) path_.q[j][static_cast<std::size_t>(c)] = path_.q[j - 1][static_cast<std::size_t>(c)] + s * rng_.normal();
  trial_ = path_.q;
  set_segment(10);
  rebuild();
}

void PathSampler::set_segment(std::size_t len) {
  const std::size_t N = path_.size() - 1;
  segment_ = interacting_ ? std::clamp<std::size_t>(len, 2, std::max<std::size_t>(2, N)) : N;
}

void PathSampler::rebuild() {
  if (!interacting_) {
    S_ = 0.0;
    return;
  }
  if (kernel_.kind() == KernelKind::Continuum) {
    capped_ = 0;
    S_ = interaction_action(path_, kernel_, &capped_);
    return;
  }
  const std::size_t n = path_.size();
  nm_ = kernel_.modes().size();
  cos_.assign(n * nm_, 0.0);
  sin_.assign(n * nm_, 0.0);
  Fc_.assign(n * nm_, 0.0);
  Fs_.assign(n * nm_, 0.0);
  prefix_.assign(n, 0.0);
  tcos_ = cos_;
  tsin_ = sin_;
  tFc_ = Fc_;
  tFs_ = Fs_;
  tprefix_ = prefix_;
  trial_ = path_.q;
  S_ = evaluate(0, n - 1);
  commit(0, n - 1);
}

double PathSampler::evaluate(std::size_t lo, std::size_t hi) {
  const std::size_t n = path_.size();
  const auto& modes = kernel_.modes();
  const auto& r = kernel_.decay();
  for (std::size_t j = lo; j <= hi; ++j) {
    for (std::size_t m = 0; m < nm_; ++m) {
      const double ph = dot(modes[m].k, trial_[j]);
      tcos_[j * nm_ + m] = std::cos(ph);
      tsin_[j * nm_ + m] = std::sin(ph);
    }
  }
  double run = lo == 0 ? 0.0 : prefix_[lo - 1];
  for (std::size_t j = lo; j < n; ++j) {
    const bool changed_prev = j > 0 && j - 1 >= lo && j - 1 <= hi;
    const double* cj = (j <= hi ? tcos_.data() : cos_.data()) + j * nm_;
    const double* sj = (j <= hi ? tsin_.data() : sin_.data()) + j * nm_;
    double* fc = tFc_.data() + j * nm_;
    double* fs = tFs_.data() + j * nm_;
    double term = 0.0;
    if (j == 0) {
      for (std::size_t m = 0; m < nm_; ++m) fc[m] = fs[m] = 0.0;
    } else if (j == lo) {
      const double* oc = Fc_.data() + j * nm_;
      const double* os = Fs_.data() + j * nm_;
      for (std::size_t m = 0; m < nm_; ++m) {
        fc[m] = oc[m];
        fs[m] = os[m];
        term += modes[m].weight * (cj[m] * fc[m] + sj[m] * fs[m]);
      }
    } else {
      const double* pc = (changed_prev ? tcos_.data() : cos_.data()) + (j - 1) * nm_;
      const double* ps = (changed_prev ? tsin_.data() : sin_.data()) + (j - 1) * nm_;
      const double* pfc = tFc_.data() + (j - 1) * nm_;
      const double* pfs = tFs_.data() + (j - 1) * nm_;
      for (std::size_t m = 0; m < nm_; ++m) {
        fc[m] = r[m] * (pfc[m] + pc[m]);
        fs[m] = r[m] * (pfs[m] + ps[m]);
        term += modes[m].weight * (cj[m] * fc[m] + sj[m] * fs[m]);
      }
    }
    run += term;
    tprefix_[j] = run;
  }
  return -kernel_.alpha() * cfg_.dt * cfg_.dt * run;
}

void PathSampler::commit(std::size_t lo, std::size_t hi) {
  const std::size_t n = path_.size();
  std::copy(tcos_.begin() + static_cast<std::ptrdiff_t>(lo * nm_), tcos_.begin() + static_cast<std::ptrdiff_t>((hi + 1) * nm_),
            cos_.begin() + static_cast<std::ptrdiff_t>(lo * nm_));
  std::copy(tsin_.begin() + static_cast<std::ptrdiff_t>(lo * nm_), tsin_.begin() + static_cast<std::ptrdiff_t>((hi + 1) * nm_),
            sin_.begin() + static_cast<std::ptrdiff_t>(lo * nm_));
  std::copy(tFc_.begin() + static_cast<std::ptrdiff_t>(lo * nm_), tFc_.end(), Fc_.begin() + static_cast<std::ptrdiff_t>(lo * nm_));
  std::copy(tFs_.begin() + static_cast<std::ptrdiff_t>(lo * nm_), tFs_.end(), Fs_.begin() + static_cast<std::ptrdiff_t>(lo * nm_));
  std::copy(tprefix_.begin() + static_cast<std::ptrdiff_t>(lo), tprefix_.begin() + static_cast<std::ptrdiff_t>(n),
            prefix_.begin() + static_cast<std::ptrdiff_t>(lo));
}

double PathSampler::boundary_weight(const std::vector<Vec3>& q) const {
  if (cfg_.boundary != PathBoundary::TwoSidedPinned) return 1.0;
  return cfg_.phi(norm(q.front())) * cfg_.phi(norm(q.back()));
}

void PathSampler::draw(std::vector<Vec3>& q, Move move, std::size_t a, std::size_t b) {
  const double s = std::sqrt(cfg_.dt);
  const auto d = static_cast<std::size_t>(path_.d);
  switch (move) {
    case Move::BridgeRegenerate:
      for (std::size_t j = a + 1; j < b; ++j) {
        const double left = static_cast<double>(b - j + 1);  // steps from q_{j-1} to q_b
        for (std::size_t c = 0; c < d; ++c) {
          const double mean = q[j - 1][c] + (q[b][c] - q[j - 1][c]) / left;
          q[j][c] = mean + s * std::sqrt((left - 1.0) / left) * rng_.normal();
        }
      }
      break;
    case Move::EndpointExtendLeft:
      for (std::size_t j = b; j-- > 0;)
        for (std::size_t c = 0; c < d; ++c) q[j][c] = q[j + 1][c] + s * rng_.normal();
      break;
    case Move::EndpointExtendRight:
      for (std::size_t j = a + 1; j < q.size(); ++j)
        for (std::size_t c = 0; c < d; ++c) q[j][c] = q[j - 1][c] + s * rng_.normal();
      break;
    case Move::GlobalTranslate: {
      Vec3 shift{0.0, 0.0, 0.0};
      const double width = std::sqrt(cfg_.dt * static_cast<double>(q.size() - 1));
      for (std::size_t c = 0; c < d; ++c) shift[c] = width * rng_.normal();
      for (auto& p : q) p = p + shift;
      break;
    }
  }
}

bool PathSampler::propose(Move move, std::size_t a, std::size_t b) {
  const std::size_t N = path_.size() - 1;
  std::size_t lo = 0, hi = N;
  switch (move) {
    case Move::BridgeRegenerate:
      if (!(a < b && b <= N)) throw std::invalid_argument("bridge: need a < b <= N");
      if (b - a < 2) return true;  // nothing to regenerate
      lo = a + 1;
      hi = b - 1;
      break;
    case Move::EndpointExtendLeft:
      if (cfg_.boundary == PathBoundary::DeltaStartFreeEnd)
        throw std::invalid_argument("left extension moves the pinned start");
      if (b == 0 || b > N) throw std::invalid_argument("left extension: need 0 < b <= N");
      lo = 0;
      hi = b - 1;
      break;
    case Move::EndpointExtendRight:
      if (a >= N) throw std::invalid_argument("right extension: need a < N");
      lo = a + 1;
      hi = N;
      break;
    case Move::GlobalTranslate:
      if (cfg_.boundary != PathBoundary::FreeBoth) throw std::invalid_argument("global translation needs a free-both boundary");
      break;
  }
  draw(trial_, move, a, b);
  ++proposed_;

  if (move == Move::GlobalTranslate) {
    // The action depends on differences only.
    path_.q.swap(trial_);
    trial_ = path_.q;
    rebuild();
    ++accepted_;
    return true;
  }

  const double ratio = boundary_weight(trial_) / boundary_weight(path_.q);
  double S_new = S_;
  std::size_t capped_new = capped_;
  if (interacting_) {
    if (kernel_.kind() == KernelKind::Discrete) {
      S_new = evaluate(lo, hi);
    } else {
      // Pairs touching [lo, hi]; pairs outside are unchanged.
      const double pref = -kernel_.alpha() * cfg_.dt * cfg_.dt;
      std::size_t c_old = 0, c_new = 0;
      double delta = 0.0;
      for (std::size_t i = lo; i <= hi; ++i) {
        for (std::size_t j = 0; j <= N; ++j) {
          if (j == i || (j >= lo && j <= hi && j < i)) continue;
          const std::size_t lag = i > j ? i - j : j - i;
          delta += kernel_.W(trial_[i] - trial_[j], lag, &c_new) - kernel_.W(path_.q[i] - path_.q[j], lag, &c_old);
        }
      }
      S_new = S_ + pref * delta;
      capped_new = capped_ + c_new;
    }
  }
  const double p = acceptance_probability(S_, S_new, ratio);
  const bool accept = p >= 1.0 || rng_.uniform() < p;
  if (accept) {
    std::copy(trial_.begin() + static_cast<std::ptrdiff_t>(lo), trial_.begin() + static_cast<std::ptrdiff_t>(hi + 1),
              path_.q.begin() + static_cast<std::ptrdiff_t>(lo));
    if (interacting_ && kernel_.kind() == KernelKind::Discrete) commit(lo, hi);
    S_ = S_new;
    capped_ = capped_new;
    ++accepted_;
  } else {
    std::copy(path_.q.begin() + static_cast<std::ptrdiff_t>(lo), path_.q.begin() + static_cast<std::ptrdiff_t>(hi + 1),
              trial_.begin() + static_cast<std::ptrdiff_t>(lo));
  }
  return accept;
}

void PathSampler::recenter() {
  if (cfg_.boundary != PathBoundary::FreeBoth) throw std::invalid_argument("recenter needs a free-both boundary");
  const Vec3 origin = path_.q.front();
  for (auto& p : path_.q) p = p - origin;
  trial_ = path_.q;
  rebuild();
}

void PathSampler::sweep() {
  const std::size_t N = path_.size() - 1;
  const bool pinned_start = cfg_.boundary == PathBoundary::DeltaStartFreeEnd;
  if (segment_ >= N) {
    if (pinned_start) {
      propose(Move::EndpointExtendRight, 0, 0);
    } else {
      const std::size_t o = static_cast<std::size_t>(rng_.below(N + 1));
      if (o > 0) propose(Move::EndpointExtendLeft, 0, o);
      if (o < N) propose(Move::EndpointExtendRight, o, 0);
    }
  } else {
    const std::size_t o = static_cast<std::size_t>(rng_.below(segment_));
    if (o > 0) {
      if (pinned_start)
        propose(Move::BridgeRegenerate, 0, o);
      else
        propose(Move::EndpointExtendLeft, 0, o);
    }
    std::size_t a = o;
    while (a + segment_ <= N) {
      propose(Move::BridgeRegenerate, a, a + segment_);
      a += segment_;
    }
    if (a < N) propose(Move::EndpointExtendRight, a, 0);
  }
  if (cfg_.boundary == PathBoundary::FreeBoth) {
    ++sweeps_since_center_;
    if (sweeps_since_center_ >= kRecenterEvery) {
      const std::size_t p = proposed_, acc = accepted_;
      propose(Move::GlobalTranslate, 0, 0);
      recenter();
      proposed_ = p;
      accepted_ = acc;
      sweeps_since_center_ = 0;
    }
  }
}

// ---------------------------------------------------------------------------

void MCConfig::validate(const PathConfig& path) const {
  if (chains == 0) throw std::invalid_argument("mc: chains must be positive");
  if (sweeps == 0) throw std::invalid_argument("mc: sweeps must be positive");
  if (thin == 0) throw std::invalid_argument("mc: thin must be positive");
  if (initial_segment < 2) throw std::invalid_argument("mc: initial_segment must be >= 2");
  if (tune_every == 0) throw std::invalid_argument("mc: tune_every must be positive");
  if (jackknife_blocks < 2) throw std::invalid_argument("mc: jackknife_blocks must be >= 2");
  if (coupling_sign != 1.0 && coupling_sign != -1.0) throw std::invalid_argument("mc: coupling_sign must be +1 or -1");
  for (double k : k_list)
    if (!std::isfinite(k)) throw std::invalid_argument("mc: k_list entries must be finite");
  if (!(k_alt >= 0.0) || !std::isfinite(k_alt)) throw std::invalid_argument("mc: k_alt must be finite and >= 0");
  const auto lags = resolve_lags(*this, path);
  if (lags.size() < 5) throw std::invalid_argument("mc: fit window shorter than 5 lags");
  if (chains * (sweeps / thin) < jackknife_blocks)
    throw std::invalid_argument("mc: too few kept sweeps for the jackknife block count");
}

std::vector<double> resolve_lags(const MCConfig& mc, const PathConfig& path) {
  const std::size_t window = path.steps_window();
  std::vector<std::size_t> steps;
  if (mc.lags.empty()) {
    const double hi = static_cast<double>(window);
    const double lo = std::max(1.0, hi / 10.0);
    const int count = 8;
    for (int i = 0; i < count; ++i) {
      const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
      steps.push_back(static_cast<std::size_t>(std::max(1.0, std::round(x))));
    }
  } else {
    for (double tau : mc.lags) {
      const std::size_t s = to_steps(tau, path.dt, "lag");
      if (s == 0 || s > window) throw std::invalid_argument("mc: lags must lie in (0, t]");
      steps.push_back(s);
    }
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  std::vector<double> out;
  for (std::size_t s : steps) out.push_back(static_cast<double>(s) * path.dt);
  return out;
}

namespace {

struct LagPlan {
  std::vector<std::size_t> steps;
  std::vector<double> tau;
  std::vector<double> coef;  // WLS slope = sum coef_l * msd_l
  double tau_bar = 0.0;
  std::vector<double> weight;
};

double resolve_k_alt(const MCConfig& mc, double tau_hi) { return mc.k_alt > 0.0 ? mc.k_alt : std::sqrt(2.0 / tau_hi); }

LagPlan make_plan(const MCConfig& mc, const PathConfig& path) {
  LagPlan p;
  p.tau = resolve_lags(mc, path);
  double sw = 0.0, swt = 0.0;
  for (double tau : p.tau) {
    p.steps.push_back(static_cast<std::size_t>(std::llround(tau / path.dt)));
    const double w = 1.0 / (tau * tau);
    p.weight.push_back(w);
    sw += w;
    swt += w * tau;
  }
  p.tau_bar = swt / sw;
  double sxx = 0.0;
  for (std::size_t l = 0; l < p.tau.size(); ++l) sxx += p.weight[l] * (p.tau[l] - p.tau_bar) * (p.tau[l] - p.tau_bar);
  for (std::size_t l = 0; l < p.tau.size(); ++l) p.coef.push_back(p.weight[l] * (p.tau[l] - p.tau_bar) / sxx);
  return p;
}

}  // namespace

ChainResult run_chain(const ModelSpec& model, const PathConfig& path, const MCConfig& mc, std::size_t chain) {
  const Philox4x32 master(mc.seed);
  PathSampler sampler(model, path, mc.kernel, master.split(chain), mc.coupling_sign);
  const LagPlan plan = make_plan(mc, path);
  ChainResult out;
  out.stream_key = sampler.rng().key();

  sampler.set_segment(mc.initial_segment);
  const std::size_t N = sampler.path().size() - 1;
  for (std::size_t s = 0; s < mc.burn_in; ++s) {
    sampler.sweep();
    if (model.alpha != 0.0 && (s + 1) % mc.tune_every == 0) {
      const double acc = sampler.proposed() ? static_cast<double>(sampler.accepted()) / static_cast<double>(sampler.proposed()) : 1.0;
      const auto len = static_cast<double>(sampler.segment());
      if (acc > 0.6)
        sampler.set_segment(static_cast<std::size_t>(std::min(static_cast<double>(N), std::floor(len * 1.25 + 1.0))));
      else if (acc < 0.4)
        sampler.set_segment(static_cast<std::size_t>(std::max(2.0, std::floor(len * 0.8))));
      sampler.reset_counters();
    }
  }
  sampler.reset_counters();
  out.segment = sampler.segment();

  const std::size_t i0 = path.steps_minus();
  const std::size_t i1 = i0 + path.steps_window();
  const bool sliding = path.boundary != PathBoundary::DeltaStartFreeEnd;
  const double inv_d = 1.0 / static_cast<double>(model.d);
  const double k_alt = resolve_k_alt(mc, plan.tau.back());
  const std::size_t nk = mc.k_list.size();
  const std::size_t nl = plan.steps.size();
  out.cos_k.assign(nk, {});
  out.sin_k.assign(nk, {});
  out.msd.assign(nl, {});
  const std::size_t kept = mc.sweeps / mc.thin;
  for (auto& v : out.cos_k) v.reserve(kept);
  for (auto& v : out.sin_k) v.reserve(kept);
  for (auto& v : out.msd) v.reserve(kept);
  out.slope.reserve(kept);
  out.alt_lo.reserve(kept);
  out.alt_hi.reserve(kept);

  auto window_avg = [&](std::size_t lag, auto&& f) {
    const auto& q = sampler.path().q;
    if (!sliding) return f(q[i0 + lag] - q[i0]);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = i0; i + lag <= i1; ++i, ++count) acc += f(q[i + lag] - q[i]);
    return acc / static_cast<double>(count);
  };

  for (std::size_t s = 0; s < mc.sweeps; ++s) {
    sampler.sweep();
    if ((s + 1) % mc.thin != 0) continue;
    const auto& q = sampler.path().q;
    const Vec3 dq = q[i1] - q[i0];
    for (std::size_t a = 0; a < nk; ++a) {
      out.cos_k[a].push_back(std::cos(mc.k_list[a] * dq[0]));
      out.sin_k[a].push_back(std::sin(mc.k_list[a] * dq[0]));
    }
    double slope = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      const double m = window_avg(plan.steps[l], [&](const Vec3& x) { return norm2(x) * inv_d; });
      out.msd[l].push_back(m);
      slope += plan.coef[l] * m;
    }
    out.slope.push_back(slope);
    out.alt_lo.push_back(window_avg(plan.steps.front(), [&](const Vec3& x) { return std::cos(k_alt * x[0]); }));
    out.alt_hi.push_back(window_avg(plan.steps.back(), [&](const Vec3& x) { return std::cos(k_alt * x[0]); }));
    if (mc.record_trace) out.trace.push_back({s + 1, sampler.action(), dq});
  }
  out.acceptance = sampler.proposed() ? static_cast<double>(sampler.accepted()) / static_cast<double>(sampler.proposed()) : 1.0;
  out.capped = sampler.capped_pairs();
  return out;
}

namespace {

MCEstimate merged(const std::vector<ChainResult>& chains, std::uint64_t seed,
                  const std::vector<double>& (*pick)(const ChainResult&, std::size_t), std::size_t idx) {
  std::vector<MCEstimate> parts;
  for (const auto& c : chains) parts.push_back(to_estimate(blocking_analysis(pick(c, idx)), seed));
  return merge_chains(parts);
}

}  // namespace

std::vector<CharFnEstimate> charfn_from_chains(const std::vector<ChainResult>& chains, const MCConfig& mc) {
  std::vector<CharFnEstimate> out;
  for (std::size_t a = 0; a < mc.k_list.size(); ++a) {
    CharFnEstimate e;
    e.k = mc.k_list[a];
    e.re = merged(chains, mc.seed, [](const ChainResult& c, std::size_t i) -> const std::vector<double>& { return c.cos_k[i]; }, a);
    e.im = merged(chains, mc.seed, [](const ChainResult& c, std::size_t i) -> const std::vector<double>& { return c.sin_k[i]; }, a);
    e.imaginary_consistent = std::abs(e.im.mean) <= 3.0 * e.im.stderr_;
    out.push_back(e);
  }
  return out;
}

Sigma2Estimate sigma2_from_chains(const std::vector<ChainResult>& chains, const MCConfig& mc, const PathConfig& path) {
  const LagPlan plan = make_plan(mc, path);
  Sigma2Estimate out;
  out.lags = plan.tau;
  const std::size_t nl = plan.tau.size();
  if (nl < 5) throw std::invalid_argument("mc: fit window shorter than 5 lags");
  out.short_lag_span = plan.tau.back() < 10.0 * plan.tau.front() * (1.0 - 1e-12);
  if (out.short_lag_span) out.flags.push_back("lag_span_below_decade");

  out.slope = merged(chains, mc.seed, [](const ChainResult& c, std::size_t) -> const std::vector<double>& { return c.slope; }, 0);
  double sw = 0.0, swy = 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    const MCEstimate m = merged(chains, mc.seed, [](const ChainResult& c, std::size_t i) -> const std::vector<double>& { return c.msd[i]; }, l);
    out.msd_mean.push_back(m.mean);
    out.msd_stderr.push_back(m.stderr_);
    sw += plan.weight[l];
    swy += plan.weight[l] * m.mean;
  }
  out.intercept = swy / sw - out.slope.mean * plan.tau_bar;
  double chi2 = 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    const double r = out.msd_mean[l] - out.intercept - out.slope.mean * plan.tau[l];
    if (out.msd_stderr[l] > 0.0) chi2 += r * r / (out.msd_stderr[l] * out.msd_stderr[l]);
  }
  out.chi2_per_dof = chi2 / static_cast<double>(nl - 2);
  if (!out.slope.plateau) out.flags.push_back("no_blocking_plateau");

  // Alternative: -2 [ln G(tau_hi) - ln G(tau_lo)] / (k^2 (tau_hi - tau_lo)).
  out.alt_tau_lo = plan.tau.front();
  out.alt_tau_hi = plan.tau.back();
  std::vector<std::vector<double>> series(2);
  for (const auto& c : chains) {
    series[0].insert(series[0].end(), c.alt_lo.begin(), c.alt_lo.end());
    series[1].insert(series[1].end(), c.alt_hi.begin(), c.alt_hi.end());
  }
  out.k_alt = resolve_k_alt(mc, out.alt_tau_hi);
  const double k2dt = out.k_alt * out.k_alt * (out.alt_tau_hi - out.alt_tau_lo);
  const auto jk = jackknife_blocks(series, mc.jackknife_blocks, [&](const std::vector<double>& m) {
    if (!(m[0] > 0.0 && m[1] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -2.0 * (std::log(m[1]) - std::log(m[0])) / k2dt;
  });
  out.alternative.mean = jk.value;
  out.alternative.stderr_ = jk.stderr_;
  out.alternative.samples = series[0].size();
  out.alternative.seed = mc.seed;
  out.alternative.plateau = std::isfinite(jk.value) && std::isfinite(jk.stderr_);
  if (!out.alternative.plateau) {
    out.flags.push_back("alternative_estimator_undefined");
  } else {
    const double comb = std::hypot(out.slope.stderr_, out.alternative.stderr_);
    out.discrepancy = std::abs(out.slope.mean - out.alternative.mean) > 3.0 * comb;
    if (out.discrepancy) out.flags.push_back("estimator_discrepancy");
  }
  return out;
}

MCRun run_mc(const ModelSpec& model, const PathConfig& path, const MCConfig& mc) {
  model.validate();
  path.validate();
  mc.validate(path);
  MCRun run;
  run.chains.resize(mc.chains);
  parallel_for(mc.chains, mc.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) run.chains[c] = run_chain(model, path, mc, c);
  });
  run.charfn = charfn_from_chains(run.chains, mc);
  run.sigma2 = sigma2_from_chains(run.chains, mc, path);
  for (const auto& c : run.chains) {
    run.acceptance += c.acceptance;
    run.capped += c.capped;
  }
  run.acceptance /= static_cast<double>(run.chains.size());
  run.flags = run.sigma2.flags;
  for (const auto& e : run.charfn) {
    if (!e.imaginary_consistent) run.flags.push_back("imaginary_part_nonzero");
    if (!e.re.plateau && e.k != 0.0) run.flags.push_back("charfn_no_blocking_plateau");
  }
  std::sort(run.flags.begin(), run.flags.end());
  run.flags.erase(std::unique(run.flags.begin(), run.flags.end()), run.flags.end());
  return run;
}

std::vector<CharFnEstimate> estimate_charfn(const MCConfig& mc, const PathConfig& path, const ModelSpec& model) {
  return run_mc(model, path, mc).charfn;
}

Sigma2Estimate estimate_sigma2(const MCConfig& mc, const PathConfig& path, const ModelSpec& model) {
  return run_mc(model, path, mc).sigma2;
}

}  // namespace polaron
