#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polaron/blocking.hpp"
#include "polaron/model.hpp"
#include "polaron/rng.hpp"

namespace polaron {

enum class PathBoundary { DeltaStartFreeEnd, FreeBoth, TwoSidedPinned };
enum class KernelKind { Discrete, Continuum };
const char* to_string(PathBoundary b);
const char* to_string(KernelKind k);

struct PathConfig {
  double t = 4.0;        // observation window
  double T_minus = 0.0;  // buffer before the window
  double T_plus = 2.0;   // buffer after the window
  double dt = 0.1;
  PathBoundary boundary = PathBoundary::FreeBoth;
  // Radial boundary weight phi(|x|) for two-sided pinning, linear interpolation,
  // zero beyond the last node. Empty table: exp(-r^2 / (2 phi_width^2)).
  std::vector<double> phi_r;
  std::vector<double> phi_value;
  double phi_width = 1.0;

  std::size_t steps_minus() const;
  std::size_t steps_window() const;
  std::size_t steps_plus() const;
  std::size_t points() const { return steps_minus() + steps_window() + steps_plus() + 1; }
  double phi(double r) const;
  void validate() const;
};

/// Positions q_0..q_N on the dt lattice covering [-T_minus, t + T_plus].
struct Path {
  int d = 1;
  double dt = 0.1;
  std::vector<Vec3> q;
  std::size_t size() const { return q.size(); }
};

/// Pair interaction kernel for the time-discretized double integral.
class ActionKernel {
 public:
  /// coupling_sign = -1 flips the interaction; only used for fault injection.
  ActionKernel(const ModelSpec& model, KernelKind kind, double dt, double coupling_sign = 1.0);

  KernelKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double dt() const { return dt_; }
  /// W(x, lag * dt) for this kernel; continuum Froehlich values are capped at
  /// |x| = x_min.
  double W(const Vec3& x, std::size_t lag, std::size_t* capped = nullptr) const;
  const std::vector<KernelMode>& modes() const { return modes_; }
  const std::vector<double>& decay() const { return decay_; }
  double W00() const;
  static constexpr double x_min = 1e-8;

 private:
  ModelSpec model_;
  KernelKind kind_;
  double alpha_;
  double dt_;
  std::vector<KernelMode> modes_;
  std::vector<double> decay_;  // exp(-omega dt) per mode
};

/// S_int = -(alpha/2) dt^2 sum_{i != j} W(q_i - q_j, (i - j) dt), direct double sum.
double interaction_action_reference(const Path& path, const ActionKernel& kernel, std::size_t* capped = nullptr);
/// Same sum. Discrete kernels use an O(N M) recursion over the exponential
/// time dependence; agreement with the reference is to rounding, not bitwise.
double interaction_action(const Path& path, const ActionKernel& kernel, std::size_t* capped = nullptr);

enum class Move { BridgeRegenerate, EndpointExtendLeft, EndpointExtendRight, GlobalTranslate };
const char* to_string(Move m);

/// Metropolis acceptance probability for an exact reference-measure proposal.
double acceptance_probability(double S_old, double S_new, double boundary_ratio = 1.0);

/// Single-chain sampler. Proposals are drawn from the Wiener reference measure
/// so the acceptance ratio only involves the interaction (and phi for two-sided
/// pinning).
class PathSampler {
 public:
  PathSampler(const ModelSpec& model, const PathConfig& cfg, KernelKind kernel, Philox4x32 rng,
              double coupling_sign = 1.0);

  const Path& path() const { return path_; }
  double action() const { return S_; }
  std::size_t segment() const { return segment_; }
  void set_segment(std::size_t len);
  std::size_t capped_pairs() const { return capped_; }

  /// Proposes a move on indices [a, b] and applies Metropolis. For bridges
  /// a and b stay fixed; endpoint moves regenerate [0, b) or (a, N].
  bool propose(Move move, std::size_t a, std::size_t b);
  /// One sweep: segments of the current length tile the path with a random
  /// offset. Free-both paths also get a global translation move.
  void sweep();
  /// Free-both only: shifts the path so that q_0 = 0. The target is
  /// translation invariant, so this leaves every increment untouched.
  void recenter();

  std::size_t proposed() const { return proposed_; }
  std::size_t accepted() const { return accepted_; }
  void reset_counters() { proposed_ = accepted_ = 0; }
  Philox4x32& rng() { return rng_; }

 private:
  void rebuild();
  double evaluate(std::size_t lo, std::size_t hi);
  void commit(std::size_t lo, std::size_t hi);
  double boundary_weight(const std::vector<Vec3>& q) const;
  void draw(std::vector<Vec3>& q, Move move, std::size_t a, std::size_t b);

  PathConfig cfg_;
  ActionKernel kernel_;
  Philox4x32 rng_;
  Path path_;
  std::vector<Vec3> trial_;
  double S_ = 0.0;
  std::size_t segment_ = 10;
  std::size_t proposed_ = 0, accepted_ = 0;
  std::size_t capped_ = 0;
  std::size_t sweeps_since_center_ = 0;
  bool interacting_ = true;
  // Discrete-kernel caches: per point and mode the phases and the running
  // left sums F (value before adding point j), plus prefix action sums.
  std::size_t nm_ = 0;
  std::vector<double> cos_, sin_, Fc_, Fs_, prefix_;
  std::vector<double> tcos_, tsin_, tFc_, tFs_, tprefix_;
};

struct MCConfig {
  std::size_t chains = 2;
  std::size_t sweeps = 20000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  KernelKind kernel = KernelKind::Discrete;
  std::size_t initial_segment = 10;
  std::size_t tune_every = 20;
  unsigned threads = 1;
  std::vector<double> k_list{0.5, 1.0};  // along axis 0
  std::vector<double> lags;             // fit lags (time units); empty: 5..10 evenly up to t
  double k_alt = 0.0;                   // alternative sigma^2 estimator; 0 picks sqrt(2 / tau_hi)
  std::size_t jackknife_blocks = 32;
  bool record_trace = false;
  double coupling_sign = 1.0;           // -1 injects a sign fault into the action
  void validate(const PathConfig& path) const;
};

struct TraceRow {
  std::size_t sweep;
  double S;
  Vec3 displacement;
};

struct ChainResult {
  std::uint64_t stream_key = 0;
  std::size_t segment = 0;
  double acceptance = 0.0;
  std::size_t capped = 0;
  std::vector<TraceRow> trace;
  // Measured series (one entry per kept sweep).
  std::vector<std::vector<double>> cos_k, sin_k;  // per k
  std::vector<std::vector<double>> msd;           // per lag: |dq|^2 / d
  std::vector<double> slope;                      // linear combination of msd giving the WLS slope
  std::vector<double> alt_lo, alt_hi;             // cos(k_alt dq) at the two alt lags
};

struct CharFnEstimate {
  double k = 0.0;
  MCEstimate re, im;
  bool imaginary_consistent = true;  // |im| <= 3 stderr
};

struct Sigma2Estimate {
  MCEstimate slope;
  double intercept = 0.0;
  double chi2_per_dof = 0.0;
  std::vector<double> lags;
  std::vector<double> msd_mean, msd_stderr;
  MCEstimate alternative;
  double alt_tau_lo = 0.0, alt_tau_hi = 0.0;
  double k_alt = 0.0;
  bool discrepancy = false;
  bool short_lag_span = false;  // lags span less than a decade
  std::vector<std::string> flags;
};

struct MCRun {
  std::vector<ChainResult> chains;
  std::vector<CharFnEstimate> charfn;
  Sigma2Estimate sigma2;
  double acceptance = 0.0;
  std::size_t capped = 0;
  std::vector<std::string> flags;
};

/// Runs a single chain on its own stream.
ChainResult run_chain(const ModelSpec& model, const PathConfig& path, const MCConfig& mc, std::size_t chain);

/// Runs all chains (concurrently, one stream each) and evaluates every estimator.
MCRun run_mc(const ModelSpec& model, const PathConfig& path, const MCConfig& mc);

std::vector<CharFnEstimate> charfn_from_chains(const std::vector<ChainResult>& chains, const MCConfig& mc);
Sigma2Estimate sigma2_from_chains(const std::vector<ChainResult>& chains, const MCConfig& mc,
                                  const PathConfig& path);

std::vector<CharFnEstimate> estimate_charfn(const MCConfig& mc, const PathConfig& path, const ModelSpec& model);
Sigma2Estimate estimate_sigma2(const MCConfig& mc, const PathConfig& path, const ModelSpec& model);

/// Fit lags actually used for a configuration.
std::vector<double> resolve_lags(const MCConfig& mc, const PathConfig& path);

}  // namespace polaron
