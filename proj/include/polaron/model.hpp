#pragma once

// Model definition shared by the spectral and path-integral routes: dispersion
// relation, form factor, momentum grid and the two-time interaction kernel.
//
// Units: bare particle mass 1, hbar 1.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace polaron {

using Vec3 = std::array<double, 3>;
using Lattice3 = std::array<int, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

/// Unit vector along `axis`.
inline Vec3 axis_vector(int axis) {
  Vec3 e{0.0, 0.0, 0.0};
  e.at(static_cast<std::size_t>(axis)) = 1.0;
  return e;
}

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when adaptive quadrature misses its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

struct DispersionSpec {
  enum class Kind { Constant, MassiveQuadratic, Tabulated };

  Kind kind = Kind::Constant;
  double c0 = 1.0;
  double a = 0.0;
  // Radial table |k| -> omega, linear interpolation, flat beyond the last node.
  std::vector<double> table_k;
  std::vector<double> table_omega;

  static DispersionSpec constant(double c0);
  static DispersionSpec massive_quadratic(double c0, double a);
  static DispersionSpec tabulated(std::vector<double> k, std::vector<double> omega);

  double at(double kabs) const;
  bool is_constant() const { return kind == Kind::Constant; }
  void validate() const;
  bool operator==(const DispersionSpec&) const = default;
};

struct FormFactorSpec {
  enum class Kind {
    Gaussian,              // g0 * exp(-|k|^2 / (2 width^2))
    FroehlichSharpCutoff,  // chi_[0,kappa](|k|) / (sqrt(2) pi |k|)
    FroehlichExpCutoff,    // exp(-|k| / (2 kappa)) / (sqrt(2) pi |k|)
  };

  Kind kind = Kind::Gaussian;
  double g0 = 1.0;
  double width = 1.0;
  double kappa = std::numeric_limits<double>::infinity();

  static FormFactorSpec gaussian(double g0, double width);
  static FormFactorSpec froehlich_sharp(double kappa);
  static FormFactorSpec froehlich_exp(double kappa);

  /// Throws ModelError at |k| = 0 for the Froehlich kinds.
  double at(double kabs) const;
  bool singular_at_origin() const { return kind != Kind::Gaussian; }
  void validate() const;
  bool operator==(const FormFactorSpec&) const = default;
};

/// Symmetric cubic lattice of spacing dk inside |k| <= kmax, origin excluded.
/// Modes are ordered lexicographically by integer coordinates.
struct KGridSpec {
  int d = 1;
  double dk = 0.5;
  double kmax = 2.0;
  std::vector<Lattice3> lattice;
  std::vector<Vec3> modes;

  static KGridSpec build(int d, double dk, double kmax);

  std::size_t size() const { return modes.size(); }
  double cell_volume() const { return std::pow(dk, d); }
  /// Position of the mode with the given integer coordinates, or npos.
  std::size_t find(const Lattice3& n) const;
  bool same_grid(const KGridSpec& other) const {
    return d == other.d && dk == other.dk && kmax == other.kmax;
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct ModelSpec {
  int d = 1;
  DispersionSpec dispersion;
  FormFactorSpec form_factor;
  double alpha = 0.0;
  KGridSpec grid;

  static ModelSpec make(int d, DispersionSpec dispersion, FormFactorSpec form_factor,
                        double alpha, double dk, double kmax);

  /// Same model with a different coupling constant.
  ModelSpec with_alpha(double new_alpha) const;
  void validate() const;
};

double eval_omega(const ModelSpec& model, const Vec3& k);
double eval_g(const ModelSpec& model, const Vec3& k);

/// One term of the discrete kernel after merging the +k/-k pair.
struct KernelMode {
  Vec3 k;
  double weight;  // 2 * dk^d * g(k)^2
  double omega;
};

/// Half-space representatives of the grid with paired weights. The discrete
/// kernel is sum_m weight_m cos(k_m . x) exp(-omega_m |t|).
std::vector<KernelMode> kernel_modes(const ModelSpec& model);

struct KernelValue {
  double value;
  double abs_error;  // zero for closed forms
};

/// Continuum kernel int dk |g|^2 e^{ikx} e^{-omega|t|}. Closed forms for the
/// Froehlich kinds with constant dispersion in d = 3, quadrature otherwise.
KernelValue eval_W_continuum(const ModelSpec& model, const Vec3& x, double t);

/// Kernel of the discretized model (same finite model the spectral route solves).
double eval_W_discrete(const ModelSpec& model, const Vec3& x, double t);

/// |x|^{-1} e^{-|t|}.
double froehlich_kernel(double r, double t);
/// (2/pi) arctan(kappa r) / r * e^{-|t|}; monotone in kappa towards froehlich_kernel.
double smooth_cutoff_kernel(double r, double t, double kappa);

/// Discrete sum_i dk^d g(k_i)^2.
double discrete_g_norm2(const ModelSpec& model);

struct ConditionCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct ConditionReport {
  std::vector<ConditionCheck> checks;
  bool all_passed() const;
};

ConditionReport check_condition_C(const ModelSpec& model, std::size_t samples, std::uint64_t seed = 1);

const char* to_string(DispersionSpec::Kind kind);
const char* to_string(FormFactorSpec::Kind kind);

}  // namespace polaron
