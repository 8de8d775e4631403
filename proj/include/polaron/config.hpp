#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "polaron/cltlab.hpp"
#include "polaron/io.hpp"
#include "polaron/model.hpp"
#include "polaron/pathmc.hpp"
#include "polaron/spectral.hpp"

namespace polaron {

/// Collects every problem found while reading a configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ModelSection {
  int dimension = 1;
  DispersionSpec dispersion;
  FormFactorSpec form_factor;
  double alpha = 0.0;
  double dk = 0.5;
  double kmax = 2.0;

  ModelSpec build() const;
};

struct FockSection {
  int N_max = 2;
  std::size_t basis_limit = FockBasis::default_limit;
  LanczosOptions lanczos;
  KrylovOptions krylov;

  SolverSettings settings(unsigned threads) const;
};

struct SpectralSection {
  int axis = 0;
  std::vector<double> P{0.0, 0.25, 0.5, 0.75, 1.0};  // along axis
  double energy_tol = 1e-10;
  int essential_n = 0;                               // 0 skips the essential-edge scan
  double mass_h = 0.125;
  int mass_levels = 3;
  std::vector<double> charfn_k{0.5, 1.0};
  double charfn_t = 1.0;
  Boundary boundary = Boundary::OneSided;
  TwoSidedSpec two_sided;
  double sigma_t = 1.0;
  std::vector<double> sigma_eps{0.4, 0.3, 0.2, 0.1};
};

struct KernelSection {
  std::vector<double> x{0.25, 0.5, 1.0, 2.0};  // radii along axis 0
  std::vector<double> t{0.0, 0.5, 1.0};
  std::vector<double> kappa{1, 2, 4, 8, 16, 32, 64, 128, 256};
};

struct ToySection {
  ToyFiberModel model;
  double k = 1.0;
  double t = 0.01;
  std::vector<double> T{10, 20, 40, 80, 160};
  double eps_k = 1.0;
  double eps_t = 1.0;
  std::vector<double> eps{0.08, 0.04, 0.02, 0.01, 0.005};
  double eps_tol = 1e-6;
  std::vector<double> clt_k{0.25, 0.5, 1.0, 2.0, 4.0};
  double clt_t = 1.0;
  std::vector<double> clt_eps{0.004, 0.002, 0.001, 0.0005, 0.00025, 0.000125};
};

struct VerifySection {
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool mutation_check = true;
};

/// MCConfig defaults with per-chain traces switched on.
MCConfig default_mc();

/// One schema for every subcommand. Defaults are materialized by to_json.
struct Config {
  std::uint64_t seed = 1;
  ModelSection model;
  FockSection fock;
  SpectralSection spectral;
  KernelSection kernel;
  PathConfig path;
  MCConfig mc = default_mc();
  ToySection toy;
  VerifySection verify;

  /// Range checks across sections; throws ConfigError listing every failure.
  void validate() const;
};

/// Strict reader: unknown keys and type mismatches are collected and reported
/// together in one ConfigError.
Config config_from_json(const Json& j);
Config load_config(const std::filesystem::path& file);
Json to_json(const Config& c);

}  // namespace polaron
