#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "polaron/model.hpp"

namespace polaron {

struct OccupationState {
  std::vector<int> occupations;  // one entry per grid mode
  int N = 0;
  Lattice3 Pf_lattice{0, 0, 0};  // sum n_i * (integer coordinates of k_i)
  Vec3 Pf{0.0, 0.0, 0.0};
};

/// All occupation states over M modes with at most N_max bosons, graded by N
/// and ascending lexicographic in the occupation vector within a grade.
class FockBasis {
 public:
  static constexpr std::size_t default_limit = 2'000'000;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  static FockBasis enumerate(const KGridSpec& grid, int N_max, std::size_t limit = default_limit);
  /// Exact count binomial(M + N_max, N_max); throws ModelError on overflow.
  static std::uint64_t count_states(std::size_t M, int N_max);

  std::size_t size() const { return counts_.size(); }
  std::size_t modes() const { return M_; }
  int N_max() const { return N_max_; }
  const KGridSpec& grid() const { return grid_; }

  int number(std::size_t s) const { return counts_[s]; }
  /// Occupied modes of state s with multiplicity, ascending.
  std::span<const std::uint16_t> mode_list(std::size_t s) const {
    return {mode_lists_.data() + s * stride_, static_cast<std::size_t>(counts_[s])};
  }
  const Lattice3& lattice_momentum(std::size_t s) const { return pf_[s]; }
  Vec3 field_momentum(std::size_t s) const;
  OccupationState state(std::size_t s) const;
  /// Field energies sum_i n_i omega(k_i) for every state.
  std::vector<double> field_energies(const ModelSpec& model) const;

  /// Position of an occupation vector, or npos when N exceeds N_max.
  std::size_t index_of(std::span<const int> occupations) const;
  /// Position of the state with the given ascending mode list.
  std::size_t index_of_modes(std::span<const std::uint16_t> modes) const;

 private:
  std::uint64_t weak_compositions(int s, std::size_t parts) const;

  KGridSpec grid_;
  std::size_t M_ = 0;
  int N_max_ = 0;
  std::size_t stride_ = 1;
  std::vector<std::uint8_t> counts_;
  std::vector<std::uint16_t> mode_lists_;
  std::vector<Lattice3> pf_;
  std::vector<std::uint64_t> grade_offset_;  // first index of each N
  // binom_[n * (N_max + 2) + s] = C(n, s)
  std::vector<std::uint64_t> binom_;
};

/// Real sparse matrix in compressed-row form with sorted columns.
struct SparseOperator {
  std::size_t dim = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  bool symmetric = true;

  std::size_t nnz() const { return val.size(); }
  /// y = A x. Each row is summed in column order, so the result does not
  /// depend on the number of threads.
  void multiply(std::span<const double> x, std::span<double> y, unsigned threads = 1) const;
  double entry(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  bool is_exactly_symmetric() const;
  bool all_finite() const;
  std::size_t offdiagonal_pairs() const;
  Eigen::MatrixXd to_dense() const;
  /// "row col value" lines, row-major sorted, values with 17 significant digits.
  void dump(std::ostream& out) const;
};

SparseOperator assemble_fiber_hamiltonian(const ModelSpec& model, const Vec3& P, const FockBasis& basis,
                                          unsigned threads = 1);
SparseOperator assemble_number_operator(const FockBasis& basis);
SparseOperator assemble_Pf_component(const FockBasis& basis, int axis);

/// Per-mode coupling sqrt(alpha) * sqrt(dk^d) * g(k_i).
std::vector<double> mode_couplings(const ModelSpec& model);

}  // namespace polaron
