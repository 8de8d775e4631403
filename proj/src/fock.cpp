#include "polaron/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "polaron/parallel.hpp"

namespace polaron {

std::uint64_t FockBasis::count_states(std::size_t M, int N_max) {
  // C(M + N, N) built up one factor at a time; every partial product is itself a binomial.
  std::uint64_t c = 1;
  for (int k = 1; k <= N_max; ++k) {
    const std::uint64_t f = M + static_cast<std::uint64_t>(k);
    if (c > std::numeric_limits<std::uint64_t>::max() / f) throw ModelError("Fock basis size overflows 64 bits");
    c = c * f / static_cast<std::uint64_t>(k);
  }
  return c;
}

std::uint64_t FockBasis::weak_compositions(int s, std::size_t parts) const {
  if (parts == 0) return s == 0 ? 1 : 0;
  // C(s + parts - 1, s)
  const std::size_t n = static_cast<std::size_t>(s) + parts - 1;
  return binom_[n * static_cast<std::size_t>(N_max_ + 2) + static_cast<std::size_t>(s)];
}

FockBasis FockBasis::enumerate(const KGridSpec& grid, int N_max, std::size_t limit) {
  const std::size_t M = grid.size();
  if (M == 0) throw ModelError("Fock basis needs at least one mode");
  if (N_max < 0 || N_max > 255) throw ModelError("N_max must lie in [0, 255]");
  if (M > 65535) throw ModelError("too many modes for the Fock basis");
  const std::uint64_t total = count_states(M, N_max);
  if (total > limit)
    throw ModelError("Fock basis size " + std::to_string(total) + " exceeds the limit " + std::to_string(limit));

  FockBasis b;
  b.grid_ = grid;
  b.M_ = M;
  b.N_max_ = N_max;
  b.stride_ = std::max(1, N_max);
  const std::size_t cols = static_cast<std::size_t>(N_max + 2);
  const std::size_t rows = M + static_cast<std::size_t>(N_max) + 2;
  b.binom_.assign(rows * cols, 0);
  for (std::size_t n = 0; n < rows; ++n) {
    b.binom_[n * cols] = 1;
    for (std::size_t s = 1; s < cols && s <= n; ++s)
      b.binom_[n * cols + s] = b.binom_[(n - 1) * cols + s - 1] + (s <= n - 1 ? b.binom_[(n - 1) * cols + s] : 0);
  }

  b.counts_.reserve(total);
  b.mode_lists_.reserve(total * b.stride_);
  b.pf_.reserve(total);
  b.grade_offset_.assign(static_cast<std::size_t>(N_max) + 2, 0);

  std::vector<int> occ(M, 0);
  std::vector<std::uint16_t> list;
  auto emit = [&](int N) {
    list.clear();
    Lattice3 pf{0, 0, 0};
    for (std::size_t i = 0; i < M; ++i)
      for (int r = 0; r < occ[i]; ++r) {
        list.push_back(static_cast<std::uint16_t>(i));
        for (int a = 0; a < 3; ++a) pf[static_cast<std::size_t>(a)] += grid.lattice[i][static_cast<std::size_t>(a)];
      }
    b.counts_.push_back(static_cast<std::uint8_t>(N));
    list.resize(b.stride_, 0);
    b.mode_lists_.insert(b.mode_lists_.end(), list.begin(), list.end());
    b.pf_.push_back(pf);
  };
  // Ascending lexicographic order: position 0 varies slowest, smallest value first.
  auto generate = [&](auto&& self, std::size_t pos, int remaining, int N) -> void {
    if (pos + 1 == M) {
      occ[pos] = remaining;
      emit(N);
      occ[pos] = 0;
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      occ[pos] = v;
      self(self, pos + 1, remaining - v, N);
    }
    occ[pos] = 0;
  };
  for (int N = 0; N <= N_max; ++N) {
    b.grade_offset_[static_cast<std::size_t>(N)] = b.counts_.size();
    generate(generate, 0, N, N);
  }
  b.grade_offset_[static_cast<std::size_t>(N_max) + 1] = b.counts_.size();
  return b;
}

Vec3 FockBasis::field_momentum(std::size_t s) const {
  const auto& n = pf_[s];
  return {n[0] * grid_.dk, n[1] * grid_.dk, n[2] * grid_.dk};
}

OccupationState FockBasis::state(std::size_t s) const {
  OccupationState st;
  st.occupations.assign(M_, 0);
  for (auto m : mode_list(s)) ++st.occupations[m];
  st.N = counts_[s];
  st.Pf_lattice = pf_[s];
  st.Pf = field_momentum(s);
  return st;
}

std::vector<double> FockBasis::field_energies(const ModelSpec& model) const {
  std::vector<double> omega(M_);
  for (std::size_t i = 0; i < M_; ++i) omega[i] = eval_omega(model, grid_.modes[i]);
  std::vector<double> out(size());
  for (std::size_t s = 0; s < size(); ++s) {
    double e = 0.0;
    for (auto m : mode_list(s)) e += omega[m];
    out[s] = e;
  }
  return out;
}

std::size_t FockBasis::index_of_modes(std::span<const std::uint16_t> modes) const {
  const int N = static_cast<int>(modes.size());
  if (N > N_max_) return npos;
  std::uint64_t rank = grade_offset_[static_cast<std::size_t>(N)];
  int remaining = N;
  std::size_t j = 0;
  while (j < modes.size()) {
    const std::size_t i = modes[j];
    if (i >= M_) return npos;
    int n_i = 0;
    while (j < modes.size() && modes[j] == i) {
      ++n_i;
      ++j;
    }
    // States sharing the prefix but with fewer bosons in mode i come first.
    const std::size_t parts = M_ - i - 1;
    for (int v = 0; v < n_i; ++v) rank += weak_compositions(remaining - v, parts);
    remaining -= n_i;
  }
  return static_cast<std::size_t>(rank);
}

std::size_t FockBasis::index_of(std::span<const int> occupations) const {
  if (occupations.size() != M_) return npos;
  std::vector<std::uint16_t> modes;
  for (std::size_t i = 0; i < M_; ++i) {
    if (occupations[i] < 0) return npos;
    for (int r = 0; r < occupations[i]; ++r) modes.push_back(static_cast<std::uint16_t>(i));
    if (static_cast<int>(modes.size()) > N_max_) return npos;
  }
  return index_of_modes(modes);
}

void SparseOperator::multiply(std::span<const double> x, std::span<double> y, unsigned threads) const {
  auto rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double acc = 0.0;
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += val[p] * x[col[p]];
      y[i] = acc;
    }
  };
  if (threads <= 1 || dim < 20000) {
    rows(0, dim);
    return;
  }
  parallel_for(dim, threads, rows);
}

double SparseOperator::entry(std::size_t i, std::size_t j) const {
  const auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return val[static_cast<std::size_t>(it - col.begin())];
}

std::vector<double> SparseOperator::diagonal() const {
  std::vector<double> d(dim);
  for (std::size_t i = 0; i < dim; ++i) d[i] = entry(i, i);
  return d;
}

bool SparseOperator::is_exactly_symmetric() const {
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      if (col[p] != i && entry(col[p], i) != val[p]) return false;
  return true;
}

bool SparseOperator::all_finite() const {
  return std::all_of(val.begin(), val.end(), [](double v) { return std::isfinite(v); });
}

std::size_t SparseOperator::offdiagonal_pairs() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      if (col[p] > i) ++count;
  return count;
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[p])) = val[p];
  return a;
}

void SparseOperator::dump(std::ostream& out) const {
  char buf[64];
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      std::snprintf(buf, sizeof buf, "%.17g", val[p]);
      out << i << ' ' << col[p] << ' ' << buf << '\n';
    }
}

std::vector<double> mode_couplings(const ModelSpec& model) {
  const double scale = std::sqrt(model.alpha) * std::sqrt(model.grid.cell_volume());
  std::vector<double> c(model.grid.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = scale * eval_g(model, model.grid.modes[i]);
  return c;
}

namespace {

SparseOperator diagonal_operator(const std::vector<double>& d) {
  SparseOperator op;
  op.dim = d.size();
  op.row_ptr.resize(d.size() + 1);
  op.col.resize(d.size());
  op.val = d;
  for (std::size_t i = 0; i < d.size(); ++i) {
    op.row_ptr[i] = i;
    op.col[i] = static_cast<std::uint32_t>(i);
  }
  op.row_ptr[d.size()] = d.size();
  return op;
}

}  // namespace

SparseOperator assemble_fiber_hamiltonian(const ModelSpec& model, const Vec3& P, const FockBasis& basis,
                                          unsigned threads) {
  if (!model.grid.same_grid(basis.grid()) || model.grid.size() != basis.modes())
    throw ModelError("basis was built over a different grid than the model");
  if (basis.size() > std::numeric_limits<std::uint32_t>::max()) throw ModelError("basis too large for 32-bit columns");
  const std::size_t dim = basis.size();
  const auto coupling = mode_couplings(model);
  const auto energies = basis.field_energies(model);
  const double dk = model.grid.dk;
  const int N_max = basis.N_max();
  const std::size_t M = basis.modes();

  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(dim);
  auto build = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint16_t> work;
    for (std::size_t s = begin; s < end; ++s) {
      auto& row = rows[s];
      const auto modes = basis.mode_list(s);
      const auto& pf = basis.lattice_momentum(s);
      double kin = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double q = P[a] - pf[a] * dk;
        kin += q * q;
      }
      row.emplace_back(static_cast<std::uint32_t>(s), 0.5 * kin + energies[s]);
      // Annihilation side: remove one boson from each distinct occupied mode.
      for (std::size_t j = 0; j < modes.size();) {
        const std::uint16_t m = modes[j];
        std::size_t k = j;
        while (k < modes.size() && modes[k] == m) ++k;
        const int n = static_cast<int>(k - j);
        if (coupling[m] != 0.0) {
          work.assign(modes.begin(), modes.end());
          work.erase(work.begin() + static_cast<std::ptrdiff_t>(j));
          const std::size_t t = basis.index_of_modes(work);
          row.emplace_back(static_cast<std::uint32_t>(t), coupling[m] * std::sqrt(static_cast<double>(n)));
        }
        j = k;
      }
      // Creation side.
      if (static_cast<int>(modes.size()) < N_max) {
        for (std::size_t m = 0; m < M; ++m) {
          if (coupling[m] == 0.0) continue;
          work.assign(modes.begin(), modes.end());
          const auto pos = std::upper_bound(work.begin(), work.end(), static_cast<std::uint16_t>(m));
          const auto lo = std::lower_bound(work.begin(), work.end(), static_cast<std::uint16_t>(m));
          const int n = static_cast<int>(pos - lo);
          work.insert(pos, static_cast<std::uint16_t>(m));
          const std::size_t t = basis.index_of_modes(work);
          row.emplace_back(static_cast<std::uint32_t>(t), coupling[m] * std::sqrt(static_cast<double>(n + 1)));
        }
      }
      std::sort(row.begin(), row.end());
    }
  };
  parallel_for(dim, threads, build);

  SparseOperator op;
  op.dim = dim;
  op.row_ptr.assign(dim + 1, 0);
  for (std::size_t s = 0; s < dim; ++s) op.row_ptr[s + 1] = op.row_ptr[s] + rows[s].size();
  op.col.reserve(op.row_ptr[dim]);
  op.val.reserve(op.row_ptr[dim]);
  for (auto& row : rows) {
    for (const auto& [c, v] : row) {
      op.col.push_back(c);
      op.val.push_back(v);
    }
    std::vector<std::pair<std::uint32_t, double>>().swap(row);
  }
  if (!op.all_finite()) throw ModelError("non-finite matrix element in fiber Hamiltonian");
  return op;
}

SparseOperator assemble_number_operator(const FockBasis& basis) {
  std::vector<double> d(basis.size());
  for (std::size_t s = 0; s < d.size(); ++s) d[s] = basis.number(s);
  return diagonal_operator(d);
}

SparseOperator assemble_Pf_component(const FockBasis& basis, int axis) {
  if (axis < 0 || axis > 2) throw ModelError("axis must be 0, 1 or 2");
  std::vector<double> d(basis.size());
  for (std::size_t s = 0; s < d.size(); ++s) d[s] = basis.field_momentum(s)[static_cast<std::size_t>(axis)];
  return diagonal_operator(d);
}

}  // namespace polaron
