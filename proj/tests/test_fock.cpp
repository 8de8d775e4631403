#include "doctest.h"

#include <cmath>
#include <sstream>

#include "polaron/fock.hpp"
#include "polaron/rng.hpp"

using namespace polaron;

namespace {

KGridSpec grid_with_modes(std::size_t M) {
  // d = 1 grids have an even number of modes; M = 1 needs a custom list.
  if (M == 1) {
    KGridSpec g = KGridSpec::build(1, 1.0, 1.0);
    g.lattice = {{1, 0, 0}};
    g.modes = {{1.0, 0, 0}};
    return g;
  }
  return KGridSpec::build(1, 1.0, static_cast<double>(M / 2));
}

ModelSpec small_model(double alpha, int d = 1, double kmax = 1.5) {
  return ModelSpec::make(d, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(0.8, 1.2), alpha, 0.5, kmax);
}

}  // namespace

TEST_CASE("basis sizes") {
  CHECK(FockBasis::enumerate(grid_with_modes(1), 3).size() == 4);
  auto three = KGridSpec::build(1, 1.0, 1.0);
  three.lattice = {{-1, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  three.modes = {{-1, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(FockBasis::enumerate(three, 2).size() == 10);
  CHECK(FockBasis::enumerate(grid_with_modes(6), 4).size() == 210);
  CHECK(FockBasis::count_states(56, 2) == 1653);
  CHECK_THROWS_AS(FockBasis::enumerate(grid_with_modes(40), 8), ModelError);
}

TEST_CASE("single-mode ladder order") {
  auto b = FockBasis::enumerate(grid_with_modes(1), 3);
  for (std::size_t s = 0; s < 4; ++s) CHECK(b.state(s).occupations[0] == static_cast<int>(s));
}

TEST_CASE("ordering is graded lexicographic and index lookup is exact") {
  auto b = FockBasis::enumerate(grid_with_modes(6), 4);
  CHECK(b.number(0) == 0);
  for (std::size_t s = 0; s < b.size(); ++s) {
    const auto st = b.state(s);
    CHECK(b.index_of(st.occupations) == s);
    if (s > 0) {
      const auto prev = b.state(s - 1);
      const bool ordered = prev.N < st.N || (prev.N == st.N && prev.occupations < st.occupations);
      CHECK(ordered);
    }
    // Cached momentum equals recomputation.
    Lattice3 pf{0, 0, 0};
    for (std::size_t i = 0; i < b.modes(); ++i)
      for (int a = 0; a < 3; ++a) pf[a] += st.occupations[i] * b.grid().lattice[i][a];
    CHECK(pf == st.Pf_lattice);
  }
  std::vector<int> too_many(6, 0);
  too_many[2] = 5;
  CHECK(b.index_of(too_many) == FockBasis::npos);
}

TEST_CASE("alpha = 0 operator is diagonal with vacuum entry P^2/2") {
  auto m = small_model(0.0, 2, 1.0);
  auto b = FockBasis::enumerate(m.grid, 2);
  const Vec3 P{0.3, -0.2, 0};
  auto H = assemble_fiber_hamiltonian(m, P, b);
  CHECK(H.nnz() == b.size());
  CHECK(H.entry(0, 0) == doctest::Approx(0.5 * norm2(P)).epsilon(1e-15));
}

TEST_CASE("single-mode two-state matrix") {
  auto grid = grid_with_modes(1);
  ModelSpec m;
  m.d = 1;
  m.dispersion = DispersionSpec::constant(1.3);
  m.form_factor = FormFactorSpec::gaussian(0.7, 1.0);
  m.alpha = 0.4;
  m.grid = grid;
  auto b = FockBasis::enumerate(grid, 1);
  const Vec3 P{0.25, 0, 0};
  auto H = assemble_fiber_hamiltonian(m, P, b);
  const double c = std::sqrt(0.4) * std::sqrt(1.0) * 0.7 * std::exp(-0.5);
  CHECK(H.entry(0, 0) == doctest::Approx(0.5 * 0.25 * 0.25).epsilon(1e-15));
  CHECK(H.entry(1, 1) == doctest::Approx(0.5 * 0.75 * 0.75 + 1.3).epsilon(1e-15));
  CHECK(H.entry(0, 1) == doctest::Approx(c).epsilon(1e-15));
  CHECK(H.entry(1, 0) == H.entry(0, 1));
}

TEST_CASE("hamiltonian is exactly symmetric, sparse and thread independent") {
  Philox4x32 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = small_model(0.1 + rng.uniform(), 1 + trial % 3, 1.0);
    auto b = FockBasis::enumerate(m.grid, 1 + trial % 3);
    const Vec3 P{rng.normal(), rng.normal(), rng.normal()};
    auto H1 = assemble_fiber_hamiltonian(m, P, b, 1);
    auto H4 = assemble_fiber_hamiltonian(m, P, b, 4);
    CHECK(H1.is_exactly_symmetric());
    CHECK(H1.all_finite());
    CHECK(H1.offdiagonal_pairs() <= b.size() * b.modes());
    CHECK(H1.val == H4.val);
    CHECK(H1.col == H4.col);
  }
}

TEST_CASE("gauge identity H(P) - H(0) = -P.Pf + P^2/2") {
  auto m = small_model(0.5, 3, 1.0);
  auto b = FockBasis::enumerate(m.grid, 2);
  const Vec3 P{0.31, -0.7, 0.2};
  auto HP = assemble_fiber_hamiltonian(m, P, b);
  auto H0 = assemble_fiber_hamiltonian(m, {0, 0, 0}, b);
  std::vector<SparseOperator> pf;
  for (int a = 0; a < 3; ++a) pf.push_back(assemble_Pf_component(b, a));
  REQUIRE(HP.col == H0.col);
  for (std::size_t i = 0; i < HP.dim; ++i)
    for (std::size_t p = HP.row_ptr[i]; p < HP.row_ptr[i + 1]; ++p) {
      double expected = 0.0;
      if (HP.col[p] == i) {
        expected = 0.5 * norm2(P);
        for (int a = 0; a < 3; ++a) expected -= P[a] * pf[a].entry(i, i);
      }
      CHECK(HP.val[p] - H0.val[p] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("number and momentum operators") {
  auto b = FockBasis::enumerate(grid_with_modes(1), 3);
  auto N = assemble_number_operator(b);
  double trace = 0.0;
  for (double v : N.diagonal()) trace += v;
  CHECK(trace == 6.0);
  CHECK(N.entry(0, 0) == 0.0);
  auto m = small_model(0.1, 3, 1.0);
  auto b3 = FockBasis::enumerate(m.grid, 1);
  for (int axis = 0; axis < 3; ++axis) {
    auto Pf = assemble_Pf_component(b3, axis);
    for (std::size_t i = 0; i < b3.modes(); ++i) {
      std::vector<int> occ(b3.modes(), 0);
      occ[i] = 1;
      CHECK(Pf.entry(b3.index_of(occ), b3.index_of(occ)) == m.grid.modes[i][axis]);
    }
  }
}

TEST_CASE("operator dump format") {
  auto b = FockBasis::enumerate(grid_with_modes(1), 1);
  ModelSpec m;
  m.d = 1;
  m.dispersion = DispersionSpec::constant(1.0);
  m.form_factor = FormFactorSpec::gaussian(1.0, 1.0);
  m.alpha = 1.0;
  m.grid = b.grid();
  auto H = assemble_fiber_hamiltonian(m, {0, 0, 0}, b);
  std::ostringstream out;
  H.dump(out);
  std::istringstream in(out.str());
  std::size_t r, c;
  double v;
  std::size_t lines = 0;
  while (in >> r >> c >> v) {
    CHECK(v == H.entry(r, c));
    ++lines;
  }
  CHECK(lines == H.nnz());
}
