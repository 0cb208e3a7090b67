#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cocyclelab/cocycle.hpp"
#include "cocyclelab/rng.hpp"

using namespace cocyclelab;

namespace {

Matrix random_matrix(SplitMix64& rng, int d, double scale = 1.0) {
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return m;
}

CocycleMap random_trig_cocycle(const BaseSystem& base, std::uint64_t seed, int d) {
  SplitMix64 rng(seed);
  Matrix constant = random_matrix(rng, d) + 2.0 * Matrix::Identity(d, d);
  std::vector<TrigTerm> terms;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      TrigTerm t;
      t.row = i;
      t.col = j;
      t.coef = 0.5 * rng.normal();
      t.freq = {1.0 + static_cast<double>(rng.next() % 3)};
      t.phase = rng.uniform(0.0, 6.28);
      t.use_sin = (rng.next() & 1) != 0;
      terms.push_back(t);
    }
  return trig_poly_cocycle(base, d, constant, terms, "random_trig");
}

}  // namespace

TEST_CASE("product: identity at n = 0 and diagonal powers", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = diagonal_cocycle(rot, {2.0, 1.0});
  const BasePoint x = rot.sample_point(1, 0);
  CHECK((product(a, x, 0) - Matrix::Identity(2, 2)).norm() == 0.0);
  const Matrix p5 = product(a, x, 5);
  CHECK(p5(0, 0) == 32.0);
  CHECK(p5(1, 1) == 1.0);
  CHECK(p5(0, 1) == 0.0);
  CHECK_THROWS_AS(product(a, x, -1), std::invalid_argument);
}

TEST_CASE("product over a shift equals the explicit triple multiply", "[cocycle]") {
  const BaseSystem shift = BaseSystem::bernoulli_shift(2, {0.4, 0.6}, 8);
  SplitMix64 rng(17);
  std::vector<Matrix> table;
  for (int c = 0; c < 2; ++c) table.push_back(random_matrix(rng, 3));
  const CocycleMap a = locally_constant_cocycle(shift, 0, table);
  const BasePoint x = shift.sample_point(9, 2);
  const auto& sp = std::get<ShiftPoint>(x);
  const Matrix direct = table[sp.symbol_at(2)] * table[sp.symbol_at(1)] * table[sp.symbol_at(0)];
  CHECK((product(a, x, 3) - direct).norm() < 1e-12 * direct.norm());
}

TEST_CASE("cocycle identity residual", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap diag = diagonal_cocycle(rot, {2.0, 0.5});
  const BasePoint x = rot.sample_point(3, 1);
  CHECK(cocycle_identity_check(diag, x, 2, 2) == 0.0);
  CHECK(cocycle_identity_check(diag, x, 0, 5) == 0.0);

  const CocycleMap a = random_trig_cocycle(rot, 21, 3);
  const double scale = std::pow(a.sup_norm(), 7);
  CHECK(cocycle_identity_check(a, x, 3, 4) < 1e-9 * scale);
  for (int m = 0; m <= 6; m += 3)
    for (int n = 0; n + m <= 20; n += 7)
      CHECK(cocycle_identity_check(a, x, m, n) < 1e-9 * std::pow(a.sup_norm(), m + n));
}

TEST_CASE("adjoint of a constant cocycle is the transpose", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  Matrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const CocycleMap a = constant_cocycle(rot, m);
  const CocycleMap astar = adjoint(a);
  const BasePoint x = rot.sample_point(4, 0);
  CHECK((astar(x) - m.transpose()).norm() == 0.0);
  CHECK(astar.orientation() == -1);
}

TEST_CASE("adjoint duality pairing and involution", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = random_trig_cocycle(rot, 5, 3);
  const CocycleMap astar = adjoint(a);
  SplitMix64 rng(88);
  for (int trial = 0; trial < 10; ++trial) {
    const BasePoint x = rot.sample_point(100, static_cast<std::uint64_t>(trial));
    Vector u(3), v(3);
    for (int i = 0; i < 3; ++i) {
      u[i] = rng.normal();
      v[i] = rng.normal();
    }
    const BasePoint pre = rot.iterate(x, -1);
    const double lhs = (a(pre) * u).dot(v);
    const double rhs = u.dot(astar(x) * v);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));

    const CocycleMap astarstar = adjoint(astar);
    CHECK(astarstar.orientation() == +1);
    CHECK((astarstar(x) - a(x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adjoint steps the inverse base", "[cocycle]") {
  const BaseSystem cat = BaseSystem::toral_automorphism(2, 1, 1, 1);
  const CocycleMap a = constant_cocycle(cat, Matrix::Identity(2, 2));
  const CocycleMap astar = adjoint(a);
  const BasePoint x = cat.sample_point(6, 0);
  const auto fwd = std::get<TorusPoint>(a.step(x));
  const auto bwd = std::get<TorusPoint>(astar.step(x));
  const auto undo = std::get<TorusPoint>(cat.iterate(BasePoint{TorusPoint{bwd.u, bwd.v}}, 1));
  CHECK(undo.u == std::get<TorusPoint>(x).u);
  CHECK(undo.v == std::get<TorusPoint>(x).v);
  CHECK(fwd.u != bwd.u);
}

TEST_CASE("exterior lift of a constant diagonal", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = diagonal_cocycle(rot, {2.0, 1.0, 0.5});
  const CocycleMap lift = exterior_lift(a, 2);
  REQUIRE(lift.dim() == 3);
  const BasePoint x = rot.sample_point(2, 0);
  const Matrix w = lift(x);
  CHECK(w(0, 0) == Catch::Approx(2.0));   // e1^e2
  CHECK(w(1, 1) == Catch::Approx(1.0));   // e1^e3
  CHECK(w(2, 2) == Catch::Approx(0.5));   // e2^e3
  CHECK_THROWS_AS(exterior_lift(a, 4), std::invalid_argument);
}

TEST_CASE("top exterior lift is the determinant", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = random_trig_cocycle(rot, 13, 3);
  const CocycleMap top = exterior_lift(a, 3);
  REQUIRE(top.dim() == 1);
  for (int i = 0; i < 5; ++i) {
    const BasePoint x = rot.sample_point(50, static_cast<std::uint64_t>(i));
    CHECK(top(x)(0, 0) == Catch::Approx(a(x).determinant()).epsilon(1e-10));
  }
}

TEST_CASE("exterior lift functoriality along orbits", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = random_trig_cocycle(rot, 71, 3);
  const CocycleMap lift = exterior_lift(a, 2);
  for (int i = 0; i < 5; ++i) {
    const BasePoint x = rot.sample_point(61, static_cast<std::uint64_t>(i));
    const Matrix lhs = exterior_power(product(a, x, 2), 2);
    const Matrix rhs = product(lift, x, 2);
    CHECK((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("perturbation family", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = diagonal_cocycle(rot, {2.0, 1.0});
  std::vector<TrigTerm> terms;
  terms.push_back({0, 1, 1.0, {1.0}, 0.0, false});
  terms.push_back({1, 0, 1.0, {1.0}, 0.0, true});
  const CocycleMap b = trig_poly_cocycle(rot, 2, Matrix::Zero(2, 2), terms, "B");

  const CocycleFamily zero = perturbation_family(a, b, {0.0, 0.0});
  const BasePoint x = rot.sample_point(10, 0);
  CHECK((zero.members[0](x) - a(x)).norm() == 0.0);

  const CocycleFamily f1 = perturbation_family(a, b, {1.0, 0.5, 0.25});
  const CocycleFamily f2 = perturbation_family(a, b, {0.5, 0.25, 0.125});
  for (int k = 0; k < 3; ++k)
    CHECK(f2.gauges[static_cast<std::size_t>(k)] ==
          Catch::Approx(0.5 * f1.gauges[static_cast<std::size_t>(k)]));

  // member evaluation matches the hand formula A + eps*B at x
  const double eps = 0.1;
  const CocycleFamily f3 = perturbation_family(a, b, {eps});
  const double xc = unit_coord(std::get<CirclePoint>(x).u);
  Matrix want(2, 2);
  want << 2.0, eps * std::cos(6.283185307179586476925286766559 * xc),
      eps * std::sin(6.283185307179586476925286766559 * xc), 1.0;
  CHECK((f3.members[0](x) - want).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(perturbation_family(a, b, {0.25, 0.5}), std::invalid_argument);
  const CocycleMap c3 = diagonal_cocycle(rot, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(perturbation_family(a, c3, {0.5}), std::invalid_argument);
}

TEST_CASE("remark family reproduces the 6x6 block layout", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const double a = 0.5, l1 = 1.0, l2 = -1.0;
  std::vector<double> seq = {0.25, 0.375, 0.4375};
  std::vector<CocycleMap> base_members;
  std::vector<double> base_gauges;
  for (double l1k : seq) {
    base_members.push_back(diagonal_cocycle(rot, {std::exp(l1k), std::exp(-l1k)}));
    base_gauges.push_back(std::exp(a) - std::exp(l1k));
  }
  const CocycleMap base_limit = diagonal_cocycle(rot, {std::exp(a), std::exp(-a)});
  const CocycleFamily base(std::move(base_members), base_limit, std::move(base_gauges));
  const CocycleFamily fam = remark_family(seq, a, l1, l2, base);

  const BasePoint x = rot.sample_point(0, 0);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const Matrix m = fam.members[k](x);
    REQUIRE(m.rows() == 6);
    CHECK(m(2, 2) == Catch::Approx(std::exp(seq[k])));
    CHECK(m(3, 3) == Catch::Approx(std::exp(-seq[k])));
    CHECK(m(4, 4) == Catch::Approx(std::exp(l1)));
    CHECK(m(5, 5) == Catch::Approx(std::exp(l2)));
    CHECK(m.topLeftCorner(2, 2).diagonal()[0] == Catch::Approx(std::exp(seq[k])));
    CHECK(m.topRightCorner(2, 4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.bottomLeftCorner(4, 2).cwiseAbs().maxCoeff() == 0.0);
  }
  const Matrix lim = fam.limit(x);
  CHECK(lim(2, 2) == Catch::Approx(std::exp(a)));
  CHECK(lim(3, 3) == Catch::Approx(std::exp(-a)));
  CHECK(lim(4, 4) == Catch::Approx(std::exp(l1)));
  CHECK(lim(5, 5) == Catch::Approx(std::exp(l2)));

  // gauges shrink as lambda1(A_k) -> a from below
  for (std::size_t k = 1; k < fam.gauges.size(); ++k)
    CHECK(fam.gauges[k] <= fam.gauges[k - 1]);

  CHECK_THROWS_AS(remark_family(seq, 1.5, l1, l2, base), std::invalid_argument);
}

TEST_CASE("sup norm estimate dominates sampled norms", "[cocycle]") {
  const BaseSystem rot = BaseSystem::golden_rotation();
  const CocycleMap a = random_trig_cocycle(rot, 3, 2);
  const double sup = a.sup_norm();
  for (int i = 0; i < 100; ++i) {
    const BasePoint x = rot.sample_point(777, static_cast<std::uint64_t>(i));
    Eigen::JacobiSVD<Matrix> svd(a(x));
    CHECK(svd.singularValues()[0] <= sup);
  }
}
