#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocyclelab/dynamics.hpp"
#include "cocyclelab/linalg.hpp"

namespace cocyclelab {

/// A continuous (or locally constant) matrix-valued map over a base system,
/// together with the time direction it iterates in: orientation +1 walks the
/// orbit of f, -1 the orbit of f^{-1} (used by adjoint cocycles).
/// Generators are closed-form evaluable; evaluation is pure and reentrant.
class CocycleMap {
 public:
  using Generator = std::function<Matrix(const BasePoint&)>;

  CocycleMap(BaseSystem base, int dim, Generator gen, std::string name = {})
      : base_(std::move(base)),
        dim_(dim),
        orient_(+1),
        gen_(std::move(gen)),
        name_(std::move(name)),
        norm_cache_(std::make_shared<NormCache>()) {
    if (dim_ < 1) throw std::invalid_argument("CocycleMap: dimension must be positive");
  }

  int dim() const { return dim_; }
  const BaseSystem& base() const { return base_; }
  int orientation() const { return orient_; }
  const std::string& name() const { return name_; }

  Matrix operator()(const BasePoint& x) const { return gen_(x); }

  /// One step of the underlying dynamics in this cocycle's time direction.
  BasePoint step(const BasePoint& x, long long n = 1) const {
    return base_.iterate(x, static_cast<long long>(orient_) * n);
  }

  /// Estimated uniform norm sup_x |A(x)| (spectral norm): max over a
  /// 10^4-point sample plus a 5% safety factor. Cached; shared by copies.
  /// Diagnostic only, never used inside the estimators.
  double sup_norm() const {
    std::call_once(norm_cache_->once, [this] {
      double m = 0.0;
      const int count = 10000;
      for (int i = 0; i < count; ++i) {
        const BasePoint x = base_.sample_point(0x5eed0fULL, static_cast<std::uint64_t>(i));
        const Matrix a = gen_(x);
        if (!a.allFinite())
          throw std::domain_error("CocycleMap: generator produced non-finite entries");
        Eigen::JacobiSVD<Matrix> svd(a);
        m = std::max(m, svd.singularValues()[0]);
      }
      norm_cache_->value = 1.05 * m;
    });
    return norm_cache_->value;
  }

  CocycleMap with_orientation(int orient) const {
    if (orient != 1 && orient != -1)
      throw std::invalid_argument("CocycleMap: orientation must be +1 or -1");
    CocycleMap c = *this;
    c.orient_ = orient;
    c.norm_cache_ = norm_cache_;  // same generator, same norm
    return c;
  }

 private:
  struct NormCache {
    std::once_flag once;
    double value = 0.0;
  };

  BaseSystem base_;
  int dim_;
  int orient_;
  Generator gen_;
  std::string name_;
  std::shared_ptr<NormCache> norm_cache_;
};

/// A^n(x) = A(f^{n-1}x) ... A(fx) A(x); the identity for n = 0.
/// Plain matrix product, intended for short horizons (long products overflow;
/// the spectrum module keeps those in log-scaled form).
inline Matrix product(const CocycleMap& a, const BasePoint& x, long long n) {
  if (n < 0) throw std::invalid_argument("product: n must be non-negative");
  Matrix m = Matrix::Identity(a.dim(), a.dim());
  BasePoint y = x;
  for (long long t = 0; t < n; ++t) {
    m = a(y) * m;
    y = a.step(y);
  }
  return m;
}

/// Residual |A^{m+n}(x) - A^m(f^n x) A^n(x)| in Frobenius norm.
inline double cocycle_identity_check(const CocycleMap& a, const BasePoint& x, long long m,
                                     long long n) {
  if (m < 0 || n < 0) throw std::invalid_argument("cocycle_identity_check: negative time");
  const Matrix lhs = product(a, x, m + n);
  const Matrix rhs = product(a, a.step(x, n), m) * product(a, x, n);
  return (lhs - rhs).norm();
}

/// Adjoint cocycle: generator x -> A(f^{-1}x)^T over the inverse base map.
/// With the Euclidean inner product fixed once, the adjoint is the plain
/// transpose. Satisfies <A(f^{-1}x)u, v> = <u, A*(x)v> and (A*)* = A.
inline CocycleMap adjoint(const CocycleMap& a) {
  const int back = -a.orientation();
  const BaseSystem base = a.base();
  auto gen = [a, base, back](const BasePoint& x) -> Matrix {
    return a(base.iterate(x, back)).transpose();
  };
  return CocycleMap(base, a.dim(), std::move(gen), a.name() + "_adj").with_orientation(back);
}

/// Inverse cocycle x -> A(f^{-1}x)^{-1} over the inverse base map. Only
/// meaningful for invertible generators; used as an independent route to
/// slow subspaces on invertible fixtures.
inline CocycleMap inverse_cocycle(const CocycleMap& a) {
  const int back = -a.orientation();
  const BaseSystem base = a.base();
  auto gen = [a, base, back](const BasePoint& x) -> Matrix {
    const Matrix m = a(base.iterate(x, back));
    return m.partialPivLu().inverse();
  };
  return CocycleMap(base, a.dim(), std::move(gen), a.name() + "_inv").with_orientation(back);
}

/// Lift to the j-th exterior power: generator x -> Lambda^j A(x), acting on
/// dimension C(d, j). Products of the lift equal lifts of the product.
inline CocycleMap exterior_lift(const CocycleMap& a, int j) {
  if (j < 1 || j > a.dim()) throw std::invalid_argument("exterior_lift: order out of range");
  auto gen = [a, j](const BasePoint& x) -> Matrix { return exterior_power(a(x), j); };
  const int lifted = static_cast<int>(binomial(a.dim(), j));
  return CocycleMap(a.base(), lifted, std::move(gen), a.name() + "_wedge" + std::to_string(j))
      .with_orientation(a.orientation());
}

/// A sequence A_k -> A with a convergence gauge |A_k - A|_inf per member.
struct CocycleFamily {
  std::vector<CocycleMap> members;
  CocycleMap limit;
  std::vector<double> gauges;

  CocycleFamily(std::vector<CocycleMap> members_, CocycleMap limit_, std::vector<double> gauges_)
      : members(std::move(members_)), limit(std::move(limit_)), gauges(std::move(gauges_)) {
    if (members.size() != gauges.size())
      throw std::invalid_argument("CocycleFamily: one gauge per member required");
    for (std::size_t k = 1; k < gauges.size(); ++k)
      if (gauges[k] > gauges[k - 1] + 1e-15)
        throw std::invalid_argument("CocycleFamily: convergence gauge must be non-increasing");
  }
};

/// Members A + eps_k B for a non-increasing schedule eps_k -> 0.
inline CocycleFamily perturbation_family(const CocycleMap& a, const CocycleMap& b,
                                         const std::vector<double>& epsilons) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("perturbation_family: dimension mismatch");
  if (!(a.base() == b.base()))
    throw std::invalid_argument("perturbation_family: base system mismatch");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (epsilons[k] < 0.0)
      throw std::invalid_argument("perturbation_family: negative epsilon");
    if (k > 0 && epsilons[k] > epsilons[k - 1])
      throw std::invalid_argument("perturbation_family: schedule must be non-increasing");
  }
  const double bnorm = b.sup_norm();
  std::vector<CocycleMap> members;
  std::vector<double> gauges;
  members.reserve(epsilons.size());
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    const double eps = epsilons[k];
    auto gen = [a, b, eps](const BasePoint& x) -> Matrix { return a(x) + eps * b(x); };
    members.emplace_back(a.base(), a.dim(), std::move(gen),
                         a.name() + "+eps" + std::to_string(k) + "*" + b.name());
    gauges.push_back(eps * bnorm);
  }
  return CocycleFamily(std::move(members), a, std::move(gauges));
}

namespace detail {

inline Matrix remark_block(const Matrix& two_by_two, double l1, double l2, double l1_lim,
                           double l2_lim) {
  Matrix m = Matrix::Zero(6, 6);
  m.topLeftCorner(2, 2) = two_by_two;
  m(2, 2) = std::exp(l1);
  m(3, 3) = std::exp(l2);
  m(4, 4) = std::exp(l1_lim);
  m(5, 5) = std::exp(l2_lim);
  return m;
}

}  // namespace detail

/// The 6x6 counterexample template: member k is the block matrix with the
/// 2x2 block A_k followed by diag(e^{l1(A_k)}, e^{l2(A_k)}, e^{l1(A)},
/// e^{l2(A)}); the limit carries the block A and diag(e^a, e^{-a},
/// e^{l1(A)}, e^{l2(A)}). The 2x2 blocks follow the SL(2) convention
/// l2(A_k) = -l1(A_k). The exponent data l1(A_k) -> a < l1(A) is taken as
/// input; no discontinuity point is constructed.
inline CocycleFamily remark_family(const std::vector<double>& lambda1_seq, double a,
                                   double lambda1_limit, double lambda2_limit,
                                   const CocycleFamily& base_2x2) {
  if (!(a < lambda1_limit))
    throw std::invalid_argument("remark_family: requires a < lambda1(A), the strict drop");
  if (base_2x2.members.size() != lambda1_seq.size())
    throw std::invalid_argument("remark_family: one 2x2 member per lambda1 entry required");
  if (base_2x2.limit.dim() != 2)
    throw std::invalid_argument("remark_family: base cocycles must be 2x2");

  std::vector<CocycleMap> members;
  std::vector<double> gauges;
  members.reserve(lambda1_seq.size());
  for (std::size_t k = 0; k < lambda1_seq.size(); ++k) {
    const double l1 = lambda1_seq[k];
    const CocycleMap ak = base_2x2.members[k];
    auto gen = [ak, l1, lambda1_limit, lambda2_limit](const BasePoint& x) -> Matrix {
      return detail::remark_block(ak(x), l1, -l1, lambda1_limit, lambda2_limit);
    };
    members.emplace_back(ak.base(), 6, std::move(gen), "remark_k" + std::to_string(k));
    const double diag_gap =
        std::max(std::abs(std::exp(l1) - std::exp(a)), std::abs(std::exp(-l1) - std::exp(-a)));
    gauges.push_back(std::max(base_2x2.gauges[k], diag_gap));
  }
  const CocycleMap alim = base_2x2.limit;
  auto lim_gen = [alim, a, lambda1_limit, lambda2_limit](const BasePoint& x) -> Matrix {
    return detail::remark_block(alim(x), a, -a, lambda1_limit, lambda2_limit);
  };
  CocycleMap limit(alim.base(), 6, std::move(lim_gen), "remark_limit");
  return CocycleFamily(std::move(members), std::move(limit), std::move(gauges));
}

// ---------------------------------------------------------------------------
// Built-in generators
// ---------------------------------------------------------------------------

inline CocycleMap constant_cocycle(const BaseSystem& base, const Matrix& m,
                                   std::string name = "constant") {
  if (m.rows() != m.cols()) throw std::invalid_argument("constant_cocycle: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("constant_cocycle: non-finite entries");
  const int d = static_cast<int>(m.rows());
  return CocycleMap(base, d, [m](const BasePoint&) { return m; }, std::move(name));
}

inline CocycleMap diagonal_cocycle(const BaseSystem& base, const std::vector<double>& entries,
                                   std::string name = "diagonal") {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(entries.size()),
                          static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i)
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entries[i];
  return constant_cocycle(base, m, std::move(name));
}

/// One trigonometric term: adds coef * cos(2*pi*<freq, coords> + phase)
/// (or sin) to entry (row, col).
struct TrigTerm {
  int row = 0;
  int col = 0;
  double coef = 0.0;
  std::vector<double> freq;
  double phase = 0.0;
  bool use_sin = false;
};

/// Generator with trigonometric-polynomial entries over the circle or torus.
inline CocycleMap trig_poly_cocycle(const BaseSystem& base, int dim, const Matrix& constant_part,
                                    std::vector<TrigTerm> terms, std::string name = "trig_poly") {
  if (base.is_shift())
    throw std::invalid_argument("trig_poly_cocycle: needs continuous coordinates (circle/torus)");
  if (constant_part.rows() != dim || constant_part.cols() != dim)
    throw std::invalid_argument("trig_poly_cocycle: constant part dimension mismatch");
  const std::size_t ncoords = base.is_rotation() ? 1 : 2;
  for (const auto& t : terms) {
    if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim)
      throw std::invalid_argument("trig_poly_cocycle: term index out of range");
    if (t.freq.size() != ncoords)
      throw std::invalid_argument("trig_poly_cocycle: frequency arity mismatch");
  }
  const BaseSystem bs = base;
  auto gen = [bs, dim, constant_part, terms](const BasePoint& x) -> Matrix {
    const std::vector<double> c = bs.coords(x);
    Matrix m = constant_part;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (std::size_t i = 0; i < c.size(); ++i)
        arg += 6.283185307179586476925286766559 * t.freq[i] * c[i];
      m(t.row, t.col) += t.coef * (t.use_sin ? std::sin(arg) : std::cos(arg));
    }
    return m;
  };
  return CocycleMap(base, dim, std::move(gen), std::move(name));
}

/// Locally constant generator over a Bernoulli shift: the matrix depends on
/// the symbols at offsets -depend_radius..depend_radius, read as a base-
/// `alphabet` cylinder index (least offset = most significant digit).
inline CocycleMap locally_constant_cocycle(const BaseSystem& base, int depend_radius,
                                           const std::vector<Matrix>& table,
                                           std::string name = "locally_constant") {
  if (!base.is_shift())
    throw std::invalid_argument("locally_constant_cocycle: needs a bernoulli_shift base");
  if (depend_radius < 0) throw std::invalid_argument("locally_constant_cocycle: negative radius");
  const auto& sh = base.shift_desc();
  std::size_t cells = 1;
  for (int i = 0; i < 2 * depend_radius + 1; ++i) cells *= static_cast<std::size_t>(sh.alphabet);
  if (table.size() != cells)
    throw std::invalid_argument("locally_constant_cocycle: table must have alphabet^(2r+1) = " +
                                std::to_string(cells) + " entries");
  const int d = static_cast<int>(table.front().rows());
  for (const auto& m : table)
    if (m.rows() != d || m.cols() != d)
      throw std::invalid_argument("locally_constant_cocycle: inconsistent matrix sizes");
  const int alphabet = sh.alphabet;
  auto gen = [table, depend_radius, alphabet](const BasePoint& x) -> Matrix {
    const auto& p = std::get<ShiftPoint>(x);
    std::size_t idx = 0;
    for (int off = -depend_radius; off <= depend_radius; ++off)
      idx = idx * static_cast<std::size_t>(alphabet) + p.symbol_at(off);
    return table[idx];
  };
  return CocycleMap(base, d, std::move(gen), std::move(name));
}

}  // namespace cocyclelab
