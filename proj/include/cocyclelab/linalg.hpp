#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocyclelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kOrthoTol = 1e-12;
inline constexpr double kSignTol = 1e-12;

namespace detail {

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

inline double clamp_pm1(double x) { return std::min(1.0, std::max(-1.0, x)); }

}  // namespace detail

/// Binomial coefficient, exact for the small arguments used here.
inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// All k-element subsets of {0,...,n-1} in lexicographic order. This fixes
/// the wedge-basis layout used everywhere below.
inline std::vector<std::vector<int>> lex_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  std::vector<int> cur(k);
  for (int i = 0; i < k; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

/// A linear subspace of R^d held as a d x r matrix with orthonormal columns.
/// r = 0 is the zero subspace. Construction from an arbitrary spanning set
/// orthonormalizes (and rank-reveals) via column-pivoted QR; angle
/// computations then reduce to singular values of small cross-Gram matrices.
class Subspace {
 public:
  /// Orthonormalizes the columns of `spanning`; returns a basis of the
  /// column space. Rank decided at `rank_tol` relative to the largest pivot.
  explicit Subspace(const Matrix& spanning, double rank_tol = 1e-12) {
    if (spanning.rows() < 1) throw std::invalid_argument("Subspace: empty ambient space");
    if (spanning.cols() == 0) {
      basis_ = Matrix::Zero(spanning.rows(), 0);
      return;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(spanning);
    qr.setThreshold(rank_tol);
    const Eigen::Index r = qr.rank();
    basis_ = qr.householderQ() * Matrix::Identity(spanning.rows(), r);
  }

  /// Wraps a matrix that is already orthonormal; throws otherwise.
  static Subspace from_orthonormal(const Matrix& q) {
    if (q.cols() > 0) {
      const Matrix g = q.transpose() * q - Matrix::Identity(q.cols(), q.cols());
      if (g.cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("Subspace::from_orthonormal: columns not orthonormal");
    }
    Subspace s;
    s.basis_ = q;
    return s;
  }

  static Subspace zero(int ambient_dim) {
    Subspace s;
    s.basis_ = Matrix::Zero(ambient_dim, 0);
    return s;
  }

  static Subspace full(int ambient_dim) {
    Subspace s;
    s.basis_ = Matrix::Identity(ambient_dim, ambient_dim);
    return s;
  }

  static Subspace span_of(const Vector& v) { return Subspace(Matrix(v)); }

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  /// Orthogonal projection of w onto the subspace.
  Vector project(const Vector& w) const { return basis_ * (basis_.transpose() * w); }

  Subspace orthogonal_complement() const {
    const int d = ambient_dim();
    const int r = dim();
    if (r == 0) return full(d);
    if (r == d) return zero(d);
    Eigen::HouseholderQR<Matrix> qr(basis_);
    const Matrix q = qr.householderQ();
    Subspace s;
    s.basis_ = q.rightCols(d - r);
    return s;
  }

 private:
  Subspace() = default;
  Matrix basis_;
};

/// A point of real projective space (of the ambient or of a wedge space):
/// a unit vector with the first coordinate of magnitude > 1e-12 made
/// positive, so equal lines get identical representatives.
struct ProjectiveVector {
  Vector direction;

  static ProjectiveVector from(const Vector& v) {
    const double n = v.norm();
    if (!(n > 1e-300)) throw std::invalid_argument("ProjectiveVector: zero vector");
    ProjectiveVector p;
    p.direction = v / n;
    for (Eigen::Index i = 0; i < p.direction.size(); ++i) {
      const double c = p.direction[i];
      if (std::abs(c) > kSignTol) {
        if (c < 0.0) p.direction = -p.direction;
        break;
      }
    }
    return p;
  }

  int ambient_dim() const { return static_cast<int>(direction.size()); }
};

/// Chordal distance between projective points: sine of the angle between
/// the two lines, in [0,1]. Computed from the orthogonal residual rather
/// than from 1 - cos^2, so tiny angles are resolved to machine precision.
inline double projective_distance(const ProjectiveVector& p, const ProjectiveVector& q) {
  if (p.ambient_dim() != q.ambient_dim())
    throw std::invalid_argument("projective_distance: dimension mismatch");
  const double c = p.direction.dot(q.direction);
  const Vector aligned = (c < 0.0) ? Vector(-q.direction) : q.direction;
  const double s = (p.direction - (p.direction.dot(aligned)) * aligned).norm();
  return detail::clamp01(s);
}

inline double projective_angle(const ProjectiveVector& p, const ProjectiveVector& q) {
  return std::asin(detail::clamp01(projective_distance(p, q)));
}

/// Cosines of the principal angles between E and F: the singular values of
/// E^T F, clamped into [0,1] to remove floating-point drift above 1.
inline Vector principal_cosines(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim())
    throw std::invalid_argument("principal_cosines: ambient dimension mismatch");
  if (e.dim() == 0 || f.dim() == 0) return Vector(0);
  const Matrix g = e.basis().transpose() * f.basis();
  Eigen::JacobiSVD<Matrix> svd(g);
  Vector s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = detail::clamp01(s[i]);
  return s;
}

/// dist(E,F) = sup over unit v in E, w in F of max(dist(v,F), dist(w,E)).
/// For equal dimensions this is the sine of the largest principal angle; if
/// the dimensions differ one space contains a direction orthogonal to the
/// other and the sup equals 1.
inline double subspace_distance(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim())
    throw std::invalid_argument("subspace_distance: ambient dimension mismatch");
  if (e.dim() != f.dim()) return e.dim() == 0 && f.dim() == 0 ? 0.0 : 1.0;
  if (e.dim() == 0) return 0.0;
  const Vector s = principal_cosines(e, f);
  const double smin = s[s.size() - 1];
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

/// Angle between subspaces: asin of the distance, in [0, pi/2].
inline double subspace_angle(const Subspace& e, const Subspace& f) {
  return std::asin(detail::clamp01(subspace_distance(e, f)));
}

/// Sine of the smallest principal angle between E and F. Equals 1 for
/// orthogonal spaces and 0 when the spaces intersect.
inline double min_principal_angle_sine(const Subspace& e, const Subspace& f) {
  if (e.dim() == 0 || f.dim() == 0) return 1.0;
  const Vector s = principal_cosines(e, f);
  const double smax = s[0];
  return std::sqrt(std::max(0.0, 1.0 - smax * smax));
}

/// One-sided residual angle: how far `inner` sticks out of `target`,
/// asin of the largest singular value of (I - P_target) * basis(inner).
/// Zero iff inner is contained in target; for equal dimensions it agrees
/// with subspace_angle.
inline double containment_angle(const Subspace& inner, const Subspace& target) {
  if (inner.ambient_dim() != target.ambient_dim())
    throw std::invalid_argument("containment_angle: ambient dimension mismatch");
  if (inner.dim() == 0) return 0.0;
  Matrix resid = inner.basis();
  if (target.dim() > 0)
    resid -= target.basis() * (target.basis().transpose() * inner.basis());
  Eigen::JacobiSVD<Matrix> svd(resid);
  return std::asin(detail::clamp01(svd.singularValues()[0]));
}

/// Membership in the cone of radius alpha around V: splitting w = w1 + w2
/// with w1 in V and w2 in the orthogonal complement, requires |w2| < alpha*|w1|.
inline bool cone_contains(const Subspace& v, double alpha, const Vector& w) {
  if (!(alpha > 0.0)) throw std::invalid_argument("cone_contains: alpha must be positive");
  if (w.size() != v.ambient_dim())
    throw std::invalid_argument("cone_contains: vector dimension mismatch");
  const double wn = w.norm();
  if (!(wn > 0.0)) throw std::invalid_argument("cone_contains: zero vector");
  const Vector w1 = v.project(w);
  const Vector w2 = w - w1;
  return w2.norm() < alpha * w1.norm();
}

/// Matrix of the induced map on the j-th exterior power in the
/// lexicographically ordered wedge basis {e_{i1} ^ ... ^ e_{ij}}.
/// Entry (I,J) is the j x j minor of L with rows I and columns J.
inline Matrix exterior_power(const Matrix& l, int j) {
  const int d = static_cast<int>(l.rows());
  if (l.cols() != d) throw std::invalid_argument("exterior_power: matrix must be square");
  if (j < 1 || j > d) throw std::invalid_argument("exterior_power: order out of range");
  const auto subsets = lex_subsets(d, j);
  const int m = static_cast<int>(subsets.size());
  Matrix out(m, m);
  Matrix sub(j, j);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int r = 0; r < j; ++r)
        for (int c = 0; c < j; ++c) sub(r, c) = l(subsets[a][r], subsets[b][c]);
      out(a, b) = sub.determinant();
    }
  }
  return out;
}

/// Wedge of an orthonormal basis of E, as a canonical-sign unit vector in
/// the lex wedge basis. Independent of the basis choice up to sign, which
/// canonicalization removes.
inline ProjectiveVector plucker_embed(const Subspace& e) {
  const int d = e.ambient_dim();
  const int r = e.dim();
  if (r < 1) throw std::invalid_argument("plucker_embed: zero-dimensional subspace");
  const auto subsets = lex_subsets(d, r);
  Vector coords(static_cast<Eigen::Index>(subsets.size()));
  Matrix sub(r, r);
  for (std::size_t a = 0; a < subsets.size(); ++a) {
    for (int i = 0; i < r; ++i)
      for (int c = 0; c < r; ++c) sub(i, c) = e.basis()(subsets[a][i], c);
    coords[static_cast<Eigen::Index>(a)] = sub.determinant();
  }
  return ProjectiveVector::from(coords);
}

/// Grassmannian distance through the Plucker embedding: chordal projective
/// distance between the wedge lines of E and F.
inline double grassmann_distance_plucker(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim())
    throw std::invalid_argument("grassmann_distance_plucker: ambient dimension mismatch");
  if (e.dim() != f.dim())
    throw std::invalid_argument("grassmann_distance_plucker: subspace dimension mismatch");
  return projective_distance(plucker_embed(e), plucker_embed(f));
}

/// Numerical intersection: the principal directions of (E,F) whose
/// principal angle is below asin(tol). Returns the zero subspace when the
/// spaces are transversal.
inline Subspace subspace_intersection(const Subspace& e, const Subspace& f, double tol = 1e-8) {
  if (e.ambient_dim() != f.ambient_dim())
    throw std::invalid_argument("subspace_intersection: ambient dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("subspace_intersection: tol must be positive");
  if (e.dim() == 0 || f.dim() == 0) return Subspace::zero(e.ambient_dim());
  const Matrix g = e.basis().transpose() * f.basis();
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU);
  const Vector s = svd.singularValues();
  const double cos_floor = std::sqrt(std::max(0.0, 1.0 - tol * tol));
  int k = 0;
  while (k < s.size() && detail::clamp01(s[k]) > cos_floor) ++k;
  if (k == 0) return Subspace::zero(e.ambient_dim());
  return Subspace::from_orthonormal(e.basis() * svd.matrixU().leftCols(k));
}

}  // namespace cocyclelab
