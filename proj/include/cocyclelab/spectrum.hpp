#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cocyclelab/cocycle.hpp"
#include "cocyclelab/linalg.hpp"
#include "cocyclelab/parallel.hpp"

namespace cocyclelab {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

struct SpectrumOptions {
  double cluster_gap = 0.05;    // exponent clustering gap (experiment parameter)
  double l_cap = 50.0;          // rate floor for the -infinity proxy
  double accum_floor = -300.0;  // accumulated log-scale underflow guard
  int gauge_samples = 4;        // subsample size for the n vs 2n drift gauge
  int threads = 0;              // 0 -> resolve via COCYCLE_LAB_THREADS / 1
};

/// Why an exponent was flagged as -infinity. Both triggers are reported
/// distinctly: `underflow` means the accumulated product lost the direction
/// (rank collapse or accumulated log-scale under the guard while the rate is
/// past the floor); `floor` means the finite-time rate fell below -l_cap and
/// kept decreasing under n-doubling.
enum class MinusInfTrigger : std::uint8_t { none = 0, underflow = 1, floor = 2 };

struct FiniteTimeSpectrum {
  std::vector<double> gammas;  // sorted non-increasing; flagged entries are -inf
  std::vector<bool> minus_inf;
  std::vector<MinusInfTrigger> triggers;
  long long n = 0;
};

namespace detail {

inline constexpr double kRankFloorAbs = 1e-300;

/// Modified Gram-Schmidt QR with a second re-orthogonalization pass.
/// R has a non-negative diagonal; a column that vanishes gets R_jj = 0 and
/// Q_j is completed deterministically from the best coordinate direction.
inline void mgs_qr(const Matrix& b, Matrix& q, Matrix& r) {
  const int d = static_cast<int>(b.rows());
  q.resize(d, d);
  r.setZero(d, d);
  Vector v(d), cand(d);
  for (int j = 0; j < d; ++j) {
    v = b.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double c = q.col(i).dot(v);
        r(i, j) += c;
        v -= c * q.col(i);
      }
    }
    const double nrm = v.norm();
    if (nrm > kRankFloorAbs) {
      r(j, j) = nrm;
      q.col(j) = v / nrm;
    } else {
      r(j, j) = 0.0;
      double best_norm = -1.0;
      Vector best(d);
      for (int k = 0; k < d; ++k) {
        cand = Vector::Unit(d, k);
        for (int i = 0; i < j; ++i) cand -= (q.col(i).dot(cand)) * q.col(i);
        const double cn = cand.norm();
        if (cn > best_norm) {
          best_norm = cn;
          best = cand;
        }
      }
      for (int i = 0; i < j; ++i) best -= (q.col(i).dot(best)) * q.col(i);
      q.col(j) = best / best.norm();
    }
  }
}

/// Product of the per-step upper-triangular QR factors, held as
/// T = diag(exp(ell)) * B with B upper triangular and every row scaled to
/// max-abs 1. Rows that vanish carry ell = -inf. The representation keeps
/// the full dynamic range of the product in log space, so the exact
/// singular values of A^n(x) stay recoverable for any horizon.
struct GradedTriangular {
  Vector ell;
  Matrix b;

  void init(int d) {
    ell = Vector::Zero(d);
    b = Matrix::Identity(d, d);
  }

  /// T <- R * T for an upper-triangular step factor R.
  void update(const Matrix& r) {
    const int d = static_cast<int>(b.rows());
    Eigen::RowVectorXd row(d);
    for (int i = 0; i < d; ++i) {
      // scale of row i of R*T: max_j |R_ij| e^{ell_j}
      double m = kMinusInf;
      for (int j = i; j < d; ++j) {
        const double rij = r(i, j);
        if (rij == 0.0 || ell[j] == kMinusInf) continue;
        const double s = std::log(std::abs(rij)) + ell[j];
        if (s > m) m = s;
      }
      if (m == kMinusInf) {
        ell[i] = kMinusInf;
        b.row(i).setZero();
        continue;
      }
      row.setZero();
      for (int j = i; j < d; ++j) {
        const double rij = r(i, j);
        if (rij == 0.0 || ell[j] == kMinusInf) continue;
        const double w = rij * std::exp(ell[j] - m);
        row += w * b.row(j);
      }
      const double rowmax = row.cwiseAbs().maxCoeff();
      if (rowmax == 0.0) {
        ell[i] = kMinusInf;
        b.row(i).setZero();
      } else {
        ell[i] = m + std::log(rowmax);
        b.row(i) = row / rowmax;
      }
    }
  }

  /// log singular values of T, sorted non-increasing, via
  /// log sigma_1 + ... + log sigma_k = log |Lambda^k T|  for k = 1..d.
  /// Each wedge norm is computed from the scaled wedge of B, so the result
  /// carries absolute log-accuracy independent of the dynamic range.
  std::vector<double> log_singular_values() const {
    const int d = static_cast<int>(b.rows());
    if (d > 10)
      throw std::invalid_argument(
          "log_singular_values: exact product-SVD extraction supports dimension <= 10");
    std::vector<double> partial(static_cast<std::size_t>(d) + 1, 0.0);
    for (int k = 1; k <= d; ++k) {
      const auto subsets = lex_subsets(d, k);
      const int m = static_cast<int>(subsets.size());
      std::vector<double> lsum(static_cast<std::size_t>(m));
      double top = kMinusInf;
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int idx : subsets[static_cast<std::size_t>(a)]) {
          if (ell[idx] == kMinusInf) {
            s = kMinusInf;
            break;
          }
          s += ell[idx];
        }
        lsum[static_cast<std::size_t>(a)] = s;
        if (s > top) top = s;
      }
      if (top == kMinusInf) {
        partial[static_cast<std::size_t>(k)] = kMinusInf;
        continue;
      }
      Matrix w = exterior_power(b, k);
      for (int a = 0; a < m; ++a) {
        const double s = lsum[static_cast<std::size_t>(a)];
        w.row(a) *= (s == kMinusInf) ? 0.0 : std::exp(s - top);
      }
      Eigen::JacobiSVD<Matrix> svd(w);
      const double s1 = svd.singularValues()[0];
      partial[static_cast<std::size_t>(k)] = (s1 > 0.0) ? top + std::log(s1) : kMinusInf;
    }
    std::vector<double> out(static_cast<std::size_t>(d));
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= d; ++k) {
      double v;
      if (partial[static_cast<std::size_t>(k)] == kMinusInf)
        v = kMinusInf;
      else if (partial[static_cast<std::size_t>(k - 1)] == kMinusInf)
        v = kMinusInf;  // once the chain dies it stays dead
      else
        v = partial[static_cast<std::size_t>(k)] - partial[static_cast<std::size_t>(k - 1)];
      if (v > prev) v = prev;  // guard tiny fp inversions of the sorted order
      out[static_cast<std::size_t>(k - 1)] = v;
      prev = v;
    }
    return out;
  }
};

struct KahanAccumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

/// Finite-time Lyapunov exponents at x: (1/n) log sigma_i(A^n(x)), computed
/// through re-orthogonalized QR accumulation with the triangular factors
/// kept in log-scaled form. Values past the -infinity detection triggers
/// are flagged and reported as -inf.
inline FiniteTimeSpectrum finite_time_spectrum(const CocycleMap& a, const BasePoint& x,
                                               long long n,
                                               const SpectrumOptions& opts = {}) {
  if (n < 1) throw std::invalid_argument("finite_time_spectrum: n must be >= 1");
  const int d = a.dim();
  Matrix q = Matrix::Identity(d, d);
  Matrix y(d, d), r(d, d);
  detail::GradedTriangular acc;
  acc.init(d);
  const long long half = std::max<long long>(1, n / 2);
  std::vector<double> lsv_half;
  BasePoint pt = x;
  for (long long t = 0; t < n; ++t) {
    y = a(pt) * q;
    detail::mgs_qr(y, q, r);
    acc.update(r);
    if (t + 1 == half) lsv_half = acc.log_singular_values();
    pt = a.step(pt);
  }
  const std::vector<double> lsv = acc.log_singular_values();

  FiniteTimeSpectrum out;
  out.n = n;
  out.gammas.resize(static_cast<std::size_t>(d));
  out.minus_inf.assign(static_cast<std::size_t>(d), false);
  out.triggers.assign(static_cast<std::size_t>(d), MinusInfTrigger::none);
  for (int i = 0; i < d; ++i) {
    const double li = lsv[static_cast<std::size_t>(i)];
    const double rate = (li == kMinusInf) ? kMinusInf : li / static_cast<double>(n);
    const double half_rate = (lsv_half[static_cast<std::size_t>(i)] == kMinusInf)
                                 ? kMinusInf
                                 : lsv_half[static_cast<std::size_t>(i)] / static_cast<double>(half);
    MinusInfTrigger trig = MinusInfTrigger::none;
    if (li == kMinusInf || (li < opts.accum_floor && rate < -opts.l_cap))
      trig = MinusInfTrigger::underflow;
    else if (rate < -opts.l_cap && rate < half_rate)
      trig = MinusInfTrigger::floor;
    out.triggers[static_cast<std::size_t>(i)] = trig;
    out.minus_inf[static_cast<std::size_t>(i)] = trig != MinusInfTrigger::none;
    out.gammas[static_cast<std::size_t>(i)] = out.minus_inf[static_cast<std::size_t>(i)] ? kMinusInf : rate;
  }
  // flagged entries go to the tail, each group sorted non-increasing
  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int ia, int ib) {
    const bool fa = out.minus_inf[static_cast<std::size_t>(ia)];
    const bool fb = out.minus_inf[static_cast<std::size_t>(ib)];
    if (fa != fb) return !fa;
    return out.gammas[static_cast<std::size_t>(ia)] > out.gammas[static_cast<std::size_t>(ib)];
  });
  FiniteTimeSpectrum sorted = out;
  for (int i = 0; i < d; ++i) {
    const int j = order[static_cast<std::size_t>(i)];
    sorted.gammas[static_cast<std::size_t>(i)] = out.gammas[static_cast<std::size_t>(j)];
    sorted.minus_inf[static_cast<std::size_t>(i)] = out.minus_inf[static_cast<std::size_t>(j)];
    sorted.triggers[static_cast<std::size_t>(i)] = out.triggers[static_cast<std::size_t>(j)];
  }
  return sorted;
}

/// Greedy clustering of a sorted exponent list: a new cluster starts when
/// consecutive values differ by more than `gap`; the cluster value is the
/// member mean; flagged entries form the final cluster at -inf.
inline std::vector<std::pair<double, int>> cluster_exponents(const std::vector<double>& gammas,
                                                             const std::vector<bool>& flags,
                                                             double gap) {
  if (!(gap > 0.0)) throw std::invalid_argument("cluster_exponents: gap must be positive");
  if (gammas.size() != flags.size())
    throw std::invalid_argument("cluster_exponents: flag list size mismatch");
  std::vector<std::pair<double, int>> out;
  int flagged = 0;
  detail::KahanAccumulator acc;
  int count = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (flags[i] || gammas[i] == kMinusInf) {
      ++flagged;
      continue;
    }
    const double g = gammas[i];
    if (count > 0 && prev - g > gap) {
      out.emplace_back(acc.sum / count, count);
      acc = {};
      count = 0;
    }
    acc.add(g);
    ++count;
    prev = g;
  }
  if (count > 0) out.emplace_back(acc.sum / count, count);
  if (flagged > 0) out.emplace_back(kMinusInf, flagged);
  return out;
}

inline std::vector<std::pair<double, int>> cluster_exponents(const std::vector<double>& gammas,
                                                             double gap) {
  return cluster_exponents(gammas, std::vector<bool>(gammas.size(), false), gap);
}

/// Lyapunov spectrum estimate: per-sample finite-time spectra averaged over
/// mu-samples, with a cross-sample standard deviation per exponent and an
/// n vs 2n drift gauge on a subsample. Exponents are mu-a.e. constants by
/// ergodicity; the spread is diagnostic.
struct LyapunovSpectrum {
  std::vector<double> gammas;
  std::vector<bool> minus_inf;
  std::vector<MinusInfTrigger> triggers;
  std::vector<double> cross_sample_sd;
  std::vector<std::pair<double, int>> distinct;  // (lambda_i, d_i)
  long long n_used = 0;
  double error_gauge = 0.0;
  double gap_used = 0.05;
  int samples = 0;

  int distinct_count() const { return static_cast<int>(distinct.size()); }

  /// Prefix dimensions d~_i = d_1 + ... + d_i.
  std::vector<int> prefix_dims() const {
    std::vector<int> out;
    int acc = 0;
    for (const auto& [lam, dim] : distinct) {
      acc += dim;
      out.push_back(acc);
    }
    return out;
  }
};

inline LyapunovSpectrum estimate_spectrum(const CocycleMap& a, std::uint64_t seed, int samples,
                                          long long n, const SpectrumOptions& opts = {}) {
  if (samples < 1) throw std::invalid_argument("estimate_spectrum: samples must be >= 1");
  const int d = a.dim();
  const std::vector<BasePoint> pts = a.base().sample(seed, samples);
  std::vector<FiniteTimeSpectrum> per(static_cast<std::size_t>(samples));
  const int threads = resolve_threads(opts.threads);
  parallel_for(samples, threads, [&](std::int64_t i) {
    per[static_cast<std::size_t>(i)] =
        finite_time_spectrum(a, pts[static_cast<std::size_t>(i)], n, opts);
  });

  LyapunovSpectrum out;
  out.n_used = n;
  out.samples = samples;
  out.gap_used = opts.cluster_gap;
  out.gammas.resize(static_cast<std::size_t>(d));
  out.minus_inf.resize(static_cast<std::size_t>(d));
  out.triggers.resize(static_cast<std::size_t>(d));
  out.cross_sample_sd.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    int nflag = 0;
    MinusInfTrigger trig = MinusInfTrigger::none;
    detail::KahanAccumulator mean;
    int nfin = 0;
    for (const auto& s : per) {
      if (s.minus_inf[static_cast<std::size_t>(i)]) {
        ++nflag;
        if (trig == MinusInfTrigger::none) trig = s.triggers[static_cast<std::size_t>(i)];
      } else {
        mean.add(s.gammas[static_cast<std::size_t>(i)]);
        ++nfin;
      }
    }
    const bool flagged = 2 * nflag > samples;
    out.minus_inf[static_cast<std::size_t>(i)] = flagged;
    out.triggers[static_cast<std::size_t>(i)] = flagged ? trig : MinusInfTrigger::none;
    if (flagged || nfin == 0) {
      out.gammas[static_cast<std::size_t>(i)] = kMinusInf;
      out.minus_inf[static_cast<std::size_t>(i)] = true;
      if (out.triggers[static_cast<std::size_t>(i)] == MinusInfTrigger::none)
        out.triggers[static_cast<std::size_t>(i)] = trig;
      out.cross_sample_sd[static_cast<std::size_t>(i)] = 0.0;
    } else {
      const double m = mean.sum / nfin;
      out.gammas[static_cast<std::size_t>(i)] = m;
      detail::KahanAccumulator var;
      for (const auto& s : per)
        if (!s.minus_inf[static_cast<std::size_t>(i)]) {
          const double dgi = s.gammas[static_cast<std::size_t>(i)] - m;
          var.add(dgi * dgi);
        }
      out.cross_sample_sd[static_cast<std::size_t>(i)] =
          nfin > 1 ? std::sqrt(var.sum / (nfin - 1)) : 0.0;
    }
  }

  // n vs 2n drift on a subsample
  const int g = std::max(1, std::min(opts.gauge_samples, samples));
  std::vector<FiniteTimeSpectrum> twice(static_cast<std::size_t>(g));
  parallel_for(g, threads, [&](std::int64_t i) {
    twice[static_cast<std::size_t>(i)] =
        finite_time_spectrum(a, pts[static_cast<std::size_t>(i)], 2 * n, opts);
  });
  double gauge = 0.0;
  for (int i = 0; i < d; ++i) {
    detail::KahanAccumulator mn, m2;
    int cnt = 0;
    bool mismatch = false;
    for (int s = 0; s < g; ++s) {
      const auto& fn = per[static_cast<std::size_t>(s)];
      const auto& f2 = twice[static_cast<std::size_t>(s)];
      const bool fa = fn.minus_inf[static_cast<std::size_t>(i)];
      const bool fb = f2.minus_inf[static_cast<std::size_t>(i)];
      if (fa != fb) {
        mismatch = true;
        continue;
      }
      if (fa) continue;  // flagged at both horizons: no drift to measure
      mn.add(fn.gammas[static_cast<std::size_t>(i)]);
      m2.add(f2.gammas[static_cast<std::size_t>(i)]);
      ++cnt;
    }
    if (mismatch) gauge = std::max(gauge, opts.l_cap);
    if (cnt > 0) gauge = std::max(gauge, std::abs(mn.sum / cnt - m2.sum / cnt));
  }
  out.error_gauge = gauge;
  out.distinct = cluster_exponents(out.gammas, out.minus_inf, opts.cluster_gap);
  return out;
}

/// Grouping of a member spectrum's distinct exponents into consecutive
/// blocks whose dimensions reproduce a target dimension list.
struct BlockMatch {
  std::vector<std::pair<int, int>> groups;  // [first, last] indices into `distinct`
  std::vector<int> dims;
};

/// The unique consecutive grouping of spectrum_k's distinct exponents whose
/// cumulative dimensions hit the target prefix sums; empty when the prefix
/// sums cannot be aligned (the counterexample failure mode).
inline std::optional<BlockMatch> match_blocks(const LyapunovSpectrum& spectrum_k,
                                              const std::vector<int>& target_dims) {
  int total = 0;
  for (int t : target_dims) {
    if (t < 1) throw std::invalid_argument("match_blocks: target dims must be positive");
    total += t;
  }
  const int d = static_cast<int>(spectrum_k.gammas.size());
  if (total != d)
    throw std::invalid_argument("match_blocks: target dims must sum to the cocycle dimension");

  BlockMatch match;
  int idx = 0;
  const int l = spectrum_k.distinct_count();
  for (int t : target_dims) {
    int acc = 0;
    const int first = idx;
    while (idx < l && acc < t) {
      acc += spectrum_k.distinct[static_cast<std::size_t>(idx)].second;
      ++idx;
    }
    if (acc != t) return std::nullopt;
    match.groups.emplace_back(first, idx - 1);
    match.dims.push_back(acc);
  }
  if (idx != l) return std::nullopt;
  return match;
}

}  // namespace cocyclelab
