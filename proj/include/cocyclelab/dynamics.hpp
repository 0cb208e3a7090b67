#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cocyclelab/rng.hpp"

namespace cocyclelab {

/// Phase-space coordinates are stored as 64-bit binary fractions,
/// x = u / 2^64 in [0,1). Rotations and integer toral automorphisms then act
/// by exact integer arithmetic mod 2^64, which makes orbits bit-stable,
/// iteration an exact group action, and inverse iteration an exact inverse.
struct CirclePoint {
  std::uint64_t u = 0;
};

struct TorusPoint {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
};

/// Finite window of a bi-infinite symbol sequence. `center` is the current
/// origin offset inside the window; shifting moves the center.
struct ShiftPoint {
  std::vector<std::uint8_t> symbols;  // size 2*radius + 1
  int center = 0;

  int radius() const { return (static_cast<int>(symbols.size()) - 1) / 2; }

  /// Symbol at the given offset from the current origin.
  std::uint8_t symbol_at(int offset) const {
    const int idx = radius() + center + offset;
    if (idx < 0 || idx >= static_cast<int>(symbols.size()))
      throw std::out_of_range(
          "shift window exhausted: need radius >= " +
          std::to_string(std::abs(center + offset)) + ", have " + std::to_string(radius()));
    return symbols[static_cast<std::size_t>(idx)];
  }
};

using BasePoint = std::variant<CirclePoint, TorusPoint, ShiftPoint>;

/// Converts a 64-bit fraction to double in [0,1). The top 53 bits are used
/// so the result never rounds up to 1.
inline double unit_coord(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

inline std::uint64_t to_fixed(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;  // guard against floor rounding at the top edge
  return static_cast<std::uint64_t>(std::ldexp(f, 64));
}

/// Fractional part of the golden mean, rounded to 64 fractional bits.
inline constexpr std::uint64_t kGoldenAngleFixed = 11400714819323198486ULL;

/// Invertible ergodic base system (M, f, mu). Three concrete families:
/// an irrational circle rotation (isometric base), a hyperbolic toral
/// automorphism, and a Bernoulli full shift on finite windows. mu is
/// Lebesgue for the first two and the Bernoulli product for the shift.
class BaseSystem {
 public:
  struct Rotation {
    std::uint64_t angle;  // fixed-point angle
  };
  struct Toral {
    std::int64_t a, b, c, d;  // [[a,b],[c,d]], |det| = 1
  };
  struct Shift {
    int alphabet;
    std::vector<double> probs;
    std::vector<double> cum;  // cumulative probabilities for sampling
    int radius;
  };

  /// Irrational rotation. The fixed-point angle is checked to be
  /// non-resonant up to denominator 10^6 (no k <= 10^6 with k*angle within
  /// 1e-9 of an integer); rational angles are rejected.
  static BaseSystem rotation(double angle) { return rotation_fixed(to_fixed(angle)); }

  static BaseSystem rotation_fixed(std::uint64_t angle_fixed) {
    check_nonresonant(angle_fixed);
    BaseSystem s;
    s.kind_ = Rotation{angle_fixed};
    return s;
  }

  /// Rotation by the fractional part of the golden mean.
  static BaseSystem golden_rotation() { return rotation_fixed(kGoldenAngleFixed); }

  static BaseSystem toral_automorphism(std::int64_t a, std::int64_t b, std::int64_t c,
                                       std::int64_t d, bool require_hyperbolic = true) {
    const std::int64_t det = a * d - b * c;
    if (det != 1 && det != -1)
      throw std::invalid_argument("toral_automorphism: |det| must be 1, got " +
                                  std::to_string(det));
    if (require_hyperbolic && std::abs(a + d) <= 2)
      throw std::invalid_argument(
          "toral_automorphism: |trace| <= 2; hyperbolicity (the ergodicity proxy) fails");
    BaseSystem s;
    s.kind_ = Toral{a, b, c, d};
    return s;
  }

  static BaseSystem bernoulli_shift(int alphabet, std::vector<double> probs, int radius) {
    if (alphabet < 2) throw std::invalid_argument("bernoulli_shift: alphabet must be >= 2");
    if (static_cast<int>(probs.size()) != alphabet)
      throw std::invalid_argument("bernoulli_shift: probability vector size mismatch");
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw std::invalid_argument("bernoulli_shift: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("bernoulli_shift: probabilities must sum to 1");
    if (radius < 1) throw std::invalid_argument("bernoulli_shift: radius must be >= 1");
    Shift sh{};
    sh.alphabet = alphabet;
    sh.probs = std::move(probs);
    sh.cum.resize(sh.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sh.probs.size(); ++i) {
      acc += sh.probs[i];
      sh.cum[i] = acc;
    }
    sh.cum.back() = 1.0;
    sh.radius = radius;
    BaseSystem s;
    s.kind_ = sh;
    return s;
  }

  bool is_rotation() const { return std::holds_alternative<Rotation>(kind_); }
  bool is_toral() const { return std::holds_alternative<Toral>(kind_); }
  bool is_shift() const { return std::holds_alternative<Shift>(kind_); }
  const Rotation& rotation_desc() const { return std::get<Rotation>(kind_); }
  const Toral& toral_desc() const { return std::get<Toral>(kind_); }
  const Shift& shift_desc() const { return std::get<Shift>(kind_); }

  bool operator==(const BaseSystem& o) const {
    if (kind_.index() != o.kind_.index()) return false;
    if (is_rotation()) return rotation_desc().angle == o.rotation_desc().angle;
    if (is_toral()) {
      const auto& x = toral_desc();
      const auto& y = o.toral_desc();
      return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d;
    }
    const auto& x = shift_desc();
    const auto& y = o.shift_desc();
    return x.alphabet == y.alphabet && x.radius == y.radius && x.probs == y.probs;
  }

  /// f^n. Exact group action: iterate(iterate(x,a),b) == iterate(x,a+b).
  BasePoint iterate(const BasePoint& x, long long n) const {
    if (is_rotation()) {
      const auto& p = std::get<CirclePoint>(x);
      const std::uint64_t step =
          static_cast<std::uint64_t>(n) * rotation_desc().angle;  // wraps mod 2^64
      return CirclePoint{p.u + step};
    }
    if (is_toral()) {
      const auto& t = toral_desc();
      TorusPoint p = std::get<TorusPoint>(x);
      const bool fwd = n >= 0;
      long long steps = fwd ? n : -n;
      std::int64_t a, b, c, d;
      if (fwd) {
        a = t.a;
        b = t.b;
        c = t.c;
        d = t.d;
      } else {
        // adjugate over det; |det| = 1 keeps it integral
        const std::int64_t det = t.a * t.d - t.b * t.c;
        a = det * t.d;
        b = -det * t.b;
        c = -det * t.c;
        d = det * t.a;
      }
      const std::uint64_t ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b),
                          uc = static_cast<std::uint64_t>(c), ud = static_cast<std::uint64_t>(d);
      for (long long s = 0; s < steps; ++s) {
        const std::uint64_t nu = ua * p.u + ub * p.v;
        const std::uint64_t nv = uc * p.u + ud * p.v;
        p.u = nu;
        p.v = nv;
      }
      return p;
    }
    const auto& sp = std::get<ShiftPoint>(x);
    ShiftPoint out = sp;
    const long long nc = static_cast<long long>(sp.center) + n;
    if (std::llabs(nc) > sp.radius())
      throw std::out_of_range("shift window exhausted: need radius >= " + std::to_string(std::llabs(nc)) +
                              ", have " + std::to_string(sp.radius()));
    out.center = static_cast<int>(nc);
    return out;
  }

  /// The i-th mu-sample for a given seed, derivable without the others.
  BasePoint sample_point(std::uint64_t seed, std::uint64_t index) const {
    SplitMix64 rng = stream(seed, index);
    if (is_rotation()) return CirclePoint{rng.next()};
    if (is_toral()) {
      const std::uint64_t u = rng.next();
      return TorusPoint{u, rng.next()};
    }
    const auto& sh = shift_desc();
    ShiftPoint p;
    p.symbols.resize(static_cast<std::size_t>(2 * sh.radius + 1));
    for (auto& s : p.symbols) {
      const double x = rng.uniform01();
      int k = 0;
      while (k + 1 < sh.alphabet && x >= sh.cum[static_cast<std::size_t>(k)]) ++k;
      s = static_cast<std::uint8_t>(k);
    }
    p.center = 0;
    return p;
  }

  std::vector<BasePoint> sample(std::uint64_t seed, int count) const {
    if (count <= 0) throw std::invalid_argument("sample: count must be positive");
    std::vector<BasePoint> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      out.push_back(sample_point(seed, static_cast<std::uint64_t>(i)));
    return out;
  }

  /// Double coordinates for generator evaluation: [x] on the circle,
  /// [x, y] on the torus. Shift points have no continuous coordinates.
  std::vector<double> coords(const BasePoint& x) const {
    if (is_rotation()) return {unit_coord(std::get<CirclePoint>(x).u)};
    if (is_toral()) {
      const auto& p = std::get<TorusPoint>(x);
      return {unit_coord(p.u), unit_coord(p.v)};
    }
    throw std::logic_error("coords: shift points carry symbols, not coordinates");
  }

  std::string kind_name() const {
    if (is_rotation()) return "rotation";
    if (is_toral()) return "toral_automorphism";
    return "bernoulli_shift";
  }

 private:
  BaseSystem() = default;

  static void check_nonresonant(std::uint64_t angle) {
    // reject k*angle within 1e-9 of an integer for any k <= 10^6
    const std::uint64_t floor_fixed = static_cast<std::uint64_t>(1e-9 * 0x1.0p64);
    std::uint64_t acc = 0;
    for (int k = 1; k <= 1000000; ++k) {
      acc += angle;
      const std::uint64_t dist = std::min(acc, ~acc + 1);  // distance to 0 mod 2^64
      if (dist < floor_fixed)
        throw std::invalid_argument("rotation: angle resonant at denominator " +
                                    std::to_string(k) + "; use an irrational angle");
    }
  }

  std::variant<Rotation, Toral, Shift> kind_;
};

inline BasePoint iterate(const BaseSystem& sys, const BasePoint& x, long long n) {
  return sys.iterate(x, n);
}

inline std::vector<BasePoint> sample_measure(const BaseSystem& sys, std::uint64_t seed,
                                             int count) {
  return sys.sample(seed, count);
}

}  // namespace cocyclelab
