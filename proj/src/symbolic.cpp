#include "besi/symbolic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace besi {

int IidSource::at(std::int64_t k) const {
  const std::int64_t rel = k - pin_lo_;
  if (rel >= 0 && rel < static_cast<std::int64_t>(pinned_.size())) return pinned_[static_cast<std::size_t>(rel)];
  return unit_from_bits(derive_seed(seed_, static_cast<std::uint64_t>(k))) < p_ ? 1 : 0;
}

int RotationCodingSource::at(std::int64_t k) const {
  const double v = theta_ + static_cast<double>(k) * alpha_;
  return v - std::floor(v) >= 1.0 - alpha_ ? 1 : 0;
}

double RotationCodingSource::phase(std::int64_t offset) const {
  const double v = theta_ + static_cast<double>(offset) * alpha_;
  return v - std::floor(v);
}

int ThueMorseSource::at(std::int64_t k) const {
  return std::popcount(base_ + static_cast<std::uint64_t>(k)) & 1;
}

double shift_dist(const SymbolPoint& x, const SymbolPoint& y) {
  if (x.source == y.source && x.offset == y.offset) return 0.0;
  for (std::int64_t m = 0; m < kShiftIndexCap; ++m) {
    const std::int64_t k = coord_of_index(m);
    if (x.at(k) != y.at(k)) return std::ldexp(1.0, -static_cast<int>(m));
  }
  return 0.0;
}

std::vector<double> shift_orbit_distances(const SymbolPoint& x, const SymbolPoint& y, std::size_t n) {
  std::vector<double> out(n, 0.0);
  if (n == 0 || (x.source == y.source && x.offset == y.offset)) return out;
  const std::int64_t L = kShiftIndexCap / 2 + 1;
  const auto N = static_cast<std::int64_t>(n);
  const std::int64_t span = N + 2 * L;
  std::vector<char> diff(static_cast<std::size_t>(span));
  for (std::int64_t p = 0; p < span; ++p) diff[static_cast<std::size_t>(p)] = x.at(p - L) != y.at(p - L);

  constexpr std::int64_t kNone = -1;
  // nearest disagreement at or right of j, and strictly left of j
  std::vector<std::int64_t> right(static_cast<std::size_t>(span), kNone);
  std::int64_t last = kNone;
  for (std::int64_t p = span - 1; p >= 0; --p) {
    if (diff[static_cast<std::size_t>(p)]) last = p;
    right[static_cast<std::size_t>(p)] = last;
  }
  std::int64_t left = kNone;
  for (std::int64_t p = 0; p < L; ++p)
    if (diff[static_cast<std::size_t>(p)]) left = p;
  for (std::int64_t j = 0; j < N; ++j) {
    const std::int64_t p = j + L;
    std::int64_t m = kShiftIndexCap;
    const std::int64_t r = right[static_cast<std::size_t>(p)];
    if (r != kNone) m = std::min(m, index_of_coord(r - p));
    if (left != kNone) m = std::min(m, index_of_coord(left - p));
    out[static_cast<std::size_t>(j)] = m < kShiftIndexCap ? std::ldexp(1.0, -static_cast<int>(m)) : 0.0;
    if (diff[static_cast<std::size_t>(p)]) left = p;
  }
  return out;
}

CylinderRange cylinder_range(Radius r) {
  const std::int64_t D = r.cylinder_index();
  return {-(D / 2), (D + 1) / 2};
}

std::vector<int> substitution_word(SubstitutionRule rule, std::size_t length) {
  std::vector<int> w{0};
  while (w.size() < length) {
    std::vector<int> next;
    next.reserve(2 * w.size());
    for (int c : w) {
      if (rule == SubstitutionRule::fibonacci) {
        next.push_back(0);
        if (c == 0) next.push_back(1);
      } else {
        next.push_back(c);
        next.push_back(1 - c);
      }
    }
    w = std::move(next);
  }
  w.resize(length);
  return w;
}

namespace {

class ShiftSystem : public System {
 public:
  PointKind point_kind() const override { return PointKind::symbol_sequence; }
  GroupKind group_kind() const override { return GroupKind::discrete; }
  double diameter() const override { return 1.0; }

  Point act(const GroupIndex& g, const Point& x) const override {
    require(g.kind() == GroupKind::discrete && g.dim() == 1, "shift: group element must lie in Z");
    SymbolPoint y = check(x);
    y.offset += static_cast<std::int64_t>(g[0]);
    return y;
  }

  void advance_in_place(Point& y, const Point& x, const GroupIndex& g) const override {
    y.as<SymbolPoint>()->offset = check(x).offset + static_cast<std::int64_t>(g[0]);
  }

  double dist(const Point& x, const Point& y) const override { return shift_dist(check(x), check(y)); }

  std::vector<double> orbit_distances(const Point& x, const Point& y, const NestedGrid& grid) const override {
    check_grid(grid.params());
    return shift_orbit_distances(check(x), check(y), grid.total());
  }

  std::vector<double> ball_depths(const Schedule& sched) const override {
    // deeper cylinders agree on most of every scheduled window and say nothing
    const double cap = std::min(8192.0, sched.largest() / 4.0);
    std::vector<double> d;
    for (double k = 2; k <= cap; k *= 2) d.push_back(k);
    if (d.empty()) d.push_back(1);
    return d;
  }

  Radius pullback_radius(const GroupIndex& g, Radius r) const override {
    return Radius::from_depth(r.depth() + 2.0 * std::abs(g[0]) + 2.0);
  }

 protected:
  static const SymbolPoint& check(const Point& x) {
    const auto* s = x.as<SymbolPoint>();
    require(s != nullptr && s->source != nullptr, "shift: point is not a symbol sequence");
    return *s;
  }

  static bool agrees(const SymbolPoint& a, const SymbolPoint& b, CylinderRange c) {
    for (std::int64_t k = c.lo; k <= c.hi; ++k)
      if (a.at(k) != b.at(k)) return false;
    return true;
  }
};

class BernoulliShift final : public ShiftSystem {
 public:
  explicit BernoulliShift(double p) : p_(p) {}

  std::string tag() const override {
    std::ostringstream s;
    s << "bernoulli_shift(p=" << p_ << ")";
    return s.str();
  }
  KnownClass known_class() const override { return KnownClass::weakly_mixing; }
  bool ergodic() const override { return true; }

  Point sample_mu(std::uint64_t seed) const override {
    return SymbolPoint{std::make_shared<IidSource>(mix64(seed), p_), 0};
  }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    const SymbolPoint& c = check(center);
    const CylinderRange cr = cylinder_range(r);
    std::vector<std::uint8_t> pinned(static_cast<std::size_t>(cr.hi - cr.lo + 1));
    for (std::int64_t k = cr.lo; k <= cr.hi; ++k)
      pinned[static_cast<std::size_t>(k - cr.lo)] = static_cast<std::uint8_t>(c.at(k));
    return SymbolPoint{std::make_shared<IidSource>(rng.bits(), p_, cr.lo, std::move(pinned)), 0};
  }

 private:
  double p_;
};

class RotationCodingShift final : public ShiftSystem {
 public:
  RotationCodingShift(double alpha, std::string name) : alpha_(alpha), name_(std::move(name)) {}

  std::string tag() const override {
    std::ostringstream s;
    s.precision(17);
    s << name_ << "(alpha=" << alpha_ << ")";
    return s.str();
  }
  KnownClass known_class() const override { return KnownClass::discrete_spectrum; }
  bool minimal() const override { return true; }

  Point sample_mu(std::uint64_t seed) const override {
    Rng rng(seed);
    return SymbolPoint{std::make_shared<RotationCodingSource>(alpha_, rng.uniform()), 0};
  }

  std::vector<Point> sample_ball(const Point& center, Radius r, std::size_t count,
                                 std::uint64_t seed) const override {
    if (r.value() >= diameter()) return System::sample_ball(center, r, count, seed);
    const SymbolPoint& c = check(center);
    const CylinderRange cr = cylinder_range(r);
    // Phase of the centre and the arc [phi - left, phi + right) of phases with the
    // same coding on cr; codings are right-continuous in the phase.
    double phi;
    if (const auto* rc = dynamic_cast<const RotationCodingSource*>(c.source.get()); rc && rc->alpha() == alpha_) {
      phi = rc->phase(c.offset);
    } else {
      throw InvalidArgument("rotation coding: centre does not come from this system");
    }
    double left = 1.0, right = 1.0;
    for (std::int64_t k = cr.lo; k <= cr.hi; ++k) {
      for (double cut : {-static_cast<double>(k) * alpha_, 1.0 - alpha_ - static_cast<double>(k) * alpha_}) {
        cut -= std::floor(cut);
        double dl = phi - cut;
        dl -= std::floor(dl);
        double dr = cut - phi;
        dr -= std::floor(dr);
        left = std::min(left, dl);
        right = std::min(right, dr == 0.0 ? 1.0 : dr);
      }
    }
    Rng rng(seed);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      bool ok = false;
      for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
        double psi = phi - left + rng.uniform() * (left + right);
        psi -= std::floor(psi);
        SymbolPoint y{std::make_shared<RotationCodingSource>(alpha_, psi), 0};
        if (agrees(c, y, cr)) {
          out.emplace_back(std::move(y));
          ok = true;
        }
      }
      if (!ok) throw SamplingExhausted("rotation coding: no phase found inside the cylinder");
    }
    return out;
  }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    return sample_ball(center, r, 1, rng.bits())[0];
  }

 private:
  double alpha_;
  std::string name_;
};

class ThueMorseShift final : public ShiftSystem {
 public:
  std::string tag() const override { return "substitution(thue_morse)"; }
  bool minimal() const override { return true; }

  Point sample_mu(std::uint64_t seed) const override {
    Rng rng(seed);
    return SymbolPoint{std::make_shared<ThueMorseSource>((1ULL << 62) + (rng.bits() >> 2)), 0};
  }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    const SymbolPoint& c = check(center);
    const CylinderRange cr = cylinder_range(r);
    std::uint64_t base;
    if (const auto* tm = dynamic_cast<const ThueMorseSource*>(c.source.get())) {
      base = tm->base() + static_cast<std::uint64_t>(c.offset);
    } else {
      throw InvalidArgument("thue_morse: centre does not come from this system");
    }
    // adding multiples of 2^s leaves the low bits of base + k untouched
    const auto width = static_cast<std::uint64_t>(cr.hi - cr.lo + 4);
    const int s = std::bit_width(width) + 2;
    for (int attempt = 0; attempt < 256; ++attempt) {
      const std::uint64_t q = 1 + rng.below((1ULL << (60 - s)) - 1);
      auto src = std::make_shared<ThueMorseSource>(base + (q << s));
      SymbolPoint y{std::move(src), 0};
      if (agrees(c, y, cr)) return y;
    }
    throw SamplingExhausted("thue_morse: rejection sampling found no point in the cylinder");
  }
};

}  // namespace

SystemHandle make_bernoulli_shift(double p) {
  require(p > 0.0 && p < 1.0, "bernoulli_shift: p must lie in (0, 1)");
  return std::make_shared<BernoulliShift>(p);
}

SystemHandle make_sturmian(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "sturmian: alpha must lie in (0, 1)");
  require(looks_irrational(alpha), "sturmian: alpha is rational within tolerance");
  return std::make_shared<RotationCodingShift>(alpha, "sturmian");
}

SystemHandle make_substitution_subshift(SubstitutionRule rule) {
  if (rule == SubstitutionRule::fibonacci)
    return std::make_shared<RotationCodingShift>(kFibonacciSlope, "substitution(fibonacci)");
  return std::make_shared<ThueMorseShift>();
}

}  // namespace besi
