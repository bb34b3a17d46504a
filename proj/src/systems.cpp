#include "besi/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "besi/parallel.hpp"

namespace besi {

std::string to_string(PointKind kind) {
  switch (kind) {
    case PointKind::torus: return "torus_point";
    case PointKind::symbol_sequence: return "symbol_sequence";
    case PointKind::delone_patch: return "delone_patch";
    case PointKind::product: return "product";
  }
  return "unknown";
}

std::string to_string(KnownClass kind) {
  switch (kind) {
    case KnownClass::discrete_spectrum: return "discrete_spectrum";
    case KnownClass::weakly_mixing: return "weakly_mixing";
    case KnownClass::unknown: return "unknown";
  }
  return "unknown";
}

double circle_dist(double a, double b) {
  // 64-bit fixed point on the circle: the wrap is exact, so the triangle inequality is too.
  auto fixed = [](double c) {
    c -= std::floor(c);
    return c >= 1.0 ? std::uint64_t{0} : static_cast<std::uint64_t>(std::ldexp(c, 64));
  };
  const std::uint64_t u = fixed(a) - fixed(b);
  const std::uint64_t d = std::min(u, std::uint64_t{0} - u);
  // round up onto a 2^-53 grid so every value is an exact double
  const std::uint64_t k = (d >> 11) + ((d & 0x7ff) != 0);
  return std::ldexp(static_cast<double>(k), -53);
}

bool looks_irrational(double x, int terms, double tol) {
  if (!std::isfinite(x)) return false;
  // convergents p/q with q small enough that an irrational cannot sit within tol of them
  const double qmax = 0.1 / std::sqrt(tol);
  double p0 = 1, q0 = 0, p1 = std::floor(x), q1 = 1;
  double r = x - p1;
  for (int i = 0; i < terms && q1 <= qmax; ++i) {
    if (std::abs(x - p1 / q1) <= tol * std::max(1.0, std::abs(x))) return false;
    if (r == 0.0) return false;
    const double inv = 1.0 / r;
    const double a = std::floor(inv);
    r = inv - a;
    const double p2 = a * p1 + p0, q2 = a * q1 + q0;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
  }
  return true;
}

void System::check_grid(const GridParams& grid) const {
  require(grid.kind == group_kind(), "window kind " + to_string(grid.kind) +
                                         " does not match the system's group kind " + to_string(group_kind()));
  require(grid.d == group_dim(), "window dimension does not match the acting group");
}

std::vector<Point> System::sample_ball(const Point& center, Radius r, std::size_t count,
                                       std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(count);
  const bool free = r.value() >= diameter();
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(free ? sample_mu(rng.bits()) : sample_ball_point(center, r, rng));
  return out;
}

std::vector<double> System::ball_depths(const Schedule&) const {
  std::vector<double> d;
  for (int k = 2; k <= 20; k += 2) d.push_back(k);
  return d;
}

namespace {
std::size_t chunk_count(std::size_t n) {
  return n >= (1u << 15) ? std::min<std::size_t>(64, thread_count() * 4) : 1;
}
}  // namespace

std::vector<cplx> System::orbit_values(const Observable& f, const Point& x, const NestedGrid& grid) const {
  check_grid(grid.params());
  const std::size_t n = grid.total();
  std::vector<cplx> out(n);
  const std::size_t chunks = chunk_count(n);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = n * c / chunks, hi = n * (c + 1) / chunks;
    Point y = x;
    GroupIndex g = GroupIndex::zero(group_kind(), group_dim());
    for (std::size_t i = lo; i < hi; ++i) {
      grid.fill_point(i, g);
      advance_in_place(y, x, g);
      out[i] = f(y);
    }
  });
  return out;
}

std::vector<double> System::orbit_distances(const Point& x, const Point& y, const NestedGrid& grid) const {
  check_grid(grid.params());
  const std::size_t n = grid.total();
  std::vector<double> out(n);
  const std::size_t chunks = chunk_count(n);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = n * c / chunks, hi = n * (c + 1) / chunks;
    Point u = x, v = y;
    GroupIndex g = GroupIndex::zero(group_kind(), group_dim());
    for (std::size_t i = lo; i < hi; ++i) {
      grid.fill_point(i, g);
      advance_in_place(u, x, g);
      advance_in_place(v, y, g);
      out[i] = dist(u, v);
    }
  });
  return out;
}

OrbitSeries orbit_series(const System& s, const Observable& f, const Point& x, const Window& w) {
  s.check_grid({w.kind, w.d, w.mesh});
  OrbitSeries out{{}, w};
  const Enumeration e = enumerate_window(w);
  out.values.reserve(e.points.size());
  for (const auto& g : e.points) out.values.push_back(f(s.act(g, x)));
  return out;
}

// ---------------------------------------------------------------------------
// Torus rotations and flows

namespace {

bool rationally_independent(const std::vector<double>& a) {
  // no relation sum k_i a_i = integer with 0 < max|k_i| <= 12
  const int B = 12;
  const std::size_t d = a.size();
  std::vector<int> k(d, -B);
  for (;;) {
    bool nonzero = false;
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      nonzero |= k[i] != 0;
      s += k[i] * a[i];
    }
    if (nonzero && std::abs(s - std::nearbyint(s)) < 1e-9) return false;
    std::size_t i = 0;
    while (i < d && ++k[i] > B) k[i++] = -B;
    if (i == d) break;
  }
  return true;
}

class TorusRotation final : public System {
 public:
  TorusRotation(std::vector<double> alpha, GroupKind kind)
      : alpha_(std::make_shared<const std::vector<double>>(std::move(alpha))), kind_(kind) {}

  std::string tag() const override {
    std::ostringstream s;
    s.precision(17);
    s << (kind_ == GroupKind::discrete ? "torus_rotation" : "torus_flow") << "(d=" << alpha_->size()
      << ",alpha=[";
    for (std::size_t i = 0; i < alpha_->size(); ++i) s << (i ? "," : "") << (*alpha_)[i];
    s << "])";
    return s.str();
  }
  PointKind point_kind() const override { return PointKind::torus; }
  GroupKind group_kind() const override { return kind_; }
  KnownClass known_class() const override { return KnownClass::discrete_spectrum; }
  bool minimal() const override { return rationally_independent(*alpha_); }
  double diameter() const override { return 0.5; }

  Point act(const GroupIndex& g, const Point& x) const override {
    require(g.kind() == kind_ && g.dim() == 1, "torus: group element does not match the action");
    TorusPoint y = own(x);
    y.time += g[0];
    return y;
  }

  void advance_in_place(Point& y, const Point& x, const GroupIndex& g) const override {
    auto* ty = y.as<TorusPoint>();
    const auto* tx = x.as<TorusPoint>();
    if (ty == nullptr || tx == nullptr || tx->alpha != alpha_) {
      y = act(g, x);
      return;
    }
    ty->time = tx->time + g[0];
  }

  double dist(const Point& x, const Point& y) const override {
    const TorusPoint& a = check(x);
    const TorusPoint& b = check(y);
    double d = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) d = std::max(d, circle_dist(a.coord(i), b.coord(i)));
    return d;
  }

  Point sample_mu(std::uint64_t seed) const override {
    Rng rng(seed);
    TorusPoint p{std::vector<double>(alpha_->size()), alpha_, 0.0};
    for (auto& c : p.base) c = rng.uniform();
    return p;
  }

  Radius pullback_radius(const GroupIndex&, Radius r) const override { return r; }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    const TorusPoint& c = check(center);
    const double delta = r.value() * (1.0 - 1e-12);
    TorusPoint p{std::vector<double>(alpha_->size()), alpha_, 0.0};
    for (std::size_t i = 0; i < p.base.size(); ++i) {
      const double v = c.coord(i) + rng.uniform(-delta, delta);
      p.base[i] = v - std::floor(v);
      if (p.base[i] >= 1.0) p.base[i] = 0.0;
    }
    return p;
  }

 private:
  const TorusPoint& check(const Point& x) const {
    const auto* t = x.as<TorusPoint>();
    require(t != nullptr && t->dim() == alpha_->size(), "torus: point does not belong to this system");
    return *t;
  }

  TorusPoint own(const Point& x) const {
    TorusPoint t = check(x);
    if (t.alpha != alpha_) {
      if (t.alpha && t.time != 0.0) t.base = t.coords();
      t.alpha = alpha_;
      t.time = 0.0;
    }
    return t;
  }

  std::shared_ptr<const std::vector<double>> alpha_;
  GroupKind kind_;
};

// ---------------------------------------------------------------------------
// Products

class ProductSystem final : public System {
 public:
  ProductSystem(SystemHandle a, SystemHandle b) : a_(std::move(a)), b_(std::move(b)) {
    require(a_ && b_, "product: null factor");
    require(a_->group_kind() == b_->group_kind() && a_->group_dim() == b_->group_dim(),
            "product: factors must be acted on by the same group");
  }

  std::string tag() const override { return "product(" + a_->tag() + "," + b_->tag() + ")"; }
  PointKind point_kind() const override { return PointKind::product; }
  GroupKind group_kind() const override { return a_->group_kind(); }
  int group_dim() const override { return a_->group_dim(); }
  double diameter() const override { return std::max(a_->diameter(), b_->diameter()); }

  KnownClass known_class() const override {
    const KnownClass x = a_->known_class(), y = b_->known_class();
    if (x == KnownClass::discrete_spectrum && y == KnownClass::discrete_spectrum) return x;
    if (x == KnownClass::weakly_mixing && y == KnownClass::weakly_mixing) return x;
    return KnownClass::unknown;
  }

  bool minimal() const override {
    if (!a_->minimal() || !b_->minimal()) return false;
    if (a_->point_kind() != PointKind::torus || b_->point_kind() != PointKind::torus) return false;
    std::vector<double> alphas;
    for (const auto* s : {a_.get(), b_.get()}) {
      const Point p = s->sample_mu(0);
      const Point q = s->act(GroupIndex::scalar(group_kind(), 1.0), p);
      const auto cp = torus_coords(p), cq = torus_coords(q);
      for (std::size_t i = 0; i < cp.size(); ++i) {
        const double d = cq[i] - cp[i];
        alphas.push_back(d - std::floor(d));
      }
    }
    return rationally_independent(alphas);
  }

  Point act(const GroupIndex& g, const Point& x) const override {
    const ProductPoint& p = check(x);
    return ProductPoint{{a_->act(g, p.parts[0]), b_->act(g, p.parts[1])}};
  }

  void advance_in_place(Point& y, const Point& x, const GroupIndex& g) const override {
    auto* py = y.as<ProductPoint>();
    const ProductPoint& px = check(x);
    if (py == nullptr || py->parts.size() != 2) {
      y = act(g, x);
      return;
    }
    a_->advance_in_place(py->parts[0], px.parts[0], g);
    b_->advance_in_place(py->parts[1], px.parts[1], g);
  }

  double dist(const Point& x, const Point& y) const override {
    const ProductPoint& p = check(x);
    const ProductPoint& q = check(y);
    return std::max(a_->dist(p.parts[0], q.parts[0]), b_->dist(p.parts[1], q.parts[1]));
  }

  Point sample_mu(std::uint64_t seed) const override {
    return ProductPoint{{a_->sample_mu(derive_seed(seed, 1)), b_->sample_mu(derive_seed(seed, 2))}};
  }

  std::vector<double> ball_depths(const Schedule& sched) const override {
    auto x = a_->ball_depths(sched), y = b_->ball_depths(sched);
    x.insert(x.end(), y.begin(), y.end());
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return x;
  }

  Radius pullback_radius(const GroupIndex& g, Radius r) const override {
    const Radius p = a_->pullback_radius(g, r), q = b_->pullback_radius(g, r);
    return p.depth() > q.depth() ? p : q;
  }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    const ProductPoint& c = check(center);
    const std::uint64_t s = rng.bits();
    return ProductPoint{{a_->sample_ball(c.parts[0], r, 1, derive_seed(s, 1))[0],
                         b_->sample_ball(c.parts[1], r, 1, derive_seed(s, 2))[0]}};
  }

 private:
  static const ProductPoint& check(const Point& x) {
    const auto* p = x.as<ProductPoint>();
    require(p != nullptr && p->parts.size() == 2, "product: point does not belong to this system");
    return *p;
  }

  SystemHandle a_, b_;
};

}  // namespace

SystemHandle make_torus_rotation(std::vector<double> alpha, GroupKind kind) {
  require(!alpha.empty(), "torus_rotation: empty rotation vector");
  for (double a : alpha)
    require(looks_irrational(a), "torus_rotation: rotation number is rational within tolerance");
  return std::make_shared<TorusRotation>(std::move(alpha), kind);
}

SystemHandle make_product(SystemHandle a, SystemHandle b) {
  return std::make_shared<ProductSystem>(std::move(a), std::move(b));
}

}  // namespace besi
