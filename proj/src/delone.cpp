#include "besi/delone.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "besi/kernels.hpp"
#include "besi/parallel.hpp"

namespace besi {

Box Box::cube(int d, double lo, double hi) {
  require(d >= 1 && d <= kMaxDim, "box dimension must be 1..3");
  require(hi > lo, "box must have positive side");
  Box b;
  b.d = d;
  for (int i = 0; i < d; ++i) {
    b.lo[static_cast<std::size_t>(i)] = lo;
    b.hi[static_cast<std::size_t>(i)] = hi;
  }
  return b;
}

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < d; ++i) v *= side(i);
  return v;
}

bool Box::contains(const Vec& x) const {
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i)
    if (x[i] < lo[i] || x[i] >= hi[i]) return false;
  return true;
}

double sup_norm(const Vec& x, int d) {
  double m = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

namespace {

double euclid(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string fmt_vec(const Vec& v, int d) {
  std::ostringstream s;
  s.precision(17);
  s << "[";
  for (int i = 0; i < d; ++i) s << (i ? "," : "") << v[static_cast<std::size_t>(i)];
  s << "]";
  return s.str();
}

void check_box(const Box& b) {
  require(b.d >= 1 && b.d <= kMaxDim, "region dimension must be 1..3");
  for (int i = 0; i < b.d; ++i) require(b.side(i) > 0.0, "region must have positive sides");
}

}  // namespace

std::string describe(const Construction& c) {
  std::ostringstream s;
  s.precision(17);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        auto lat = [&](const LatticeSpec& l) {
          s << "lattice(basis=[";
          for (std::size_t i = 0; i < l.basis.size(); ++i)
            s << (i ? "," : "") << fmt_vec(l.basis[i], static_cast<int>(l.basis.size()));
          s << "])";
        };
        if constexpr (std::is_same_v<T, LatticeSpec>) {
          lat(v);
        } else if constexpr (std::is_same_v<T, CutProjectSpec>) {
          s << "cut_project(fibonacci,beta=" << v.beta << ")";
        } else if constexpr (std::is_same_v<T, PerturbedSpec>) {
          s << "perturbed(";
          lat(v.lattice);
          s << ",amplitude=" << v.amplitude << ")";
        } else {
          s << "poisson(intensity=" << v.intensity << ")";
        }
      },
      c);
  return s.str();
}

LatticeSpec integer_lattice(int d) {
  require(d >= 1 && d <= kMaxDim, "lattice dimension must be 1..3");
  LatticeSpec l;
  for (int i = 0; i < d; ++i) {
    Vec e{};
    e[static_cast<std::size_t>(i)] = 1.0;
    l.basis.push_back(e);
  }
  return l;
}

// ---------------------------------------------------------------------------
// Spatial index

PointIndex::PointIndex(const std::vector<Vec>& points, int d, double cell) : pts_(&points), d_(d), cell_(cell) {
  require(cell > 0.0, "PointIndex: cell size must be positive");
  Vec lo, hi;
  lo.fill(0.0);
  hi.fill(0.0);
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
    lo[a] = std::numeric_limits<double>::infinity();
    hi[a] = -lo[a];
    for (const auto& p : points) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
    if (points.empty()) lo[a] = hi[a] = 0.0;
    origin_[a] = lo[a];
    dims_[a] = static_cast<long>(std::floor((hi[a] - lo[a]) / cell_)) + 1;
  }
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(dims_[static_cast<std::size_t>(a)]);
  start_.assign(total + 1, 0);
  std::vector<std::size_t> key(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    key[i] = flat(cell_of(points[i]));
    ++start_[key[i] + 1];
  }
  std::partial_sum(start_.begin(), start_.end(), start_.begin());
  items_.resize(points.size());
  std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) items_[fill[key[i]]++] = i;
}

std::array<long, kMaxDim> PointIndex::cell_of(const Vec& x) const {
  std::array<long, kMaxDim> c{0, 0, 0};
  for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) {
    const long v = static_cast<long>(std::floor((x[a] - origin_[a]) / cell_));
    c[a] = std::clamp(v, 0L, dims_[a] - 1);
  }
  return c;
}

std::size_t PointIndex::flat(const std::array<long, kMaxDim>& c) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a)
    k = k * static_cast<std::size_t>(dims_[a]) + static_cast<std::size_t>(c[a]);
  return k;
}

template <class F>
void PointIndex::visit_cells(const std::array<long, kMaxDim>& lo, const std::array<long, kMaxDim>& hi, F&& f) const {
  std::array<long, kMaxDim> c = lo;
  for (;;) {
    const std::size_t k = flat(c);
    for (std::size_t j = start_[k]; j < start_[k + 1]; ++j) f(items_[j]);
    std::size_t a = static_cast<std::size_t>(d_);
    while (a-- > 0) {
      if (++c[a] <= hi[a]) break;
      c[a] = lo[a];
      if (a == 0) return;
    }
  }
}

std::ptrdiff_t PointIndex::find(const Vec& x, double tol) const {
  Vec lo = x, hi = x;
  for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) {
    lo[a] -= tol;
    hi[a] += tol;
  }
  std::ptrdiff_t found = -1;
  double best = std::numeric_limits<double>::infinity();
  visit_cells(cell_of(lo), cell_of(hi), [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) m = std::max(m, std::abs((*pts_)[i][a] - x[a]));
    if (m <= tol && m < best) {
      best = m;
      found = static_cast<std::ptrdiff_t>(i);
    }
  });
  return found;
}

std::ptrdiff_t PointIndex::nearest(const Vec& x) const {
  if (pts_->empty()) return -1;
  std::ptrdiff_t found = -1;
  double best = std::numeric_limits<double>::infinity();
  for (long ring = 0;; ++ring) {
    const double w = static_cast<double>(ring + 1) * cell_;
    Vec lo = x, hi = x;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) {
      lo[a] -= w;
      hi[a] += w;
    }
    visit_cells(cell_of(lo), cell_of(hi), [&](std::size_t i) {
      double m = 0.0;
      for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) m = std::max(m, std::abs((*pts_)[i][a] - x[a]));
      if (m < best || (m == best && static_cast<std::ptrdiff_t>(i) < found)) {
        best = m;
        found = static_cast<std::ptrdiff_t>(i);
      }
    });
    if (found >= 0 && best <= static_cast<double>(ring) * cell_) return found;
    bool covers_all = true;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a)
      covers_all &= cell_of(lo)[a] == 0 && cell_of(hi)[a] == dims_[a] - 1;
    if (covers_all) return found;
  }
}

std::vector<std::size_t> PointIndex::in_box(const Vec& lo, const Vec& hi) const {
  std::vector<std::size_t> out;
  visit_cells(cell_of(lo), cell_of(hi), [&](std::size_t i) {
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a)
      if ((*pts_)[i][a] < lo[a] || (*pts_)[i][a] > hi[a]) return;
    out.push_back(i);
  });
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Constructions

namespace {

double typical_spacing(const std::vector<Vec>& pts, const Box& region) {
  return std::pow(region.volume() / static_cast<double>(std::max<std::size_t>(pts.size(), 1)), 1.0 / region.d);
}

// Euclidean distance from x to the nearest point; infinity for an empty set.
double nearest_euclid(const PointIndex& idx, const std::vector<Vec>& pts, const Vec& x, int d, double start) {
  double w = start;
  for (int iter = 0; iter < 64; ++iter, w *= 2.0) {
    Vec lo = x, hi = x;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
      lo[a] -= w;
      hi[a] += w;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : idx.in_box(lo, hi)) best = std::min(best, euclid(pts[i], x, d));
    if (best <= w) return best;
  }
  return std::numeric_limits<double>::infinity();
}

struct PairWitness {
  double dist = std::numeric_limits<double>::infinity();
  Vec mid{};
};

PairWitness closest_pair(const DeloneSet& s, const Box& inner) {
  PairWitness w;
  const std::size_t n = s.points.size();
  if (s.d == 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double g = s.points[i + 1][0] - s.points[i][0];
      Vec mid{};
      mid[0] = 0.5 * (s.points[i][0] + s.points[i + 1][0]);
      if (g < w.dist && inner.contains(mid)) {
        w.dist = g;
        w.mid = mid;
      }
    }
    return w;
  }
  const double h = typical_spacing(s.points, s.region);
  const PointIndex idx(s.points, s.d, h);
  for (std::size_t i = 0; i < n; ++i) {
    Vec lo = s.points[i], hi = s.points[i];
    for (std::size_t a = 0; a < static_cast<std::size_t>(s.d); ++a) {
      lo[a] -= 2.0 * h;
      hi[a] += 2.0 * h;
    }
    for (std::size_t j : idx.in_box(lo, hi)) {
      if (j <= i) continue;
      const double e = euclid(s.points[i], s.points[j], s.d);
      Vec mid{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(s.d); ++a) mid[a] = 0.5 * (s.points[i][a] + s.points[j][a]);
      if (e < w.dist && inner.contains(mid)) {
        w.dist = e;
        w.mid = mid;
      }
    }
  }
  // pairs farther apart than 2h are irrelevant unless the set is very sparse
  return w;
}

Box shrink(const Box& b, double m) {
  Box r = b;
  for (std::size_t a = 0; a < static_cast<std::size_t>(b.d); ++a) {
    r.lo[a] += m;
    r.hi[a] -= m;
  }
  return r;
}

bool box_nonempty(const Box& b) {
  for (int a = 0; a < b.d; ++a)
    if (!(b.side(a) > 0.0)) return false;
  return true;
}

// Largest distance from a centre of `inner` to the set (the first such centre
// exceeding `limit` is returned as the witness when limit is finite).
std::pair<double, std::optional<Vec>> covering_probe(const DeloneSet& s, const Box& inner, double limit) {
  double worst = 0.0;
  if (s.d == 1) {
    // uncovered parts of [lo, hi] by the intervals [x - limit, x + limit]
    const double lo = inner.lo[0], hi = inner.hi[0];
    double prev = -std::numeric_limits<double>::infinity();
    std::optional<Vec> wit;
    auto gap = [&](double a, double b) {  // empty stretch (a, b) between points
      const double c0 = std::max(lo, a), c1 = std::min(hi, b);
      if (c0 > c1) return;
      const double mid = std::clamp(0.5 * (a + b), c0, c1);
      const double dd = std::min(mid - a, b - mid);
      if (dd > worst) worst = dd;
      if (!wit && dd > limit) {
        Vec v{};
        v[0] = mid;
        wit = v;
      }
    };
    for (const auto& p : s.points) {
      gap(prev, p[0]);
      prev = p[0];
    }
    gap(prev, std::numeric_limits<double>::infinity());
    return {worst, wit};
  }
  const double h = typical_spacing(s.points, s.region);
  const PointIndex idx(s.points, s.d, h);
  const double step = h / 8.0;
  std::array<long, kMaxDim> cnt{1, 1, 1};
  for (std::size_t a = 0; a < static_cast<std::size_t>(s.d); ++a)
    cnt[a] = static_cast<long>(std::floor((inner.hi[a] - inner.lo[a]) / step)) + 1;
  std::array<long, kMaxDim> c{0, 0, 0};
  std::optional<Vec> wit;
  for (;;) {
    Vec x{};
    for (std::size_t a = 0; a < static_cast<std::size_t>(s.d); ++a)
      x[a] = std::min(inner.lo[a] + static_cast<double>(c[a]) * step, inner.hi[a]);
    const double dd = nearest_euclid(idx, s.points, x, s.d, h);
    worst = std::max(worst, dd);
    if (!wit && dd > limit) wit = x;
    std::size_t a = static_cast<std::size_t>(s.d);
    bool done = true;
    while (a-- > 0) {
      if (++c[a] < cnt[a]) {
        done = false;
        break;
      }
      c[a] = 0;
    }
    if (done) break;
  }
  return {worst, wit};
}

void measure_radii(DeloneSet& s) {
  s.r = 0.5 * closest_pair(s, s.region).dist;
  if (!std::isfinite(s.r)) s.r = 0.0;
  // covering radius away from a boundary strip of one typical spacing
  const Box inner = shrink(s.region, 2.0 * typical_spacing(s.points, s.region));
  s.R = box_nonempty(inner) ? covering_probe(s, inner, std::numeric_limits<double>::infinity()).first : 0.0;
}

bool lex_less(const Vec& a, const Vec& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

std::vector<Vec> lattice_points(const LatticeSpec& l, const Box& region) {
  const int d = region.d;
  require(static_cast<int>(l.basis.size()) == d, "lattice basis must have one vector per dimension");
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) B(i, j) = l.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  const Eigen::MatrixXd Bd = B.topLeftCorner(d, d);
  require(std::abs(Bd.determinant()) > 1e-12, "lattice basis is degenerate");
  const Eigen::MatrixXd inv = Bd.inverse();
  std::array<long, kMaxDim> clo{0, 0, 0}, chi{0, 0, 0};
  for (int j = 0; j < d; ++j) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (int corner = 0; corner < (1 << d); ++corner) {
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i)
        x(i) = (corner >> i & 1) ? region.hi[static_cast<std::size_t>(i)] : region.lo[static_cast<std::size_t>(i)];
      const double c = inv.row(j).dot(x);
      mn = std::min(mn, c);
      mx = std::max(mx, c);
    }
    clo[static_cast<std::size_t>(j)] = static_cast<long>(std::floor(mn)) - 1;
    chi[static_cast<std::size_t>(j)] = static_cast<long>(std::ceil(mx)) + 1;
  }
  double count = 1.0;
  for (int j = 0; j < d; ++j) count *= static_cast<double>(chi[static_cast<std::size_t>(j)] - clo[static_cast<std::size_t>(j)] + 1);
  require(count < 5e7, "lattice patch too large");
  std::vector<Vec> out;
  std::array<long, kMaxDim> c = clo;
  for (;;) {
    Vec x{};
    for (int i = 0; i < d; ++i) {
      double v = 0.0;
      for (int j = 0; j < d; ++j)
        v += static_cast<double>(c[static_cast<std::size_t>(j)]) * B(i, j);
      x[static_cast<std::size_t>(i)] = v;
    }
    if (region.contains(x)) out.push_back(x);
    std::size_t a = static_cast<std::size_t>(d);
    bool done = true;
    while (a-- > 0) {
      if (++c[a] <= chi[a]) {
        done = false;
        break;
      }
      c[a] = clo[a];
    }
    if (done) break;
  }
  return out;
}

}  // namespace

DeloneSet make_delone(std::vector<Vec> points, const Box& region, std::string construction) {
  check_box(region);
  std::erase_if(points, [&](const Vec& p) { return !region.contains(p); });
  require(!points.empty(), "Delone construction produced no points in the region");
  std::sort(points.begin(), points.end(), lex_less);
  DeloneSet s;
  s.d = region.d;
  s.region = region;
  s.points = std::move(points);
  s.construction = std::move(construction);
  measure_radii(s);
  return s;
}

DeloneSet build_delone(const Construction& c, const Box& region, std::uint64_t seed) {
  check_box(region);
  std::vector<Vec> pts;
  KnownClass known = KnownClass::unknown;
  bool repetitive = false;
  if (const auto* l = std::get_if<LatticeSpec>(&c)) {
    pts = lattice_points(*l, region);
    known = KnownClass::discrete_spectrum;
    repetitive = true;
  } else if (const auto* cp = std::get_if<CutProjectSpec>(&c)) {
    require(region.d == 1, "the Fibonacci cut-and-project set is one-dimensional");
    require(std::isfinite(cp->beta), "cut_project: beta must be finite");
    constexpr double inv_phi = kGoldenFraction;
    const double mean_gap = 1.0 + inv_phi * inv_phi;
    auto x_of = [&](long m) {
      return static_cast<double>(m) + std::floor(static_cast<double>(m) * inv_phi + cp->beta) * inv_phi;
    };
    long m = static_cast<long>(std::floor(region.lo[0] / mean_gap)) - 4;
    while (x_of(m) >= region.lo[0]) m -= 4;
    for (;; ++m) {
      const double x = x_of(m);
      if (x >= region.hi[0]) break;
      if (x >= region.lo[0]) pts.push_back({x, 0.0, 0.0});
    }
    known = KnownClass::discrete_spectrum;
    repetitive = true;
  } else if (const auto* pp = std::get_if<PerturbedSpec>(&c)) {
    require(pp->amplitude >= 0.0 && std::isfinite(pp->amplitude), "perturbed: amplitude must be >= 0");
    pts = lattice_points(pp->lattice, region);
    Rng rng(seed);
    for (auto& p : pts)
      for (int a = 0; a < region.d; ++a) p[static_cast<std::size_t>(a)] += rng.uniform(-pp->amplitude, pp->amplitude);
    if (pp->amplitude == 0.0) {
      known = KnownClass::discrete_spectrum;
      repetitive = true;
    }
  } else {
    const auto& po = std::get<PoissonSpec>(c);
    require(po.intensity > 0.0 && std::isfinite(po.intensity), "poisson: intensity must be positive");
    const double expected = po.intensity * region.volume();
    require(expected >= 1.0, "poisson: region volume too small for the intensity");
    require(expected < 5e7, "poisson: patch too large");
    const auto n = static_cast<std::size_t>(std::llround(expected));
    Rng rng(seed);
    pts.resize(n);
    for (auto& p : pts)
      for (int a = 0; a < region.d; ++a)
        p[static_cast<std::size_t>(a)] = rng.uniform(region.lo[static_cast<std::size_t>(a)], region.hi[static_cast<std::size_t>(a)]);
  }
  DeloneSet s = make_delone(std::move(pts), region, describe(c));
  s.known = known;
  s.repetitive = repetitive;
  return s;
}

DeloneCheck delone_check(const DeloneSet& s, double r, double R) {
  require(r > 0.0 && R > 0.0, "delone_check: radii must be positive");
  const Box inner = shrink(s.region, R);
  require(box_nonempty(inner), "delone_check: region smaller than the boundary margin");
  DeloneCheck out;
  const PairWitness pw = closest_pair(s, inner);
  if (pw.dist < 2.0 * r) {
    out.ok = false;
    out.failure = "packing";
    out.witness = pw.mid;
    return out;
  }
  const auto [worst, wit] = covering_probe(s, inner, R);
  if (wit) {
    out.ok = false;
    out.failure = "covering";
    out.witness = wit;
  }
  (void)worst;
  return out;
}

// ---------------------------------------------------------------------------
// Periods

PeriodReport find_periods(const DeloneSet& s, double tol) {
  PeriodReport rep;
  const int d = s.d;
  const double h = typical_spacing(s.points, s.region);
  const PointIndex idx(s.points, d, h);
  Vec centre{};
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) centre[a] = 0.5 * (s.region.lo[a] + s.region.hi[a]);
  const auto c = idx.nearest(centre);
  const double w = 4.0 * std::max(s.R, h) + h;
  Vec lo = s.points[static_cast<std::size_t>(c)], hi = lo;
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
    lo[a] -= w;
    hi[a] += w;
  }
  std::vector<Vec> cands;
  for (std::size_t j : idx.in_box(lo, hi)) {
    if (static_cast<std::ptrdiff_t>(j) == c) continue;
    Vec p{};
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) p[a] = s.points[j][a] - s.points[static_cast<std::size_t>(c)][a];
    cands.push_back(p);
  }
  std::stable_sort(cands.begin(), cands.end(), [&](const Vec& a, const Vec& b) { return euclid(a, {}, d) < euclid(b, {}, d); });
  const double scale = tol * (1.0 + sup_norm(s.region.hi, d) + sup_norm(s.region.lo, d));

  auto is_period = [&](const Vec& p) {
    for (int sign : {1, -1}) {
      Box target = s.region;
      for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
        target.lo[a] += scale;
        target.hi[a] -= scale;
      }
      for (const auto& x : s.points) {
        Vec y = x;
        for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) y[a] += sign * p[a];
        if (!target.contains(y)) continue;
        if (idx.find(y, scale) < 0) return false;
      }
    }
    return true;
  };

  for (const auto& p : cands) {
    if (rep.rank == d) break;
    // skip candidates dependent on periods already found
    Eigen::MatrixXd m(d, rep.rank + 1);
    for (int k = 0; k < rep.rank; ++k)
      for (int a = 0; a < d; ++a) m(a, k) = rep.periods[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
    for (int a = 0; a < d; ++a) m(a, rep.rank) = p[static_cast<std::size_t>(a)];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-9);
    if (lu.rank() <= rep.rank) continue;
    ++rep.candidates_tested;
    if (is_period(p)) {
      rep.periods.push_back(p);
      ++rep.rank;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Diffraction

namespace {

struct WindowSet {
  double volume = 0.0;
  Vec side{};
  // per window: SoA coordinates relative to the window corner
  std::vector<std::vector<double>> coords;
  std::vector<std::size_t> counts;
};

WindowSet split_windows(const DeloneSet& s, std::size_t parts) {
  const int d = s.d;
  WindowSet ws;
  std::size_t nw = 1;
  for (int a = 0; a < d; ++a) nw *= parts;
  ws.volume = 1.0;
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
    ws.side[a] = (s.region.hi[a] - s.region.lo[a]) / static_cast<double>(parts);
    ws.volume *= ws.side[a];
  }
  std::vector<std::vector<Vec>> members(nw);
  for (const auto& p : s.points) {
    std::size_t k = 0;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
      auto c = static_cast<std::size_t>(std::floor((p[a] - s.region.lo[a]) / ws.side[a]));
      c = std::min(c, parts - 1);
      k = k * parts + c;
    }
    Vec rel{};
    std::size_t kk = k;
    std::array<std::size_t, kMaxDim> cell{};
    for (std::size_t a = static_cast<std::size_t>(d); a-- > 0;) {
      cell[a] = kk % parts;
      kk /= parts;
    }
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a)
      rel[a] = p[a] - (s.region.lo[a] + static_cast<double>(cell[a]) * ws.side[a]);
    members[k].push_back(rel);
  }
  ws.coords.resize(nw);
  ws.counts.resize(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t n = members[w].size();
    ws.counts[w] = n;
    ws.coords[w].resize(n * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) ws.coords[w][a * n + i] = members[w][i][a];
  }
  return ws;
}

// Mean of |S_W(k)|^2 / ν(W) over the windows of a level.
double level_intensity(const WindowSet& ws, int d, const Vec& k) {
  double acc = 0.0;
  for (std::size_t w = 0; w < ws.coords.size(); ++w) {
    if (ws.counts[w] == 0) continue;
    const cplx z = kernels::active().exp_sum(nullptr, ws.coords[w].data(), ws.counts[w], static_cast<std::size_t>(d), k.data());
    acc += std::norm(z);
  }
  return acc / (ws.volume * static_cast<double>(ws.coords.size()));
}

// Coordinate-wise golden-section maximisation inside k0 ± half.
Vec refine_peak(const WindowSet& ws, int d, Vec k0, double half) {
  constexpr double g = 0.6180339887498949;
  auto f = [&](const Vec& k) { return level_intensity(ws, d, k); };
  const int sweeps = d == 1 ? 1 : 2;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
      double lo = k0[a] - half, hi = k0[a] + half;
      Vec x1 = k0, x2 = k0;
      x1[a] = hi - g * (hi - lo);
      x2[a] = lo + g * (hi - lo);
      double f1 = f(x1), f2 = f(x2);
      while (hi - lo > 1e-3 * half && hi - lo > 1e-10) {
        if (f1 < f2) {
          lo = x1[a];
          x1[a] = x2[a];
          f1 = f2;
          x2[a] = lo + g * (hi - lo);
          f2 = f(x2);
        } else {
          hi = x2[a];
          x2[a] = x1[a];
          f2 = f1;
          x1[a] = hi - g * (hi - lo);
          f1 = f(x1);
        }
      }
      Vec best = k0;
      best[a] = 0.5 * (lo + hi);
      if (f(best) >= f(k0)) k0 = best;
    }
  }
  return k0;
}

}  // namespace

double window_intensity(const DeloneSet& s, const Box& w, const Vec& k) {
  require(w.d == s.d, "window dimension does not match the set");
  check_box(w);
  std::vector<Vec> in;
  for (const auto& p : s.points)
    if (w.contains(p)) in.push_back(p);
  const std::size_t n = in.size();
  std::vector<double> soa(n * static_cast<std::size_t>(s.d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < static_cast<std::size_t>(s.d); ++a) soa[a * n + i] = in[i][a] - w.lo[a];
  const cplx z = n ? kernels::active().exp_sum(nullptr, soa.data(), n, static_cast<std::size_t>(s.d), k.data()) : cplx{};
  return std::norm(z) / w.volume();
}

std::size_t DiffractionSpectrum::accepted_count() const {
  return static_cast<std::size_t>(std::count_if(peaks.begin(), peaks.end(), [](const auto& p) { return p.accepted; }));
}

double DiffractionSpectrum::max_position_drift() const {
  double m = 0.0;
  for (const auto& p : peaks) {
    if (!p.accepted || p.positions.size() < 2) continue;
    const Vec& a = p.positions[p.positions.size() - 1];
    const Vec& b = p.positions[p.positions.size() - 2];
    Vec diff{};
    for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) diff[i] = a[i] - b[i];
    m = std::max(m, sup_norm(diff, d));
  }
  return m;
}

DiffractionSpectrum diffraction(const DeloneSet& s, const DiffractionConfig& cfg) {
  require(cfg.window_levels >= 2, "diffraction: at least two window sizes are needed");
  require(cfg.band > 0.0 && cfg.kappa > 0.0 && cfg.ratio_band >= 1.0, "diffraction: invalid configuration");
  const int d = s.d;
  const std::size_t levels = cfg.window_levels;
  std::vector<WindowSet> ws(levels);
  for (std::size_t l = 0; l < levels; ++l) ws[l] = split_windows(s, std::size_t{1} << (levels - 1 - l));
  double lmax = 0.0, lmin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
    lmax = std::max(lmax, ws.back().side[a]);
    lmin = std::min(lmin, ws.front().side[a]);
  }
  require(lmin * static_cast<double>(s.points.size()) > 0.0, "diffraction: degenerate window");

  DiffractionSpectrum out;
  out.d = d;
  for (const auto& w : ws) out.window_sizes.push_back(w.side[0]);
  out.step = 1.0 / (2.0 * lmax);
  out.zero_exclusion = cfg.zero_halfwidth / lmin;
  const auto per_axis = static_cast<std::size_t>(std::floor(cfg.band / out.step + 1e-9)) + 1;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;
  require(total <= 20'000'000, "diffraction: frequency grid too large");
  out.freqs.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i;
    for (std::size_t a = static_cast<std::size_t>(d); a-- > 0;) {
      out.freqs[i][a] = static_cast<double>(r % per_axis) * out.step;
      r /= per_axis;
    }
  }
  out.intensities.resize(total);
  const WindowSet& top = ws.back();
  parallel_for(total, [&](std::size_t i) { out.intensities[i] = level_intensity(top, d, out.freqs[i]); });

  std::vector<char> excluded(total);
  std::vector<double> kept;
  double imax = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    excluded[i] = sup_norm(out.freqs[i], d) <= out.zero_exclusion;
    if (!excluded[i]) {
      kept.push_back(out.intensities[i]);
      imax = std::max(imax, out.intensities[i]);
    }
  }
  double median = 0.0;
  if (!kept.empty()) {
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(kept.size() / 2), kept.end());
    median = kept[kept.size() / 2];
  }
  const double threshold = std::max(cfg.kappa * median, cfg.relative_floor * imax);

  // local maxima over the full neighbourhood
  auto neighbour_ok = [&](std::size_t i) {
    std::array<long, kMaxDim> c{0, 0, 0};
    std::size_t r = i;
    for (std::size_t a = static_cast<std::size_t>(d); a-- > 0;) {
      c[a] = static_cast<long>(r % per_axis);
      r /= per_axis;
    }
    const int nb = d == 1 ? 3 : (d == 2 ? 9 : 27);
    for (int m = 0; m < nb; ++m) {
      int mm = m;
      std::size_t j = 0;
      bool self = true, inside = true;
      for (int a = 0; a < d; ++a) {
        const int off = mm % 3 - 1;
        mm /= 3;
        self &= off == 0;
        const long v = c[static_cast<std::size_t>(a)] + off;
        if (v < 0 || v >= static_cast<long>(per_axis)) inside = false;
        j = j * per_axis + static_cast<std::size_t>(std::max(0L, v));
      }
      if (self || !inside) continue;
      if (out.intensities[j] > out.intensities[i]) return false;
    }
    return true;
  };
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < total; ++i)
    if (!excluded[i] && out.intensities[i] >= threshold && out.intensities[i] > 0.0 && neighbour_ok(i)) cand.push_back(i);
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return out.intensities[a] > out.intensities[b]; });

  const double halfwidth = cfg.peak_halfwidth / lmax;
  std::vector<Vec> processed;
  for (std::size_t i : cand) {
    const Vec& k0 = out.freqs[i];
    bool shadowed = false;
    for (const auto& q : processed) {
      Vec diff{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) diff[a] = k0[a] - q[a];
      if (sup_norm(diff, d) <= halfwidth) {
        shadowed = true;
        break;
      }
    }
    if (shadowed) continue;
    processed.push_back(k0);
    out.peaks.push_back({});
    out.peaks.back().k = k0;
  }
  parallel_for(out.peaks.size(), [&](std::size_t pi) {
    DiffractionPeak& pk = out.peaks[pi];
    pk.k = refine_peak(top, d, pk.k, out.step);
    std::vector<double> inten(levels);
    pk.positions.resize(levels);
    pk.positions[levels - 1] = pk.k;
    inten[levels - 1] = level_intensity(top, d, pk.k);
    for (std::size_t l = levels - 1; l-- > 0;) {
      const double half = 1.0 / (2.0 * ws[l].side[0]);
      pk.positions[l] = refine_peak(ws[l], d, pk.k, half);
      inten[l] = level_intensity(ws[l], d, pk.positions[l]);
    }
    pk.intensity = inten[levels - 1];
    pk.accepted = true;
    for (std::size_t l = 0; l + 1 < levels; ++l) {
      const double ratio = (inten[l + 1] / ws[l + 1].volume) / (inten[l] / ws[l].volume);
      pk.ratios.push_back(ratio);
      if (!(ratio >= 1.0 / cfg.ratio_band && ratio <= cfg.ratio_band)) pk.accepted = false;
    }
  });

  out.is_peak.assign(total, 0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    if (excluded[i]) continue;
    den += out.intensities[i];
    for (const auto& pk : out.peaks) {
      if (!pk.accepted) continue;
      Vec diff{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) diff[a] = out.freqs[i][a] - pk.k[a];
      if (sup_norm(diff, d) <= halfwidth) {
        out.is_peak[i] = 1;
        break;
      }
    }
    if (out.is_peak[i]) num += out.intensities[i];
  }
  out.point_fraction = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Classification

std::string to_string(DeloneClass c) {
  switch (c) {
    case DeloneClass::crystalline: return "crystalline";
    case DeloneClass::quasicrystalline: return "quasicrystalline";
    case DeloneClass::neither: return "neither";
  }
  return "?";
}

DeloneConfig default_delone_config(int d) {
  DeloneConfig c;
  c.hull.tau = 0.05;
  c.hull.eps_grid = {1.0, 0.5, 0.25, 0.125};
  if (d == 1) {
    c.hull.sched = Schedule({256, 512, 1024, 2048}, 2);
    c.hull.mesh = 0.5;
    c.hull.sampler.n_centers = 16;
    c.hull.sampler.n_per_ball = 12;
    c.diffraction.band = 2.5;
  } else {
    c.hull.sched = Schedule({8, 16, 32}, 1);
    c.hull.mesh = 1.0;
    c.hull.eps_grid = {1.0, 0.5, 0.25};
    c.hull.sampler.n_centers = 8;
    c.hull.sampler.n_per_ball = 8;
    c.diffraction.band = 1.5;
  }
  return c;
}

DeloneReport classify_delone(const DeloneSet& s, const DeloneConfig& cfg) {
  require(s.r > 0.0, "classify_delone: the point set has coincident points");
  const DeloneCheck chk = delone_check(s, s.r * (1.0 - 1e-9), std::max(s.R, s.r) * (1.0 + 1e-9));
  require(chk.ok, "classify_delone: the set fails its own Delone check (" + chk.failure + ")");
  DeloneReport rep;
  rep.periods = find_periods(s);

  HullParams hp = cfg.hull_params;
  hp.reach = std::max(hp.reach, cfg.hull.sched.largest());
  const SystemHandle hull = hull_system(std::make_shared<const DeloneSet>(s), hp);
  rep.system = hull->tag();
  const BallProfile prof = ball_profile(*hull, nullptr, {ProbeStat::db, ProbeStat::sup_dist}, cfg.hull, 0x48554c4c);
  rep.plain = equicontinuity_from_profile(prof, ProbeStat::sup_dist, cfg.hull.eps_grid, 0.0);
  rep.plain.flavor = Flavor::topological;
  rep.mu = equicontinuity_from_profile(prof, ProbeStat::db, cfg.hull.eps_grid, cfg.hull.tau);
  rep.mu.flavor = Flavor::mu_relative;

  rep.diffraction = diffraction(s, cfg.diffraction);

  if (rep.periods.rank == s.d) rep.cls = DeloneClass::crystalline;
  else if (rep.mu.equicontinuous && rep.diffraction.point_fraction >= cfg.point_fraction_threshold)
    rep.cls = DeloneClass::quasicrystalline;
  else rep.cls = DeloneClass::neither;
  return rep;
}

// ---------------------------------------------------------------------------
// Plain-text point lists

void write_points(std::ostream& os, const DeloneSet& s) {
  os.precision(17);
  for (const auto& p : s.points) {
    for (int a = 0; a < s.d; ++a) os << (a ? " " : "") << p[static_cast<std::size_t>(a)];
    os << '\n';
  }
}

DeloneSet read_points(std::istream& is, std::optional<Box> region) {
  std::vector<Vec> pts;
  int d = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw InvalidArgument("point list line " + std::to_string(lineno) + ": not a number");
    if (v.empty()) continue;
    if (d == 0) d = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != d || d > kMaxDim)
      throw InvalidArgument("point list line " + std::to_string(lineno) + ": expected " + std::to_string(d) + " coordinates");
    Vec p{};
    for (std::size_t a = 0; a < v.size(); ++a) p[a] = v[a];
    pts.push_back(p);
  }
  require(!pts.empty(), "point list is empty");
  Box b;
  if (region) {
    b = *region;
    require(b.d == d, "region dimension does not match the point list");
  } else {
    b.d = d;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
      double lo = pts[0][a], hi = pts[0][a];
      for (const auto& p : pts) {
        lo = std::min(lo, p[a]);
        hi = std::max(hi, p[a]);
      }
      b.lo[a] = lo - 0.5;
      b.hi[a] = hi + 0.5;
    }
  }
  return make_delone(std::move(pts), b, "points");
}

}  // namespace besi
