#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "besi/delone.hpp"

namespace besi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DeloneHull final : public System {
 public:
  DeloneHull(std::shared_ptr<const DeloneSet> set, HullParams p)
      : set_(std::move(set)),
        d_(set_->d),
        idx_(set_->points, set_->d, std::max(set_->r, 0.25)) {
    rmax_ = p.patch_radius > 0.0 ? p.patch_radius : (d_ == 1 ? 256.0 : 4.0);
    require(rmax_ >= 1.0, "hull: patch radius must be at least 1");
    require(p.reach >= 0.0, "hull: reach must be nonnegative");
    reach_ = p.reach;
    margin_ = rmax_ + 2.0 * set_->R + 3.0;
    double scale = 0.0;
    for (int a = 0; a < d_; ++a) {
      scale = std::max({scale, std::abs(set_->region.lo[static_cast<std::size_t>(a)]),
                        std::abs(set_->region.hi[static_cast<std::size_t>(a)])});
      require(sample_hi(a) > sample_lo(a),
              "hull: region too small for patch radius " + std::to_string(rmax_) + " and reach " +
                  std::to_string(reach_));
    }
    tol_ = 1e-9 * (1.0 + scale);
    if (d_ == 1) {
      xs_.reserve(set_->points.size());
      for (const auto& q : set_->points) xs_.push_back(q[0]);
    }
  }

  std::string tag() const override { return "delone_hull(" + set_->construction + ")"; }
  PointKind point_kind() const override { return PointKind::delone_patch; }
  GroupKind group_kind() const override { return GroupKind::continuous; }
  int group_dim() const override { return d_; }
  double diameter() const override { return 1.0; }
  KnownClass known_class() const override { return set_->known; }
  bool minimal() const override { return set_->repetitive; }

  Point act(const GroupIndex& g, const Point& x) const override {
    require(g.kind() == GroupKind::continuous && g.dim() == d_, "hull: group element does not match the action");
    TranslationPoint y = own(x);
    for (int a = 0; a < d_; ++a) y.t[static_cast<std::size_t>(a)] += g[a];
    check_safe(y);
    return y;
  }

  void advance_in_place(Point& y, const Point& x, const GroupIndex& g) const override {
    auto* ty = y.as<TranslationPoint>();
    const TranslationPoint& tx = own(x);
    if (ty == nullptr) {
      y = act(g, x);
      return;
    }
    for (int a = 0; a < d_; ++a) ty->t[static_cast<std::size_t>(a)] = tx.t[static_cast<std::size_t>(a)] + g[a];
    check_safe(*ty);
  }

  double dist(const Point& x, const Point& y) const override {
    const TranslationPoint& a = own(x);
    const TranslationPoint& b = own(y);
    return std::min(directed(a.t, b.t), directed(b.t, a.t));
  }

  Point sample_mu(std::uint64_t seed) const override {
    Rng rng(seed);
    TranslationPoint p;
    p.d = d_;
    for (int a = 0; a < d_; ++a) p.t[static_cast<std::size_t>(a)] = rng.uniform(sample_lo(a), sample_hi(a));
    return p;
  }

  std::vector<Point> sample_ball(const Point& center, Radius r, std::size_t count, std::uint64_t seed) const override {
    const double delta = r.value();
    if (delta >= diameter()) return System::sample_ball(center, r, count, seed);
    const TranslationPoint& c = own(center);
    Rng rng(seed);
    const double rs = std::min(1.0 / delta + 1.0, rmax_ + 1.0) + 1.0;
    const std::vector<Vec> rets = returns(c.t, rs, rng);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      bool ok = false;
      for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
        const Vec& p = rets[rng.below(rets.size())];
        TranslationPoint y;
        y.d = d_;
        bool inside = true;
        for (int a = 0; a < d_; ++a) {
          const auto aa = static_cast<std::size_t>(a);
          y.t[aa] = c.t[aa] + p[aa] + rng.uniform(-delta, delta);
          inside &= y.t[aa] >= sample_lo(a) && y.t[aa] <= sample_hi(a);
        }
        if (!inside || dist(center, y) > delta) continue;
        out.push_back(y);
        ok = true;
      }
      if (!ok) throw SamplingExhausted("hull: no point of the ball found after 64 attempts");
    }
    return out;
  }

  std::vector<double> ball_depths(const Schedule&) const override {
    const int top = static_cast<int>(std::floor(std::log2(rmax_) + 1e-9)) + 1;
    std::vector<double> d;
    const int stride = top >= 6 ? 2 : 1;
    for (int k = stride; k <= top; k += stride) d.push_back(k);
    if (d.empty()) d.push_back(1.0);
    return d;
  }

  Radius pullback_radius(const GroupIndex& g, Radius r) const override {
    double m = 0.0;
    for (int a = 0; a < g.dim(); ++a) m = std::max(m, std::abs(g[a]));
    return Radius::from_depth(std::log2(std::exp2(r.depth()) + m));
  }

 protected:
  Point sample_ball_point(const Point& center, Radius r, Rng& rng) const override {
    return sample_ball(center, r, 1, rng.bits()).front();
  }

 private:
  double sample_lo(int a) const { return set_->region.lo[static_cast<std::size_t>(a)] + margin_; }
  double sample_hi(int a) const { return set_->region.hi[static_cast<std::size_t>(a)] - margin_ - reach_; }

  const TranslationPoint& own(const Point& x) const {
    const auto* p = x.as<TranslationPoint>();
    require(p != nullptr && p->d == d_, "hull: point is not a translation of this set");
    return *p;
  }

  void check_safe(const TranslationPoint& y) const {
    for (int a = 0; a < d_; ++a) {
      const auto aa = static_cast<std::size_t>(a);
      if (y.t[aa] < set_->region.lo[aa] + margin_ || y.t[aa] > set_->region.hi[aa] - margin_)
        throw InvalidArgument("hull: translation exits the safe region of the patch");
    }
  }

  std::size_t nearest1(double t) const {
    auto it = std::lower_bound(xs_.begin(), xs_.end(), t);
    if (it == xs_.end()) return xs_.size() - 1;
    if (it != xs_.begin() && t - *(it - 1) <= *it - t) --it;
    return static_cast<std::size_t>(it - xs_.begin());
  }

  // Agreement radius of (Λ - t1 + s) and (Λ - t2) walking outward from the
  // matched anchors xs[a] and xs[j]; infinity past rmax.
  double agreement1(std::size_t a, std::size_t j, double t1, double t2, double s) const {
    const std::size_t n = xs_.size();
    double rf = kInf, rb = kInf;
    for (std::size_t k = 1;; ++k) {
      if (a + k >= n || j + k >= n) throw InvalidArgument("hull: patch comparison left the point set");
      const double px = xs_[a + k] - t1 + s, py = xs_[j + k] - t2;
      if (std::abs((xs_[a + k] - xs_[a]) - (xs_[j + k] - xs_[j])) > tol_) {
        rf = std::min(std::abs(px), std::abs(py));
        break;
      }
      if (std::min(px, py) > rmax_) break;
    }
    for (std::size_t k = 1;; ++k) {
      if (k > a || k > j) throw InvalidArgument("hull: patch comparison left the point set");
      const double px = xs_[a - k] - t1 + s, py = xs_[j - k] - t2;
      if (std::abs((xs_[a] - xs_[a - k]) - (xs_[j] - xs_[j - k])) > tol_) {
        rb = std::min(std::abs(px), std::abs(py));
        break;
      }
      if (std::max(px, py) < -rmax_) break;
    }
    const double r = std::min(rf, rb);
    return r > rmax_ ? kInf : r;
  }

  double directed(const Vec& t1, const Vec& t2) const { return d_ == 1 ? directed1(t1[0], t2[0]) : directed_nd(t1, t2); }

  double directed1(double t1, double t2) const {
    const std::size_t a = nearest1(t1);
    const double A = xs_[a] - t1;
    double best = 1.0;
    auto j = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), t2 + A - 1.0) - xs_.begin());
    for (; j < xs_.size() && xs_[j] - t2 <= A + 1.0; ++j) {
      const double s = (xs_[j] - t2) - A;
      if (std::abs(s) >= best) continue;
      const double R = agreement1(a, j, t1, t2, s);
      const double v = std::isinf(R) ? std::abs(s) : std::max(std::abs(s), 1.0 / R);
      best = std::min(best, v);
    }
    return best;
  }

  std::vector<Vec> patch(const Vec& t, double radius) const {
    Vec lo = t, hi = t;
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) {
      lo[a] -= radius;
      hi[a] += radius;
    }
    std::vector<Vec> out;
    for (std::size_t i : idx_.in_box(lo, hi)) {
      Vec p{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) p[a] = set_->points[i][a] - t[a];
      out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(), [&](const Vec& u, const Vec& v) { return sup_norm(u, d_) < sup_norm(v, d_); });
    return out;
  }

  double directed_nd(const Vec& t1, const Vec& t2) const {
    const auto ia = idx_.nearest(t1);
    Vec A{};
    for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) A[a] = set_->points[static_cast<std::size_t>(ia)][a] - t1[a];
    const std::vector<Vec> px = patch(t1, rmax_ + 2.0);
    const std::vector<Vec> py = patch(t2, rmax_ + 2.0);
    double best = 1.0;
    for (const auto& q : py) {
      Vec s{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) s[a] = q[a] - A[a];
      const double sn = sup_norm(s, d_);
      if (sn > 1.0 || sn >= best) continue;
      double R = kInf;
      // points of Λ - t1 + s missing from Λ - t2
      for (const auto& p : px) {
        if (sup_norm(p, d_) - sn >= std::min(R, rmax_ + 1.0)) break;
        Vec w{};
        for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) w[a] = p[a] + s[a] + t2[a];
        if (idx_.find(w, tol_) < 0) {
          Vec ps{};
          for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) ps[a] = p[a] + s[a];
          R = std::min(R, sup_norm(ps, d_));
        }
      }
      for (const auto& p : py) {
        if (sup_norm(p, d_) >= std::min(R, rmax_ + 1.0)) break;
        Vec w{};
        for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) w[a] = p[a] - s[a] + t1[a];
        if (idx_.find(w, tol_) < 0) R = std::min(R, sup_norm(p, d_));
      }
      if (R > rmax_) R = kInf;
      const double v = std::isinf(R) ? sn : std::max(sn, 1.0 / R);
      best = std::min(best, v);
    }
    return best;
  }

  // Translations p (differences of set points) after which the patch of
  // radius rs around t reappears, restricted to the sampling range.
  std::vector<Vec> returns(const Vec& t, double rs, Rng& rng) const {
    std::vector<Vec> out;
    Vec zero{};
    out.push_back(zero);
    auto in_range = [&](const Vec& p) {
      for (int a = 0; a < d_; ++a) {
        const double v = t[static_cast<std::size_t>(a)] + p[static_cast<std::size_t>(a)];
        if (v < sample_lo(a) || v > sample_hi(a)) return false;
      }
      return true;
    };
    if (d_ == 1) {
      const std::size_t a = nearest1(t[0]);
      const std::size_t n = xs_.size();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == a) continue;
        Vec p{};
        p[0] = xs_[j] - xs_[a];
        if (!in_range(p)) continue;
        bool match = true;
        for (std::size_t k = 1; match; ++k) {
          if (a + k >= n || j + k >= n) {
            match = false;
            break;
          }
          if (std::abs((xs_[a + k] - xs_[a]) - (xs_[j + k] - xs_[j])) > tol_) match = false;
          else if (xs_[a + k] - t[0] > rs) break;
        }
        for (std::size_t k = 1; match; ++k) {
          if (k > a || k > j) {
            match = false;
            break;
          }
          if (std::abs((xs_[a] - xs_[a - k]) - (xs_[j] - xs_[j - k])) > tol_) match = false;
          else if (t[0] - xs_[a - k] > rs) break;
        }
        if (match) out.push_back(p);
      }
      return out;
    }
    const auto ia = static_cast<std::size_t>(idx_.nearest(t));
    const Vec& xa = set_->points[ia];
    const std::vector<Vec> pt = patch(t, rs);
    std::vector<std::size_t> order(set_->points.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t j : order) {
      if (out.size() >= 256) break;
      if (j == ia) continue;
      Vec p{};
      for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) p[a] = set_->points[j][a] - xa[a];
      if (!in_range(p)) continue;
      Vec tp = t;
      for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) tp[a] += p[a];
      bool match = true;
      for (const auto& q : pt) {
        Vec w{};
        for (std::size_t a = 0; a < static_cast<std::size_t>(d_); ++a) w[a] = q[a] + tp[a];
        if (idx_.find(w, tol_) < 0) {
          match = false;
          break;
        }
      }
      if (match && patch(tp, rs).size() == pt.size()) out.push_back(p);
    }
    return out;
  }

  std::shared_ptr<const DeloneSet> set_;
  int d_;
  PointIndex idx_;
  std::vector<double> xs_;
  double rmax_ = 256.0;
  double reach_ = 0.0;
  double margin_ = 0.0;
  double tol_ = 1e-9;
};

}  // namespace

SystemHandle hull_system(std::shared_ptr<const DeloneSet> set, HullParams params) {
  require(set != nullptr && !set->points.empty(), "hull: empty point set");
  return std::make_shared<const DeloneHull>(std::move(set), params);
}

}  // namespace besi
