#include "besi/windows.hpp"

#include <algorithm>
#include <cmath>

namespace besi {

std::string to_string(GroupKind kind) {
  return kind == GroupKind::discrete ? "discrete" : "continuous";
}

GroupIndex::GroupIndex(GroupKind kind, std::vector<double> coords) : kind_(kind) {
  require(!coords.empty() && coords.size() <= static_cast<std::size_t>(kMaxDim),
          "GroupIndex: dimension must be in [1, 3]");
  d_ = static_cast<int>(coords.size());
  for (int i = 0; i < d_; ++i) {
    const double v = coords[static_cast<std::size_t>(i)];
    require(std::isfinite(v), "GroupIndex: coordinates must be finite");
    if (kind == GroupKind::discrete) require(v == std::floor(v), "GroupIndex: discrete coordinates must be integers");
    c_[static_cast<std::size_t>(i)] = v;
  }
}

GroupIndex GroupIndex::zero(GroupKind kind, int d) {
  return GroupIndex(kind, std::vector<double>(static_cast<std::size_t>(d), 0.0));
}

GroupIndex GroupIndex::operator+(const GroupIndex& o) const {
  require(d_ == o.d_ && kind_ == o.kind_, "GroupIndex: mismatched group");
  GroupIndex r = *this;
  for (int i = 0; i < d_; ++i) r[i] += o[i];
  return r;
}

GroupIndex GroupIndex::operator-() const {
  GroupIndex r = *this;
  for (int i = 0; i < d_; ++i) r[i] = -r[i];
  return r;
}

bool GroupIndex::operator==(const GroupIndex& o) const {
  if (d_ != o.d_ || kind_ != o.kind_) return false;
  for (int i = 0; i < d_; ++i)
    if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)]) return false;
  return true;
}

Window::Window(double n_, GroupKind kind_, int d_, double mesh_)
    : n(n_), kind(kind_), d(d_), mesh(kind_ == GroupKind::discrete ? 1.0 : mesh_) {
  require(std::isfinite(n) && n > 0.0, "Window: side length must be positive");
  require(d >= 1 && d <= kMaxDim, "Window: dimension must be in [1, 3]");
  if (kind == GroupKind::continuous) {
    require(std::isfinite(mesh_) && mesh_ > 0.0, "Window: mesh must be positive");
    require(mesh_ <= n, "Window: mesh must not exceed the side length");
  }
}

std::size_t Window::side_count() const {
  if (kind == GroupKind::discrete) return static_cast<std::size_t>(std::ceil(n));
  return static_cast<std::size_t>(std::floor(n / mesh + 1e-9));
}

std::size_t Window::point_count() const {
  std::size_t c = 1;
  for (int i = 0; i < d; ++i) c *= side_count();
  return c;
}

double Window::cell_volume() const {
  return kind == GroupKind::discrete ? 1.0 : std::pow(mesh, d);
}

double Window::volume() const { return cell_volume() * static_cast<double>(point_count()); }

Enumeration enumerate_window(const Window& w) {
  Enumeration e;
  const std::size_t m = w.side_count();
  const std::size_t total = w.point_count();
  const double h = w.kind == GroupKind::discrete ? 1.0 : w.mesh;
  e.points.reserve(total);
  std::vector<double> c(static_cast<std::size_t>(w.d));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (int a = w.d - 1; a >= 0; --a) {
      c[static_cast<std::size_t>(a)] = static_cast<double>(rem % m) * h;
      rem /= m;
    }
    e.points.emplace_back(w.kind, c);
  }
  e.volume = w.volume();
  return e;
}

Schedule::Schedule(std::vector<double> s, std::size_t b) : sizes(std::move(s)), burn_in(b) {
  validate();
}

void Schedule::validate() const {
  require(sizes.size() >= 2, "Schedule: at least two window sizes are required");
  require(burn_in < sizes.size(), "Schedule: burn_in must be smaller than the number of windows");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    require(std::isfinite(sizes[i]) && sizes[i] > 0.0, "Schedule: sizes must be positive");
    if (i > 0) require(sizes[i] > sizes[i - 1], "Schedule: sizes must be strictly increasing");
  }
}

Schedule Schedule::geometric(double n1, std::size_t count, std::size_t burn_in) {
  require(n1 > 0.0, "Schedule: n1 must be positive");
  std::vector<double> s;
  for (std::size_t k = 0; k < count; ++k) s.push_back(std::ceil(n1 * std::ldexp(1.0, static_cast<int>(k))));
  return Schedule(std::move(s), burn_in);
}

Schedule Schedule::ending_at(double largest, std::size_t count, std::size_t burn_in) {
  require(largest > 0.0, "Schedule: largest window must be positive");
  std::vector<double> s(count);
  for (std::size_t k = 0; k < count; ++k)
    s[count - 1 - k] = std::ceil(largest / std::ldexp(1.0, static_cast<int>(k)));
  return Schedule(std::move(s), burn_in);
}

NestedGrid::NestedGrid(const Schedule& sched, const GridParams& grid) : sched_(sched), grid_(grid) {
  sched_.validate();
  const std::size_t K = sched_.size();
  std::vector<std::size_t> sides(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Window w(sched_.sizes[k], grid.kind, grid.d, grid.mesh);
    sides[k] = w.side_count();
    require(sides[k] > 0, "NestedGrid: window holds no grid points");
    prefix_.push_back(w.point_count());
    volumes_.push_back(w.volume());
    cell_ = w.cell_volume();
  }
  step_ = grid.kind == GroupKind::discrete ? 1.0 : grid.mesh;
  for (std::size_t k = 1; k < K; ++k)
    require(sides[k] > sides[k - 1], "NestedGrid: windows must contain increasing point sets");
  if (grid.d == 1) return;

  const auto d = static_cast<std::size_t>(grid.d);
  cells_.reserve(prefix_.back());
  std::size_t prev = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t m = sides[k];
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) total *= m;
    std::array<std::uint32_t, kMaxDim> c{};
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t rem = i;
      bool inner = true;
      for (std::size_t a = d; a-- > 0;) {
        c[a] = static_cast<std::uint32_t>(rem % m);
        rem /= m;
        if (c[a] >= prev) inner = false;
      }
      if (k > 0 && inner) continue;
      cells_.push_back(c);
    }
    prev = m;
  }
}

GroupIndex NestedGrid::point(std::size_t i) const {
  std::vector<double> c(static_cast<std::size_t>(grid_.d));
  if (grid_.d == 1) {
    c[0] = static_cast<double>(i) * step_;
  } else {
    for (int a = 0; a < grid_.d; ++a) c[static_cast<std::size_t>(a)] = cells_[i][static_cast<std::size_t>(a)] * step_;
  }
  return GroupIndex(grid_.kind, std::move(c));
}

TailStats tail_stats(const std::vector<std::pair<double, double>>& per_window, std::size_t burn_in) {
  require(burn_in < per_window.size(), "tail_stats: no post-burn-in windows");
  TailStats t;
  t.min = t.max = per_window[burn_in].second;
  for (std::size_t k = burn_in; k < per_window.size(); ++k) {
    t.min = std::min(t.min, per_window[k].second);
    t.max = std::max(t.max, per_window[k].second);
  }
  t.last = per_window.back().second;
  return t;
}

DensityEstimate density(const Indicator& indicator, const Schedule& sched, const GridParams& grid) {
  const NestedGrid g(sched, grid);
  DensityEstimate est;
  std::size_t hits = 0, pos = 0;
  for (std::size_t k = 0; k < sched.size(); ++k) {
    for (; pos < g.prefix(k); ++pos)
      if (indicator(g.point(pos))) ++hits;
    est.per_window.emplace_back(sched.sizes[k],
                                static_cast<double>(hits) / static_cast<double>(g.prefix(k)));
  }
  const TailStats t = tail_stats(est.per_window, sched.burn_in);
  est.lower = t.min;
  est.upper = t.max;
  return est;
}

SyndeticResult syndetic_probe_mask(const std::vector<char>& mask, std::size_t side, int d,
                                   std::size_t k_cells, GroupKind kind, double step) {
  require(k_cells >= 1, "syndetic_probe: K_side must cover at least one grid cell");
  require(k_cells <= side, "syndetic_probe: K_side exceeds the largest window");
  SyndeticResult res;
  const std::size_t span = side - k_cells + 1;
  auto corner = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    std::vector<double> c{static_cast<double>(i0) * step};
    if (d >= 2) c.push_back(static_cast<double>(i1) * step);
    if (d >= 3) c.push_back(static_cast<double>(i2) * step);
    return GroupIndex(kind, std::move(c));
  };

  if (d == 1) {
    std::vector<std::size_t> pre(side + 1, 0);
    for (std::size_t i = 0; i < side; ++i) pre[i + 1] = pre[i] + (mask[i] ? 1 : 0);
    for (std::size_t t = 0; t < span; ++t)
      if (pre[t + k_cells] == pre[t]) {
        ++res.empty_translates;
        res.witness = corner(t, 0, 0);
      }
  } else if (d == 2) {
    const std::size_t s1 = side + 1;
    std::vector<std::size_t> pre(s1 * s1, 0);
    for (std::size_t i = 0; i < side; ++i)
      for (std::size_t j = 0; j < side; ++j)
        pre[(i + 1) * s1 + j + 1] = (mask[i * side + j] ? 1 : 0) + pre[i * s1 + j + 1] +
                                    pre[(i + 1) * s1 + j] - pre[i * s1 + j];
    for (std::size_t i = 0; i < span; ++i)
      for (std::size_t j = 0; j < span; ++j) {
        const std::size_t a = i + k_cells, b = j + k_cells;
        const std::size_t box = pre[a * s1 + b] + pre[i * s1 + j] - pre[i * s1 + b] - pre[a * s1 + j];
        if (box == 0) {
          ++res.empty_translates;
          res.witness = corner(i, j, 0);
        }
      }
  } else {
    const std::size_t s1 = side + 1;
    std::vector<std::size_t> pre(s1 * s1 * s1, 0);
    auto P = [&](std::size_t i, std::size_t j, std::size_t l) -> std::size_t& { return pre[(i * s1 + j) * s1 + l]; };
    for (std::size_t i = 0; i < side; ++i)
      for (std::size_t j = 0; j < side; ++j)
        for (std::size_t l = 0; l < side; ++l)
          P(i + 1, j + 1, l + 1) = (mask[(i * side + j) * side + l] ? 1 : 0) + P(i, j + 1, l + 1) +
                                   P(i + 1, j, l + 1) + P(i + 1, j + 1, l) - P(i, j, l + 1) -
                                   P(i, j + 1, l) - P(i + 1, j, l) + P(i, j, l);
    for (std::size_t i = 0; i < span; ++i)
      for (std::size_t j = 0; j < span; ++j)
        for (std::size_t l = 0; l < span; ++l) {
          const std::size_t a = i + k_cells, b = j + k_cells, c = l + k_cells;
          const long long box = static_cast<long long>(P(a, b, c)) - static_cast<long long>(P(i, b, c)) -
                                static_cast<long long>(P(a, j, c)) - static_cast<long long>(P(a, b, l)) +
                                static_cast<long long>(P(i, j, c)) + static_cast<long long>(P(i, b, l)) +
                                static_cast<long long>(P(a, j, l)) - static_cast<long long>(P(i, j, l));
          if (box == 0) {
            ++res.empty_translates;
            res.witness = corner(i, j, l);
          }
        }
  }
  res.syndetic = res.empty_translates == 0;
  if (res.syndetic) res.witness.reset();
  return res;
}

SyndeticResult syndetic_probe(const Indicator& indicator, double k_side, const Schedule& sched,
                              const GridParams& grid) {
  require(std::isfinite(k_side) && k_side > 0.0, "syndetic_probe: K_side must be positive");
  sched.validate();
  const Window w(sched.largest(), grid.kind, grid.d, grid.mesh);
  require(k_side <= w.n, "syndetic_probe: K_side exceeds the largest window");
  const std::size_t side = w.side_count();
  const double step = grid.kind == GroupKind::discrete ? 1.0 : grid.mesh;
  const auto k_cells = static_cast<std::size_t>(std::ceil(k_side / step - 1e-9));
  const Enumeration e = enumerate_window(w);
  std::vector<char> mask(e.points.size());
  for (std::size_t i = 0; i < e.points.size(); ++i) mask[i] = indicator(e.points[i]) ? 1 : 0;
  return syndetic_probe_mask(mask, side, grid.d, k_cells, grid.kind, step);
}

}  // namespace besi
