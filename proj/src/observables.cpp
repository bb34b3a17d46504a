#include "besi/observables.hpp"

#include <cmath>
#include <sstream>

namespace besi {

double TorusPoint::coord(std::size_t i) const {
  if (!alpha || time == 0.0) return base[i];
  const double v = base[i] + time * (*alpha)[i];
  return v - std::floor(v);
}

std::vector<double> TorusPoint::coords() const {
  std::vector<double> c(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) c[i] = coord(i);
  return c;
}

namespace {
void collect_torus(const Point& p, std::vector<double>& out) {
  if (const auto* t = p.as<TorusPoint>()) {
    for (std::size_t i = 0; i < t->dim(); ++i) out.push_back(t->coord(i));
  } else if (const auto* pr = p.as<ProductPoint>()) {
    for (const auto& q : pr->parts) collect_torus(q, out);
  }
}

double torus_coord(const Point& p, std::size_t i) {
  if (const auto* t = p.as<TorusPoint>()) {
    if (i < t->dim()) return t->coord(i);
  }
  const std::vector<double> c = torus_coords(p);
  require(i < c.size(), "observable: torus coordinate out of range");
  return c[i];
}

const SymbolPoint& symbolic(const Point& p) {
  const SymbolPoint* s = first_symbolic(p);
  require(s != nullptr, "observable: point has no symbolic factor");
  return *s;
}
}  // namespace

std::vector<double> torus_coords(const Point& p) {
  std::vector<double> out;
  collect_torus(p, out);
  return out;
}

const SymbolPoint* first_symbolic(const Point& p) {
  if (const auto* s = p.as<SymbolPoint>()) return s;
  if (const auto* pr = p.as<ProductPoint>()) {
    for (const auto& q : pr->parts)
      if (const SymbolPoint* s = first_symbolic(q)) return s;
  }
  return nullptr;
}

namespace obs {

Observable constant(cplx c) {
  std::ostringstream tag;
  tag.precision(17);
  tag << "constant(" << c.real() << (c.imag() != 0.0 ? "," + std::to_string(c.imag()) : "") << ")";
  return {[c](const Point&) { return c; }, std::abs(c), tag.str()};
}

Observable torus_character(std::vector<int> k) {
  require(!k.empty(), "torus_character: empty frequency vector");
  std::string tag = "torus_character(";
  for (std::size_t i = 0; i < k.size(); ++i) tag += (i ? "," : "") + std::to_string(k[i]);
  tag += ")";
  return {[k](const Point& p) {
            double t = 0.0;
            if (const auto* tp = p.as<TorusPoint>(); tp && tp->dim() >= k.size()) {
              for (std::size_t i = 0; i < k.size(); ++i) t += k[i] * tp->coord(i);
            } else {
              const std::vector<double> c = torus_coords(p);
              require(c.size() >= k.size(), "torus_character: point has too few torus coordinates");
              for (std::size_t i = 0; i < k.size(); ++i) t += k[i] * c[i];
            }
            t -= std::nearbyint(t);
            return std::polar(1.0, kTwoPi * t);
          },
          1.0, tag};
}

Observable torus_cosine(std::size_t i) {
  return {[i](const Point& p) { return cplx(std::cos(kTwoPi * torus_coord(p, i)), 0.0); }, 1.0,
          "torus_cosine(" + std::to_string(i) + ")"};
}

Observable exp_cosine(std::size_t i) {
  return {[i](const Point& p) { return cplx(std::exp(std::cos(kTwoPi * torus_coord(p, i))), 0.0); },
          std::exp(1.0), "exp_cosine(" + std::to_string(i) + ")"};
}

Observable symbol(std::int64_t i) {
  return {[i](const Point& p) { return cplx(symbolic(p).at(i), 0.0); }, 1.0,
          "symbol(" + std::to_string(i) + ")"};
}

Observable centered_symbol(double mean, std::int64_t i) {
  require(mean >= 0.0 && mean <= 1.0, "centered_symbol: mean must lie in [0, 1]");
  std::ostringstream tag;
  tag.precision(17);
  tag << "centered_symbol(" << i << "," << mean << ")";
  return {[i, mean](const Point& p) { return cplx(symbolic(p).at(i) - mean, 0.0); },
          std::max(mean, 1.0 - mean), tag.str()};
}

Observable parity(std::int64_t i, std::int64_t j) {
  return {[i, j](const Point& p) {
            const SymbolPoint& s = symbolic(p);
            return cplx(s.at(i) == s.at(j) ? 1.0 : 0.0, 0.0);
          },
          1.0, "parity(" + std::to_string(i) + "," + std::to_string(j) + ")"};
}

Observable cylinder(std::vector<int> word, std::int64_t start) {
  require(!word.empty(), "cylinder: empty word");
  std::string tag = "cylinder(" + std::to_string(start) + ":";
  for (int c : word) tag += std::to_string(c);
  tag += ")";
  return {[word, start](const Point& p) {
            const SymbolPoint& s = symbolic(p);
            for (std::size_t k = 0; k < word.size(); ++k)
              if (s.at(start + static_cast<std::int64_t>(k)) != word[k]) return cplx(0.0, 0.0);
            return cplx(1.0, 0.0);
          },
          1.0, tag};
}

Observable scaled(const Observable& f, double c) {
  std::ostringstream tag;
  tag << c << "*" << f.tag;
  auto e = f.eval;
  return {[e, c](const Point& p) { return c * e(p); }, std::abs(c) * f.sup_bound, tag.str()};
}

Observable sum(const Observable& f, const Observable& g) {
  auto a = f.eval, b = g.eval;
  return {[a, b](const Point& p) { return a(p) + b(p); }, f.sup_bound + g.sup_bound,
          f.tag + "+" + g.tag};
}

}  // namespace obs
}  // namespace besi
