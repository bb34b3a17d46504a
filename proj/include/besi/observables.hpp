#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "besi/common.hpp"
#include "besi/points.hpp"

namespace besi {

/// Complex-valued function on points with a bound on its modulus.
struct Observable {
  std::function<cplx(const Point&)> eval;
  double sup_bound = 1.0;
  std::string tag;

  cplx operator()(const Point& p) const { return eval(p); }
};

namespace obs {

Observable constant(cplx c);
/// e^{2πi<k, x>} on torus coordinates (flattened across product factors).
Observable torus_character(std::vector<int> k);
/// cos(2π x_i).
Observable torus_cosine(std::size_t i = 0);
/// exp(cos(2π x_i)): continuous with infinitely many harmonics.
Observable exp_cosine(std::size_t i = 0);
/// Symbol at coordinate i (values 0/1).
Observable symbol(std::int64_t i = 0);
/// Symbol at i minus the given mean.
Observable centered_symbol(double mean, std::int64_t i = 0);
/// Indicator that coordinates i and j carry the same symbol.
Observable parity(std::int64_t i, std::int64_t j);
/// Indicator of the cylinder {x : x_{start + k} = word[k]}.
Observable cylinder(std::vector<int> word, std::int64_t start = 0);
/// c * f with the bound scaled by |c|.
Observable scaled(const Observable& f, double c);
/// Sum of two observables.
Observable sum(const Observable& f, const Observable& g);

}  // namespace obs

}  // namespace besi
