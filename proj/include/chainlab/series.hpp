#pragma once

#include <cmath>
#include <stdexcept>

namespace chainlab {

struct SeriesSum {
  double value = 0.0;
  double tail_bound = 0.0;  // bound on the omitted remainder
  long terms = 0;
};

// Bound on sum_{n>N} n^-q for q > 1 by integral comparison.
inline double power_tail(long N, double q) { return std::pow(static_cast<double>(N), 1.0 - q) / (q - 1.0); }

// Sums term(n) for n >= n0 until tail(N), a bound on sum_{n>N} |term(n)|, is below tol.
template <class Term, class Tail>
SeriesSum certified_sum(Term term, long n0, Tail tail, double tol = 1e-14, long nmax = 50000000) {
  SeriesSum out;
  for (long n = n0; n <= nmax; ++n) {
    out.value += term(n);
    ++out.terms;
    if (n >= n0 + 4) {
      double t = tail(n);
      if (t < tol) {
        out.tail_bound = t;
        return out;
      }
    }
  }
  throw std::runtime_error("certified_sum: tail bound not reached");
}

}  // namespace chainlab
