#ifndef MINLOR_FOURIER_HPP_
#define MINLOR_FOURIER_HPP_

#include <complex>
#include <vector>

#include "minlor/types.hpp"

namespace minlor {

constexpr bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey; a.size() must be a power of two. Forward is
// unnormalized, inverse divides by the size.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

// Smooth periodic interpolation of uniformly sampled vector data: spectral
// zero-padding onto a refined table, then Catmull-Rom between refined nodes.
// Row j of `samples` is f(j * period / N); N must be a power of two.
class PeriodicInterpolant {
 public:
  PeriodicInterpolant() = default;
  PeriodicInterpolant(const Matrix& samples, double period, int refine = 16);

  Vector operator()(double x) const;

  int dimension() const { return static_cast<int>(table_.cols()); }
  double period() const { return period_; }

  // Spectral power in the Nyquist bin over total non-DC power; large values
  // mean the sample grid does not resolve the data.
  double nyquist_fraction() const { return nyquist_fraction_; }

 private:
  Matrix table_;  // refined real samples, (N * refine) x d
  double period_ = 0.0;
  double nyquist_fraction_ = 0.0;
};

}  // namespace minlor

#endif  // MINLOR_FOURIER_HPP_
