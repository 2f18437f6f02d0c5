#include "minlor/fourier.hpp"

#include <cmath>

#include "minlor/errors.hpp"

namespace minlor {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n)))
    throw ContractViolation("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> t = a[i + k + len / 2] * w;
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

PeriodicInterpolant::PeriodicInterpolant(const Matrix& samples, double period,
                                         int refine) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (!is_power_of_two(n)) throw ContractViolation("sample count must be a power of two");
  if (!is_power_of_two(refine) || refine < 1)
    throw ContractViolation("refine must be a power of two");
  if (!(period > 0.0)) throw ContractViolation("period must be positive");
  period_ = period;

  const int m = n * refine;
  table_.resize(m, d);
  double tail = 0.0, total = 0.0;
  std::vector<std::complex<double>> buf(n), pad(m);
  for (int c = 0; c < d; ++c) {
    for (int j = 0; j < n; ++j) buf[j] = samples(j, c);
    fft_radix2(buf, false);
    for (int k = 1; k < n; ++k) total += std::norm(buf[k]);
    tail += std::norm(buf[n / 2]);

    if (refine == 1) {
      pad = buf;
    } else {
      std::fill(pad.begin(), pad.end(), std::complex<double>(0.0, 0.0));
      for (int k = 0; k < n / 2; ++k) pad[k] = buf[k];
      for (int k = n / 2 + 1; k < n; ++k) pad[m - n + k] = buf[k];
      // Split the Nyquist bin symmetrically to keep real data real.
      pad[n / 2] = 0.5 * buf[n / 2];
      pad[m - n / 2] = 0.5 * buf[n / 2];
    }
    fft_radix2(pad, true);
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    for (int j = 0; j < m; ++j) table_(j, c) = pad[j].real() * scale;
  }
  nyquist_fraction_ = total > 0.0 ? tail / total : 0.0;
}

Vector PeriodicInterpolant::operator()(double x) const {
  const int m = static_cast<int>(table_.rows());
  if (m == 0) throw ContractViolation("empty interpolant");
  const double step = period_ / static_cast<double>(m);
  double s = std::fmod(x / step, static_cast<double>(m));
  if (s < 0.0) s += static_cast<double>(m);
  const int j1 = static_cast<int>(std::floor(s)) % m;
  const double f = s - std::floor(s);
  const int j0 = (j1 + m - 1) % m;
  const int j2 = (j1 + 1) % m;
  const int j3 = (j1 + 2) % m;

  // Catmull-Rom: C^1, exact on the refined nodes.
  const double f2 = f * f, f3 = f2 * f;
  const double w0 = -0.5 * f3 + f2 - 0.5 * f;
  const double w1 = 1.5 * f3 - 2.5 * f2 + 1.0;
  const double w2 = -1.5 * f3 + 2.0 * f2 + 0.5 * f;
  const double w3 = 0.5 * f3 - 0.5 * f2;
  return w0 * table_.row(j0).transpose() + w1 * table_.row(j1).transpose() +
         w2 * table_.row(j2).transpose() + w3 * table_.row(j3).transpose();
}

}  // namespace minlor
