// Almost-periodic Fourier coefficients alpha(lambda) = (1/T) int_0^T x(t) e^{-i lambda t} dt
// of sampled trajectories, evaluated by the trapezoid rule on arbitrary
// frequency grids, and peak extraction.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "duoscale/errors.hpp"
#include "duoscale/integrate.hpp"
#include "duoscale/parallel.hpp"

namespace duoscale {

using Complex = std::complex<double>;

struct Spectrum {
  std::vector<double> frequencies;
  std::vector<Complex> coefficients;
  double window_start = 0.0;
  double window_end = 0.0;

  std::size_t size() const { return frequencies.size(); }
  double magnitude(std::size_t i) const { return std::abs(coefficients[i]); }
};

struct Peak {
  double frequency = 0.0;
  double magnitude = 0.0;
  double prominence = 0.0;  // magnitude over the neighborhood median
};

/// Trapezoid rule over samples [first, last] of a uniform grid starting at t0.
/// The phasor e^{-i lambda t} is advanced by complex rotation and re-anchored
/// every 512 samples.
inline Complex ap_fourier_coefficient(const std::vector<double>& x, double t0, double dt, std::size_t first,
                                      std::size_t last, double lambda) {
  if (x.size() < 2 || last >= x.size() || last <= first) throw InvalidArgument("Fourier window needs at least 2 samples");
  const Complex step = std::polar(1.0, -lambda * dt);
  Complex sum = 0.0;
  Complex phasor;
  for (std::size_t i = first; i <= last; ++i) {
    if ((i - first) % 512 == 0) phasor = std::polar(1.0, -lambda * (t0 + static_cast<double>(i) * dt));
    const double w = (i == first || i == last) ? 0.5 : 1.0;
    sum += w * x[i] * phasor;
    phasor *= step;
  }
  const double span = static_cast<double>(last - first) * dt;
  return sum * dt / span;
}

/// Coefficient of displacement component `component` (0-based) over the whole series.
inline Complex ap_fourier_coefficient(const TimeSeries& series, int component, double lambda) {
  if (series.size() < 2) throw InvalidArgument("Fourier coefficient needs at least 2 samples");
  if (component < 0 || component >= series.dimension()) throw InvalidArgument("component out of range");
  return ap_fourier_coefficient(series.component(component), series.t0, series.dt, 0, series.size() - 1, lambda);
}

/// Uniform grid of n_grid frequencies; the leading `transient_fraction` of
/// the record is excluded from the analysis window.
inline Spectrum spectrum_scan(const std::vector<double>& x, double t0, double dt, double lambda_min, double lambda_max,
                              int n_grid, double transient_fraction = 0.1, unsigned threads = 1) {
  if (!(lambda_min < lambda_max)) throw InvalidArgument("lambda_min must be < lambda_max");
  if (n_grid < 2) throw InvalidArgument("n_grid must be >= 2");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0)) throw InvalidArgument("transient fraction must lie in [0, 1)");
  if (x.size() < 2) throw InvalidArgument("spectrum needs at least 2 samples");
  const std::size_t last = x.size() - 1;
  const auto first = static_cast<std::size_t>(std::ceil(transient_fraction * static_cast<double>(last)));
  if (first + 1 > last) throw InvalidArgument("analysis window is empty");
  Spectrum s;
  s.window_start = t0 + static_cast<double>(first) * dt;
  s.window_end = t0 + static_cast<double>(last) * dt;
  s.frequencies.resize(static_cast<std::size_t>(n_grid));
  s.coefficients.resize(static_cast<std::size_t>(n_grid));
  const double h = (lambda_max - lambda_min) / (n_grid - 1);
  for (int i = 0; i < n_grid; ++i) s.frequencies[static_cast<std::size_t>(i)] = lambda_min + i * h;
  parallel_for(s.frequencies.size(), threads, [&](std::size_t i) {
    s.coefficients[i] = ap_fourier_coefficient(x, t0, dt, first, last, s.frequencies[i]);
  });
  return s;
}

inline Spectrum spectrum_scan(const TimeSeries& series, int component, double lambda_min, double lambda_max, int n_grid,
                              double transient_fraction = 0.1, unsigned threads = 1) {
  if (component < 0 || component >= series.dimension()) throw InvalidArgument("component out of range");
  return spectrum_scan(series.component(component), series.t0, series.dt, lambda_min, lambda_max, n_grid,
                       transient_fraction, threads);
}

/// Resolution of a spectrum: grid step plus 2 pi / T.
inline double spectral_tolerance(const Spectrum& s) {
  const double step = s.size() > 1 ? s.frequencies[1] - s.frequencies[0] : 0.0;
  return step + 2.0 * std::numbers::pi / (s.window_end - s.window_start);
}

struct PeakOptions {
  /// Half-width of the median neighborhood in frequency units; <= 0 uses 5% of the grid span.
  double neighborhood = 0.0;
  /// A maximum at distance D from a larger peak of magnitude A is treated as
  /// window leakage when its magnitude is below margin * A * min(1, 2 / (T D)),
  /// the sidelobe envelope of a finite record of length T. <= 0 disables.
  double leakage_margin = 1.5;
};

/// Interior local maxima of |alpha| whose magnitude is at least
/// min_prominence times the median magnitude of their neighborhood, minus
/// sidelobes of larger peaks. Sorted by magnitude, largest first.
inline std::vector<Peak> peak_detect(const Spectrum& s, double min_prominence, const PeakOptions& opt = {}) {
  if (!(min_prominence > 0.0)) throw InvalidArgument("min_prominence must be positive");
  std::vector<Peak> peaks;
  const std::size_t n = s.size();
  if (n < 3) return peaks;
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = s.magnitude(i);
  const double step = s.frequencies[1] - s.frequencies[0];
  const double width = opt.neighborhood > 0.0 ? opt.neighborhood : 0.05 * (s.frequencies.back() - s.frequencies.front());
  const auto half = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(width / step)));
  std::vector<double> scratch;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) || !(mag[i] > 0.0)) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    scratch.assign(mag.begin() + static_cast<std::ptrdiff_t>(lo), mag.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    const double median = *mid;
    const double prominence = median > 0.0 ? mag[i] / median : std::numeric_limits<double>::infinity();
    if (prominence >= min_prominence) peaks.push_back({s.frequencies[i], mag[i], prominence});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  if (opt.leakage_margin <= 0.0) return peaks;
  const double span = s.window_end - s.window_start;
  std::vector<Peak> kept;
  for (const Peak& cand : peaks) {
    bool leak = false;
    for (const Peak& big : kept) {
      const double dist = std::abs(cand.frequency - big.frequency);
      const double envelope = span > 0.0 ? std::min(1.0, 2.0 / (span * dist)) : 1.0;
      if (cand.magnitude <= opt.leakage_margin * big.magnitude * envelope) {
        leak = true;
        break;
      }
    }
    if (!leak) kept.push_back(cand);
  }
  return kept;
}

}  // namespace duoscale
