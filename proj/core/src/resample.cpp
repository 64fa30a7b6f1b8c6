#include <cmath>
#include <numbers>

#include "ttk/error.hpp"
#include "ttk/speechcmd.hpp"

namespace ttk {

namespace {

constexpr int kTaps = 31;

}  // namespace

std::vector<double> anti_alias_taps() {
  // Cutoff 4 kHz at a 16 kHz input: 0.25 cycles per sample.
  constexpr double cutoff = 0.25;
  constexpr int half = kTaps / 2;
  std::vector<double> h(kTaps);
  double sum = 0.0;
  for (int n = 0; n < kTaps; ++n) {
    const double m = n - half;
    const double sinc = m == 0 ? 2.0 * cutoff
                               : std::sin(2.0 * std::numbers::pi * cutoff * m) / (std::numbers::pi * m);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (kTaps - 1));
    h[n] = sinc * window;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> downsample_2x(std::span<const double> samples, int rate) {
  if (rate != kSourceSampleRate) {
    throw RateError("downsample_2x expects 16000 Hz input, got " + std::to_string(rate));
  }
  static const std::vector<double> taps = anti_alias_taps();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t half = kTaps / 2;
  std::vector<double> out((samples.size() + 1) / 2);
  for (std::size_t o = 0; o < out.size(); ++o) {
    const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(2 * o);
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < kTaps; ++k) {
      const std::ptrdiff_t src = centre + k - half;
      if (src >= 0 && src < n) acc += taps[static_cast<std::size_t>(k)] * samples[static_cast<std::size_t>(src)];
    }
    out[o] = acc;
  }
  return out;
}

}  // namespace ttk
