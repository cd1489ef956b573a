#include "mrinorm/density.hpp"

#include <algorithm>
#include <cmath>

namespace mrinorm {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile: p must be in [0,1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

namespace {

double silverman_bandwidth(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  const double sigma = std::sqrt(var);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sigma, iqr / 1.34);
  if (spread <= 0.0) spread = std::max(sigma, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

} // namespace

DensityEstimate kde_estimate(std::span<const double> values, std::optional<double> bandwidth) {
  if (values.size() < 50)
    throw ContractError("kde_estimate: need at least 50 samples, got " +
                        std::to_string(values.size()));
  if (bandwidth && !(*bandwidth > 0.0))
    throw ContractError("kde_estimate: bandwidth must be positive");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  const double h = bandwidth ? *bandwidth : silverman_bandwidth(sorted);
  if (!(h > 0.0)) throw NumericalError("kde_estimate: degenerate sample (zero spread)");

  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const std::size_t g = kKdeGridSize;

  DensityEstimate d;
  d.bandwidth = h;
  d.grid.resize(g);
  d.pdf.resize(g);
  const double step = (hi - lo) / static_cast<double>(g - 1);
  for (std::size_t i = 0; i < g; ++i) d.grid[i] = lo + static_cast<double>(i) * step;

  // Kernel support is truncated at 8h (relative error ~1e-14); samples are
  // sorted so each grid point only visits a window.
  const double cutoff = 8.0 * h;
  const double inv_h = 1.0 / h;
  const double norm = 1.0 / (std::sqrt(2.0 * 3.14159265358979323846) * h *
                             static_cast<double>(sorted.size()));
  std::size_t win_lo = 0;
  for (std::size_t i = 0; i < g; ++i) {
    const double x = d.grid[i];
    while (win_lo < sorted.size() && sorted[win_lo] < x - cutoff) ++win_lo;
    double acc = 0.0;
    for (std::size_t j = win_lo; j < sorted.size() && sorted[j] <= x + cutoff; ++j) {
      const double z = (sorted[j] - x) * inv_h;
      acc += std::exp(-0.5 * z * z);
    }
    d.pdf[i] = acc * norm;
  }
  return d;
}

std::vector<Mode> find_modes(const DensityEstimate& d, double min_prominence) {
  std::vector<Mode> out;
  const auto& pdf = d.pdf;
  if (pdf.size() < 3) return out;
  const double peak_max = *std::max_element(pdf.begin(), pdf.end());
  if (!(peak_max > 0.0)) return out;
  const double threshold = min_prominence * peak_max;

  for (std::size_t i = 1; i + 1 < pdf.size(); ++i) {
    if (!(pdf[i] > pdf[i - 1] && pdf[i] > pdf[i + 1])) continue;

    // prominence: drop to the lowest point before a higher value is met,
    // on each side; the larger base bounds the prominence
    double left_base = pdf[i];
    for (std::size_t j = i; j-- > 0;) {
      left_base = std::min(left_base, pdf[j]);
      if (pdf[j] > pdf[i]) break;
    }
    double right_base = pdf[i];
    for (std::size_t j = i + 1; j < pdf.size(); ++j) {
      right_base = std::min(right_base, pdf[j]);
      if (pdf[j] > pdf[i]) break;
    }
    const double prominence = pdf[i] - std::max(left_base, right_base);
    if (prominence >= threshold) out.push_back({d.grid[i], pdf[i]});
  }
  return out;
}

double select_tissue_mode(const std::vector<Mode>& modes, Contrast contrast) {
  if (modes.empty()) throw NumericalError("no WM peak found");
  if (contrast == Contrast::T2) {
    // highest peak; equal heights resolve to the darker (lower) intensity
    const Mode* best = &modes.front();
    for (const Mode& m : modes)
      if (m.density > best->density) best = &m;
    return best->intensity;
  }
  // T1 / FLAIR / other: the highest-intensity mode
  return modes.back().intensity;
}

LandmarkVector landmark_percentiles(std::span<const double> values,
                                    std::span<const double> labels) {
  if (labels.empty()) throw ContractError("landmark_percentiles: no labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0.0 || labels[i] > 100.0)
      throw ContractError("landmark_percentiles: labels must lie in [0,100]");
    if (i > 0 && labels[i] <= labels[i - 1])
      throw ContractError("landmark_percentiles: labels must be strictly ascending");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  LandmarkVector lv;
  lv.percentiles.assign(labels.begin(), labels.end());
  lv.values.reserve(labels.size());
  for (double lbl : labels) lv.values.push_back(quantile_sorted(sorted, lbl / 100.0));
  return lv;
}

std::vector<double> default_landmark_labels() {
  return {1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 99};
}

} // namespace mrinorm
