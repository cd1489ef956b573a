#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mrinorm/volume.hpp"

namespace mrinorm {

/// Gaussian-kernel density estimate on a uniform grid.
struct DensityEstimate {
  std::vector<double> grid; // strictly increasing
  std::vector<double> pdf;  // nonnegative, integrates to ~1
  double bandwidth = 0.0;
};

struct Mode {
  double intensity = 0.0;
  double density = 0.0;
};

struct LandmarkVector {
  std::vector<double> percentiles; // labels in [0,100], ascending
  std::vector<double> values;      // nondecreasing
};

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::span<const double> values, double p);

/// Quantile over values that are already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

constexpr std::size_t kKdeGridSize = 512;
constexpr double kDefaultModeProminence = 0.05;

/// Gaussian KDE over a 512-point grid spanning [min-3h, max+3h]. Without an
/// explicit bandwidth, Silverman's rule h = 0.9*min(sigma, IQR/1.34)*n^(-1/5).
DensityEstimate kde_estimate(std::span<const double> values,
                             std::optional<double> bandwidth = std::nullopt);

/// Interior local maxima with prominence >= min_prominence * max(pdf),
/// ascending in intensity. Grid boundaries are never reported.
std::vector<Mode> find_modes(const DensityEstimate& d,
                             double min_prominence = kDefaultModeProminence);

/// WM-peak selection: T1 and FLAIR take the highest-intensity mode, T2 the
/// highest-density mode (ties broken toward lower intensity).
double select_tissue_mode(const std::vector<Mode>& modes, Contrast contrast);

LandmarkVector landmark_percentiles(std::span<const double> values,
                                    std::span<const double> labels);

/// The default histogram-matching landmark labels {1,10,20,...,90,99}.
std::vector<double> default_landmark_labels();

} // namespace mrinorm
