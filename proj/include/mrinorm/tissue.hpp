#pragma once

#include <vector>

#include "mrinorm/volume.hpp"

namespace mrinorm {

enum class Tissue { WM, GM, CSF };

/// Fuzzy memberships over k intensity classes inside a brain mask.
/// memberships[c][voxel] is the grade of class c (classes sorted by mean
/// ascending); zero everywhere outside the mask.
struct MembershipMap {
  Dims dims{0, 0, 0};
  std::size_t k = 0;
  std::vector<std::vector<double>> memberships; // k vectors of volume size
  std::vector<double> class_means;              // strictly increasing
};

struct GmmParams {
  std::vector<double> weights;   // nonnegative, sum 1
  std::vector<double> means;     // sorted ascending
  std::vector<double> variances; // strictly positive
  double mean_log_likelihood = 0.0;
  std::size_t iterations = 0;
};

struct FcmOptions {
  std::size_t k = 3;
  double fuzziness = 2.0;
  double tol = 1e-5; // relative objective decrease
  std::size_t max_iter = 100;
};

struct GmmOptions {
  std::size_t k = 3;
  double tol = 1e-9; // absolute increase of the mean log-likelihood
  std::size_t max_iter = 500;
};

/// Fuzzy c-means over masked intensities. Deterministic: class means start at
/// evenly spaced masked-intensity percentiles, no RNG.
MembershipMap fcm_segment(const Volume& v, const Mask& b, const FcmOptions& opts = {});

/// EM fit of a k-component Gaussian mixture to masked intensities,
/// initialized from the FCM hard classes.
GmmParams gmm_fit(const Volume& v, const Mask& b, const GmmOptions& opts = {});

/// Which mean-rank (0 = lowest mean .. k-1 = highest) a tissue maps to for a
/// given contrast: WM is the max-mean class on T1, middle on FLAIR, min on T2.
std::size_t tissue_class_rank(Contrast contrast, Tissue tissue);

/// Hard mask of one tissue by maximum membership.
Mask class_mask(const MembershipMap& mm, const Mask& b, Contrast contrast, Tissue tissue);

/// Hard mask of one tissue by maximum GMM posterior, evaluated on v.
Mask class_mask(const GmmParams& gp, const Volume& v, const Mask& b, Contrast contrast,
                Tissue tissue);

/// Arithmetic mean of intensities inside w.
double wm_mean(const Volume& v, const Mask& w);

} // namespace mrinorm
