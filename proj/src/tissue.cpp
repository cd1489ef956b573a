#include "mrinorm/tissue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mrinorm/density.hpp"

namespace mrinorm {

namespace {

constexpr std::size_t kMinMaskVoxels = 1000;

struct MaskedSample {
  std::vector<double> values;
  std::vector<std::size_t> indices;
};

MaskedSample collect(const Volume& v, const Mask& b) {
  require_same_dims(v.dims, b.dims, "tissue segmentation");
  if (b.count < kMinMaskVoxels)
    throw ContractError("tissue segmentation: mask must contain at least " +
                        std::to_string(kMinMaskVoxels) + " voxels");
  MaskedSample s;
  s.values.reserve(b.count);
  s.indices.reserve(b.count);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (b.data[i]) {
      s.values.push_back(v.data[i]);
      s.indices.push_back(i);
    }
  }
  const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
  if (*mn == *mx) throw ContractError("tissue segmentation: constant image inside mask");
  return s;
}

} // namespace

MembershipMap fcm_segment(const Volume& v, const Mask& b, const FcmOptions& opts) {
  if (opts.k == 0) throw ContractError("fcm_segment: k must be >= 1");
  if (!(opts.fuzziness > 1.0)) throw ContractError("fcm_segment: fuzziness must be > 1");

  const MaskedSample s = collect(v, b);
  const std::size_t n = s.values.size();
  const std::size_t k = opts.k;
  const double inv_exp = 1.0 / (opts.fuzziness - 1.0);

  // deterministic start: evenly spaced percentiles of the masked intensities
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers(k);
  for (std::size_t c = 0; c < k; ++c)
    centers[c] = quantile_sorted(sorted, static_cast<double>(c + 1) / static_cast<double>(k + 1));

  std::vector<std::vector<double>> u(k, std::vector<double>(n, 0.0));
  std::vector<double> dist(k), pw(k);
  const bool quadratic = opts.fuzziness == 2.0;
  double prev_obj = -1.0;
  double obj = 0.0;
  bool converged = false;

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    obj = 0.0;
    std::vector<double> num(k, 0.0), den(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = s.values[j];
      std::size_t exact = k;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (x - centers[c]) * (x - centers[c]);
        dist[c] = d;
        if (d == 0.0 && exact == k) exact = c;
      }
      if (exact < k) {
        for (std::size_t c = 0; c < k; ++c) u[c][j] = (c == exact) ? 1.0 : 0.0;
        num[exact] += x;
        den[exact] += 1.0;
        continue;
      }
      double denom = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        pw[c] = quadratic ? 1.0 / dist[c] : std::pow(1.0 / dist[c], inv_exp);
        denom += pw[c];
      }
      for (std::size_t c = 0; c < k; ++c) {
        const double m = pw[c] / denom;
        u[c][j] = m;
        const double w = quadratic ? m * m : std::pow(m, opts.fuzziness);
        obj += w * dist[c];
        num[c] += w * x;
        den[c] += w;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (den[c] <= 0.0) throw NumericalError("fcm_segment: empty class during iteration");
      centers[c] = num[c] / den[c];
    }
    if (prev_obj >= 0.0 &&
        std::abs(prev_obj - obj) < opts.tol * std::max(obj, 1e-300)) {
      converged = true;
      break;
    }
    prev_obj = obj;
  }
  if (!converged && opts.max_iter > 1)
    throw NumericalError("fcm_segment: no convergence after " + std::to_string(opts.max_iter) +
                         " iterations (objective " + std::to_string(obj) + ")");

  // order classes by mean ascending
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t c) { return centers[a] < centers[c]; });
  for (std::size_t c = 1; c < k; ++c)
    if (!(centers[order[c]] > centers[order[c - 1]]))
      throw NumericalError("fcm_segment: degenerate fit (coincident class means)");

  MembershipMap mm;
  mm.dims = v.dims;
  mm.k = k;
  mm.class_means.resize(k);
  mm.memberships.assign(k, std::vector<double>(v.size(), 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    mm.class_means[c] = centers[order[c]];
    auto& dst = mm.memberships[c];
    const auto& src = u[order[c]];
    for (std::size_t j = 0; j < n; ++j) dst[s.indices[j]] = src[j];
  }
  return mm;
}

GmmParams gmm_fit(const Volume& v, const Mask& b, const GmmOptions& opts) {
  if (opts.k == 0) throw ContractError("gmm_fit: k must be >= 1");
  const MaskedSample s = collect(v, b);
  const std::size_t n = s.values.size();
  const std::size_t k = opts.k;
  const double nd = static_cast<double>(n);

  MaskedStats all{};
  {
    double mean = kahan_sum(s.values) / nd;
    double var = 0.0;
    for (double x : s.values) var += (x - mean) * (x - mean);
    all.mean = mean;
    all.std = std::sqrt(var / nd);
  }
  const double var_floor = std::max(1e-300, 1e-12 * all.std * all.std);

  GmmParams p;
  p.weights.assign(k, 1.0 / static_cast<double>(k));
  p.means.assign(k, all.mean);
  p.variances.assign(k, all.std * all.std);

  if (k > 1) {
    // deterministic start from the FCM hard classes
    FcmOptions fopts;
    fopts.k = k;
    const MembershipMap mm = fcm_segment(v, b, fopts);
    std::vector<double> cnt(k, 0.0), mu(k, 0.0), m2(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = s.indices[j];
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (mm.memberships[c][idx] > mm.memberships[best][idx]) best = c;
      cnt[best] += 1.0;
      mu[best] += s.values[j];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (cnt[c] > 0.0) mu[c] /= cnt[c];
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = s.indices[j];
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (mm.memberships[c][idx] > mm.memberships[best][idx]) best = c;
      m2[best] += (s.values[j] - mu[best]) * (s.values[j] - mu[best]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] < 2.0) throw NumericalError("gmm_fit: empty class at initialization");
      p.weights[c] = cnt[c] / nd;
      p.means[c] = mu[c];
      p.variances[c] = std::max(m2[c] / cnt[c], var_floor);
    }
  }

  std::vector<double> lp(k), log_c(k), inv2v(k);
  std::vector<double> w(k), mu(k), m2(k);
  std::vector<double> resp(k * n);
  double prev_mll = -std::numeric_limits<double>::infinity();
  bool converged = false;

  for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      log_c[c] = std::log(p.weights[c]) -
                 0.5 * std::log(2.0 * 3.14159265358979323846 * p.variances[c]);
      inv2v[c] = 0.5 / p.variances[c];
    }
    double ll = 0.0;

    for (std::size_t j = 0; j < n; ++j) {
      const double x = s.values[j];
      // log-sum-exp over components
      double max_lp = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = x - p.means[c];
        lp[c] = log_c[c] - d * d * inv2v[c];
        max_lp = std::max(max_lp, lp[c]);
      }
      double denom = 0.0;
      for (std::size_t c = 0; c < k; ++c) denom += std::exp(lp[c] - max_lp);
      ll += max_lp + std::log(denom);
      for (std::size_t c = 0; c < k; ++c) {
        const double r = std::exp(lp[c] - max_lp) / denom;
        resp[c * n + j] = r;
        w[c] += r;
        mu[c] += r * x;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (w[c] < 1e-10 * nd) throw NumericalError("gmm_fit: degenerate component (vanishing weight)");
      mu[c] /= w[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double* rc = resp.data() + c * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = s.values[j] - mu[c];
        acc += rc[j] * d * d;
      }
      m2[c] = acc;
    }
    for (std::size_t c = 0; c < k; ++c) {
      p.means[c] = mu[c];
      p.variances[c] = m2[c] / w[c];
      p.weights[c] = w[c] / nd;
      if (p.variances[c] < var_floor)
        throw NumericalError("gmm_fit: degenerate component (variance collapsed)");
    }

    const double mll = ll / nd;
    p.mean_log_likelihood = mll;
    p.iterations = iter;
    // absolute tolerance on the mean log-likelihood: invariant under intensity
    // scaling (the scale term is a constant offset), so gain-invariance holds
    if (std::abs(mll - prev_mll) < opts.tol) {
      converged = true;
      break;
    }
    prev_mll = mll;
  }
  if (!converged)
    throw NumericalError("gmm_fit: EM did not converge after " + std::to_string(opts.max_iter) +
                         " iterations");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t c) { return p.means[a] < p.means[c]; });
  GmmParams out;
  out.mean_log_likelihood = p.mean_log_likelihood;
  out.iterations = p.iterations;
  for (std::size_t c : order) {
    out.weights.push_back(p.weights[c]);
    out.means.push_back(p.means[c]);
    out.variances.push_back(p.variances[c]);
  }
  for (std::size_t c = 1; c < k; ++c)
    if (!(out.means[c] > out.means[c - 1]))
      throw NumericalError("gmm_fit: degenerate fit (coincident component means)");
  return out;
}

std::size_t tissue_class_rank(Contrast contrast, Tissue tissue) {
  // rank by class mean, 0 = darkest. T1: CSF<GM<WM; T2: WM<GM<CSF;
  // FLAIR: CSF lowest with WM as the middle class.
  switch (contrast) {
    case Contrast::T1:
      return tissue == Tissue::CSF ? 0 : tissue == Tissue::GM ? 1 : 2;
    case Contrast::T2:
      return tissue == Tissue::WM ? 0 : tissue == Tissue::GM ? 1 : 2;
    case Contrast::Flair:
      return tissue == Tissue::CSF ? 0 : tissue == Tissue::WM ? 1 : 2;
    default:
      throw ContractError("no tissue ordering rule for contrast OTHER");
  }
}

Mask class_mask(const MembershipMap& mm, const Mask& b, Contrast contrast, Tissue tissue) {
  if (mm.k != 3) throw ContractError("class_mask: requires a 3-class segmentation");
  require_same_dims(mm.dims, b.dims, "class_mask");
  const std::size_t rank = tissue_class_rank(contrast, tissue);

  Mask out = make_mask(mm.dims, false);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.data[i]) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < mm.k; ++c)
      if (mm.memberships[c][i] > mm.memberships[best][i]) best = c;
    if (best == rank) out.data[i] = 1;
  }
  out.recount();
  return out;
}

Mask class_mask(const GmmParams& gp, const Volume& v, const Mask& b, Contrast contrast,
                Tissue tissue) {
  if (gp.means.size() != 3) throw ContractError("class_mask: requires a 3-component mixture");
  require_same_dims(v.dims, b.dims, "class_mask");
  const std::size_t rank = tissue_class_rank(contrast, tissue);
  const std::size_t k = gp.means.size();

  Mask out = make_mask(v.dims, false);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.data[i]) continue;
    const double x = v.data[i];
    std::size_t best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = x - gp.means[c];
      const double lp = std::log(gp.weights[c]) - 0.5 * std::log(gp.variances[c]) -
                        0.5 * d * d / gp.variances[c];
      if (lp > best_lp) {
        best_lp = lp;
        best = c;
      }
    }
    if (best == rank) out.data[i] = 1;
  }
  out.recount();
  return out;
}

double wm_mean(const Volume& v, const Mask& w) {
  require_same_dims(v.dims, w.dims, "wm_mean");
  if (w.count == 0) throw ContractError("wm_mean: empty mask");
  const std::vector<double> vals = masked_values(v, w);
  return kahan_sum(vals) / static_cast<double>(vals.size());
}

} // namespace mrinorm
