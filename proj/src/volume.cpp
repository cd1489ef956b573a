#include "mrinorm/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrinorm {

std::string to_string(Contrast c) {
  switch (c) {
    case Contrast::T1: return "t1";
    case Contrast::T2: return "t2";
    case Contrast::Flair: return "flair";
    default: return "other";
  }
}

Contrast contrast_from_string(const std::string& s) {
  std::string t;
  t.reserve(s.size());
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "t1" || t == "t1w" || t == "t1-w") return Contrast::T1;
  if (t == "t2" || t == "t2w" || t == "t2-w") return Contrast::T2;
  if (t == "flair") return Contrast::Flair;
  if (t == "other") return Contrast::Other;
  throw ContractError("unknown contrast tag: " + s);
}

Volume make_volume(Dims dims, double fill, std::array<double, 3> spacing, Contrast contrast) {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw ContractError("volume dims must be positive");
  for (double s : spacing)
    if (!(s > 0.0)) throw ContractError("voxel spacing must be strictly positive");
  Volume v;
  v.dims = dims;
  v.spacing = spacing;
  v.contrast = contrast;
  v.data.assign(dims[0] * dims[1] * dims[2], fill);
  return v;
}

void Mask::set(std::size_t i, std::size_t j, std::size_t k, bool v) {
  std::uint8_t& cell = data[index(i, j, k)];
  if (cell != static_cast<std::uint8_t>(v)) {
    count += v ? 1 : -1;
    cell = static_cast<std::uint8_t>(v);
  }
}

void Mask::recount() {
  count = 0;
  for (std::uint8_t b : data) count += (b != 0);
}

Mask make_mask(Dims dims, bool fill) {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw ContractError("mask dims must be positive");
  Mask m;
  m.dims = dims;
  m.data.assign(dims[0] * dims[1] * dims[2], fill ? 1 : 0);
  m.count = fill ? m.data.size() : 0;
  return m;
}

Mask mask_from_volume(const Volume& v, double threshold) {
  Mask m;
  m.dims = v.dims;
  m.data.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m.data[i] = v.data[i] > threshold ? 1 : 0;
  m.recount();
  return m;
}

Mask mask_intersection(const Mask& a, const Mask& b) {
  require_same_dims(a.dims, b.dims, "mask intersection");
  Mask out;
  out.dims = a.dims;
  out.data.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] && b.data[i]) ? 1 : 0;
  out.recount();
  return out;
}

Mask mask_union(const Mask& a, const Mask& b) {
  require_same_dims(a.dims, b.dims, "mask union");
  Mask out;
  out.dims = a.dims;
  out.data.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] || b.data[i]) ? 1 : 0;
  out.recount();
  return out;
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (a != b)
    throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a[0]) + "x" +
                        std::to_string(a[1]) + "x" + std::to_string(a[2]) + " vs " +
                        std::to_string(b[0]) + "x" + std::to_string(b[1]) + "x" +
                        std::to_string(b[2]) + ")");
}

double kahan_sum(const std::vector<double>& values) {
  double sum = 0.0, c = 0.0;
  for (double v : values) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

std::vector<double> masked_values(const Volume& v, const Mask& m) {
  require_same_dims(v.dims, m.dims, "masked_values");
  std::vector<double> out;
  out.reserve(m.count);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m.data[i]) out.push_back(v.data[i]);
  return out;
}

MaskedStats masked_stats(const Volume& v, const Mask& m) {
  require_same_dims(v.dims, m.dims, "masked_stats");
  if (m.count < 2) throw ContractError("masked_stats: mask must contain at least 2 voxels");

  std::vector<double> vals = masked_values(v, m);
  MaskedStats s;
  s.n = vals.size();
  s.mean = kahan_sum(vals) / static_cast<double>(s.n);
  double sq = 0.0, c = 0.0;
  double mn = std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : vals) {
    const double d = x - s.mean;
    const double y = d * d - c;
    const double t = sq + y;
    c = (t - sq) - y;
    sq = t;
    mn = std::min(mn, x);
    mx = std::max(mx, x);
  }
  s.std = std::sqrt(std::max(0.0, sq / static_cast<double>(s.n)));
  s.min = mn;
  s.max = mx;
  return s;
}

Volume apply_mask(const Volume& v, const Mask& m) {
  require_same_dims(v.dims, m.dims, "apply_mask");
  Volume out = v;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!m.data[i]) out.data[i] = 0.0;
  return out;
}

} // namespace mrinorm
