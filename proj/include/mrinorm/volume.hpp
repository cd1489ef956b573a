#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mrinorm/error.hpp"

namespace mrinorm {

enum class Contrast { T1, T2, Flair, Other };

std::string to_string(Contrast c);
Contrast contrast_from_string(const std::string& s);

using Dims = std::array<std::size_t, 3>;

/// 3D scalar image. Intensities are kept as double regardless of the file
/// dtype; voxel (i,j,k) lives at data[i + nx*(j + ny*k)] (x fastest, NIfTI order).
struct Volume {
  Dims dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<double> data;
  Contrast contrast = Contrast::Other;
  // Raw NIfTI-1 header of the source file, carried opaquely so qform/sform
  // survive a load/save cycle without being interpreted. Empty for volumes
  // created in memory.
  std::vector<std::uint8_t> header_blob;

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return data[index(i, j, k)]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return data[index(i, j, k)]; }
};

Volume make_volume(Dims dims, double fill = 0.0,
                   std::array<double, 3> spacing = {1.0, 1.0, 1.0},
                   Contrast contrast = Contrast::Other);

/// Binary region aligned to a Volume.
struct Mask {
  Dims dims{0, 0, 0};
  std::vector<std::uint8_t> data;
  std::size_t count = 0;

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  bool at(std::size_t i, std::size_t j, std::size_t k) const { return data[index(i, j, k)] != 0; }
  void set(std::size_t i, std::size_t j, std::size_t k, bool v);
  void recount();
};

Mask make_mask(Dims dims, bool fill = false);
Mask mask_from_volume(const Volume& v, double threshold = 0.5);
Mask mask_intersection(const Mask& a, const Mask& b);
Mask mask_union(const Mask& a, const Mask& b);

struct MaskedStats {
  double mean = 0.0;
  double std = 0.0; // population convention (divide by n)
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

/// Mean/std/min/max over voxels where m is true. Population std.
MaskedStats masked_stats(const Volume& v, const Mask& m);

/// Voxels outside m set to exactly 0; inside unchanged.
Volume apply_mask(const Volume& v, const Mask& m);

/// Intensities of v where m is true, in voxel order.
std::vector<double> masked_values(const Volume& v, const Mask& m);

void require_same_dims(const Dims& a, const Dims& b, const char* what);

// Compensated (Kahan) summation; keeps large-mask means reproducible to ~1e-15.
double kahan_sum(const std::vector<double>& values);

} // namespace mrinorm
