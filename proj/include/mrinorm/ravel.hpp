#pragma once

#include <string>
#include <vector>

#include "mrinorm/volume.hpp"

namespace mrinorm {

/// CSF intensities common to a co-registered sample: one row per voxel in the
/// CSF-mask intersection, one column per image.
struct CsfMatrix {
  std::size_t n = 0;                      // voxels
  std::size_t m = 0;                      // images
  std::vector<double> values;             // row-major n x m
  std::vector<std::size_t> voxel_index;   // linear voxel ids, length n
  std::vector<std::string> image_ids;     // length m

  double at(std::size_t row, std::size_t col) const { return values[row * m + col]; }
};

struct RavelModel {
  std::size_t b = 1;
  std::vector<std::vector<double>> basis; // b columns, each of length m, orthonormal
  std::vector<Volume> coefficients;       // one gamma volume per basis column
  Mask domain;                            // union brain mask the regression ran on
  std::vector<std::string> image_ids;
};

struct RavelInput {
  Volume ws;   // WhiteStripe-normalized, co-registered volume
  Mask brain;
  Mask csf;
  std::string id;
};

struct RavelOptions {
  std::size_t b = 1;
  // Default: remove each voxel's across-image mean before the SVD so the basis
  // captures cross-image variation and stays orthogonal to the regression
  // intercept. `center = false` decomposes the raw CSF matrix.
  bool center = true;
};

CsfMatrix build_csf_matrix(const std::vector<RavelInput>& sample);

/// First b right singular vectors of the (optionally centered) CSF matrix.
/// Sign convention: the first entry of each vector whose magnitude exceeds
/// 1e-12 of the column norm is positive.
std::vector<std::vector<double>> estimate_unwanted_basis(const CsfMatrix& vc, std::size_t b,
                                                         bool center = true);

struct RavelResult {
  std::vector<Volume> outputs;
  RavelModel model;
};

/// Voxel-wise regression of the image series onto the basis (with intercept),
/// then subtraction of each image's unwanted component.
RavelResult ravel_fit_apply(const std::vector<RavelInput>& sample, const RavelOptions& opts = {});

} // namespace mrinorm
