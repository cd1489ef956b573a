#pragma once

#include <string>

#include "mrinorm/volume.hpp"

namespace mrinorm {

/// Load a NIfTI-1 scalar 3D volume (.nii, optionally gzip-compressed; gzip is
/// detected from the magic bytes, not the extension). Intensities are
/// converted to double and scl_slope/scl_inter applied. Big-endian files are
/// byte-swapped on read.
Volume load_volume(const std::string& path, Contrast contrast = Contrast::Other);

/// Write v as a single-file NIfTI-1 volume with float64 intensities. A ".gz"
/// suffix selects gzip compression. If v carries a header blob from a previous
/// load, the orientation fields are passed through untouched.
void save_volume(const Volume& v, const std::string& path);

/// Masks are stored as uint8 NIfTI volumes.
Mask load_mask(const std::string& path);
void save_mask(const Mask& m, const std::string& path);

} // namespace mrinorm
