#include "mrinorm/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

namespace mrinorm {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)

static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;
constexpr std::int16_t kDtInt8 = 256;
constexpr std::int16_t kDtUint16 = 512;
constexpr std::int16_t kDtUint32 = 768;

template <typename T>
T byteswap_value(T v) {
  auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void swap_header(Nifti1Header& h) {
  h.sizeof_hdr = byteswap_value(h.sizeof_hdr);
  h.extents = byteswap_value(h.extents);
  h.session_error = byteswap_value(h.session_error);
  for (auto& d : h.dim) d = byteswap_value(d);
  h.intent_p1 = byteswap_value(h.intent_p1);
  h.intent_p2 = byteswap_value(h.intent_p2);
  h.intent_p3 = byteswap_value(h.intent_p3);
  h.intent_code = byteswap_value(h.intent_code);
  h.datatype = byteswap_value(h.datatype);
  h.bitpix = byteswap_value(h.bitpix);
  h.slice_start = byteswap_value(h.slice_start);
  for (auto& p : h.pixdim) p = byteswap_value(p);
  h.vox_offset = byteswap_value(h.vox_offset);
  h.scl_slope = byteswap_value(h.scl_slope);
  h.scl_inter = byteswap_value(h.scl_inter);
  h.slice_end = byteswap_value(h.slice_end);
  h.cal_max = byteswap_value(h.cal_max);
  h.cal_min = byteswap_value(h.cal_min);
  h.slice_duration = byteswap_value(h.slice_duration);
  h.toffset = byteswap_value(h.toffset);
  h.glmax = byteswap_value(h.glmax);
  h.glmin = byteswap_value(h.glmin);
  h.qform_code = byteswap_value(h.qform_code);
  h.sform_code = byteswap_value(h.sform_code);
  h.quatern_b = byteswap_value(h.quatern_b);
  h.quatern_c = byteswap_value(h.quatern_c);
  h.quatern_d = byteswap_value(h.quatern_d);
  h.qoffset_x = byteswap_value(h.qoffset_x);
  h.qoffset_y = byteswap_value(h.qoffset_y);
  h.qoffset_z = byteswap_value(h.qoffset_z);
  for (auto& s : h.srow_x) s = byteswap_value(s);
  for (auto& s : h.srow_y) s = byteswap_value(s);
  for (auto& s : h.srow_z) s = byteswap_value(s);
}

class GzReader {
public:
  explicit GzReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw IoError("cannot open file: " + path);
  }
  ~GzReader() {
    if (file_) gzclose(file_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read_exact(void* dst, std::size_t n, const std::string& path) {
    std::size_t done = 0;
    auto* p = static_cast<std::uint8_t*>(dst);
    while (done < n) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
      const int got = gzread(file_, p + done, chunk);
      if (got <= 0) throw IoError("truncated or unreadable NIfTI file: " + path);
      done += static_cast<std::size_t>(got);
    }
  }

  void skip(std::size_t n, const std::string& path) {
    std::vector<std::uint8_t> scratch(std::min<std::size_t>(n, 65536));
    std::size_t left = n;
    while (left > 0) {
      const std::size_t chunk = std::min(left, scratch.size());
      read_exact(scratch.data(), chunk, path);
      left -= chunk;
    }
  }

private:
  gzFile file_;
};

template <typename T>
void convert_raw(const std::vector<std::uint8_t>& raw, std::vector<double>& out, bool swapped) {
  const std::size_t n = raw.size() / sizeof(T);
  out.resize(n);
  const T* src = reinterpret_cast<const T*>(raw.data());
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, src + i, sizeof(T));
    if (swapped) v = byteswap_value(v);
    out[i] = static_cast<double>(v);
  }
}

std::size_t dtype_size(std::int16_t dt) {
  switch (dt) {
    case kDtUint8:
    case kDtInt8: return 1;
    case kDtInt16:
    case kDtUint16: return 2;
    case kDtInt32:
    case kDtUint32:
    case kDtFloat32: return 4;
    case kDtFloat64: return 8;
    default: return 0;
  }
}

Nifti1Header default_header(const Volume& v) {
  Nifti1Header h{};
  if (v.header_blob.size() == sizeof(Nifti1Header)) {
    std::memcpy(&h, v.header_blob.data(), sizeof(h));
  } else {
    h.regular = 'r';
    h.pixdim[0] = 1.0f;
    h.xyzt_units = 2; // mm
    // identity sform scaled by spacing; orientation is not interpreted here
    h.sform_code = 1;
    h.srow_x[0] = static_cast<float>(v.spacing[0]);
    h.srow_y[1] = static_cast<float>(v.spacing[1]);
    h.srow_z[2] = static_cast<float>(v.spacing[2]);
  }
  h.sizeof_hdr = 348;
  for (auto& d : h.dim) d = 1;
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(v.dims[0]);
  h.dim[2] = static_cast<std::int16_t>(v.dims[1]);
  h.dim[3] = static_cast<std::int16_t>(v.dims[2]);
  h.pixdim[1] = static_cast<float>(v.spacing[0]);
  h.pixdim[2] = static_cast<float>(v.spacing[1]);
  h.pixdim[3] = static_cast<float>(v.spacing[2]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.magic[0] = 'n';
  h.magic[1] = '+';
  h.magic[2] = '1';
  h.magic[3] = '\0';
  return h;
}

void write_file(const std::string& path, const Nifti1Header& h, const void* payload,
                std::size_t payload_bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path() && !std::filesystem::exists(p.parent_path()))
    throw IoError("parent directory does not exist: " + p.parent_path().string());

  const char extender[4] = {0, 0, 0, 0};
  const bool gz = p.extension() == ".gz";
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open file for writing: " + path);
    bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)) &&
              gzwrite(f, extender, 4) == 4;
    const auto* bytes = static_cast<const std::uint8_t*>(payload);
    std::size_t done = 0;
    while (ok && done < payload_bytes) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<std::size_t>(payload_bytes - done, 1u << 30));
      ok = gzwrite(f, bytes + done, chunk) == static_cast<int>(chunk);
      done += chunk;
    }
    const int rc = gzclose(f);
    if (!ok || rc != Z_OK) throw IoError("failed writing file: " + path);
  } else {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open file for writing: " + path);
    bool ok = std::fwrite(&h, 1, sizeof(h), f) == sizeof(h) &&
              std::fwrite(extender, 1, 4, f) == 4 &&
              std::fwrite(payload, 1, payload_bytes, f) == payload_bytes;
    if (std::fclose(f) != 0) ok = false;
    if (!ok) throw IoError("failed writing file: " + path);
  }
}

} // namespace

Volume load_volume(const std::string& path, Contrast contrast) {
  if (!std::filesystem::exists(path)) throw IoError("file does not exist: " + path);

  GzReader reader(path);
  Nifti1Header h{};
  reader.read_exact(&h, sizeof(h), path);

  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    if (byteswap_value(h.sizeof_hdr) == 348) {
      swap_header(h);
      swapped = true;
    } else {
      throw IoError("malformed NIfTI header (bad sizeof_hdr): " + path);
    }
  }
  const bool magic_ok = std::memcmp(h.magic, "n+1", 4) == 0 || std::memcmp(h.magic, "ni1", 4) == 0;
  if (!magic_ok) throw IoError("malformed NIfTI header (bad magic): " + path);
  if (std::memcmp(h.magic, "ni1", 4) == 0)
    throw IoError("detached .hdr/.img NIfTI pairs are not supported: " + path);

  if (h.dim[0] < 1 || h.dim[0] > 7)
    throw IoError("malformed NIfTI header (dim[0] out of range): " + path);
  if (h.dim[0] < 3) throw ContractError("not a 3D scalar volume: " + path);
  for (int d = 4; d <= h.dim[0]; ++d)
    if (h.dim[d] > 1) throw ContractError("not a 3D scalar volume: " + path);

  const std::size_t bytes_per = dtype_size(h.datatype);
  if (bytes_per == 0)
    throw ContractError("not a 3D scalar volume (unsupported datatype " +
                        std::to_string(h.datatype) + "): " + path);

  Volume v;
  for (int d = 0; d < 3; ++d) {
    if (h.dim[d + 1] < 1) throw IoError("malformed NIfTI header (nonpositive dim): " + path);
    v.dims[d] = static_cast<std::size_t>(h.dim[d + 1]);
    if (!(h.pixdim[d + 1] > 0.0f))
      throw IoError("malformed NIfTI header (nonpositive pixdim): " + path);
    v.spacing[d] = static_cast<double>(h.pixdim[d + 1]);
  }
  v.contrast = contrast;

  const std::size_t n = v.size();
  const std::size_t offset = std::max<std::size_t>(
      352, static_cast<std::size_t>(std::max(0.0f, h.vox_offset)));
  reader.skip(offset - sizeof(h), path);

  std::vector<std::uint8_t> raw(n * bytes_per);
  reader.read_exact(raw.data(), raw.size(), path);

  switch (h.datatype) {
    case kDtUint8: convert_raw<std::uint8_t>(raw, v.data, swapped); break;
    case kDtInt8: convert_raw<std::int8_t>(raw, v.data, swapped); break;
    case kDtInt16: convert_raw<std::int16_t>(raw, v.data, swapped); break;
    case kDtUint16: convert_raw<std::uint16_t>(raw, v.data, swapped); break;
    case kDtInt32: convert_raw<std::int32_t>(raw, v.data, swapped); break;
    case kDtUint32: convert_raw<std::uint32_t>(raw, v.data, swapped); break;
    case kDtFloat32: convert_raw<float>(raw, v.data, swapped); break;
    case kDtFloat64: convert_raw<double>(raw, v.data, swapped); break;
    default: throw ContractError("unsupported datatype: " + path);
  }

  if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
    const double slope = h.scl_slope, inter = h.scl_inter;
    for (double& x : v.data) x = slope * x + inter;
  }
  for (double x : v.data)
    if (!std::isfinite(x)) throw ContractError("volume contains non-finite intensities: " + path);

  // keep the (now native-endian) header so orientation survives a re-save
  v.header_blob.resize(sizeof(h));
  std::memcpy(v.header_blob.data(), &h, sizeof(h));
  return v;
}

void save_volume(const Volume& v, const std::string& path) {
  if (v.dims[0] == 0 || v.dims[1] == 0 || v.dims[2] == 0)
    throw ContractError("cannot save volume with zero voxel count");
  if (v.data.size() != v.size())
    throw ContractError("volume data length does not match dims");

  Nifti1Header h = default_header(v);
  h.datatype = kDtFloat64;
  h.bitpix = 64;
  write_file(path, h, v.data.data(), v.data.size() * sizeof(double));
}

Mask load_mask(const std::string& path) {
  const Volume v = load_volume(path);
  return mask_from_volume(v, 0.5);
}

void save_mask(const Mask& m, const std::string& path) {
  if (m.dims[0] == 0 || m.dims[1] == 0 || m.dims[2] == 0)
    throw ContractError("cannot save mask with zero voxel count");
  if (m.data.size() != m.size())
    throw ContractError("mask data length does not match dims");

  Volume shim;
  shim.dims = m.dims;
  Nifti1Header h = default_header(shim);
  h.datatype = kDtUint8;
  h.bitpix = 8;
  write_file(path, h, m.data.data(), m.data.size());
}

} // namespace mrinorm
