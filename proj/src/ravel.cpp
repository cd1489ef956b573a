#include "mrinorm/ravel.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <iostream>

namespace mrinorm {

CsfMatrix build_csf_matrix(const std::vector<RavelInput>& sample) {
  if (sample.empty()) throw ContractError("build_csf_matrix: empty sample");
  const Dims dims = sample.front().ws.dims;
  for (const auto& in : sample) {
    require_same_dims(in.ws.dims, dims, "build_csf_matrix (volumes must be co-registered)");
    require_same_dims(in.csf.dims, dims, "build_csf_matrix (CSF mask)");
  }

  Mask inter = sample.front().csf;
  for (std::size_t i = 1; i < sample.size(); ++i) inter = mask_intersection(inter, sample[i].csf);
  if (inter.count == 0) throw ContractError("build_csf_matrix: empty CSF intersection");

  CsfMatrix vc;
  vc.m = sample.size();
  vc.n = inter.count;
  if (vc.n < vc.m)
    throw ContractError("build_csf_matrix: need at least as many CSF voxels as images (" +
                        std::to_string(vc.n) + " < " + std::to_string(vc.m) + ")");
  vc.voxel_index.reserve(vc.n);
  for (std::size_t i = 0; i < inter.size(); ++i)
    if (inter.data[i]) vc.voxel_index.push_back(i);

  vc.values.resize(vc.n * vc.m);
  for (std::size_t col = 0; col < vc.m; ++col) {
    vc.image_ids.push_back(sample[col].id);
    const auto& data = sample[col].ws.data;
    for (std::size_t row = 0; row < vc.n; ++row)
      vc.values[row * vc.m + col] = data[vc.voxel_index[row]];
  }
  return vc;
}

std::vector<std::vector<double>> estimate_unwanted_basis(const CsfMatrix& vc, std::size_t b,
                                                         bool center) {
  if (b == 0 || b > vc.m)
    throw ContractError("estimate_unwanted_basis: rank must satisfy 1 <= b <= m");
  for (double v : vc.values)
    if (!std::isfinite(v)) throw NumericalError("estimate_unwanted_basis: non-finite CSF value");

  Eigen::MatrixXd mat(vc.n, vc.m);
  for (std::size_t r = 0; r < vc.n; ++r)
    for (std::size_t c = 0; c < vc.m; ++c) mat(r, c) = vc.at(r, c);

  if (center) {
    // remove each voxel's across-image mean; the basis then captures
    // cross-image variation and is orthogonal to the all-ones vector
    const Eigen::VectorXd row_mean = mat.rowwise().mean();
    mat.colwise() -= row_mean;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(sv.size()) && j + 1 < b + 1; ++j) {
    if (sv(j) == sv(j + 1))
      std::cerr << "warning: tied singular values in CSF matrix; basis order fixed by convention\n";
  }

  std::vector<std::vector<double>> basis(b, std::vector<double>(vc.m));
  for (std::size_t j = 0; j < b; ++j) {
    Eigen::VectorXd col = svd.matrixV().col(static_cast<Eigen::Index>(j));
    const double norm = col.norm();
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-12 * norm) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
    for (std::size_t i = 0; i < vc.m; ++i) basis[j][i] = col(static_cast<Eigen::Index>(i));
  }
  return basis;
}

RavelResult ravel_fit_apply(const std::vector<RavelInput>& sample, const RavelOptions& opts) {
  const std::size_t m = sample.size();
  if (m < opts.b + 2)
    throw ContractError("ravel_fit_apply: need at least b+2 images, got " + std::to_string(m));

  const CsfMatrix vc = build_csf_matrix(sample);
  const auto basis = estimate_unwanted_basis(vc, opts.b, opts.center);

  Mask domain = sample.front().brain;
  require_same_dims(domain.dims, sample.front().ws.dims, "ravel_fit_apply (brain mask)");
  for (std::size_t i = 1; i < m; ++i) domain = mask_union(domain, sample[i].brain);

  // least squares of each voxel series onto [1 | W]; with the design fixed
  // across voxels the pseudoinverse is computed once
  const std::size_t b = opts.b;
  Eigen::MatrixXd design(m, b + 1);
  design.col(0).setOnes();
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t i = 0; i < m; ++i)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = basis[j][i];
  const Eigen::MatrixXd pinv =
      (design.transpose() * design).ldlt().solve(design.transpose()); // (b+1) x m

  RavelResult res;
  res.model.b = b;
  res.model.basis = basis;
  res.model.domain = domain;
  for (const auto& in : sample) res.model.image_ids.push_back(in.id);
  for (std::size_t j = 0; j < b; ++j)
    res.model.coefficients.push_back(make_volume(domain.dims, 0.0, sample.front().ws.spacing));
  for (const auto& in : sample) res.outputs.push_back(in.ws);

  Eigen::VectorXd series(m), coef(b + 1);
  for (std::size_t x = 0; x < domain.size(); ++x) {
    if (!domain.data[x]) continue;
    for (std::size_t i = 0; i < m; ++i) series(static_cast<Eigen::Index>(i)) = sample[i].ws.data[x];
    coef = pinv * series;
    for (std::size_t j = 0; j < b; ++j) {
      const double gamma = coef(static_cast<Eigen::Index>(j + 1));
      res.model.coefficients[j].data[x] = gamma;
      for (std::size_t i = 0; i < m; ++i) res.outputs[i].data[x] -= gamma * basis[j][i];
    }
  }
  return res;
}

} // namespace mrinorm
