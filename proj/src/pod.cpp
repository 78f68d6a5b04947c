#include "ddrom/pod.hpp"

#include <Eigen/SVD>

namespace ddrom {

namespace {

struct ThinSvd {
  Mat U;
  Vec sigma;  // numerically nonzero part only
};

ThinSvd thin_svd(const Mat& X) {
  if (X.size() == 0) throw InvalidArgument("pod: empty snapshot matrix");
  if (!X.allFinite()) throw InvalidArgument("pod: snapshot matrix has non-finite entries");
  Eigen::BDCSVD<Mat> svd(X, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  if (!(s[0] > 0.0)) throw InvalidArgument("pod: snapshot matrix is zero");
  Index r = 0;
  while (r < s.size() && s[r] > 1e-12 * s[0]) ++r;
  return {svd.matrixU(), s.head(r)};
}

double tail(const Vec& s, Index n) { return n >= s.size() ? 0.0 : s.tail(s.size() - n).squaredNorm(); }

}  // namespace

Index energy_dimension(const Vec& sigma, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("pod energy tolerance must lie in (0, 1)");
  const double total = sigma.squaredNorm();
  double acc = 0.0;
  for (Index n = 0; n < sigma.size(); ++n) {
    acc += sigma[n] * sigma[n];
    if (acc >= (1.0 - tol) * total) return n + 1;
  }
  return sigma.size();
}

PodBasis pod(const Mat& X, EnergyTolerance tol) {
  const ThinSvd svd = thin_svd(X);
  const Index n = energy_dimension(svd.sigma, tol.value);
  return {svd.U.leftCols(n), svd.sigma, tol.value, tail(svd.sigma, n)};
}

PodBasis pod(const Mat& X, FixedDimension fixed) {
  if (fixed.n < 1 || fixed.n > std::min(X.rows(), X.cols()))
    throw InvalidArgument("pod: fixed dimension " + std::to_string(fixed.n) + " outside [1, min(N, n_mu)]");
  const ThinSvd svd = thin_svd(X);
  return {svd.U.leftCols(fixed.n), svd.sigma, 0.0, tail(svd.sigma, fixed.n)};
}

Mat port_interface_basis(const Partition& part, const std::vector<Mat>& port_bases, int i) {
  if (port_bases.size() != part.ports.size()) throw InvalidArgument("port_interface_basis: missing port basis");
  std::vector<Index> dims(port_bases.size());
  for (std::size_t j = 0; j < dims.size(); ++j) dims[j] = port_bases[j].cols();
  Mat phi = Mat::Zero(Index(part[i].interface_cols.size()), latent_interface_dim(part, i, dims));
  for (int j : part[i].ports) {
    const Mat& pj = port_bases[j];
    require_size(pj.rows(), Index(part.ports[j].cols.size()), "port basis rows");
    const IndexList& pos = part.port_positions(j, i);
    const Index off = latent_port_offset(part, i, j, dims);
    for (std::size_t t = 0; t < pos.size(); ++t) phi.row(pos[t]).segment(off, pj.cols()) = pj.row(Index(t));
  }
  return phi;
}

Vec LinearMap::decode(const Vec& xh) const {
  require_size(xh.size(), latent_dim(), "LinearMap::decode");
  return phi_ * xh;
}

Vec LinearMap::encode(const Vec& x) const {
  require_size(x.size(), full_dim(), "LinearMap::encode");
  return phi_.transpose() * x;
}

}  // namespace ddrom
