#include "nlab/assembly.hpp"

#include <Eigen/SVD>

#include <numeric>
#include <random>

namespace nlab {

// Smallest singular values of D^{-1/2} K D^{-1/2} (D the lumped mass) by block
// inverse iteration on K~^T K~ with a tiny diagonal shift, then Rayleigh-Ritz.
KernelReport kernel_analysis(const ProblemSpec& spec, const KernelOptions& opt) {
  require(spec.mesh != nullptr, "problem has no mesh");
  const auto& mesh = *spec.mesh;
  const Index N = mesh.num_vertices();
  const int n = mesh.dim();
  const int want = int(std::min<Index>(opt.count, N));
  const int k = int(std::min<Index>(opt.count + opt.oversample, N));

  const SparseMatrix K = assemble_matrix(spec);
  const VectorX D = lumped_mass(mesh);
  const VectorX Dh = D.cwiseSqrt(), Dih = Dh.cwiseInverse();
  SparseMatrix Kt = K;
  for (int c = 0; c < Kt.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(Kt, c); it; ++it) it.valueRef() *= Dih[it.row()] * Dih[it.col()];

  const Real vol = mesh.total_volume();
  const Real ell2 = std::pow(vol, 2.0 / n);
  const Real h = std::pow(vol / N, 1.0 / n);

  // Shift far below the detection floor.
  const Real shift = 1e-9 / ell2;
  SparseMatrix M = K;
  for (Index i = 0; i < N; ++i) M.coeffRef(i, i) += shift * D[i];
  M.makeCompressed();
  SparseMatrix MT = M.transpose();
  Eigen::SparseLU<SparseMatrix> lu, lut;
  lu.compute(M);
  lut.compute(MT);
  require(lu.info() == Eigen::Success && lut.info() == Eigen::Success,
          "kernel analysis: factorisation failed");

  std::mt19937_64 rng(12345);
  std::normal_distribution<Real> normal;
  MatrixX X(N, k);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  auto orth = [](const MatrixX& Y) {
    Eigen::HouseholderQR<MatrixX> qr(Y);
    return MatrixX(qr.householderQ() * MatrixX::Identity(Y.rows(), Y.cols()));
  };
  X = orth(X);

  KernelReport rep;
  Eigen::VectorXd sigma_prev = Eigen::VectorXd::Constant(k, -1);
  Eigen::VectorXd sigma;
  MatrixX V;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    MatrixX Y(N, k);
    for (int j = 0; j < k; ++j) {
      // (K~^T K~)^{-1} = K~^{-1} K~^{-T}: right singular vectors, which Rayleigh-Ritz needs
      VectorX y = Dh.cwiseProduct(lut.solve(VectorX(Dh.cwiseProduct(X.col(j)))));
      Y.col(j) = Dh.cwiseProduct(lu.solve(VectorX(Dh.cwiseProduct(y))));
    }
    X = orth(Y);
    const MatrixX W = Kt * X;
    Eigen::JacobiSVD<MatrixX> svd(W, Eigen::ComputeThinV);
    sigma = svd.singularValues().reverse();
    V = svd.matrixV().rowwise().reverse();
    rep.iterations = it;
    Real change = 0;
    for (int i = 0; i < want; ++i) {
      const Real s = sigma[i] * ell2;
      change = std::max(change, std::abs(sigma[i] - sigma_prev[i]) * ell2 /
                                    std::max(s, (h * h) / ell2));
    }
    sigma_prev = sigma;
    if (it > 2 && change < std::max(opt.tolerance, 1e-10)) break;
  }
  const MatrixX Y = X * V;  // right singular vectors of K~, ascending

  rep.floor = (h * h) / ell2;
  for (int i = 0; i < want; ++i) {
    rep.singular_values.push_back(sigma[i]);
    rep.scaled_singular_values.push_back(sigma[i] * ell2);
  }
  const auto& s = rep.scaled_singular_values;
  const Real tiny = std::numeric_limits<Real>::min();
  rep.ratios.push_back(s[0] / rep.floor);
  for (int i = 1; i < want; ++i) rep.ratios.push_back(s[i] / std::max(s[i - 1], tiny));
  std::vector<int> order(rep.ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return rep.ratios[a] > rep.ratios[b]; });
  rep.dimension = order[0];
  rep.gap = rep.ratios[order[0]];
  rep.candidates = {order[0], order.size() > 1 ? order[1] : order[0]};
  rep.ambiguous = rep.gap < opt.min_gap;

  for (int i = 0; i < rep.dimension; ++i)
    rep.basis.emplace_back(spec.mesh, VectorX(Dih.cwiseProduct(Y.col(i))));

  if (rep.dimension == 1) {
    VectorX z = rep.basis[0].values;
    if (z.sum() < 0) z = -z;
    z /= lp_norm(FeFunction(spec.mesh, z), sobolev_exponent(n));
    rep.uhat_positive = z.minCoeff() > 0;
    const Real kmax = K.coeffs().cwiseAbs().maxCoeff();
    rep.uhat_residual = (K * z).cwiseAbs().maxCoeff() / (kmax * z.cwiseAbs().maxCoeff());
    rep.uhat = FeFunction(spec.mesh, z);
  }
  return rep;
}

}  // namespace nlab
