#include "pfm/elm.hpp"

#include <Eigen/SVD>

namespace pfm {

MatrixXd pinv(const MatrixXd& A, double rcond) {
  if (!A.allFinite()) throw NumericalError("pinv: non-finite entries");
  if (A.rows() == 0 || A.cols() == 0) return MatrixXd::Zero(A.cols(), A.rows());

  Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff = rcond * (s.size() > 0 ? s(0) : 0.0);
  VectorXd s_inv = VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) s_inv(i) = 1.0 / s(i);
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::RowVectorXd solve_consequents(const MatrixXd& psi,
                                     const Eigen::RowVectorXd& targets) {
  if (psi.cols() != targets.cols())
    throw std::invalid_argument("solve_consequents: Psi has " +
                                std::to_string(psi.cols()) + " columns, Y has " +
                                std::to_string(targets.cols()));
  return targets * pinv(psi);
}

}  // namespace pfm
