#ifndef PFM_ELM_HPP
#define PFM_ELM_HPP

#include "pfm/common.hpp"

namespace pfm {

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// rcond * sigma_max are treated as zero.
MatrixXd pinv(const MatrixXd& A, double rcond = 1e-12);

/// Minimum-norm least-squares consequent weights: W = Y * pinv(Psi),
/// where Psi is K x N with one firing (or probability-weighted) vector
/// per column and Y is the 1 x N target row.
Eigen::RowVectorXd solve_consequents(const MatrixXd& psi,
                                     const Eigen::RowVectorXd& targets);

}  // namespace pfm

#endif  // PFM_ELM_HPP
