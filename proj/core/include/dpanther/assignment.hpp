#pragma once

#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "dpanther/splines.hpp"

namespace dpanther {

enum class AssignmentVariant { kLSA, kWTAr, kRWTAr, kWTAc, kRWTAc };

std::string_view to_string(AssignmentVariant variant);
/// Accepts the names printed by to_string(), case-insensitively.
AssignmentVariant parse_variant(std::string_view name);

/// Expert-by-student cost matrices built from normalized actions.
struct CostMatrices {
  Eigen::MatrixXd d_p;  // mean squared error over the 12 position scalars
  Eigen::MatrixXd d_t;  // squared error of the time scalar

  int n_e() const { return static_cast<int>(d_p.rows()); }
  int n_s() const { return static_cast<int>(d_p.cols()); }
};

CostMatrices cost_matrices(std::span<const ActionTuple::Vector> expert,
                           std::span<const ActionTuple::Vector> student);

/// Binary n_e x n_s matrix of a minimum-cost injective row-to-column
/// assignment (Hungarian method with potentials, O(n_e^2 n_s)).
/// Requires n_e <= n_s.
Eigen::MatrixXd lsa_assign(const Eigen::MatrixXd& d_p);

/// Winner-takes-all baselines. Row variants put 1-eps on each row minimum and
/// eps/(n_s-1) elsewhere in the row; column variants do the same per column
/// with eps/(n_e-1). Ties go to the lowest index. WTAr/WTAc ignore eps.
Eigen::MatrixXd wta_assign(const Eigen::MatrixXd& d_p, AssignmentVariant variant, double eps);

/// Dispatches to lsa_assign() or wta_assign().
Eigen::MatrixXd assign(const Eigen::MatrixXd& d_p, AssignmentVariant variant, double eps);

/// Cost of a binary or soft assignment: sum of A .* D.
double assignment_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d);

struct LossValue {
  double loss = 0.0;
  Eigen::MatrixXd d_loss_d_p;  // beta_p * A
  Eigen::MatrixXd d_loss_d_t;  // beta_T * A
};

/// 1^T (beta_p A .* D_p + beta_T A .* D_T) 1 and its partial derivatives.
LossValue assignment_loss(const Eigen::MatrixXd& a, const CostMatrices& d, double beta_p,
                          double beta_t);

}  // namespace dpanther
