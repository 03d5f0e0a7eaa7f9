#include "dpanther/assignment.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dpanther {

std::string_view to_string(AssignmentVariant variant) {
  switch (variant) {
    case AssignmentVariant::kLSA: return "LSA";
    case AssignmentVariant::kWTAr: return "WTAr";
    case AssignmentVariant::kRWTAr: return "RWTAr";
    case AssignmentVariant::kWTAc: return "WTAc";
    case AssignmentVariant::kRWTAc: return "RWTAc";
  }
  throw std::invalid_argument("unknown assignment variant");
}

AssignmentVariant parse_variant(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const std::string wanted = lower(name);
  for (auto v : {AssignmentVariant::kLSA, AssignmentVariant::kWTAr, AssignmentVariant::kRWTAr,
                 AssignmentVariant::kWTAc, AssignmentVariant::kRWTAc}) {
    if (lower(to_string(v)) == wanted) return v;
  }
  throw std::invalid_argument("unknown assignment variant '" + std::string(name) + "'");
}

CostMatrices cost_matrices(std::span<const ActionTuple::Vector> expert,
                           std::span<const ActionTuple::Vector> student) {
  if (expert.empty()) throw std::invalid_argument("cost_matrices: empty expert list");
  if (student.size() < expert.size()) {
    throw std::invalid_argument("cost_matrices: more expert than student actions");
  }
  const auto n_e = static_cast<Eigen::Index>(expert.size());
  const auto n_s = static_cast<Eigen::Index>(student.size());
  CostMatrices d{Eigen::MatrixXd(n_e, n_s), Eigen::MatrixXd(n_e, n_s)};
  for (Eigen::Index i = 0; i < n_e; ++i) {
    for (Eigen::Index j = 0; j < n_s; ++j) {
      const ActionTuple::Vector diff = expert[i] - student[j];
      d.d_p(i, j) = diff.head<12>().squaredNorm() / 12.0;
      d.d_t(i, j) = diff(12) * diff(12);
    }
  }
  return d;
}

namespace {

// Hungarian method with potentials on the rows x cols submatrix; returns the
// column of every row.
std::vector<int> hungarian(const Eigen::MatrixXd& d, const std::vector<int>& rows,
                           const std::vector<int>& cols) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; match[j] is the row assigned to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), min_slack(m + 1);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = d(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) col_of[match[j] - 1] = cols[j - 1];
  }
  return col_of;
}

double row_ordered_cost(const Eigen::MatrixXd& d, const std::vector<int>& col_of) {
  double sum = 0.0;
  for (std::size_t i = 0; i < col_of.size(); ++i) sum += d(static_cast<Eigen::Index>(i), col_of[i]);
  return sum;
}

}  // namespace

Eigen::MatrixXd lsa_assign(const Eigen::MatrixXd& d_p) {
  const int n = static_cast<int>(d_p.rows());
  const int m = static_cast<int>(d_p.cols());
  if (n > m) throw std::invalid_argument("lsa_assign: n_e must not exceed n_s");
  if (!d_p.allFinite()) throw std::invalid_argument("lsa_assign: non-finite cost");

  std::vector<int> all_rows(n), all_cols(m);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  std::vector<int> col_of = hungarian(d_p, all_rows, all_cols);
  double best = row_ordered_cost(d_p, col_of);

  // Among optimal assignments pick the lexicographically smallest column
  // sequence: row by row, try lower columns and re-solve the remaining rows.
  std::vector<char> taken(m, 0);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < col_of[i]; ++c) {
      if (taken[c]) continue;
      std::vector<int> rest_rows(all_rows.begin() + i + 1, all_rows.end());
      std::vector<int> rest_cols;
      for (int j = 0; j < m; ++j) {
        if (!taken[j] && j != c) rest_cols.push_back(j);
      }
      std::vector<int> trial(col_of.begin(), col_of.begin() + i);
      trial.push_back(c);
      const std::vector<int> rest = hungarian(d_p, rest_rows, rest_cols);
      trial.insert(trial.end(), rest.begin(), rest.end());
      const double cost = row_ordered_cost(d_p, trial);
      if (cost <= best) {
        best = cost;
        col_of = std::move(trial);
        break;
      }
    }
    taken[col_of[i]] = 1;
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) a(i, col_of[i]) = 1.0;
  return a;
}

Eigen::MatrixXd wta_assign(const Eigen::MatrixXd& d_p, AssignmentVariant variant, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("wta_assign: eps must lie in [0, 1)");
  const Eigen::Index n_e = d_p.rows();
  const Eigen::Index n_s = d_p.cols();
  if (n_e == 0 || n_s == 0) throw std::invalid_argument("wta_assign: empty cost matrix");
  Eigen::MatrixXd a(n_e, n_s);
  switch (variant) {
    case AssignmentVariant::kWTAr:
    case AssignmentVariant::kRWTAr: {
      const double e = variant == AssignmentVariant::kWTAr || n_s == 1 ? 0.0 : eps;
      a.setConstant(n_s > 1 ? e / static_cast<double>(n_s - 1) : 0.0);
      for (Eigen::Index i = 0; i < n_e; ++i) {
        Eigen::Index j_min = 0;
        d_p.row(i).minCoeff(&j_min);
        a(i, j_min) = 1.0 - e;
      }
      return a;
    }
    case AssignmentVariant::kWTAc:
    case AssignmentVariant::kRWTAc: {
      const double e = variant == AssignmentVariant::kWTAc || n_e == 1 ? 0.0 : eps;
      a.setConstant(n_e > 1 ? e / static_cast<double>(n_e - 1) : 0.0);
      for (Eigen::Index j = 0; j < n_s; ++j) {
        Eigen::Index i_min = 0;
        d_p.col(j).minCoeff(&i_min);
        a(i_min, j) = 1.0 - e;
      }
      return a;
    }
    case AssignmentVariant::kLSA:
      break;
  }
  throw std::invalid_argument("wta_assign: not a winner-takes-all variant");
}

Eigen::MatrixXd assign(const Eigen::MatrixXd& d_p, AssignmentVariant variant, double eps) {
  return variant == AssignmentVariant::kLSA ? lsa_assign(d_p) : wta_assign(d_p, variant, eps);
}

double assignment_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d) {
  if (a.rows() != d.rows() || a.cols() != d.cols()) {
    throw std::invalid_argument("assignment_cost: shape mismatch");
  }
  return a.cwiseProduct(d).sum();
}

LossValue assignment_loss(const Eigen::MatrixXd& a, const CostMatrices& d, double beta_p,
                          double beta_t) {
  if (d.d_p.rows() != d.d_t.rows() || d.d_p.cols() != d.d_t.cols()) {
    throw std::invalid_argument("assignment_loss: D_p and D_T differ in shape");
  }
  LossValue out;
  out.loss = beta_p * assignment_cost(a, d.d_p) + beta_t * assignment_cost(a, d.d_t);
  out.d_loss_d_p = beta_p * a;
  out.d_loss_d_t = beta_t * a;
  return out;
}

}  // namespace dpanther
