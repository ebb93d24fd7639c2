#include "phmoe/inference.hpp"

#include "multinomial.hpp"
#include "phmoe/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace phmoe {

std::string CoefficientRow::stars() const {
  if (!p_value) return "";
  if (*p_value < 0.001) return "***";
  if (*p_value < 0.01) return "**";
  if (*p_value < 0.05) return "*";
  return "";
}

CoefficientTable gating_inference(const Matrix& B,
                                  const std::vector<DesignRow>& designs,
                                  const Vector& weights,
                                  const GatingCoefficients& alpha_hat,
                                  const std::vector<std::string>& column_names) {
  const auto agg = detail::aggregate(B, designs, weights);
  const Matrix& alpha = alpha_hat.alpha();
  const Eigen::Index p = alpha.rows();
  const Eigen::Index d = alpha.cols();
  if (B.cols() != p || agg.X.cols() != d)
    throw InvalidArgument("gating_inference: dimension mismatch");
  if (!column_names.empty() && static_cast<Eigen::Index>(column_names.size()) != d)
    throw InvalidArgument("gating_inference: wrong number of column names");

  CoefficientTable table;
  const Eigen::Index m = (p - 1) * d;
  Matrix cov = Matrix::Zero(m, m);
  std::vector<char> missing(static_cast<std::size_t>(m), 0);
  if (m > 0) {
    const Matrix info = detail::information(agg, alpha, 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(info);
    const Vector& ev = es.eigenvalues();
    const Matrix& U = es.eigenvectors();
    const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (ev(j) > cutoff) {
        cov += (1.0 / ev(j)) * U.col(j) * U.col(j).transpose();
      } else {
        table.singular = true;
        for (Eigen::Index i = 0; i < m; ++i)
          if (std::abs(U(i, j)) > 1e-6) missing[i] = 1;
      }
    }
  }

  for (Eigen::Index k = 1; k < p; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::Index idx = (k - 1) * d + j;
      CoefficientRow row;
      row.state = static_cast<int>(k + 1);
      row.column = column_names.empty() ? "x" + std::to_string(j + 1)
                                        : column_names[j];
      row.estimate = alpha(k, j);
      const double var = cov(idx, idx);
      if (!missing[idx] && var > 0.0) {
        const double se = std::sqrt(var);
        const double z = row.estimate / se;
        row.standard_error = se;
        row.z_value = z;
        row.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

CoefficientTable gating_inference(const PhMoeModel& model,
                                  const std::vector<Observation>& data) {
  std::vector<DesignRow> designs;
  Vector weights(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    designs.push_back(data[i].design);
    weights(static_cast<Eigen::Index>(i)) = data[i].weight;
  }
  const Matrix B = posterior_start_weights(model, data);
  return gating_inference(B, designs, weights, model.gating,
                          model.schema.design_names());
}

InformationCriteria information_criteria(double loglik, int dof, double n) {
  if (!(n > 0.0)) throw InvalidArgument("information_criteria: N must be positive");
  return {loglik, dof, n, -2.0 * loglik + 2.0 * dof,
          -2.0 * loglik + dof * std::log(n)};
}

InformationCriteria information_criteria(const FitResult& fit,
                                         const std::vector<Observation>& data) {
  double n = 0.0;
  for (const auto& o : data) n += o.weight;
  return information_criteria(fit.trace.back(), fit.dof, n);
}

}  // namespace phmoe
