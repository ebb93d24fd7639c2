#pragma once

// Softmax mixture-of-experts gating: covariate schema, design rows, initial
// probabilities pi(x) and conditional summaries of a PH-MoE model.

#include "phmoe/matcore.hpp"
#include "phmoe/phcore.hpp"
#include "phmoe/transforms.hpp"

#include <map>
#include <string>
#include <vector>

namespace phmoe {

struct CovariateColumn {
  enum class Kind { Numeric, Categorical };

  std::string name;
  Kind kind = Kind::Numeric;
  std::vector<std::string> levels;  // categorical; first level is baseline
  double center = 0.0;              // numeric standardization, x' = (x-c)/s
  double scale = 1.0;

  bool operator==(const CovariateColumn&) const = default;
};

/// Ordered covariate columns. The design always leads with an intercept.
class CovariateSchema {
 public:
  CovariateSchema() = default;
  explicit CovariateSchema(std::vector<CovariateColumn> columns);

  const std::vector<CovariateColumn>& columns() const { return columns_; }
  /// d = 1 + #numeric + sum over categoricals of (levels - 1).
  int design_width() const;
  /// "(Intercept)", numeric names, and "<name><level>" dummies.
  std::vector<std::string> design_names() const;
  const CovariateColumn* find(const std::string& name) const;

  bool operator==(const CovariateSchema&) const = default;

 private:
  std::vector<CovariateColumn> columns_;
};

/// One row of the design matrix: 1 followed by numeric values and dummies.
class DesignRow {
 public:
  DesignRow() = default;
  explicit DesignRow(Vector values);

  const Vector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_(i); }
  bool operator==(const DesignRow& o) const { return values_ == o.values_; }

 private:
  Vector values_ = Vector::Ones(1);
};

/// p x d softmax coefficients with the first row pinned to zero.
class GatingCoefficients {
 public:
  /// Throws unless row 0 is identically zero.
  explicit GatingCoefficients(Matrix alpha);
  /// Subtracts row 0 from every row; softmax outputs are unchanged.
  static GatingCoefficients normalized(const Matrix& alpha);
  static GatingCoefficients zeros(int p, int d) {
    return GatingCoefficients(Matrix::Zero(p, d));
  }

  const Matrix& alpha() const { return alpha_; }
  int states() const { return static_cast<int>(alpha_.rows()); }
  int width() const { return static_cast<int>(alpha_.cols()); }

 private:
  Matrix alpha_;
};

struct PhMoeModel {
  PhMoeModel(CovariateSchema schema, GatingCoefficients gating,
             SubIntensityMatrix T, Transform transform);

  CovariateSchema schema;
  GatingCoefficients gating;
  SubIntensityMatrix T;
  Transform transform;

  int states() const { return T.order(); }
  IphDistribution conditional(const DesignRow& x) const;
};

/// Dummy-codes a raw record (column name -> text value).
DesignRow build_design(const CovariateSchema& schema,
                       const std::map<std::string, std::string>& raw);

/// pi_k(x) = exp(x'a_k) / sum_j exp(x'a_j), evaluated with max subtraction.
RowVector softmax_pi(const DesignRow& x, const GatingCoefficients& alpha);
RowVector softmax_pi(const Vector& x, const Matrix& alpha);

/// log(pi_k / pi_j) = x'(a_k - a_j). States are zero-based.
double log_odds(const DesignRow& x, const GatingCoefficients& alpha, int k,
                int j);

/// E[Y | x]. Throws InfiniteMean for Pareto-type tails with eta <= 1.
double conditional_mean(const PhMoeModel& model, const DesignRow& x);

}  // namespace phmoe
