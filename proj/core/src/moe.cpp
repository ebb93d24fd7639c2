#include "phmoe/moe.hpp"

#include "phmoe/error.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace phmoe {

namespace {

double parse_number(const std::string& col, const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw SchemaError("column '" + col + "': '" + text + "' is not a number");
  return v;
}

}  // namespace

CovariateSchema::CovariateSchema(std::vector<CovariateColumn> columns)
    : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw SchemaError("covariate name must be nonempty");
    if (!names.insert(c.name).second)
      throw SchemaError("duplicate covariate '" + c.name + "'");
    if (c.kind == CovariateColumn::Kind::Categorical) {
      if (c.levels.empty())
        throw SchemaError("categorical '" + c.name + "' has no levels");
      std::set<std::string> lv(c.levels.begin(), c.levels.end());
      if (lv.size() != c.levels.size())
        throw SchemaError("categorical '" + c.name + "' repeats a level");
    } else if (!(c.scale > 0.0) || !std::isfinite(c.center)) {
      throw SchemaError("numeric '" + c.name + "' has invalid standardization");
    }
  }
}

int CovariateSchema::design_width() const {
  int d = 1;
  for (const auto& c : columns_)
    d += c.kind == CovariateColumn::Kind::Numeric
             ? 1
             : static_cast<int>(c.levels.size()) - 1;
  return d;
}

std::vector<std::string> CovariateSchema::design_names() const {
  std::vector<std::string> out{"(Intercept)"};
  for (const auto& c : columns_) {
    if (c.kind == CovariateColumn::Kind::Numeric) {
      out.push_back(c.name);
    } else {
      for (std::size_t i = 1; i < c.levels.size(); ++i)
        out.push_back(c.name + c.levels[i]);
    }
  }
  return out;
}

const CovariateColumn* CovariateSchema::find(const std::string& name) const {
  for (const auto& c : columns_)
    if (c.name == name) return &c;
  return nullptr;
}

DesignRow::DesignRow(Vector values) : values_(std::move(values)) {
  if (values_.size() < 1 || values_(0) != 1.0)
    throw InvalidArgument("design row must start with the intercept 1");
  if (!values_.allFinite())
    throw InvalidArgument("design row must be finite");
}

GatingCoefficients::GatingCoefficients(Matrix alpha) : alpha_(std::move(alpha)) {
  if (alpha_.rows() < 1 || alpha_.cols() < 1)
    throw InvalidArgument("gating coefficients must be nonempty");
  if (!alpha_.allFinite())
    throw InvalidArgument("gating coefficients must be finite");
  if (!alpha_.row(0).isZero(0.0))
    throw InvalidArgument("baseline gating row must be zero");
}

GatingCoefficients GatingCoefficients::normalized(const Matrix& alpha) {
  Matrix a = alpha;
  const RowVector base = alpha.row(0);
  a.rowwise() -= base;
  a.row(0).setZero();
  return GatingCoefficients(std::move(a));
}

PhMoeModel::PhMoeModel(CovariateSchema schema_, GatingCoefficients gating_,
                       SubIntensityMatrix T_, Transform transform_)
    : schema(std::move(schema_)),
      gating(std::move(gating_)),
      T(std::move(T_)),
      transform(transform_) {
  if (gating.states() != T.order())
    throw InvalidArgument("gating rows must equal the order of T");
  if (gating.width() != schema.design_width())
    throw InvalidArgument("gating columns must match the design width");
  const auto v = validate(transform);
  if (!v.empty()) throw InvalidArgument("invalid transform: " + v.front());
}

IphDistribution PhMoeModel::conditional(const DesignRow& x) const {
  return IphDistribution{PhaseDistribution(softmax_pi(x, gating), T),
                         transform};
}

DesignRow build_design(const CovariateSchema& schema,
                       const std::map<std::string, std::string>& raw) {
  Vector v(schema.design_width());
  v(0) = 1.0;
  int at = 1;
  for (const auto& c : schema.columns()) {
    const auto it = raw.find(c.name);
    if (it == raw.end())
      throw SchemaError("missing covariate column '" + c.name + "'");
    if (c.kind == CovariateColumn::Kind::Numeric) {
      v(at++) = (parse_number(c.name, it->second) - c.center) / c.scale;
      continue;
    }
    std::size_t level = c.levels.size();
    for (std::size_t i = 0; i < c.levels.size(); ++i)
      if (c.levels[i] == it->second) level = i;
    if (level == c.levels.size())
      throw SchemaError("column '" + c.name + "': unknown level '" +
                        it->second + "'");
    for (std::size_t i = 1; i < c.levels.size(); ++i)
      v(at++) = (i == level) ? 1.0 : 0.0;
  }
  return DesignRow(std::move(v));
}

RowVector softmax_pi(const Vector& x, const Matrix& alpha) {
  if (alpha.cols() != x.size())
    throw InvalidArgument("softmax_pi: design width does not match alpha");
  Vector eta = alpha * x;
  if (!eta.allFinite())
    throw InvalidArgument("softmax_pi: non-finite linear predictor");
  const double m = eta.maxCoeff();
  RowVector out = (eta.array() - m).exp().matrix().transpose();
  out /= out.sum();
  return out;
}

RowVector softmax_pi(const DesignRow& x, const GatingCoefficients& alpha) {
  return softmax_pi(x.values(), alpha.alpha());
}

double log_odds(const DesignRow& x, const GatingCoefficients& alpha, int k,
                int j) {
  if (k < 0 || j < 0 || k >= alpha.states() || j >= alpha.states())
    throw InvalidArgument("log_odds: state index out of range");
  if (k == j) return 0.0;
  return (alpha.alpha().row(k) - alpha.alpha().row(j)).dot(x.values());
}

double conditional_mean(const PhMoeModel& model, const DesignRow& x) {
  return iph_mean(model.conditional(x));
}

}  // namespace phmoe
