#pragma once

// Dataset CSV and model JSON persistence.
//
// Dataset columns: `y` for exact responses, or `y_low`,`y_high` for
// intervals (empty `y_high` means right-censored); when both forms are
// present a nonempty `y` wins. An optional `weight` column; every other
// column is a covariate.

#include "phmoe/emfit.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phmoe {

struct Dataset {
  CovariateSchema schema;
  std::vector<std::string> covariate_names;           // raw columns, file order
  std::vector<std::vector<std::string>> covariates;   // raw text per row
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
};

/// "group:cat(A,B,C,D),age:num". Categorical levels keep the given order;
/// the first is the baseline.
CovariateSchema parse_schema_spec(const std::string& spec);

struct ReadOptions {
  std::optional<CovariateSchema> schema;  // inferred when absent
  bool standardize = false;               // inferred numeric columns only
  std::map<std::string, double> column_scale;  // multiply column by factor
  bool require_response = true;  // when false, rows without y get y = 1
};

/// Throws SchemaError with a line-numbered message on malformed input.
Dataset read_dataset_csv(std::istream& in, const ReadOptions& options = {});
Dataset read_dataset_csv(const std::string& path, const ReadOptions& options = {});

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct FitSummary {
  double loglik = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;

  bool operator==(const FitSummary&) const = default;
};

struct ModelFile {
  PhMoeModel model;
  std::optional<FitSummary> fit;
};

std::string model_to_json(const ModelFile& file);
/// Throws SchemaError on malformed documents.
ModelFile model_from_json(const std::string& text);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace phmoe
