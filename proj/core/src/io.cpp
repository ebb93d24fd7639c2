#include "phmoe/io.hpp"

#include "phmoe/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace phmoe {

namespace {

using ojson = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw SchemaError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CovariateSchema parse_schema_spec(const std::string& spec) {
  std::vector<CovariateColumn> cols;
  std::size_t pos = 0;
  const std::string s = trim(spec);
  while (pos < s.size()) {
    const auto colon = s.find(':', pos);
    if (colon == std::string::npos)
      throw SchemaError("schema spec: expected name:type near '" + s.substr(pos) + "'");
    CovariateColumn c;
    c.name = trim(s.substr(pos, colon - pos));
    pos = colon + 1;
    if (s.compare(pos, 3, "num") == 0) {
      c.kind = CovariateColumn::Kind::Numeric;
      pos += 3;
    } else if (s.compare(pos, 4, "cat(") == 0) {
      c.kind = CovariateColumn::Kind::Categorical;
      const auto close = s.find(')', pos);
      if (close == std::string::npos)
        throw SchemaError("schema spec: unterminated level list for " + c.name);
      std::stringstream levels(s.substr(pos + 4, close - pos - 4));
      for (std::string lv; std::getline(levels, lv, ',');) c.levels.push_back(trim(lv));
      pos = close + 1;
    } else {
      throw SchemaError("schema spec: unknown type for column " + c.name);
    }
    cols.push_back(std::move(c));
    while (pos < s.size() && (s[pos] == ',' || s[pos] == ' ')) ++pos;
  }
  return CovariateSchema(std::move(cols));
}

Dataset read_dataset_csv(std::istream& in, const ReadOptions& options) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError("dataset is empty (no header)");

  int col_y = -1, col_lo = -1, col_hi = -1, col_w = -1;
  std::vector<int> cov_cols;
  Dataset ds;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    const auto& h = header[j];
    if (h == "y") col_y = j;
    else if (h == "y_low") col_lo = j;
    else if (h == "y_high") col_hi = j;
    else if (h == "weight") col_w = j;
    else {
      if (h.empty()) throw SchemaError("line " + std::to_string(lineno) + ": empty column name");
      cov_cols.push_back(j);
      ds.covariate_names.push_back(h);
    }
  }
  const bool has_response = col_y >= 0 || (col_lo >= 0 && col_hi >= 0);
  if (!has_response && options.require_response)
    throw SchemaError("dataset needs a 'y' column or both 'y_low' and 'y_high'");

  auto scale_of = [&](const std::string& name) {
    const auto it = options.column_scale.find(name);
    return it == options.column_scale.end() ? 1.0 : it->second;
  };

  std::vector<std::size_t> lines;
  std::vector<Response> responses;
  std::vector<double> weights;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv(line);
    if (f.size() != header.size())
      row_error(lineno, "expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(f.size()));
    auto number = [&](int col, const char* what) {
      const auto v = to_number(f[col]);
      if (!v || !std::isfinite(*v))
        row_error(lineno, std::string("cannot parse ") + what + " '" + f[col] + "'");
      return *v * scale_of(header[col]);
    };
    std::optional<Response> resp;
    if (!has_response) {
      resp = Response::exact(1.0);
    } else if (col_y >= 0 && !f[col_y].empty()) {
      const double y = number(col_y, "y");
      if (y == 0.0)
        row_error(lineno, "y = 0 is not supported; encode it as an interval with "
                          "y_low = 0 and a small y_high");
      if (y < 0.0) row_error(lineno, "y must be positive");
      resp = Response::exact(y);
    } else {
      if (col_lo < 0 || col_hi < 0 || f[col_lo].empty())
        row_error(lineno, "missing response");
      const double lo = number(col_lo, "y_low");
      const double hi = f[col_hi].empty() ? std::numeric_limits<double>::infinity()
                                          : number(col_hi, "y_high");
      if (lo < 0.0) row_error(lineno, "y_low must be nonnegative");
      if (!(lo < hi)) row_error(lineno, "y_low must be below y_high");
      resp = Response::interval(lo, hi);
    }
    double w = 1.0;
    if (col_w >= 0 && !f[col_w].empty()) {
      w = number(col_w, "weight");
      if (!(w > 0.0)) row_error(lineno, "weight must be positive");
    }
    std::vector<std::string> raw;
    for (const int j : cov_cols) {
      if (f[j].empty()) row_error(lineno, "empty value for column " + header[j]);
      raw.push_back(f[j]);
    }
    lines.push_back(lineno);
    responses.push_back(*resp);
    weights.push_back(w);
    ds.covariates.push_back(std::move(raw));
  }
  if (responses.empty()) throw SchemaError("dataset has no rows");

  // Apply numeric scaling to covariates in place.
  for (std::size_t c = 0; c < cov_cols.size(); ++c) {
    const double s = scale_of(ds.covariate_names[c]);
    if (s == 1.0) continue;
    for (std::size_t i = 0; i < ds.covariates.size(); ++i) {
      const auto v = to_number(ds.covariates[i][c]);
      if (!v) row_error(lines[i], "cannot scale non-numeric value in " + ds.covariate_names[c]);
      ds.covariates[i][c] = format_double(*v * s);
    }
  }

  if (options.schema) {
    ds.schema = *options.schema;
  } else {
    std::vector<CovariateColumn> cols;
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      CovariateColumn col;
      col.name = ds.covariate_names[c];
      bool numeric = true;
      double sum = 0.0, sumsq = 0.0;
      std::set<std::string> levels;
      for (const auto& row : ds.covariates) {
        const auto v = to_number(row[c]);
        if (!v) numeric = false;
        else {
          sum += *v;
          sumsq += *v * *v;
        }
        levels.insert(row[c]);
      }
      if (numeric) {
        col.kind = CovariateColumn::Kind::Numeric;
        if (options.standardize) {
          const double n = static_cast<double>(ds.covariates.size());
          const double mean = sum / n;
          const double var = std::max(0.0, sumsq / n - mean * mean);
          col.center = mean;
          col.scale = var > 0.0 ? std::sqrt(var) : 1.0;
        }
      } else {
        col.kind = CovariateColumn::Kind::Categorical;
        col.levels.assign(levels.begin(), levels.end());
      }
      cols.push_back(std::move(col));
    }
    ds.schema = CovariateSchema(std::move(cols));
  }

  for (const auto& col : ds.schema.columns())
    if (std::find(ds.covariate_names.begin(), ds.covariate_names.end(), col.name) ==
        ds.covariate_names.end())
      throw SchemaError("dataset lacks covariate column '" + col.name + "'");

  for (std::size_t i = 0; i < responses.size(); ++i) {
    std::map<std::string, std::string> raw;
    for (std::size_t c = 0; c < cov_cols.size(); ++c)
      raw[ds.covariate_names[c]] = ds.covariates[i][c];
    DesignRow x;
    try {
      x = build_design(ds.schema, raw);
    } catch (const InvalidArgument& e) {
      row_error(lines[i], e.what());
    }
    ds.observations.push_back({responses[i], std::move(x), weights[i]});
  }
  return ds;
}

Dataset read_dataset_csv(const std::string& path, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset '" + path + "'");
  return read_dataset_csv(in, options);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  bool any_exact = false, any_interval = false, any_weight = false;
  for (const auto& o : data.observations) {
    (o.response.is_exact() ? any_exact : any_interval) = true;
    any_weight = any_weight || o.weight != 1.0;
  }
  std::vector<std::string> header = data.covariate_names;
  if (any_exact) header.push_back("y");
  if (any_interval) {
    header.push_back("y_low");
    header.push_back("y_high");
  }
  if (any_weight) header.push_back("weight");
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << csv_field(header[j]);
  out << '\n';
  for (std::size_t i = 0; i < data.observations.size(); ++i) {
    const auto& o = data.observations[i];
    std::string sep;
    if (i < data.covariates.size())
      for (const auto& v : data.covariates[i]) {
        out << sep << csv_field(v);
        sep = ",";
      }
    if (any_exact) {
      out << sep << (o.response.is_exact() ? format_double(o.response.value()) : "");
      sep = ",";
    }
    if (any_interval) {
      if (o.response.is_exact()) {
        out << sep << ",";
      } else {
        out << sep << format_double(o.response.lower()) << ","
            << (std::isinf(o.response.upper()) ? "" : format_double(o.response.upper()));
      }
      sep = ",";
    }
    if (any_weight) out << sep << format_double(o.weight);
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_dataset_csv(out, data);
}

std::string model_to_json(const ModelFile& file) {
  const PhMoeModel& m = file.model;
  ojson doc;
  doc["format_version"] = 1;
  doc["p"] = m.states();
  ojson schema = ojson::array();
  for (const auto& c : m.schema.columns()) {
    ojson col;
    col["name"] = c.name;
    if (c.kind == CovariateColumn::Kind::Numeric) {
      col["kind"] = "numeric";
      col["center"] = c.center;
      col["scale"] = c.scale;
    } else {
      col["kind"] = "categorical";
      col["levels"] = c.levels;
    }
    schema.push_back(std::move(col));
  }
  doc["schema"] = std::move(schema);
  auto matrix = [](const Matrix& A) {
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      ojson r = ojson::array();
      for (Eigen::Index j = 0; j < A.cols(); ++j) r.push_back(A(i, j));
      rows.push_back(std::move(r));
    }
    return rows;
  };
  doc["alpha"] = matrix(m.gating.alpha());
  doc["T"] = matrix(m.T.matrix());
  ojson tr;
  tr["family"] = std::string(family_name(m.transform.family));
  tr["theta"] = m.transform.theta;
  tr["threshold"] = m.transform.threshold ? ojson(*m.transform.threshold) : ojson(nullptr);
  tr["threshold_fixed"] = m.transform.threshold_fixed;
  doc["transform"] = std::move(tr);
  if (file.fit) {
    ojson fit;
    fit["loglik"] = file.fit->loglik;
    fit["dof"] = file.fit->dof;
    fit["iterations"] = file.fit->iterations;
    fit["converged"] = file.fit->converged;
    fit["seed"] = file.fit->seed;
    doc["fit"] = std::move(fit);
  }
  return doc.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != 1)
      throw SchemaError("unsupported model format_version");
    const int p = doc.at("p").get<int>();
    std::vector<CovariateColumn> cols;
    for (const auto& c : doc.at("schema")) {
      CovariateColumn col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "numeric") {
        col.kind = CovariateColumn::Kind::Numeric;
        col.center = c.at("center").get<double>();
        col.scale = c.at("scale").get<double>();
      } else if (kind == "categorical") {
        col.kind = CovariateColumn::Kind::Categorical;
        col.levels = c.at("levels").get<std::vector<std::string>>();
      } else {
        throw SchemaError("unknown covariate kind '" + kind + "'");
      }
      cols.push_back(std::move(col));
    }
    CovariateSchema schema(std::move(cols));
    auto matrix = [](const ojson& rows, Eigen::Index r, Eigen::Index c,
                     const char* what) {
      if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != r)
        throw SchemaError(std::string("model ") + what + " has the wrong shape");
      Matrix A(r, c);
      for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
          throw SchemaError(std::string("model ") + what + " has the wrong shape");
        for (Eigen::Index j = 0; j < c; ++j)
          A(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
      return A;
    };
    const Matrix alpha = matrix(doc.at("alpha"), p, schema.design_width(), "alpha");
    const Matrix T = matrix(doc.at("T"), p, p, "T");
    const auto& tj = doc.at("transform");
    Transform tr;
    tr.family = parse_family(tj.at("family").get<std::string>());
    tr.theta = tj.at("theta").get<double>();
    if (tj.contains("threshold") && !tj.at("threshold").is_null())
      tr.threshold = tj.at("threshold").get<double>();
    tr.threshold_fixed = tj.value("threshold_fixed", true);
    ModelFile out{PhMoeModel(std::move(schema), GatingCoefficients(alpha),
                             SubIntensityMatrix(T), tr),
                  std::nullopt};
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      out.fit = FitSummary{f.at("loglik").get<double>(), f.at("dof").get<int>(),
                           f.at("iterations").get<int>(),
                           f.at("converged").get<bool>(),
                           f.at("seed").get<std::uint64_t>()};
    }
    return out;
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("invalid model: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << model_to_json(file);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace phmoe
