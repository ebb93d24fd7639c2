#include "phmoe_cli/cli.hpp"

#include "phmoe/emfit.hpp"
#include "phmoe/error.hpp"
#include "phmoe/gof.hpp"
#include "phmoe/inference.hpp"
#include "phmoe/io.hpp"
#include "phmoe/phcore.hpp"
#include "phmoe/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace phmoe::cli {

namespace {

struct FitOptions {
  std::string data, schema, out = "model.json", trace, coefficients;
  int p = 3;
  std::string transform = "identity";
  std::optional<double> theta0, threshold;
  bool fit_threshold = false;
  std::uint64_t seed = 1;
  int max_iter = 2000;
  double tol = 1e-8;
  bool standardize = false;
  bool coxian = false;
  std::vector<std::string> scale;
};

struct PredictOptions {
  std::string model, data, quantiles;
};

struct SimulateOptions {
  std::string model, scenario, censor = "none", out;
  std::size_t n = 0;
  std::uint64_t seed = 1;
};

struct GofOptions {
  std::string model, data, prefix = "gof";
  double level = 0.95;
  int hill_kmax = 500;
};

struct TailOptions {
  std::string model;
  std::vector<std::string> x;
  bool json = false;
};

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  const bool has_ext = dot != std::string::npos &&
                       (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

std::map<std::string, double> parse_scales(const std::vector<std::string>& specs) {
  std::map<std::string, double> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("--scale expects column=factor, got '" + s + "'");
    double v = 0.0;
    try {
      v = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("--scale has a bad factor: '" + s + "'");
    }
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("--scale factor must be positive: '" + s + "'");
    out[s.substr(0, eq)] = v;
  }
  return out;
}

std::map<std::string, std::string> parse_row_spec(const std::string& spec) {
  std::map<std::string, std::string> out;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("row spec expects name=value pairs, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string row_label(const Dataset& ds, std::size_t i) {
  std::string label;
  for (std::size_t c = 0; c < ds.covariate_names.size(); ++c) {
    if (!ds.schema.find(ds.covariate_names[c])) continue;
    if (!label.empty()) label += ",";
    label += ds.covariate_names[c] + "=" + ds.covariates[i][c];
  }
  return label.empty() ? "(all)" : label;
}

double mean_or_inf(const PhMoeModel& model, const DesignRow& x) {
  try {
    return conditional_mean(model, x);
  } catch (const InfiniteMean&) {
    return std::numeric_limits<double>::infinity();
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

// Per distinct design row: observed mean of exact responses and fitted mean.
void means_report(const PhMoeModel& model, const Dataset& ds, std::ostream& out) {
  struct Cell {
    std::size_t first;
    double sum = 0.0, weight = 0.0;
    std::size_t n = 0;
  };
  std::vector<Cell> cells;
  std::map<std::vector<double>, std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& o = ds.observations[i];
    const Vector& x = o.design.values();
    std::vector<double> key(x.data(), x.data() + x.size());
    auto [it, fresh] = index.emplace(key, cells.size());
    if (fresh) cells.push_back({i});
    Cell& c = cells[it->second];
    ++c.n;
    if (o.response.is_exact()) {
      c.sum += o.weight * o.response.value();
      c.weight += o.weight;
    }
  }
  out << "Group means\n";
  out << std::left << std::setw(24) << "group" << std::right << std::setw(8) << "n"
      << std::setw(16) << "observed" << std::setw(16) << "fitted" << "\n";
  for (const auto& c : cells) {
    const double obs = c.weight > 0 ? c.sum / c.weight : std::nan("");
    const double fit = mean_or_inf(model, ds.observations[c.first].design);
    out << std::left << std::setw(24) << row_label(ds, c.first) << std::right
        << std::setw(8) << c.n << std::setw(16)
        << (c.weight > 0 ? fixed(obs) : std::string("n/a")) << std::setw(16)
        << fixed(fit) << "\n";
  }
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  ReadOptions ro;
  if (!o.schema.empty()) ro.schema = parse_schema_spec(o.schema);
  ro.standardize = o.standardize;
  ro.column_scale = parse_scales(o.scale);
  const Dataset ds = read_dataset_csv(o.data, ro);

  const TransformFamily family = parse_family(o.transform);
  if (is_semi_composite(family) && !o.threshold)
    throw InvalidArgument("--threshold is required for " + std::string(family_name(family)));
  if (o.p < 1) throw InvalidArgument("--p must be >= 1");

  FitConfig cfg;
  cfg.p = o.p;
  cfg.max_iterations = o.max_iter;
  cfg.loglik_tolerance = o.tol;
  cfg.seed = o.seed;
  cfg.theta0 = o.theta0;
  cfg.threshold = o.threshold;
  cfg.threshold_fixed = !o.fit_threshold;
  cfg.init_strategy = o.coxian ? InitStrategy::RandomCoxian : InitStrategy::RandomGeneral;

  const std::string trace_path = o.trace.empty() ? with_suffix(o.out, "_trace.csv") : o.trace;
  const std::string coef_path =
      o.coefficients.empty() ? with_suffix(o.out, "_coefficients.csv") : o.coefficients;

  FitResult res = [&] {
    try {
      return fit(ds.observations, ds.schema, family, cfg);
    } catch (const FitError& e) {
      if (e.last_valid_model()) {
        save_model(o.out, {*e.last_valid_model(), std::nullopt});
        err << "last valid model written to " << o.out << "\n";
      }
      throw;
    }
  }();

  for (const auto& w : res.warnings) err << "warning: " << w << "\n";
  if (!res.converged)
    err << "warning: no convergence after " << res.iterations << " iterations\n";

  save_model(o.out, {res.model, FitSummary{res.trace.back(), res.dof, res.iterations,
                                           res.converged, o.seed}});
  {
    std::ostringstream t;
    t << "iteration,loglik\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i)
      t << i << "," << fmt(res.trace[i]) << "\n";
    write_file(trace_path, t.str());
  }

  const auto table = gating_inference(res.model, ds.observations);
  {
    std::ostringstream c;
    c << "state,column,estimate,std_error,z_value,p_value,signif\n";
    for (const auto& r : table.rows) {
      c << r.state << "," << r.column << "," << fmt(r.estimate) << ","
        << (r.standard_error ? fmt(*r.standard_error) : "") << ","
        << (r.z_value ? fmt(*r.z_value) : "") << ","
        << (r.p_value ? fmt(*r.p_value) : "") << "," << r.stars() << "\n";
    }
    write_file(coef_path, c.str());
  }
  if (table.singular)
    err << "warning: gating information is singular; some standard errors are missing\n";

  const auto ic = information_criteria(res, ds.observations);
  out << "Fit summary\n";
  out << std::left << std::setw(22) << "Transform" << family_name(family);
  if (family != TransformFamily::Identity) {
    out << " (theta = " << fixed(res.model.transform.theta, 6);
    if (res.model.transform.threshold)
      out << ", threshold = " << fixed(*res.model.transform.threshold, 6);
    out << ")";
  }
  out << "\n";
  out << std::setw(22) << "Phases" << o.p << "\n";
  out << std::setw(22) << "Iterations" << res.iterations
      << (res.converged ? " (converged)" : " (not converged)") << "\n";
  out << std::setw(22) << "Log Likelihood" << fixed(ic.loglik) << "\n";
  out << std::setw(22) << "Degrees of freedom" << ic.dof << "\n";
  out << std::setw(22) << "AIC" << fixed(ic.aic) << "\n";
  out << std::setw(22) << "BIC" << fixed(ic.bic) << "\n";
  if (o.p == 1 && family == TransformFamily::Identity)
    out << std::setw(22) << "Exponential rate" << fmt(-res.model.T(0, 0)) << "\n";
  out << std::right << "\n";

  out << "Gating coefficients (standard errors are lower bounds)\n";
  for (const auto& r : table.rows) {
    out << "  state " << r.state << "  " << std::left << std::setw(20) << r.column
        << std::right << std::setw(14) << fixed(r.estimate) << "  ("
        << (r.standard_error ? fixed(*r.standard_error) : std::string("   ")) << ") "
        << r.stars() << "\n";
  }
  out << "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05\n\n";
  means_report(res.model, ds, out);
  return kOk;
}

int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
  const ModelFile mf = load_model(o.model);
  ReadOptions ro;
  ro.schema = mf.model.schema;
  ro.require_response = false;
  const Dataset ds = read_dataset_csv(o.data, ro);

  std::vector<double> qs;
  if (!o.quantiles.empty()) {
    std::stringstream ss(o.quantiles);
    for (std::string item; std::getline(ss, item, ',');) {
      double q = 0.0;
      try {
        q = std::stod(item);
      } catch (const std::exception&) {
        throw InvalidArgument("bad quantile '" + item + "'");
      }
      if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantiles must lie in (0, 1)");
      qs.push_back(q);
    }
  }
  out << "row,mean";
  for (const double q : qs) out << ",q" << fmt(q);
  out << "\n";
  std::size_t infinite = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const DesignRow& x = ds.observations[i].design;
    const double m = mean_or_inf(mf.model, x);
    if (std::isinf(m)) ++infinite;
    out << i + 1 << "," << fmt(m);
    const auto dist = mf.model.conditional(x);
    for (const double q : qs) out << "," << fmt(iph_quantile(dist, q));
    out << "\n";
  }
  if (infinite > 0)
    err << "warning: " << infinite << " row(s) have an infinite conditional mean\n";
  return kOk;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  if (o.model.empty() == o.scenario.empty())
    throw InvalidArgument("give exactly one of --model or --scenario");
  const auto scheme = CensoringScheme::parse(o.censor);
  Dataset ds;
  if (!o.scenario.empty()) {
    if (o.scenario != "gamma-groups" && o.scenario != "gamma_groups")
      throw InvalidArgument("unknown scenario '" + o.scenario + "'");
    const std::size_t n = o.n == 0 ? 2000 : o.n;
    if (n % 4 != 0) throw InvalidArgument("gamma-groups needs --n divisible by 4");
    ds = scenario_gamma_groups(o.seed, static_cast<int>(n / 4));
  } else {
    const ModelFile mf = load_model(o.model);
    ds = simulate_from_model(mf.model, o.n == 0 ? 1000 : o.n, o.seed);
  }
  // Censoring draws use a stream family distinct from the responses.
  apply_censoring(ds.observations, scheme, Rng(o.seed ^ 0x632be59bd9b4e019ULL));

  std::size_t exact = 0, right = 0, interval = 0;
  double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& ob : ds.observations) {
    if (ob.response.is_exact()) {
      ++exact;
      sum += ob.response.value();
      lo = std::min(lo, ob.response.value());
      hi = std::max(hi, ob.response.value());
    } else if (ob.response.is_right_censored()) {
      ++right;
    } else {
      ++interval;
    }
  }
  std::ostream& summary = o.out.empty() ? err : out;
  summary << "rows " << ds.size() << "; exact " << exact << ", right-censored " << right
          << ", interval " << interval << "\n";
  if (exact > 0)
    summary << "exact responses: mean " << fixed(sum / exact) << ", min " << fixed(lo)
            << ", max " << fixed(hi) << "\n";
  if (o.out.empty()) write_dataset_csv(out, ds);
  else write_dataset_csv(o.out, ds);
  return kOk;
}

int cmd_gof(const GofOptions& o, std::ostream& out, std::ostream& err) {
  const ModelFile mf = load_model(o.model);
  ReadOptions ro;
  ro.schema = mf.model.schema;
  const Dataset ds = read_dataset_csv(o.data, ro);

  const auto res = residuals(mf.model, ds.observations);
  if (res.r.empty())
    throw InvalidArgument("all rows are interval-censored; residuals need exact or "
                          "right-censored responses");
  if (res.excluded_intervals > 0)
    err << "warning: " << res.excluded_intervals
        << " interval-censored row(s) excluded from residuals\n";

  std::ostringstream rcsv;
  rcsv << "r,delta\n";
  for (std::size_t i = 0; i < res.r.size(); ++i)
    rcsv << fmt(res.r[i]) << "," << res.delta[i] << "\n";
  write_file(o.prefix + "_residuals.csv", rcsv.str());

  const auto km = kaplan_meier(res, o.level);
  std::ostringstream kcsv;
  kcsv << "time,survival,lower,upper\n";
  for (std::size_t i = 0; i < km.times.size(); ++i)
    kcsv << fmt(km.times[i]) << "," << fmt(km.survival[i]) << "," << fmt(km.lower[i])
         << "," << fmt(km.upper[i]) << "\n";
  write_file(o.prefix + "_km.csv", kcsv.str());

  const auto pp = pp_points(mf.model, ds.observations);
  std::ostringstream pcsv;
  pcsv << "empirical,fitted\n";
  for (const auto& [e, f] : pp) pcsv << fmt(e) << "," << fmt(f) << "\n";
  write_file(o.prefix + "_pp.csv", pcsv.str());

  std::vector<double> ys;
  for (const auto& ob : ds.observations)
    if (ob.response.is_exact()) ys.push_back(ob.response.value());
  std::ostringstream hcsv;
  hcsv << "k,hill\n";
  const int kmax = std::min<long>(o.hill_kmax, static_cast<long>(ys.size()) - 2);
  if (kmax >= 1)
    for (const auto& [k, h] : hill_estimator(ys, 1, kmax)) hcsv << k << "," << fmt(h) << "\n";
  write_file(o.prefix + "_hill.csv", hcsv.str());

  // Uncensored: KS of exp(-r) against U(0,1). With censoring the KM curve of
  // the residuals is compared with exp(-r) at its jump points instead.
  std::size_t events = 0;
  for (const int d : res.delta) events += d;
  double stat = 0.0;
  std::size_t n = res.r.size();
  if (events == n) {
    std::vector<double> u;
    for (const double r : res.r) u.push_back(std::exp(-r));
    stat = ks_statistic_uniform(std::move(u));
  } else {
    double prev = 1.0;
    for (std::size_t i = 0; i < km.times.size(); ++i) {
      const double ref = std::exp(-km.times[i]);
      stat = std::max({stat, std::abs(km.survival[i] - ref), std::abs(prev - ref)});
      prev = km.survival[i];
    }
    n = events > 0 ? events : 1;
  }
  const double crit = ks_critical_value(n, 0.05);
  const bool pass = stat <= crit;
  out << "residuals " << res.r.size() << " (events " << events << ")\n";
  out << "KS distance " << fixed(stat, 6) << ", 5% critical value " << fixed(crit, 6) << "\n";
  out << "verdict: " << (pass ? "pass" : "fail") << "\n";
  return kOk;
}

int cmd_tail(const TailOptions& o, std::ostream& out, std::ostream&) {
  const ModelFile mf = load_model(o.model);
  const auto& model = mf.model;
  std::vector<std::string> specs = o.x;
  if (specs.empty()) {
    if (!model.schema.columns().empty())
      throw InvalidArgument("--x is required for models with covariates");
    specs.push_back("");
  }
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& spec : specs) {
    const DesignRow x = build_design(model.schema, parse_row_spec(spec));
    const RowVector pi = softmax_pi(x, model.gating);
    const auto rep = tail_report(pi, model.T, model.transform);
    std::vector<int> states;
    for (const int k : rep.accessible_states) states.push_back(k + 1);
    if (o.json) {
      nlohmann::ordered_json j;
      j["x"] = spec;
      j["accessible_states"] = states;
      j["eta"] = rep.eta;
      j["block_size"] = rep.block_size;
      j["tail_index"] = rep.tail_index ? nlohmann::ordered_json(*rep.tail_index)
                                       : nlohmann::ordered_json(nullptr);
      all.push_back(std::move(j));
    } else {
      out << "x: " << (spec.empty() ? "(intercept only)" : spec) << "\n";
      out << "  accessible states:";
      for (const int s : states) out << " " << s;
      out << "\n  eta: " << fmt(rep.eta) << "\n  block size m: " << rep.block_size << "\n";
      if (rep.tail_index) out << "  tail index xi: " << fmt(*rep.tail_index) << "\n";
    }
  }
  if (o.json) out << all.dump(2) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"phmoe: phase-type mixture-of-experts severity models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  FitOptions fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model by EM");
  fit_cmd->add_option("--data", fo.data, "Dataset CSV")->required();
  fit_cmd->add_option("--schema", fo.schema, "Covariates, e.g. group:cat(A,B),age:num");
  fit_cmd->add_option("--p", fo.p, "Number of phases");
  fit_cmd->add_option("--transform", fo.transform,
                      "identity|pareto|weibull|semi_composite_weibull_tail|"
                      "semi_composite_pareto_tail");
  fit_cmd->add_option("--theta0", fo.theta0, "Initial transform parameter");
  fit_cmd->add_option("--threshold", fo.threshold, "Semi-composite threshold");
  fit_cmd->add_flag("--fit-threshold", fo.fit_threshold,
                    "Also search the threshold over order statistics");
  fit_cmd->add_option("--seed", fo.seed, "Initialization seed");
  fit_cmd->add_option("--max-iter", fo.max_iter, "Maximum EM iterations");
  fit_cmd->add_option("--tol", fo.tol, "Relative log-likelihood tolerance");
  fit_cmd->add_flag("--standardize", fo.standardize, "Standardize numeric covariates");
  fit_cmd->add_flag("--coxian", fo.coxian, "Coxian initial structure");
  fit_cmd->add_option("--scale", fo.scale, "Multiply a column, e.g. y=1e-4");
  fit_cmd->add_option("--out", fo.out, "Model JSON path");
  fit_cmd->add_option("--trace", fo.trace, "Trace CSV path");
  fit_cmd->add_option("--coefficients", fo.coefficients, "Coefficient CSV path");

  PredictOptions po;
  auto* predict_cmd = app.add_subcommand("predict", "Conditional means and quantiles");
  predict_cmd->add_option("--model", po.model)->required();
  predict_cmd->add_option("--data", po.data)->required();
  predict_cmd->add_option("--quantiles", po.quantiles, "Comma-separated levels");

  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a dataset");
  sim_cmd->add_option("--model", so.model);
  sim_cmd->add_option("--scenario", so.scenario, "gamma-groups");
  sim_cmd->add_option("--n", so.n, "Rows");
  sim_cmd->add_option("--seed", so.seed);
  sim_cmd->add_option("--censor", so.censor, "none|right@C|exp@RATE|grid@W");
  sim_cmd->add_option("--out", so.out, "Output CSV (default stdout)");

  GofOptions go;
  auto* gof_cmd = app.add_subcommand("gof", "Goodness-of-fit diagnostics");
  gof_cmd->add_option("--model", go.model)->required();
  gof_cmd->add_option("--data", go.data)->required();
  gof_cmd->add_option("--out-prefix", go.prefix, "Prefix for the four CSV files");
  gof_cmd->add_option("--level", go.level, "Kaplan-Meier band level");
  gof_cmd->add_option("--hill-kmax", go.hill_kmax, "Largest Hill k");

  TailOptions to;
  auto* tail_cmd = app.add_subcommand("tail", "Tail behaviour per covariate row");
  tail_cmd->add_option("--model", to.model)->required();
  tail_cmd->add_option("--x", to.x, "Row spec name=value,...; repeatable");
  tail_cmd->add_flag("--json", to.json);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fo, out, err);
    if (*predict_cmd) return cmd_predict(po, out, err);
    if (*sim_cmd) return cmd_simulate(so, out, err);
    if (*gof_cmd) return cmd_gof(go, out, err);
    if (*tail_cmd) return cmd_tail(to, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  }
  return kUserError;
}

}  // namespace phmoe::cli
