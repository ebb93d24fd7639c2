#include "phmoe/simulate.hpp"

#include "phmoe/error.hpp"
#include "phmoe/parallel.hpp"

#include <cmath>

namespace phmoe {

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::substream(std::uint64_t index) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_),
                    static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seed_, std::mt19937_64(seq));
}

double Rng::uniform() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  while (v == 0.0) v = u(engine_);
  return v;
}

double Rng::exponential(double rate) {
  return -std::log(uniform()) / rate;
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> g(shape, scale);
  return g(engine_);
}

double Rng::normal() {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(engine_);
}

AbsorptionDraw sample_absorption(const RowVector& pi, const SubIntensityMatrix& T,
                                 Rng& rng) {
  const int p = T.order();
  if (pi.size() != p) throw InvalidArgument("sample_absorption: size mismatch");
  auto pick = [&](auto weight, int count, double total) {
    double u = rng.uniform() * total;
    for (int k = 0; k < count; ++k) {
      u -= weight(k);
      if (u < 0.0) return k;
    }
    // Rounding left u marginally positive: take the last positive weight.
    for (int k = count - 1; k >= 0; --k)
      if (weight(k) > 0.0) return k;
    return count - 1;
  };
  AbsorptionDraw out;
  int state = pick([&](int k) { return pi(k); }, p, pi.sum());
  out.start_state = state;
  const Vector& t = T.exit_rates();
  for (;;) {
    const double rate = -T(state, state);
    out.time += rng.exponential(rate);
    // Targets 0..p-1 are transient states, p is absorption.
    const int next = pick(
        [&](int l) { return l == p ? t(state) : (l == state ? 0.0 : T(state, l)); },
        p + 1, rate);
    if (next == p) return out;
    state = next;
  }
}

double sample_response(const PhMoeModel& model, const DesignRow& x, Rng& rng) {
  const RowVector pi = softmax_pi(x, model.gating);
  return g_forward(model.transform, sample_absorption(pi, model.T, rng).time);
}

std::vector<double> sample_responses(const PhMoeModel& model,
                                     const std::vector<DesignRow>& designs,
                                     std::uint64_t seed) {
  std::vector<double> out(designs.size());
  const Rng master(seed);
  parallel_for(designs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng r = master.substream(i);
      out[i] = sample_response(model, designs[i], r);
    }
  });
  return out;
}

Dataset scenario_gamma_groups(std::uint64_t seed, int per_group) {
  if (per_group < 1) throw InvalidArgument("scenario_gamma_groups: per_group must be >= 1");
  struct Group {
    const char* name;
    double shape, scale;
  };
  static constexpr Group groups[] = {
      {"A", 1.0, 3.0}, {"B", 3.0, 9.0}, {"C", 1.0, 9.0}, {"D", 3.0, 3.0}};
  Dataset ds;
  CovariateColumn col;
  col.name = "group";
  col.kind = CovariateColumn::Kind::Categorical;
  col.levels = {"A", "B", "C", "D"};
  ds.schema = CovariateSchema({col});
  ds.covariate_names = {"group"};
  const Rng master(seed);
  std::size_t row = 0;
  for (const auto& g : groups) {
    const DesignRow x = build_design(ds.schema, {{"group", g.name}});
    for (int i = 0; i < per_group; ++i, ++row) {
      Rng r = master.substream(row);
      double y = 0.0;
      while (!(y > 0.0)) y = r.gamma(g.shape, g.scale);
      ds.covariates.push_back({g.name});
      ds.observations.push_back({Response::exact(y), x, 1.0});
    }
  }
  return ds;
}

Dataset simulate_from_model(const PhMoeModel& model, std::size_t n,
                            std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("simulate_from_model: n must be positive");
  Dataset ds;
  ds.schema = model.schema;
  for (const auto& c : model.schema.columns()) ds.covariate_names.push_back(c.name);

  // Covariates come from a separate stream family so that responses for a
  // fixed design list match sample_responses(seed).
  const Rng cov_master(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<DesignRow> designs;
  designs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r = cov_master.substream(i);
    std::vector<std::string> raw;
    std::map<std::string, std::string> named;
    for (const auto& c : model.schema.columns()) {
      std::string v;
      if (c.kind == CovariateColumn::Kind::Categorical) {
        const auto k = static_cast<std::size_t>(r.uniform() * c.levels.size());
        v = c.levels[std::min(k, c.levels.size() - 1)];
      } else {
        v = format_double(c.center + c.scale * r.normal());
      }
      named[c.name] = v;
      raw.push_back(std::move(v));
    }
    designs.push_back(build_design(model.schema, named));
    ds.covariates.push_back(std::move(raw));
  }
  const auto ys = sample_responses(model, designs, seed);
  for (std::size_t i = 0; i < n; ++i)
    ds.observations.push_back({Response::exact(ys[i]), designs[i], 1.0});
  return ds;
}

CensoringScheme CensoringScheme::parse(const std::string& text) {
  if (text.empty() || text == "none") return none();
  const auto at = text.find('@');
  if (at == std::string::npos)
    throw InvalidArgument("censoring spec must look like kind@value: " + text);
  const std::string kind = text.substr(0, at);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(text.substr(at + 1), &used);
    if (used != text.size() - at - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("censoring spec has a bad value: " + text);
  }
  if (!(v > 0.0)) throw InvalidArgument("censoring value must be positive: " + text);
  if (kind == "right") return right_at(v);
  if (kind == "exp") return random_exponential(v);
  if (kind == "grid") return interval_grid(v);
  throw InvalidArgument("unknown censoring kind '" + kind + "'");
}

void apply_censoring(std::vector<Observation>& data, const CensoringScheme& scheme,
                     const Rng& rng) {
  using K = CensoringScheme::Kind;
  if (scheme.kind != K::None && !(scheme.value > 0.0))
    throw InvalidArgument("apply_censoring: parameter must be positive");
  for (std::size_t i = 0; i < data.size(); ++i) {
    Response& r = data[i].response;
    if (!r.is_exact()) continue;
    const double y = r.value();
    switch (scheme.kind) {
      case K::None: break;
      case K::RightAt:
        if (y > scheme.value) r = Response::right_censored(scheme.value);
        break;
      case K::RandomExponential: {
        Rng s = rng.substream(i);
        const double c = s.exponential(scheme.value);
        if (y > c) r = Response::right_censored(c);
        break;
      }
      case K::IntervalGrid: {
        const double w = scheme.value;
        const double b = w * std::ceil(y / w);
        r = Response::interval(std::max(0.0, b - w), b);
        break;
      }
    }
  }
}

}  // namespace phmoe
