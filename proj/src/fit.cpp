#include "sqz/fit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <boost/random/sobol.hpp>
#include <fmt/format.h>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

struct ParameterInfo {
  const char* name;
  const char* section;
  const char* key;
  double lower;
  double upper;
  bool efficiency;
};

const std::vector<ParameterInfo>& parameter_table() {
  static const std::vector<ParameterInfo> t{
      {"pump_parameter", "operating_point", "pump_parameter", 0.0, 0.999, false},
      {"escape_efficiency", "detection", "escape_efficiency", 0.0, 1.0, true},
      {"propagation_efficiency", "detection", "propagation_efficiency", 0.0, 1.0, true},
      {"homodyne_efficiency", "detection", "homodyne_efficiency", 0.0, 1.0, true},
      {"quantum_efficiency", "detection", "quantum_efficiency", 0.0, 1.0, true},
      {"squeeze_angle_rms_jitter", "operating_point", "squeeze_angle_rms_jitter_rad", 0.0, 0.5, false},
      {"squeeze_angle_mean", "operating_point", "squeeze_angle_mean_rad", -0.5, 0.5, false},
      {"scatter_amplitude", "detection", "scatter_amplitude", 0.0, 10.0, false},
      {"scatter_exponent", "detection", "scatter_exponent", 0.5, 6.0, false},
      {"decay_rate", "operating_point", "decay_rate_rad_per_s", 1e6, 1e10, false},
  };
  return t;
}

const ParameterInfo& info(const std::string& name) {
  for (const auto& p : parameter_table())
    if (name == p.name) return p;
  throw Error(ErrorKind::argument, fmt::format("unknown fit parameter '{}'", name));
}

// The slice of a bench the forward model reads.
struct ModelState {
  SqueezerOperatingPoint op;
  DetectionChain chain;

  void set(const std::string& name, double v) {
    if (name == "pump_parameter") op.pump_parameter = v;
    else if (name == "escape_efficiency") chain.escape_efficiency = v;
    else if (name == "propagation_efficiency") chain.propagation_efficiency = v;
    else if (name == "homodyne_efficiency") chain.homodyne_efficiency = v;
    else if (name == "quantum_efficiency") chain.quantum_efficiency = v;
    else if (name == "squeeze_angle_rms_jitter") op.squeeze_angle_rms_jitter = v;
    else if (name == "squeeze_angle_mean") op.squeeze_angle_mean = v;
    else if (name == "scatter_amplitude") chain.scatter.amplitude = v;
    else if (name == "scatter_exponent") chain.scatter.exponent = v;
    else if (name == "decay_rate") op.decay_rate = v;
    else throw Error(ErrorKind::argument, fmt::format("unknown fit parameter '{}'", name));
  }
  double get(const std::string& name) const {
    if (name == "pump_parameter") return op.pump_parameter;
    if (name == "escape_efficiency") return chain.escape_efficiency;
    if (name == "propagation_efficiency") return chain.propagation_efficiency;
    if (name == "homodyne_efficiency") return chain.homodyne_efficiency;
    if (name == "quantum_efficiency") return chain.quantum_efficiency;
    if (name == "squeeze_angle_rms_jitter") return op.squeeze_angle_rms_jitter;
    if (name == "squeeze_angle_mean") return op.squeeze_angle_mean;
    if (name == "scatter_amplitude") return chain.scatter.amplitude;
    if (name == "scatter_exponent") return chain.scatter.exponent;
    if (name == "decay_rate") return op.decay_rate;
    throw Error(ErrorKind::argument, fmt::format("unknown fit parameter '{}'", name));
  }
};

struct TraceModel {
  double angle_offset;
  bool include_electronic;
  bool shot_only;
};

TraceModel trace_model(TraceKind kind) {
  switch (kind) {
    case TraceKind::squeezed_subtracted: return {0.0, false, false};
    case TraceKind::squeezed_raw: return {0.0, true, false};
    case TraceKind::antisqueezed_subtracted: return {pi / 2.0, false, false};
    case TraceKind::antisqueezed_raw: return {pi / 2.0, true, false};
    case TraceKind::shot: return {0.0, true, true};
    default: break;
  }
  throw Error(ErrorKind::argument, fmt::format("trace kind '{}' cannot be fitted", to_string(kind)));
}

std::vector<double> log_frequency_weights(const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::log(f[i == 0 ? 0 : i - 1]);
    const double hi = std::log(f[i + 1 == n ? n - 1 : i + 1]);
    w[i] = 0.5 * (hi - lo);
  }
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
  for (auto& x : w) x = mean > 0.0 ? x / mean : 1.0;
  return w;
}

// Everything evaluated in the inner loop, resolved once.
class Objective {
 public:
  explicit Objective(const FitProblem& p) : problem_(p) {
    base_.op = p.fixed.operating_point;
    base_.chain = p.fixed.detection;
    for (std::size_t t = 0; t < p.observed.size(); ++t) {
      const auto& tr = p.observed[t];
      models_.push_back(trace_model(tr.kind));
      weights_.push_back(p.weights.empty() ? log_frequency_weights(tr.axis) : p.weights[t]);
    }
  }

  ModelState state(const std::vector<double>& values) const {
    ModelState s = base_;
    for (std::size_t i = 0; i < values.size(); ++i) s.set(problem_.free_parameters[i].name, values[i]);
    return s;
  }

  double operator()(const std::vector<double>& values) const {
    const ModelState s = state(values);
    if (!(s.op.pump_parameter >= 0.0 && s.op.pump_parameter < 1.0)) return std::numeric_limits<double>::infinity();
    const NoiseModel model = make_noise_model(s.op, s.chain);
    if (!(model.total_efficiency >= 0.0 && model.total_efficiency <= 1.0))
      return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t t = 0; t < problem_.observed.size(); ++t) {
      const auto& tr = problem_.observed[t];
      const auto& m = models_[t];
      const auto& w = weights_[t];
      for (std::size_t i = 0; i < tr.size(); ++i) {
        if (!tr.is_valid(i) || !(tr.values[i] > 0.0)) continue;
        const double f = tr.axis[i];
        const double v = m.shot_only ? 1.0 + (m.include_electronic ? model.electronic.at(f) : 0.0)
                                     : detected_variance(model, f, m.angle_offset, m.include_electronic);
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
        const double r = 10.0 * std::log10(v / tr.values[i]);
        sum += w[i] * r * r;
      }
    }
    return sum;
  }

  NoiseTrace residual(std::size_t t, const std::vector<double>& values) const {
    const ModelState s = state(values);
    const NoiseModel model = make_noise_model(s.op, s.chain);
    const auto& tr = problem_.observed[t];
    const auto& m = models_[t];
    NoiseTrace out;
    out.axis_kind = AxisKind::frequency;
    out.kind = tr.kind;
    out.axis = tr.axis;
    out.values.resize(tr.size());
    out.valid.assign(tr.size(), 1);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double f = tr.axis[i];
      const double v = m.shot_only ? 1.0 + (m.include_electronic ? model.electronic.at(f) : 0.0)
                                   : detected_variance(model, f, m.angle_offset, m.include_electronic);
      if (!tr.is_valid(i) || !(tr.values[i] > 0.0) || !(v > 0.0)) {
        out.values[i] = 1.0;
        out.valid[i] = 0;
      } else {
        out.values[i] = v / tr.values[i];
      }
    }
    out.metadata.emplace_back("residual", "model / observed");
    return out;
  }

 private:
  const FitProblem& problem_;
  ModelState base_;
  std::vector<TraceModel> models_;
  std::vector<std::vector<double>> weights_;
};

struct LocalResult {
  std::vector<double> unit;  // normalized coordinates
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> history;
};

// Nelder-Mead in the unit box. Points outside are clamped for evaluation and penalized by their
// squared distance to the box, which keeps the simplex inside without distorting the interior.
LocalResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> start,
                        double tolerance, int max_evaluations) {
  const std::size_t n = start.size();
  LocalResult r;
  auto eval = [&](const std::vector<double>& u) {
    ++r.evaluations;
    double penalty = 0.0;
    std::vector<double> c(u);
    for (auto& x : c) {
      const double cl = std::clamp(x, 0.0, 1.0);
      penalty += (x - cl) * (x - cl);
      x = cl;
    }
    const double v = f(c);
    return std::isfinite(v) ? v + 1e3 * penalty : 1e300;
  };

  const int max_restarts = 3;
  std::vector<double> best = std::move(start);
  double best_value = eval(best);
  for (int restart = 0; restart <= max_restarts; ++restart) {
    std::vector<std::vector<double>> simplex(n + 1, best);
    std::vector<double> values(n + 1, best_value);
    const double step = restart == 0 ? 0.1 : 0.02;
    for (std::size_t i = 0; i < n; ++i) {
      auto& p = simplex[i + 1];
      p[i] += p[i] + step <= 1.0 ? step : -step;
      values[i + 1] = eval(p);
    }
    bool converged = false;
    while (r.evaluations < max_evaluations) {
      std::vector<std::size_t> order(n + 1);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      std::vector<std::vector<double>> s2(n + 1);
      std::vector<double> v2(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        s2[i] = simplex[order[i]];
        v2[i] = values[order[i]];
      }
      simplex.swap(s2);
      values.swap(v2);
      r.history.push_back(values[0]);
      ++r.iterations;

      double diameter = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(simplex[i][k] - simplex[0][k]));
        diameter = std::max(diameter, d);
      }
      if (diameter < tolerance) {
        converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
      auto along = [&](double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[n][k] - centroid[k]);
        return p;
      };
      auto xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < values[0]) {
        auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[n] = std::move(xe);
          values[n] = fe;
        } else {
          simplex[n] = std::move(xr);
          values[n] = fr;
        }
      } else if (fr < values[n - 1]) {
        simplex[n] = std::move(xr);
        values[n] = fr;
      } else {
        const bool outside = fr < values[n];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : values[n])) {
          simplex[n] = std::move(xc);
          values[n] = fc;
        } else {
          for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
            values[i] = eval(simplex[i]);
          }
        }
      }
    }
    const auto it = std::min_element(values.begin(), values.end());
    const auto idx = static_cast<std::size_t>(it - values.begin());
    const bool improved = *it < best_value;
    const double gain = best_value - *it;
    if (*it <= best_value) {
      best = simplex[idx];
      best_value = *it;
    }
    r.converged = converged;
    // A restart that finds nothing new confirms the minimum.
    if (!converged || (restart > 0 && (!improved || gain <= 1e-14 * (1.0 + std::abs(best_value))))) break;
  }
  for (auto& x : best) x = std::clamp(x, 0.0, 1.0);
  r.unit = std::move(best);
  r.objective = f(r.unit);
  r.history.push_back(r.objective);
  return r;
}

bool is_antisqueezed(TraceKind k) {
  return k == TraceKind::antisqueezed_raw || k == TraceKind::antisqueezed_subtracted;
}

}  // namespace

double infer_pump_parameter(double squeezing_db, double total_efficiency) {
  if (!(total_efficiency > 0.0 && total_efficiency <= 1.0))
    throw Error(ErrorKind::domain, fmt::format("total efficiency must be in (0, 1], got {}", total_efficiency));
  if (!std::isfinite(squeezing_db)) throw Error(ErrorKind::domain, "squeezing level must be finite");
  const double s = 1.0 - std::pow(10.0, -std::abs(squeezing_db) / 10.0);
  if (s == 0.0) return 0.0;
  if (!(s < total_efficiency)) {
    const double max_db = total_efficiency < 1.0 ? -10.0 * std::log10(1.0 - total_efficiency)
                                                 : std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::infeasible,
                fmt::format("{:.4g} dB of squeezing is unattainable with total efficiency {:.6g}; the maximum is "
                            "{:.4f} dB",
                            std::abs(squeezing_db), total_efficiency, max_db));
  }
  const double q = s / total_efficiency;  // 4x/(1+x)^2
  return q / ((2.0 - q) + 2.0 * std::sqrt(1.0 - q));
}

const std::vector<std::string>& fit_parameter_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& p : parameter_table()) n.emplace_back(p.name);
    return n;
  }();
  return names;
}

double get_parameter(const BenchConfig& bench, const std::string& name) {
  info(name);
  ModelState s{bench.operating_point, bench.detection};
  return s.get(name);
}

void apply_parameter(BenchConfig& bench, const std::string& name, double value) {
  const auto& p = info(name);
  ModelState s{bench.operating_point, bench.detection};
  s.set(name, value);
  bench.operating_point = s.op;
  bench.detection = s.chain;
  if (name == "escape_efficiency") bench.escape_efficiency_derived = false;
  if (name == "decay_rate") bench.decay_rate_derived = false;
  apply_override(bench.document, fmt::format("{}.{}={:.17g}", p.section, p.key, value));
}

ParameterBound default_bound(const std::string& name) {
  const auto& p = info(name);
  return {name, p.lower, p.upper};
}

ParameterBound parse_parameter_bound(const std::string& spec) {
  const auto first = spec.find(':');
  if (first == std::string::npos) return default_bound(spec);
  const auto second = spec.find(':', first + 1);
  if (second == std::string::npos)
    throw Error(ErrorKind::argument, fmt::format("free parameter '{}' must be name or name:lower:upper", spec));
  ParameterBound b = default_bound(spec.substr(0, first));
  try {
    std::size_t used = 0;
    const std::string lo = spec.substr(first + 1, second - first - 1);
    const std::string hi = spec.substr(second + 1);
    b.lower = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    b.upper = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::argument, fmt::format("free parameter '{}' has non-numeric bounds", spec));
  }
  return b;
}

std::vector<std::string> FitProblem::violations() const {
  std::vector<std::string> v;
  if (observed.empty()) v.push_back("fit needs at least one observed trace");
  if (free_parameters.empty()) v.push_back("fit needs at least one free parameter");
  for (std::size_t i = 0; i < free_parameters.size(); ++i) {
    const auto& b = free_parameters[i];
    const ParameterInfo* p = nullptr;
    for (const auto& q : parameter_table())
      if (b.name == q.name) p = &q;
    if (!p) {
      v.push_back(fmt::format("unknown fit parameter '{}'", b.name));
      continue;
    }
    for (std::size_t j = 0; j < i; ++j)
      if (free_parameters[j].name == b.name) v.push_back(fmt::format("fit parameter '{}' listed twice", b.name));
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper))
      v.push_back(fmt::format("{}: bounds [{}, {}] must be finite and increasing", b.name, b.lower, b.upper));
    else if (b.lower < p->lower || b.upper > p->upper)
      v.push_back(fmt::format("{}: bounds [{}, {}] leave the physical range [{}, {}]", b.name, b.lower, b.upper,
                              p->lower, p->upper));
  }
  std::size_t samples = 0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    const auto& tr = observed[t];
    if (tr.axis_kind != AxisKind::frequency) v.push_back(fmt::format("observed trace {} is not a spectrum", t));
    for (auto& s : tr.violations()) v.push_back(fmt::format("observed trace {}: {}", t, s));
    for (std::size_t i = 0; i < tr.size(); ++i)
      if (tr.is_valid(i) && tr.values[i] > 0.0) ++samples;
    try {
      trace_model(tr.kind);
    } catch (const Error& e) {
      v.push_back(fmt::format("observed trace {}: {}", t, e.what()));
    }
  }
  if (samples < 2 * free_parameters.size())
    v.push_back(fmt::format("{} usable samples for {} free parameters; at least twice as many are needed", samples,
                            free_parameters.size()));
  if (!weights.empty()) {
    if (weights.size() != observed.size()) v.push_back("weights must be given for every observed trace");
    else
      for (std::size_t t = 0; t < observed.size(); ++t)
        if (weights[t].size() != observed[t].size())
          v.push_back(fmt::format("weights for trace {} have {} entries for {} samples", t, weights[t].size(),
                                  observed[t].size()));
  }
  return v;
}

double FitResult::value(const std::string& name) const {
  for (const auto& [n, v] : best_values)
    if (n == name) return v;
  throw Error(ErrorKind::argument, fmt::format("'{}' was not a free parameter", name));
}

double fit_objective(const FitProblem& problem, const std::vector<double>& values) {
  return Objective(problem)(values);
}

FitResult fit_spectrum(const FitProblem& problem) {
  if (auto v = problem.violations(); !v.empty()) throw ValidationError(v);

  const bool pump_free = std::any_of(problem.free_parameters.begin(), problem.free_parameters.end(),
                                     [](const ParameterBound& b) { return b.name == "pump_parameter"; });
  const auto efficiency = std::find_if(problem.free_parameters.begin(), problem.free_parameters.end(),
                                       [](const ParameterBound& b) { return info(b.name).efficiency; });
  const bool anti = std::any_of(problem.observed.begin(), problem.observed.end(),
                                [](const NoiseTrace& t) { return is_antisqueezed(t.kind); });
  if (pump_free && efficiency != problem.free_parameters.end() && !anti)
    throw Error(ErrorKind::identifiability,
                fmt::format("pump_parameter and {} are not separately identifiable from squeezed traces alone; "
                            "supply an anti-squeezed trace or fix {}",
                            efficiency->name, efficiency->name));

  const Objective objective(problem);
  const std::size_t n = problem.free_parameters.size();
  auto to_values = [&](const std::vector<double>& u) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = problem.free_parameters[i];
      x[i] = b.lower + u[i] * (b.upper - b.lower);
    }
    return x;
  };
  auto in_unit = [&](const std::vector<double>& u) { return objective(to_values(u)); };

  const int starts = problem.fixed.fit.starts;
  std::vector<std::vector<double>> seeds(static_cast<std::size_t>(starts), std::vector<double>(n));
  {
    boost::random::sobol qrng(n);
    std::mt19937_64 rng(problem.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> shift(n);
    for (auto& s : shift) s = uni(rng);
    const double scale = 1.0 / (static_cast<double>(qrng.max()) - static_cast<double>(qrng.min()) + 1.0);
    for (auto& p : seeds) {
      for (auto& x : p) {
        const double q = static_cast<double>(qrng() - qrng.min()) * scale;
        x = q + shift[static_cast<std::size_t>(&x - p.data())];
        x -= std::floor(x);
        // Keep starts off the faces, where the simplex would be born degenerate.
        x = 0.05 + 0.9 * x;
      }
    }
  }

  std::vector<LocalResult> local(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  const auto count = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    try {
      local[s] = nelder_mead(in_unit, seeds[s], problem.fixed.fit.simplex_tolerance, problem.fixed.fit.max_evaluations);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t best = 0;
  for (std::size_t s = 1; s < local.size(); ++s)
    if (local[s].objective < local[best].objective) best = s;

  FitResult r;
  const auto values = to_values(local[best].unit);
  r.objective = local[best].objective;
  r.iterations = local[best].iterations;
  for (const auto& l : local) r.evaluations += l.evaluations;
  r.converged = local[best].converged && std::isfinite(r.objective);
  r.best_start = best;
  r.history = local[best].history;
  r.fitted = problem.fixed;
  for (std::size_t i = 0; i < n; ++i) {
    r.best_values.emplace_back(problem.free_parameters[i].name, values[i]);
    apply_parameter(r.fitted, problem.free_parameters[i].name, values[i]);
  }
  for (std::size_t t = 0; t < problem.observed.size(); ++t) r.residual_traces.push_back(objective.residual(t, values));
  return r;
}

void write_fit_report(std::ostream& out, const FitProblem& problem, const FitResult& result) {
  out << "[fit_result]\n";
  out << fmt::format("objective = {:.10g}\n", result.objective);
  out << fmt::format("converged = {}\n", result.converged ? "true" : "false");
  out << fmt::format("iterations = {}\n", result.iterations);
  out << fmt::format("evaluations = {}\n", result.evaluations);
  out << fmt::format("best_start = {}\n", result.best_start);
  out << fmt::format("starts = {}\n", problem.fixed.fit.starts);
  out << fmt::format("seed = {}\n", problem.seed);
  std::size_t samples = 0;
  for (const auto& t : problem.observed) samples += t.size();
  out << fmt::format("observed_samples = {}\n", samples);
  out << "\n[best_values]\n";
  for (const auto& [name, v] : result.best_values) out << fmt::format("{} = {:.10g}\n", name, v);
  out << "\n[bounds]\n";
  for (const auto& b : problem.free_parameters) out << fmt::format("{} = {:.10g} {:.10g}\n", b.name, b.lower, b.upper);
}

LossBudget loss_budget(const BenchConfig& bench, double target_db) {
  const auto& d = bench.detection;
  LossBudget b;
  b.target_db = target_db;
  const std::pair<const char*, double> stages[] = {
      {"escape", d.escape_efficiency},
      {"propagation", d.propagation_efficiency},
      {"homodyne", d.homodyne_efficiency},
      {"quantum", d.quantum_efficiency},
  };
  double cumulative = 1.0;
  for (const auto& [name, eta] : stages) {
    cumulative *= eta;
    LossBudgetRow row;
    row.stage = name;
    row.efficiency = eta;
    row.cumulative_efficiency = cumulative;
    const double remaining = 1.0 - cumulative;
    const double db = remaining > 0.0 ? -10.0 * std::log10(remaining) : std::numeric_limits<double>::infinity();
    row.capped = !(db <= max_squeezing_cap_db);
    row.max_squeezing_db = row.capped ? max_squeezing_cap_db : db;
    if (cumulative > 0.0) {
      try {
        row.pump_parameter_for_target = infer_pump_parameter(target_db, cumulative);
      } catch (const Error&) {
        row.pump_parameter_for_target.reset();
      }
    }
    b.rows.push_back(row);
  }
  b.total_efficiency = d.total_efficiency();
  return b;
}

}  // namespace sqz
