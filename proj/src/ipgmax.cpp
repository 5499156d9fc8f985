#include "atmg/ipgmax.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace atmg {

const char* to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::Theorem: return "theorem";
    case ScheduleMode::Proposition: return "proposition";
    case ScheduleMode::Manual: return "manual";
  }
  return "unknown";
}

const char* to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::ProxScan: return "prox";
    case SelectionMode::Random: return "random";
  }
  return "unknown";
}

void check_config(const IpgmaxConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(config.eta >= 0.0) || !std::isfinite(config.eta)) {
    throw std::invalid_argument("eta must be a finite nonnegative number");
  }
  if (config.iters == 0) throw std::invalid_argument("iteration count T must be at least 1");
  if (config.selection == SelectionMode::Random && !(config.delta > 0.0 && config.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0,1)");
  }
}

bool Schedule::representable() const {
  return iterations <= static_cast<long double>(std::numeric_limits<std::size_t>::max());
}

std::size_t Schedule::capped(std::size_t cap) const {
  if (!representable() || iterations > static_cast<long double>(cap)) return cap;
  return static_cast<std::size_t>(iterations);
}

std::string Schedule::iterations_text() const {
  char buffer[8192];
  std::snprintf(buffer, sizeof buffer, "%.0Lf", iterations);
  return buffer;
}

namespace {

long double action_sum(const GameSpec& spec) {
  return static_cast<long double>(spec.team_action_total() + spec.adversary_actions);
}

long double checked_ceil(long double value) {
  if (!std::isfinite(value)) throw std::overflow_error("iteration count overflows long double");
  return std::ceil(value);
}

}  // namespace

Schedule schedule_theorem(const GameSpec& spec, double epsilon, double mismatch) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(mismatch >= 1.0)) throw std::invalid_argument("mismatch coefficient must be at least 1");
  const long double eps = epsilon;
  const long double D = mismatch;
  const long double S = static_cast<long double>(spec.state_count);
  const long double m = action_sum(spec);
  const long double g = 1.0L - spec.discount;
  Schedule out;
  out.eta = static_cast<double>(eps * eps * std::pow(g, 9) /
                                (32.0L * std::pow(S, 4) * D * D * std::pow(m, 3)));
  out.iterations = checked_ceil(512.0L * std::pow(S, 8) * std::pow(D, 4) * std::pow(m, 4) /
                                (std::pow(eps, 4) * std::pow(g, 12)));
  return out;
}

Schedule schedule_proposition(const GameSpec& spec, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const long double eps = epsilon;
  const long double m = action_sum(spec);
  const long double g = 1.0L - spec.discount;
  Schedule out;
  out.eta = static_cast<double>(2.0L * eps * eps * g);
  out.iterations = checked_ceil(std::pow(g, 4) / (8.0L * std::pow(eps, 4) * m * m));
  out.iterations = std::max(out.iterations, 1.0L);
  return out;
}

IpgmaxConfig apply_schedule(const GameSpec& spec, IpgmaxConfig config, std::size_t cap) {
  if (config.schedule == ScheduleMode::Manual) {
    if (cap != 0) config.iters = std::min(config.iters, cap);
    return config;
  }
  const Schedule schedule =
      config.schedule == ScheduleMode::Theorem
          ? schedule_theorem(spec, config.epsilon, smoothness_constants(spec).mismatch_bound)
          : schedule_proposition(spec, config.epsilon);
  config.eta = schedule.eta;
  config.iters = schedule.capped(cap != 0 ? cap : std::numeric_limits<std::size_t>::max());
  return config;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total;
}

struct PsiEval {
  double psi = 0.0;
  double phi = 0.0;
  AdversaryBestResponse response;
};

PsiEval evaluate_psi(const GameSpec& spec, const TeamPolicy& anchor, const TeamPolicy& point,
                     double smoothness, const ValueVector* warm) {
  MdpSolveOptions options;
  options.warm_start = warm;
  PsiEval out;
  out.response = adversary_best_response(spec, point, options);
  out.phi = out.response.value_rho;
  out.psi = out.phi + smoothness * squared_distance(anchor.coords(), point.coords());
  return out;
}

}  // namespace

ProxResult prox_point(const GameSpec& spec, const TeamPolicy& x, const ProxOptions& options) {
  require_compatible(spec, x);
  const double ell = smoothness_constants(spec).smoothness;
  const std::size_t dim = x.dimension();

  TeamPolicy current = x;
  TeamPolicy best = x;
  double best_psi = std::numeric_limits<double>::infinity();
  std::vector<double> weighted(dim, 0.0);
  double weight_total = 0.0;
  ValueVector warm;

  ProxResult out;
  std::size_t t = 0;
  for (; t < options.max_iterations; ++t) {
    const PsiEval eval = evaluate_psi(spec, x, current, ell, warm.size() ? &warm : nullptr);
    warm = eval.response.value;
    if (eval.psi < best_psi) {
      best_psi = eval.psi;
      best = current;
    }
    const double w = static_cast<double>(t + 1);
    for (std::size_t i = 0; i < dim; ++i) weighted[i] += w * current.coords()[i];
    weight_total += w;

    const std::vector<double> grad = policy_gradient(spec, current, eval.response.policy);
    const double step = 2.0 / (ell * static_cast<double>(t + 2));
    TeamPolicy next = current;
    for (std::size_t i = 0; i < dim; ++i) {
      next.coords()[i] -= step * (grad[i] + 2.0 * ell * (current.coords()[i] - x.coords()[i]));
    }
    next = project_product_simplex(next);
    const double moved = std::sqrt(squared_distance(next.coords(), current.coords()));
    current = std::move(next);
    if (moved < options.tolerance) {
      out.converged = true;
      ++t;
      break;
    }
  }

  // The final iterate and the weighted average are both candidates too.
  const PsiEval last = evaluate_psi(spec, x, current, ell, warm.size() ? &warm : nullptr);
  if (last.psi < best_psi) {
    best_psi = last.psi;
    best = current;
  }
  if (weight_total > 0.0) {
    TeamPolicy average = x;
    for (std::size_t i = 0; i < dim; ++i) average.coords()[i] = weighted[i] / weight_total;
    average = project_product_simplex(average);
    const PsiEval avg = evaluate_psi(spec, x, average, ell, warm.size() ? &warm : nullptr);
    if (avg.psi < best_psi) {
      best_psi = avg.psi;
      best = std::move(average);
    }
  }

  out.point = std::move(best);
  out.objective = best_psi;
  out.iterations = t;
  return out;
}

ProxGap prox_gap(const GameSpec& spec, const TeamPolicy& x, const ProxOptions& options) {
  const ProxResult prox = prox_point(spec, x, options);
  return {euclidean_distance(x.coords(), prox.point.coords()), prox.converged};
}

std::size_t random_draw_count(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(std::log(1.0 / delta))));
}

std::vector<std::size_t> candidate_indices(std::size_t iterations, const IpgmaxConfig& config) {
  if (iterations == 0) throw std::invalid_argument("empty trace");
  std::vector<std::size_t> out;
  if (config.selection == SelectionMode::ProxScan) {
    const std::size_t stride =
        config.scan_stride != 0 ? config.scan_stride : (iterations + 99) / 100;
    for (std::size_t t = 0; t < iterations; t += stride) out.push_back(t);
    if (out.back() != iterations - 1) out.push_back(iterations - 1);
    return out;
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, iterations - 1);
  const std::size_t draws = random_draw_count(config.delta);
  for (std::size_t i = 0; i < draws; ++i) out.push_back(pick(rng));
  return out;
}

Selection select_iterate(const GameSpec& spec, const RunTrace& trace, const IpgmaxConfig& config) {
  Selection out;
  bool first = true;
  for (std::size_t t : candidate_indices(trace.iterations, config)) {
    auto cached = out.gaps.find(t);
    double gap = 0.0;
    if (cached != out.gaps.end()) {
      gap = cached->second;
    } else {
      auto it = trace.team.find(t);
      if (it == trace.team.end()) {
        throw std::invalid_argument("trace does not retain iterate " + std::to_string(t));
      }
      const ProxGap g = prox_gap(spec, it->second, config.prox);
      gap = g.gap;
      out.warning = out.warning || !g.converged;
      out.gaps.emplace(t, gap);
    }
    if (first || gap < out.gap || (gap == out.gap && t < out.index)) {
      out.index = t;
      out.gap = gap;
      first = false;
    }
  }
  return out;
}

RunTrace run(const GameSpec& spec, const TeamPolicy& x0, const IpgmaxConfig& config) {
  check_config(config);
  require_compatible(spec, x0);
  if (!check_policy(x0).empty()) throw std::invalid_argument("x0: " + check_policy(x0));

  const auto started = std::chrono::steady_clock::now();
  const std::size_t T = config.iters;
  const std::size_t dim = x0.dimension() + spec.state_count * spec.adversary_actions;
  const bool retain_all = static_cast<double>(T + 1) * static_cast<double>(dim) <=
                          static_cast<double>(config.retain_budget);
  std::set<std::size_t> keep;
  if (!retain_all) {
    const auto candidates = candidate_indices(T, config);
    keep.insert(candidates.begin(), candidates.end());
    keep.insert(0);
    keep.insert(T);
  }
  auto retained = [&](std::size_t t) { return retain_all || keep.count(t) != 0; };

  RunTrace trace;
  trace.iterations = T;
  trace.phi.reserve(T + 1);
  trace.frobenius.reserve(T + 1);

  TeamPolicy x = x0;
  MdpSolveOptions options;
  AdversaryBestResponse response = adversary_best_response(spec, x, options);
  AdversaryPolicy y_prev = response.policy;
  trace.phi.push_back(response.value_rho);
  trace.frobenius.push_back(0.0);
  trace.team.emplace(0, x);
  trace.adversary.emplace(0, y_prev);

  for (std::size_t t = 1; t <= T; ++t) {
    // `response` is the best response to x^(t-1), i.e. y^(t).
    const AdversaryPolicy& y = response.policy;
    TeamPolicy next = x;
    if (config.eta > 0.0) {
      const std::vector<double> grad = policy_gradient(spec, x, y);
      for (std::size_t i = 0; i < next.dimension(); ++i) next.coords()[i] -= config.eta * grad[i];
      next = project_product_simplex(next);
    }
    trace.frobenius.push_back(joint_distance(next, y, x, y_prev));
    y_prev = y;
    if (retained(t - 1) || retained(t)) trace.adversary.insert_or_assign(t, y);
    x = std::move(next);

    ValueVector warm = response.value;
    options.warm_start = &warm;
    response = adversary_best_response(spec, x, options);
    options.warm_start = nullptr;
    trace.phi.push_back(response.value_rho);
    if (retained(t)) trace.team.emplace(t, x);
  }
  trace.final_team = x;

  const Selection selection = select_iterate(spec, trace, config);
  trace.prox_gaps = selection.gaps;
  trace.selected = selection.index;
  trace.selected_gap = selection.gap;
  trace.prox_warning = selection.warning;
  trace.x_hat = trace.team.at(selection.index);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return trace;
}

}  // namespace atmg
