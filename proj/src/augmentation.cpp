#include "mdslab/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdslab/errors.hpp"
#include "mdslab/format.hpp"
#include "mdslab/numerics.hpp"

namespace mdslab {

std::string to_string(NormMode mode) { return mode == NormMode::L1 ? "L1" : "Linf"; }

NormMode parse_norm_mode(const std::string &s) {
  if (s == "L1")
    return NormMode::L1;
  if (s == "Linf")
    return NormMode::Linf;
  throw DomainError("unknown norm mode '" + s + "'");
}

double compute_d(const DiscreteDist &law, double v2, NormMode mode) {
  double d = 0.0;
  for (const auto &a : law.atoms()) {
    const double gap = std::abs(a.value - v2);
    d = mode == NormMode::L1 ? d + a.prob * gap : std::max(d, gap);
  }
  return d;
}

double compute_d(const MdsModel &model, std::size_t n, NormMode mode) {
  return compute_d(sum_cond_var_law(model, n), theoretical_v2(model, n), mode);
}

AugmentationPlan make_plan(std::size_t n, double v2, double u, double d, NormMode mode) {
  if (!(u > 0.0))
    throw DomainError("augmentation plan: u must be positive");
  if (!(d >= 0.0) || !std::isfinite(d))
    throw DomainError("augmentation plan: d must be finite and nonnegative");
  if (!(v2 > 0.0))
    throw DegenerateModelError("augmentation plan: v_n^2 must be positive");
  AugmentationPlan plan;
  plan.n = n;
  plan.v2 = v2;
  plan.u = u;
  plan.d = d;
  plan.mode = mode;
  plan.n_hat = n + static_cast<std::size_t>(std::floor(2.0 * d / (u * u)));
  plan.v_hat2 = v2 + d;
  return plan;
}

AugmentationPlan make_plan(const MdsModel &model, std::size_t n, NormMode mode) {
  return make_plan(n, theoretical_v2(model, n), gamma_sequence(model, n).u_n,
                   compute_d(model, n, mode), mode);
}

AugmentedPath augment_path(const Path &path, const AugmentationPlan &plan,
                           const StreamKey &key) {
  if (path.size() != plan.n)
    throw PlanInconsistencyError("augment_path: path length differs from plan n");

  CompensatedSum before;
  for (double v : path.cond_vars)
    before.add(v);

  AugmentedPath out;
  out.residual = plan.v2 + plan.d - before.value();
  const double round_off = 16.0 * std::numeric_limits<double>::epsilon() * plan.v_hat2;
  if (out.residual < 0.0) {
    if (out.residual < -round_off)
      throw NegativeResidualError("augment_path: residual variance " +
                                      format_real(out.residual) + " is negative (" +
                                      to_string(plan.mode) + " mode)",
                                  out.residual);
    out.residual = 0.0;
  }

  const double u2 = plan.u * plan.u;
  out.k = static_cast<std::size_t>(std::floor(out.residual / u2));
  double remainder = out.residual - static_cast<double>(out.k) * u2;
  if (remainder < 0.0)
    remainder = 0.0;
  const std::size_t tail = plan.tail_length();
  if (out.k + 1 > tail)
    throw PlanInconsistencyError("augment_path: residual needs " +
                                 std::to_string(out.k + 1) + " increments, tail has " +
                                 std::to_string(tail));

  out.path = path;
  Path &p = out.path;
  double s = p.partial_sums.empty() ? 0.0 : p.partial_sums.back();
  out.tail_amplitudes.reserve(tail);
  for (std::size_t j = 1; j <= tail; ++j) {
    double a = 0.0;
    if (j <= out.k)
      a = plan.u;
    else if (j == out.k + 1)
      a = std::sqrt(remainder);
    const auto blk =
        random_block({key.master_seed, key.substream_id, key.step + (j - 1)});
    const double x = (blk[0] & 1u) ? a : -a;
    out.tail_amplitudes.push_back(a);
    s += x;
    p.values.push_back(x);
    p.cond_vars.push_back(j <= out.k ? u2 : a * a);
    p.partial_sums.push_back(s);
    if (!p.base_values.empty())
      p.base_values.push_back(x);
  }
  // The last nonzero amplitude squared must reproduce the remainder exactly.
  if (out.k < tail)
    p.cond_vars[plan.n + out.k] = remainder;

  CompensatedSum after;
  for (double v : p.cond_vars)
    after.add(v);
  p.v2 = plan.v_hat2;
  p.V2 = after.value() / plan.v_hat2;
  return out;
}

MembershipReport verify_augmented_membership(const MdsModel &model,
                                             const AugmentationPlan &plan,
                                             const AugmentedPath &augmented) {
  MembershipReport report = verify_class_membership(model, plan.n, plan.u);
  for (std::size_t j = 0; j < augmented.tail_amplitudes.size(); ++j) {
    const DiscreteDist law = DiscreteDist::rademacher(augmented.tail_amplitudes[j]);
    const double excess = class_excess(law, plan.u);
    ++report.states_checked;
    if (excess > report.max_excess) {
      report.max_excess = excess;
      report.worst_step = plan.n + j + 1;
    }
    report.max_abs_cond_mean = std::max(report.max_abs_cond_mean, std::abs(law.mean()));
  }
  report.member = report.max_excess <= 1e-12 && report.max_abs_cond_mean <= 1e-12;
  return report;
}

Theorem2Terms theorem2_bound_terms(double u_n, std::size_t n, double v_n,
                                   double linf_norm, double l1_norm, double delta_hat) {
  if (n < 2)
    throw DomainError("theorem2_bound_terms: n must be at least 2");
  Theorem2Terms t;
  t.rate_term = u_n * std::log(static_cast<double>(n)) / v_n;
  t.linf_term = std::sqrt(linf_norm);
  t.l1_term = std::cbrt(l1_norm);
  t.min_term = std::min(t.linf_term, t.l1_term);
  t.delta_hat = delta_hat;
  return t;
}

Theorem2Terms theorem2_bound_terms(const MdsModel &model, std::size_t n,
                                   double delta_hat) {
  const DiscreteDist law = sum_cond_var_law(model, n);
  const double v2 = theoretical_v2(model, n);
  // ||V^2 - 1|| = d / v^2
  return theorem2_bound_terms(gamma_sequence(model, n).u_n, n, std::sqrt(v2),
                              compute_d(law, v2, NormMode::Linf) / v2,
                              compute_d(law, v2, NormMode::L1) / v2, delta_hat);
}

} // namespace mdslab
