#include "mdslab/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "mdslab/errors.hpp"

namespace mdslab {

namespace {

// sup_t |W(t)/total - Phi(t)| for a weighted point set. Weights of equal
// values are merged before the cumulative scan.
double delta_of_weighted(std::vector<std::pair<double, double>> points, double total) {
  if (points.empty())
    throw DomainError("delta_of: empty support");
  std::sort(points.begin(), points.end());
  double sup = 0.0;
  double below = 0.0; // weight strictly below the current value
  std::size_t i = 0;
  while (i < points.size()) {
    const double v = points[i].first;
    double at = below;
    while (i < points.size() && points[i].first == v)
      at += points[i++].second;
    const double phi = std_normal_cdf(v);
    sup = std::max({sup, std::abs(at / total - phi), std::abs(below / total - phi)});
    below = at;
  }
  return sup;
}

constexpr double kFloatTolerance = 1e-12;

} // namespace

double delta_of(const DiscreteDist &dist) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &a : dist.atoms())
    pts.emplace_back(a.value, a.prob);
  return delta_of_weighted(std::move(pts), 1.0);
}

DiscreteJoint::DiscreteJoint(std::vector<JointAtom> atoms) : DiscreteJoint(std::move(atoms), false) {}

DiscreteJoint DiscreteJoint::from_integer_weights(std::vector<JointAtom> atoms) {
  return DiscreteJoint(std::move(atoms), true);
}

DiscreteJoint::DiscreteJoint(std::vector<JointAtom> atoms, bool exact) : exact_(exact) {
  for (const auto &a : atoms) {
    if (!std::isfinite(a.x) || !std::isfinite(a.y))
      throw DomainError("DiscreteJoint: non-finite atom");
    if (!(a.weight >= 0.0))
      throw DomainError("DiscreteJoint: negative weight");
    if (exact && (a.weight != std::floor(a.weight) || a.weight > 0x1.0p40))
      throw DomainError("DiscreteJoint: exact weights must be small integers");
    if (a.weight > 0.0) {
      atoms_.push_back(a);
      total_ += a.weight;
    }
  }
  if (atoms_.empty())
    throw DomainError("DiscreteJoint: empty support");
  if (!exact && std::abs(total_ - 1.0) > 1e-12)
    throw DomainError("DiscreteJoint: probabilities must sum to 1");
}

double DiscreteJoint::weight_x_le(double t) const noexcept {
  double w = 0.0;
  for (const auto &a : atoms_)
    if (a.x <= t)
      w += a.weight;
  return w;
}

double DiscreteJoint::weight_sum_le(double t) const noexcept {
  double w = 0.0;
  for (const auto &a : atoms_)
    if (a.x + a.y <= t)
      w += a.weight;
  return w;
}

DiscreteDist DiscreteJoint::marginal_x() const {
  std::vector<Atom> out;
  for (const auto &a : atoms_)
    out.push_back({a.x, a.weight / total_});
  return DiscreteDist(std::move(out));
}

DiscreteDist DiscreteJoint::law_of_sum() const {
  std::vector<Atom> out;
  for (const auto &a : atoms_)
    out.push_back({a.x + a.y, a.weight / total_});
  return DiscreteDist(std::move(out));
}

double DiscreteJoint::delta_x() const {
  std::vector<std::pair<double, double>> pts;
  for (const auto &a : atoms_)
    pts.emplace_back(a.x, a.weight);
  return delta_of_weighted(std::move(pts), total_);
}

double DiscreteJoint::delta_sum() const {
  std::vector<std::pair<double, double>> pts;
  for (const auto &a : atoms_)
    pts.emplace_back(a.x + a.y, a.weight);
  return delta_of_weighted(std::move(pts), total_);
}

double conditional_moment_norm(const DiscreteJoint &joint, double k, double r) {
  if (!(k > 0.0))
    throw DomainError("conditional_moment_norm: k must be positive");
  if (!(r >= 1.0))
    throw DomainError("conditional_moment_norm: r must be at least 1");
  // x -> (weight of {X = x}, weighted sum of |Y|^k on {X = x})
  std::map<double, std::pair<double, double>> by_x;
  for (const auto &a : joint.atoms()) {
    auto &slot = by_x[a.x];
    slot.first += a.weight;
    slot.second += a.weight * std::pow(std::abs(a.y), k);
  }
  if (std::isinf(r)) {
    double m = 0.0;
    for (const auto &[x, s] : by_x)
      m = std::max(m, s.second / s.first);
    return m;
  }
  double acc = 0.0;
  for (const auto &[x, s] : by_x)
    acc += (s.first / joint.total_weight()) * std::pow(s.second / s.first, r);
  return std::pow(acc, 1.0 / r);
}

double explicit_constant(double k) {
  if (!(k > 0.0))
    throw DomainError("explicit_constant: k must be positive");
  return 2.0 * std::pow(2.0 * std::numbers::pi, -k / (2.0 * (k + 1.0)));
}

std::vector<double> default_t_grid(const DiscreteJoint &joint, double lambda) {
  std::vector<double> base;
  for (const auto &a : joint.atoms()) {
    base.push_back(a.x + a.y);
    base.push_back(a.x + lambda);
    base.push_back(a.x - lambda);
  }
  std::vector<double> grid;
  for (double b : base)
    for (double off : {-1e-9, 0.0, 1e-9})
      grid.push_back(b + off);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0)
    throw DomainError("log_grid: need 0 < lo <= hi and count > 0");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    g[i] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
  }
  return g;
}

std::vector<InequalityViolation>
intermediate_inequality_check(const DiscreteJoint &joint, double k, double r,
                              std::span<const double> lambda_grid,
                              std::span<const double> t_grid) {
  const long double beta = conditional_moment_norm(joint, k, r);
  const long double total = joint.total_weight();
  const long double tol = joint.exact() ? 0.0L : kFloatTolerance;
  std::vector<InequalityViolation> out;
  for (double lambda : lambda_grid) {
    if (!(lambda > 0.0))
      throw DomainError("intermediate_inequality_check: lambda must be positive");
    const long double allowance = beta * std::pow(static_cast<long double>(lambda), -k);
    std::vector<double> own;
    if (t_grid.empty())
      own = default_t_grid(joint, lambda);
    const std::span<const double> ts = t_grid.empty() ? std::span<const double>(own) : t_grid;
    for (double t : ts) {
      const double w_sum = joint.weight_sum_le(t);
      // lower: P(X <= t - lambda) - P(X + Y <= t) <= allowance
      const double lower_gap = joint.weight_x_le(t - lambda) - w_sum;
      if (lower_gap > 0.0 && lower_gap / total - allowance > tol)
        out.push_back({t, lambda, Side::lower,
                       static_cast<double>(lower_gap / total - allowance)});
      // upper: P(X + Y <= t) - P(X <= t + lambda) <= allowance
      const double upper_gap = w_sum - joint.weight_x_le(t + lambda);
      if (upper_gap > 0.0 && upper_gap / total - allowance > tol)
        out.push_back({t, lambda, Side::upper,
                       static_cast<double>(upper_gap / total - allowance)});
    }
  }
  return out;
}

SmoothingReport lemma2_bound_check(const DiscreteJoint &joint, double k, double r) {
  SmoothingReport rep;
  rep.k = k;
  rep.r = r;
  rep.beta = conditional_moment_norm(joint, k, r);
  rep.c_prime = explicit_constant(k);
  rep.lambda_star = std::pow(rep.beta * std::sqrt(2.0 * std::numbers::pi), 1.0 / (k + 1.0));
  rep.delta_x = joint.delta_x();
  rep.delta_xy = joint.delta_sum();
  const double term = rep.c_prime * std::pow(rep.beta, 1.0 / (k + 1.0));
  rep.bound = rep.delta_x + term;
  rep.slack = rep.bound - rep.delta_xy;
  rep.reverse_bound = rep.delta_xy + term;
  rep.reverse_slack = rep.reverse_bound - rep.delta_x;
  rep.second_moment_branch =
      std::sqrt(conditional_moment_norm(joint, 2.0, std::numeric_limits<double>::infinity()));
  const double tol = joint.exact() ? 0.0 : kFloatTolerance;
  if (rep.slack < -tol)
    rep.violations.push_back(Side::lower);
  if (rep.reverse_slack < -tol)
    rep.violations.push_back(Side::upper);
  return rep;
}

FittedSmoothingConstants fit_smoothing_constants(std::span<const SmoothingReport> reports) {
  FittedSmoothingConstants c;
  for (const auto &rep : reports) {
    const double branch =
        std::min(std::pow(rep.beta, 1.0 / (rep.k + 1.0)), rep.second_moment_branch);
    if (!(branch > 0.0))
      continue;
    c.c1 = std::max(c.c1, (rep.delta_xy - 2.0 * rep.delta_x) / branch);
    c.c2 = std::max(c.c2, (rep.delta_x - 2.0 * rep.delta_xy) / branch);
  }
  return c;
}

DiscreteJoint random_joint(const StreamKey &key, std::size_t max_support) {
  if (max_support == 0)
    throw DomainError("random_joint: max_support must be positive");
  const auto head = random_block(key);
  const std::size_t support = 1 + head[0] % max_support;
  std::vector<JointAtom> atoms;
  for (std::size_t i = 0; i < support; ++i) {
    const auto b = random_block({key.master_seed, key.substream_id, key.step + 1 + i});
    atoms.push_back({(static_cast<double>(b[0] % 25) - 12.0) / 4.0,
                     (static_cast<double>(b[1] % 17) - 8.0) / 4.0,
                     static_cast<double>(1 + b[2] % 16)});
  }
  return DiscreteJoint::from_integer_weights(std::move(atoms));
}

} // namespace mdslab
