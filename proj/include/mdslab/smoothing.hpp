#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdslab/distributions.hpp"
#include "mdslab/stream.hpp"

namespace mdslab {

/// Z's Kolmogorov distance to the standard normal, sup_t |P(Z <= t) - Phi(t)|,
/// attained at an atom from the left or from the right.
double delta_of(const DiscreteDist &dist);

struct JointAtom {
  double x;
  double y;
  double weight;
};

/// Finite joint law of (X, Y). Probabilities are weight / total_weight. In
/// exact mode every weight is a small nonnegative integer, so every event
/// mass is an exactly representable integer multiple of 1/total_weight and
/// probability comparisons carry no rounding.
class DiscreteJoint {
public:
  /// Probabilities as given; they must sum to 1 within 1e-12.
  explicit DiscreteJoint(std::vector<JointAtom> atoms);

  /// Integer numerators (stored in JointAtom::weight).
  static DiscreteJoint from_integer_weights(std::vector<JointAtom> atoms);

  std::span<const JointAtom> atoms() const noexcept { return atoms_; }
  double total_weight() const noexcept { return total_; }
  bool exact() const noexcept { return exact_; }

  /// Unnormalized masses of {X <= t} and {X + Y <= t}.
  double weight_x_le(double t) const noexcept;
  double weight_sum_le(double t) const noexcept;

  DiscreteDist marginal_x() const;
  DiscreteDist law_of_sum() const;

  double delta_x() const;
  double delta_sum() const;

private:
  DiscreteJoint(std::vector<JointAtom> atoms, bool exact);
  std::vector<JointAtom> atoms_;
  double total_ = 0.0;
  bool exact_ = false;
};

/// || E(|Y|^k | X) ||_r under the law of X; r = +infinity gives the
/// essential maximum.
double conditional_moment_norm(const DiscreteJoint &joint, double k, double r);

/// 2 (2 pi)^{-k/(2(k+1))}: the value of lambda/sqrt(2 pi) + beta lambda^{-k}
/// at lambda = (beta sqrt(2 pi))^{1/(k+1)}, divided by beta^{1/(k+1)}.
double explicit_constant(double k);

enum class Side { lower, upper };

struct InequalityViolation {
  double t;
  double lambda;
  Side side;
  double gap; // P-side shortfall beyond the beta lambda^{-k} allowance
};

/// Checks, for every (t, lambda),
///   P(X + Y <= t) >= P(X <= t - lambda) - beta lambda^{-k}   (lower)
///   P(X + Y <= t) <= P(X <= t + lambda) + beta lambda^{-k}   (upper)
/// with beta = conditional_moment_norm(joint, k, r). An empty t_grid is
/// replaced by default_t_grid for each lambda.
std::vector<InequalityViolation>
intermediate_inequality_check(const DiscreteJoint &joint, double k, double r,
                              std::span<const double> lambda_grid,
                              std::span<const double> t_grid = {});

/// Atoms of X + Y and of X -/+ lambda, each with +-1e-9 offsets.
std::vector<double> default_t_grid(const DiscreteJoint &joint, double lambda);

/// count points log-spaced on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct SmoothingReport {
  double beta = 0.0;
  double k = 0.0;
  double r = 1.0;
  double lambda_star = 0.0;
  double c_prime = 0.0;
  double delta_x = 0.0;
  double delta_xy = 0.0;
  double bound = 0.0;         // delta_x + c' beta^{1/(k+1)}
  double slack = 0.0;         // bound - delta_xy
  double reverse_bound = 0.0; // delta_xy + c' beta^{1/(k+1)}
  double reverse_slack = 0.0; // reverse_bound - delta_x
  double second_moment_branch = 0.0; // ||E(Y^2|X)||_inf^{1/2}, reported only
  std::vector<Side> violations;      // lower: forward form, upper: reverse form
};

/// Certifies delta(X+Y) <= delta(X) + c' beta^{1/(k+1)} and its reverse.
SmoothingReport lemma2_bound_check(const DiscreteJoint &joint, double k, double r);

/// Smallest constants c1, c2 for which the two-sided forms with the
/// (beta^{1/(k+1)} ∧ second-moment) branch hold on the given reports.
struct FittedSmoothingConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};
FittedSmoothingConstants fit_smoothing_constants(std::span<const SmoothingReport> reports);

/// Random exact-mode joint: 1..max_support atoms, x on the quarter grid of
/// [-3, 3], y on the quarter grid of [-2, 2], integer weights 1..16.
DiscreteJoint random_joint(const StreamKey &key, std::size_t max_support = 8);

} // namespace mdslab
