#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdslab/distributions.hpp"
#include "mdslab/models.hpp"

namespace mdslab {

enum class NormMode { L1, Linf };

std::string to_string(NormMode mode);
NormMode parse_norm_mode(const std::string &s);

/// Tail that turns a sequence into one with V^2 = 1 a.s.: n_hat = n +
/// floor(2d/u^2) and the augmented sequence has n_hat + 1 entries.
struct AugmentationPlan {
  std::size_t n = 0;
  double v2 = 0.0;     // v_n^2 of the original sequence
  double u = 0.0;      // amplitude cap of the appended increments
  double d = 0.0;      // d_1 or d_inf
  NormMode mode = NormMode::Linf;
  std::size_t n_hat = 0;
  double v_hat2 = 0.0; // v2 + d

  std::size_t tail_length() const noexcept { return n_hat + 1 - n; }
};

/// d = || v^2 V^2 - v^2 || in L1 or L-infinity, given the exact law of
/// sum_k sigma_k^2.
double compute_d(const DiscreteDist &sum_cond_var_law, double v2, NormMode mode);

/// Same for a model, by exact enumeration of its conditional-variance law.
double compute_d(const MdsModel &model, std::size_t n, NormMode mode);

AugmentationPlan make_plan(std::size_t n, double v2, double u, double d, NormMode mode);

/// Plan with u = u_n from gamma_sequence and d from compute_d.
AugmentationPlan make_plan(const MdsModel &model, std::size_t n, NormMode mode);

struct AugmentedPath {
  Path path;                   // length n_hat + 1, V2 relative to v_hat2
  std::size_t k = 0;           // number of full +-u increments
  double residual = 0.0;       // v2 + d - sum sigma^2 on this path
  std::vector<double> tail_amplitudes; // a_j, increment j is +-a_j w.p. 1/2
};

/// Appends the tail: +-u for j <= k, +-sqrt(residual - k u^2) for j = k + 1,
/// 0 afterwards, with k = floor(residual / u^2). Tail increment j takes its
/// sign from block key.step + j - 1.
///
/// Throws NegativeResidualError when the residual is negative (possible in
/// L1 mode only) and PlanInconsistencyError when k + 1 exceeds the tail.
AugmentedPath augment_path(const Path &path, const AugmentationPlan &plan,
                           const StreamKey &key);

/// Condition (1) with gamma = u for every step of an augmented path: the
/// model's reachable states for the first n steps, the two-point tail laws
/// afterwards.
MembershipReport verify_augmented_membership(const MdsModel &model,
                                             const AugmentationPlan &plan,
                                             const AugmentedPath &augmented);

struct Theorem2Terms {
  double rate_term = 0.0;  // u_n ln n / v_n
  double linf_term = 0.0;  // ||V^2 - 1||_inf^{1/2}
  double l1_term = 0.0;    // ||V^2 - 1||_1^{1/3}
  double min_term = 0.0;   // linf_term ∧ l1_term
  double delta_hat = 0.0;
};

Theorem2Terms theorem2_bound_terms(double u_n, std::size_t n, double v_n,
                                   double linf_norm, double l1_norm, double delta_hat);

Theorem2Terms theorem2_bound_terms(const MdsModel &model, std::size_t n,
                                   double delta_hat);

} // namespace mdslab
