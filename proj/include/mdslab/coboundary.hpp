#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mdslab/empirics.hpp"
#include "mdslab/models.hpp"

namespace mdslab {

/// alpha_lo, ..., alpha_{lo + size - 1}; zero elsewhere.
struct FiniteCoeffs {
  std::int64_t lo = 0;
  std::vector<double> values;

  std::int64_t hi() const noexcept { return lo + static_cast<std::int64_t>(values.size()) - 1; }
  double at(std::int64_t j) const noexcept;
};

/// alpha_j = rho^j for j >= 0, |rho| < 1.
struct GeometricCoeffs {
  double rho;
};

/// alpha_j = j^{-s} for j >= 1, s > 1.
struct PolynomialCoeffs {
  double s;
};

using CoeffSeq = std::variant<FiniteCoeffs, GeometricCoeffs, PolynomialCoeffs>;

void validate(const CoeffSeq &coeffs);

/// A = sum_j alpha_j.
double coefficient_sum(const CoeffSeq &coeffs);

/// sum_j alpha_j^2.
double square_sum(const CoeffSeq &coeffs);

struct Truncation {
  FiniteCoeffs coeffs;
  double tail_l2 = 0.0; // bound on the discarded sum of alpha_j^2
};

/// Finite copy keeping indices up to the first J with l2 tail <= tol.
Truncation truncate(const CoeffSeq &coeffs, double tail_l2_tolerance = 1e-10);

enum class Verdict { converges, diverges };

struct Condition3Report {
  Verdict verdict = Verdict::converges;
  std::size_t K = 0;
  double partial_sum = 0.0;   // sum_{k=1}^K {|sum_{j>=k}|^p + |sum_{j<=-k}|^p}
  double series_value = 0.0;  // exact for finite and geometric, else partial + tail estimate
  bool series_exact = false;
  double tail_estimate = 0.0; // estimate of sum_{k>K}
  // The form with sum_{j<=k} (no minus sign) has inner sums tending to A, so
  // its series diverges whenever A != 0.
  bool printed_form_diverges = false;
  std::string note;
};

/// Condition on the two-sided tails sum_{j>=k} alpha_j and sum_{j<=-k} alpha_j.
Condition3Report condition3_check(const CoeffSeq &coeffs, double p, std::size_t K);

/// m = A eps_0 and g = sum_i c_i eps_i with f - m = g - g o T, where
/// f = X_0 = sum_j alpha_j eps_{-j} and g o T shifts every index by +1.
struct CoboundaryDecomposition {
  double A = 0.0;
  std::map<std::int64_t, double> g_coeffs;
  double p = 0.0;
  double g_norm_p = 0.0;
  bool g_norm_exact = false;
};

CoboundaryDecomposition coboundary_decompose(const FiniteCoeffs &coeffs);

/// Decomposition plus ||g||_p under i.i.d. innovations from `innovation`
/// (p = +infinity for the sup norm). The norm is exact when the innovation
/// law is discrete and the law of g has at most 2^20 combinations, and a
/// Minkowski upper bound otherwise.
CoboundaryDecomposition coboundary_decompose(const FiniteCoeffs &coeffs,
                                             const MdsModel &innovation, double p);

/// Coefficient of eps_i in f - m - g + g o T, for every i where any term is
/// nonzero.
std::map<std::int64_t, double> telescoping_residual(const FiniteCoeffs &coeffs,
                                                    const CoboundaryDecomposition &dec);

/// One realization of X_1..X_n together with the innovations it used.
struct LinearProcessPath {
  std::vector<double> values;       // X_1..X_n
  std::vector<double> partial_sums; // S_1..S_n
  std::int64_t first_index = 0;     // index j of innovations[0]
  std::vector<double> innovations;  // eps_j for j in [min(1 - hi, 1), max(n - lo, n)]

  double eps(std::int64_t j) const { return innovations.at(static_cast<std::size_t>(j - first_index)); }
};

/// Innovation eps_j is step origin + j of the key's substream, so all
/// processes built from one key share their innovations.
inline constexpr std::uint64_t kInnovationOrigin = std::uint64_t{1} << 62;

void validate_innovation(const MdsModel &innovation);

LinearProcessPath simulate_linear_process(const FiniteCoeffs &coeffs,
                                          const MdsModel &innovation, std::size_t n,
                                          const StreamKey &key);

struct LinearProcessEstimate {
  DeltaEstimate f; // S_n(X) / v_n(m)
  DeltaEstimate m; // A S_n(eps) / v_n(m)
  double v_n_m = 0.0;
};

/// Delta_n of the linear process and of its martingale part, both normalized
/// by v_n(m) = |A| v_n(eps) and sharing innovations per replication.
LinearProcessEstimate estimate_linear_process(const FiniteCoeffs &coeffs,
                                              const MdsModel &innovation, std::size_t n,
                                              std::size_t reps, const StreamKey &key,
                                              double delta = 0.01, int workers = 0);

LinearProcessEstimate estimate_linear_process_serial(const FiniteCoeffs &coeffs,
                                                     const MdsModel &innovation,
                                                     std::size_t n, std::size_t reps,
                                                     const StreamKey &key,
                                                     double delta = 0.01);

/// 2 ||g||_p^{p/(p+1)} / n^{p/(2(p+1))}; p = infinity gives 2 ||g||_inf / sqrt n.
double correction_term(double g_norm, double p, std::size_t n);

struct Theorem3Point {
  std::size_t n = 0;
  double delta_f = 0.0;
  double delta_m = 0.0;
  double correction = 0.0; // correction_term with c = 1
  double ratio = 0.0;      // (delta_f - 2 delta_m) / correction; NaN when g = 0
};

struct Theorem3Report {
  std::vector<Theorem3Point> points;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  bool bounded = true; // every ratio finite (or g = 0)
};

/// Grids must share the same n values.
Theorem3Report theorem3_rate_check(std::span<const DeltaEstimate> f_grid,
                                   std::span<const DeltaEstimate> m_grid, double g_norm,
                                   double p);

CoeffSeq parse_coeffs(const std::string &spec);
std::string to_string(const CoeffSeq &coeffs);

} // namespace mdslab
