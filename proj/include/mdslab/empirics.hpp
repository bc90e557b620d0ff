#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mdslab/models.hpp"
#include "mdslab/stream.hpp"

namespace mdslab {

/// sup_t |F_m(t) - Phi(t)| for the empirical CDF of a sorted sample. Both
/// one-sided gaps are evaluated at every atom, which is exact for the
/// empirical measure.
double ks_distance_to_normal(std::span<const double> sorted_sample);

/// DKW radius sqrt(ln(2/delta) / (2m)).
double dkw_radius(std::size_t m, double delta);

struct DeltaEstimate {
  std::size_t n = 0;
  std::size_t reps = 0;
  double ks = 0.0;
  double dkw_radius = 0.0;
  double confidence = 0.01; // delta of the DKW radius
  StreamKey key;
};

/// Monte Carlo estimate of Delta_n: replication r draws S_n from substream
/// key.substream_id + r and the KS distance of {S_n / v_n} to Phi is exact.
/// workers <= 0 uses every processor; the result does not depend on it.
DeltaEstimate estimate_delta_n(const MdsModel &model, std::size_t n, std::size_t reps,
                               const StreamKey &key, double delta = 0.01,
                               int workers = 0);

/// Single-threaded reference for estimate_delta_n.
DeltaEstimate estimate_delta_n_serial(const MdsModel &model, std::size_t n,
                                      std::size_t reps, const StreamKey &key,
                                      double delta = 0.01);

/// Sorted normalized sums S_n / v_n, one per replication.
std::vector<double> replicate_normalized_sums(const MdsModel &model, std::size_t n,
                                              std::size_t reps, const StreamKey &key,
                                              int workers = 0);

enum class RateForm { power, power_log };

std::string to_string(RateForm form);
RateForm parse_rate_form(const std::string &s);

struct GridPoint {
  double n;
  double delta;
};

/// Delta ~ C n^b (power) or C n^{-1/2} ln n (power_log, b frozen at -1/2),
/// least squares in log space.
struct RateFit {
  std::vector<GridPoint> grid;
  RateForm form = RateForm::power;
  double C = 0.0;
  double b = 0.0;
  double r2 = 0.0;
};

RateFit fit_rate(std::span<const GridPoint> grid, RateForm form);

/// Delta_n v_n / (u_n ln n), an empirical lower estimate of the constant in
/// the u_n log n / v_n bound.
double bound_ratio(const DeltaEstimate &delta, double u_n, double v_n);
double bound_ratio(double delta, std::size_t n, double u_n, double v_n);

/// nu(0..n): nu(0) = 0, nu(n) = n, and for 0 < j < n the first index k >= 1
/// whose running sum of conditional variances reaches j v2 / n (n when it
/// never does). Comparisons carry a relative slack of 64 ulp of v2 so that
/// sums of equal terms hit their thresholds.
std::vector<std::size_t> variance_partition(std::span<const double> cond_vars, double v2);

/// {2^lo, ..., 2^hi}.
std::vector<std::size_t> geometric_grid(unsigned lo_exp, unsigned hi_exp);

} // namespace mdslab
