#include "mdslab/empirics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdslab/distributions.hpp"
#include "mdslab/errors.hpp"
#include "mdslab/numerics.hpp"
#include "mdslab/parallel.hpp"

namespace mdslab {

double ks_distance_to_normal(std::span<const double> sorted_sample) {
  if (sorted_sample.empty())
    throw DomainError("ks_distance_to_normal: empty sample");
  if (!std::is_sorted(sorted_sample.begin(), sorted_sample.end()))
    throw DomainError("ks_distance_to_normal: sample must be sorted");
  const double m = static_cast<double>(sorted_sample.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
    const double phi = std_normal_cdf(sorted_sample[i]);
    const double above = static_cast<double>(i + 1) / m - phi;
    const double below = phi - static_cast<double>(i) / m;
    sup = std::max({sup, std::abs(above), std::abs(below)});
  }
  return sup;
}

double dkw_radius(std::size_t m, double delta) {
  if (m == 0)
    throw DomainError("dkw_radius: m must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("dkw_radius: delta must lie in (0,1)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m)));
}

namespace {

struct Prepared {
  double v_n;
};

Prepared prepare(const MdsModel &model, std::size_t n, std::size_t reps, double delta) {
  if (n == 0)
    throw DomainError("estimate_delta_n: n must be positive");
  if (reps < 100)
    throw DomainError("estimate_delta_n: reps must be at least 100");
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("estimate_delta_n: delta must lie in (0,1)");
  const double v2 = theoretical_v2(model, n);
  if (!(v2 > 0.0))
    throw DegenerateModelError("estimate_delta_n: v_n^2 = 0");
  return {std::sqrt(v2)};
}

DeltaEstimate finish(std::vector<double> &sums, std::size_t n, const StreamKey &key,
                     double delta) {
  std::sort(sums.begin(), sums.end());
  DeltaEstimate est;
  est.n = n;
  est.reps = sums.size();
  est.ks = ks_distance_to_normal(sums);
  est.dkw_radius = dkw_radius(sums.size(), delta);
  est.confidence = delta;
  est.key = key;
  return est;
}

} // namespace

std::vector<double> replicate_normalized_sums(const MdsModel &model, std::size_t n,
                                              std::size_t reps, const StreamKey &key,
                                              int workers) {
  const Prepared p = prepare(model, n, reps, 0.01);
  std::vector<double> sums(reps);
  parallel_for(
      reps,
      [&](std::size_t r) {
        const StreamKey rk{key.master_seed, key.substream_id + r, key.step};
        sums[r] = sample_sum(model, n, rk) / p.v_n;
      },
      workers);
  std::sort(sums.begin(), sums.end());
  return sums;
}

DeltaEstimate estimate_delta_n(const MdsModel &model, std::size_t n, std::size_t reps,
                               const StreamKey &key, double delta, int workers) {
  prepare(model, n, reps, delta);
  auto sums = replicate_normalized_sums(model, n, reps, key, workers);
  return finish(sums, n, key, delta);
}

DeltaEstimate estimate_delta_n_serial(const MdsModel &model, std::size_t n,
                                      std::size_t reps, const StreamKey &key,
                                      double delta) {
  const Prepared p = prepare(model, n, reps, delta);
  std::vector<double> sums(reps);
  serial_for(reps, [&](std::size_t r) {
    const StreamKey rk{key.master_seed, key.substream_id + r, key.step};
    sums[r] = sample_sum(model, n, rk) / p.v_n;
  });
  return finish(sums, n, key, delta);
}

std::string to_string(RateForm form) {
  return form == RateForm::power ? "power" : "power_log";
}

RateForm parse_rate_form(const std::string &s) {
  if (s == "power")
    return RateForm::power;
  if (s == "power_log")
    return RateForm::power_log;
  throw DomainError("unknown rate form '" + s + "'");
}

RateFit fit_rate(std::span<const GridPoint> grid, RateForm form) {
  if (grid.size() < 4)
    throw DomainError("fit_rate: need at least 4 grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i].delta > 0.0))
      throw DomainError("fit_rate: Delta must be positive");
    if (!(grid[i].n > 1.0))
      throw DomainError("fit_rate: n must exceed 1");
    if (i > 0 && !(grid[i].n > grid[i - 1].n))
      throw DomainError("fit_rate: grid must be strictly increasing in n");
  }

  const double m = static_cast<double>(grid.size());
  std::vector<double> xs, ys;
  for (const auto &g : grid) {
    xs.push_back(std::log(g.n));
    ys.push_back(std::log(g.delta));
  }
  double ybar = 0.0;
  for (double y : ys)
    ybar += y;
  ybar /= m;

  RateFit fit;
  fit.grid.assign(grid.begin(), grid.end());
  fit.form = form;
  double log_c = 0.0;
  if (form == RateForm::power) {
    double xbar = 0.0;
    for (double x : xs)
      xbar += x;
    xbar /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - xbar) * (ys[i] - ybar);
      sxx += (xs[i] - xbar) * (xs[i] - xbar);
    }
    fit.b = sxy / sxx;
    log_c = ybar - fit.b * xbar;
  } else {
    fit.b = -0.5;
    for (std::size_t i = 0; i < xs.size(); ++i)
      log_c += ys[i] + 0.5 * xs[i] - std::log(xs[i]);
    log_c /= m;
  }
  fit.C = std::exp(log_c);

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pred = form == RateForm::power
                            ? log_c + fit.b * xs[i]
                            : log_c - 0.5 * xs[i] + std::log(xs[i]);
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0)
                        : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double bound_ratio(double delta, std::size_t n, double u_n, double v_n) {
  if (n < 2)
    throw DomainError("bound_ratio: n must be at least 2");
  if (!(u_n > 0.0) || !(v_n > 0.0))
    throw DomainError("bound_ratio: u_n and v_n must be positive");
  return delta * v_n / (u_n * std::log(static_cast<double>(n)));
}

double bound_ratio(const DeltaEstimate &delta, double u_n, double v_n) {
  return bound_ratio(delta.ks, delta.n, u_n, v_n);
}

std::vector<std::size_t> variance_partition(std::span<const double> cond_vars, double v2) {
  const std::size_t n = cond_vars.size();
  std::vector<std::size_t> nu(n + 1, n);
  if (n == 0)
    return nu;
  nu[0] = 0;
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(v2);
  CompensatedSum running;
  std::size_t k = 0; // running holds sigma_1^2 + ... + sigma_k^2
  for (std::size_t j = 1; j < n; ++j) {
    const double threshold = static_cast<double>(j) * v2 / static_cast<double>(n);
    if (k == 0) {
      running.add(cond_vars[0]);
      k = 1;
    }
    while (k < n && running.value() < threshold - slack) {
      running.add(cond_vars[k]);
      ++k;
    }
    nu[j] = (running.value() >= threshold - slack) ? k : n;
  }
  return nu;
}

std::vector<std::size_t> geometric_grid(unsigned lo_exp, unsigned hi_exp) {
  if (lo_exp > hi_exp || hi_exp > 62)
    throw DomainError("geometric_grid: bad exponent range");
  std::vector<std::size_t> grid;
  for (unsigned e = lo_exp; e <= hi_exp; ++e)
    grid.push_back(std::size_t{1} << e);
  return grid;
}

} // namespace mdslab
