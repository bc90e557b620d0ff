#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdslab/distributions.hpp"
#include "mdslab/empirics.hpp"
#include "mdslab/errors.hpp"
#include "mdslab/stream.hpp"

using namespace mdslab;

namespace {

// sequential uniforms from one substream, two per block
struct Draws {
  Substream s;
  std::uint64_t i = 0;
  Draws(std::uint64_t seed, std::uint64_t id) : s(seed, id) {}
  double next_uniform() {
    const auto b = s.block(i / 2);
    const bool second = i++ % 2;
    return second ? open_uniform(b[2], b[3]) : open_uniform(b[0], b[1]);
  }
  std::uint32_t next_u32() { return s.block(1000000 + i++)[0]; }
};

std::vector<double> quantile_sample(std::size_t m) {
  std::vector<double> xs(m);
  for (std::size_t i = 0; i < m; ++i)
    xs[i] = std_normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
  return xs;
}

// empirical CDF evaluated by counting, sup over an explicit t grid
double grid_ks(const std::vector<double> &sorted, double lo, double hi, std::size_t points) {
  double best = 0.0;
  const double m = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i <= points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points);
    const double le = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const double lt = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const double phi = 0.5 * std::erfc(-t / std::sqrt(2.0));
    best = std::max({best, std::abs(le / m - phi), std::abs(lt / m - phi)});
  }
  return best;
}

std::vector<std::size_t> partition_oracle(const std::vector<double> &s, double v2) {
  const std::size_t n = s.size();
  std::vector<std::size_t> nu(n + 1, n);
  nu[0] = 0;
  for (std::size_t j = 1; j < n; ++j) {
    const long double thr = static_cast<long double>(j) * v2 / static_cast<long double>(n);
    long double run = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      run += s[k - 1];
      if (run >= thr) {
        nu[j] = k;
        break;
      }
    }
  }
  return nu;
}

} // namespace

TEST_CASE("ks distance examples") {
  const std::vector<double> zero{0.0};
  CHECK(ks_distance_to_normal(zero) == 0.5);
  const std::vector<double> pm{-1.0, 1.0};
  CHECK(ks_distance_to_normal(pm) == doctest::Approx(0.5 - 0.15865525393145705).epsilon(1e-15));
  CHECK(ks_distance_to_normal(pm) == doctest::Approx(0.3413447460685429).epsilon(1e-14));
  for (std::size_t m : {10u, 100u, 1000u})
    CHECK(ks_distance_to_normal(quantile_sample(m)) == doctest::Approx(0.5 / m).epsilon(1e-9));
  CHECK_THROWS_AS(ks_distance_to_normal(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(ks_distance_to_normal(std::vector<double>{1.0, 0.0}), DomainError);
}

TEST_CASE("ks distance agrees with a dense grid sup") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Draws s(77, trial);
    const std::size_t m = 1 + s.next_u32() % 50;
    std::vector<double> xs(m);
    for (auto &x : xs)
      x = std::round(8.0 * (s.next_uniform() * 6.0 - 3.0)) / 8.0; // ties included
    std::sort(xs.begin(), xs.end());
    const double exact = ks_distance_to_normal(xs);
    // grid contains every atom (multiples of 1/8), so the sup is attained
    const double brute = grid_ks(xs, -4.0, 4.0, 64 * 8);
    CHECK(exact == doctest::Approx(brute).epsilon(1e-13));
    // a grid missing the atoms can only under-estimate
    CHECK(grid_ks(xs, -4.0 + 1.0 / 1024, 4.0 + 1.0 / 1024, 4096) <= exact + 1e-15);
  }
}

TEST_CASE("dkw radius") {
  CHECK(dkw_radius(10000, 0.01) == doctest::Approx(std::sqrt(std::log(200.0) / 20000.0)).epsilon(1e-15));
  CHECK(dkw_radius(10000, 0.01) == doctest::Approx(0.016279).epsilon(1e-4));
  CHECK_THROWS_AS(dkw_radius(0, 0.01), DomainError);
  CHECK_THROWS_AS(dkw_radius(10, 1.5), DomainError);
}

TEST_CASE("DKW coverage on exact normal samples") {
  // at m = 10 the exact exceedance probability of the radius is 0.0055
  const std::size_t m = 10;
  const double radius = dkw_radius(m, 0.01);
  int covered = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    Draws s(4242, trial);
    std::vector<double> xs(m);
    for (auto &x : xs)
      x = std_normal_quantile(s.next_uniform());
    std::sort(xs.begin(), xs.end());
    covered += ks_distance_to_normal(xs) <= radius;
  }
  CHECK_MESSAGE(covered >= 990, covered);
}

TEST_CASE("estimate_delta_n") {
  const StreamKey key{1, 0, 0};
  SUBCASE("n = 1 recovers the Rademacher distance") {
    const auto est = estimate_delta_n(ScaledRademacher{1.0}, 1, 1000000, key);
    CHECK(std::abs(est.ks - 0.34134) <= 0.002);
  }
  SUBCASE("radius and bookkeeping") {
    const auto est = estimate_delta_n(ScaledRademacher{1.0}, 4, 10000, key);
    CHECK(est.dkw_radius == dkw_radius(10000, 0.01));
    CHECK(est.reps == 10000);
    CHECK(est.n == 4);
    CHECK(est.ks >= 0.0);
    CHECK(est.ks <= 1.0);
  }
  SUBCASE("large n is close to normal") {
    const auto est = estimate_delta_n(ScaledRademacher{1.0}, 10000, 20000, key);
    CHECK(est.ks <= 0.02);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(estimate_delta_n(ScaledRademacher{1.0}, 4, 99, key), DomainError);
  }
}

TEST_CASE("parallel and serial estimates are bit-identical") {
  const std::vector<MdsModel> models{
      ScaledRademacher{1.0}, PredictableScaleRademacher{1.0, 1.5, 0.5},
      AdditiveNoise{ScaledRademacher{1.0}, NormalNoise{0.5}},
      MultiplicativeNoise{ScaledRademacher{1.0}, UniformNoise{1.0}}};
  for (const auto &m : models) {
    const StreamKey key{31, 1000, 5};
    const auto serial = estimate_delta_n_serial(m, 37, 3000, key);
    for (int w : {1, 2, 3, 8}) {
      const auto par = estimate_delta_n(m, 37, 3000, key, 0.01, w);
      CHECK(par.ks == serial.ks);
    }
  }
}

TEST_CASE("replicated sums are sorted and reproducible") {
  const auto a = replicate_normalized_sums(ScaledRademacher{2.0}, 9, 500, {3, 0, 0}, 1);
  const auto b = replicate_normalized_sums(ScaledRademacher{2.0}, 9, 500, {3, 0, 0}, 4);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end()));
  // S_9 / 6 with steps +-2 lives on the odd multiples of 1/3
  for (double x : a)
    CHECK(std::abs(std::fmod(std::abs(x * 3.0), 2.0) - 1.0) <= 1e-12);
}

TEST_CASE("fit_rate examples") {
  std::vector<GridPoint> g;
  for (double n : {10.0, 100.0, 1000.0, 10000.0})
    g.push_back({n, 0.1 / std::sqrt(n)});
  const auto f = fit_rate(g, RateForm::power);
  CHECK(f.b == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f.C == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<GridPoint> h;
  for (double n : {3.0, 7.0, 20.0, 55.0, 400.0})
    h.push_back({n, 5.0 / n});
  const auto fh = fit_rate(h, RateForm::power);
  CHECK(fh.b == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fh.C == doctest::Approx(5.0).epsilon(1e-12));

  std::vector<GridPoint> pl;
  for (double n : {16.0, 64.0, 256.0, 1024.0})
    pl.push_back({n, 0.3 * std::log(n) / std::sqrt(n)});
  const auto fl = fit_rate(pl, RateForm::power_log);
  CHECK(fl.b == -0.5);
  CHECK(fl.C == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fl.r2 == doctest::Approx(1.0).epsilon(1e-12));

  g[2].delta = 0.0;
  CHECK_THROWS_AS(fit_rate(g, RateForm::power), DomainError);
  CHECK_THROWS_AS(fit_rate(std::span(h).first(3), RateForm::power), DomainError);
  std::vector<GridPoint> unsorted{{10, 1}, {5, 1}, {20, 1}, {30, 1}};
  CHECK_THROWS_AS(fit_rate(unsorted, RateForm::power), DomainError);
  CHECK(parse_rate_form(to_string(RateForm::power_log)) == RateForm::power_log);
}

TEST_CASE("fit_rate recovers random power laws") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    Draws s(8, t);
    const double C = 0.01 + 10.0 * s.next_uniform();
    const double b = -2.0 + 2.0 * s.next_uniform();
    std::vector<GridPoint> g;
    for (auto n : geometric_grid(2, 12))
      g.push_back({static_cast<double>(n), C * std::pow(static_cast<double>(n), b)});
    const auto f = fit_rate(g, RateForm::power);
    CHECK(f.C == doctest::Approx(C).epsilon(1e-12));
    CHECK(f.b == doctest::Approx(b).epsilon(1e-12));
    CHECK(f.r2 >= 0.0);
    CHECK(f.r2 <= 1.0);
  }
}

TEST_CASE("bound ratio") {
  CHECK(bound_ratio(0.2, 100, 2.0, 5.0) == doctest::Approx(0.2 * 5.0 / (2.0 * std::log(100.0))).epsilon(1e-15));
  CHECK(bound_ratio(0.2, 100, 2.0, 5.0) == doctest::Approx(0.108573).epsilon(1e-5));
  CHECK(bound_ratio(0.0, 100, 2.0, 5.0) == 0.0);
  CHECK_THROWS_AS(bound_ratio(0.2, 1, 2.0, 5.0), DomainError);
  DeltaEstimate est;
  est.n = 100;
  est.ks = 0.2;
  CHECK(bound_ratio(est, 2.0, 5.0) == bound_ratio(0.2, 100, 2.0, 5.0));
}

TEST_CASE("variance partition") {
  const std::size_t n = 10;
  const std::vector<double> equal(n, 0.3);
  const auto nu = variance_partition(equal, 3.0);
  for (std::size_t j = 0; j <= n; ++j)
    CHECK(nu[j] == j);

  std::vector<double> front(n, 0.0);
  front[0] = 4.0;
  const auto nf = variance_partition(front, 4.0);
  CHECK(nf[0] == 0);
  for (std::size_t j = 1; j < n; ++j)
    CHECK(nf[j] == 1);
  CHECK(nf[n] == n);

  const MdsModel ps = PredictableScaleRademacher{1.0, 1.5, 0.5};
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Path p = sample_path(ps, 24, {6, r, 0});
    const auto got = variance_partition(p.cond_vars, p.v2);
    CHECK(got == partition_oracle(p.cond_vars, p.v2));
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("geometric grid") {
  CHECK(geometric_grid(4, 6) == std::vector<std::size_t>{16, 32, 64});
  CHECK_THROWS_AS(geometric_grid(5, 4), DomainError);
}
