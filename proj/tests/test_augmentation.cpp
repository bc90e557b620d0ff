#include "doctest.h"

#include <cmath>
#include <vector>

#include "mdslab/augmentation.hpp"
#include "mdslab/errors.hpp"

using namespace mdslab;

namespace {

const PredictableScaleRademacher kSignScale{1.0, 1.5, 0.5};

// n steps with sigma_k^2 = s each, values +-sqrt(s)
Path constant_path(std::size_t n, double s, double v2) {
  Path p;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = (k % 2 ? -1.0 : 1.0) * std::sqrt(s);
    sum += x;
    p.values.push_back(x);
    p.cond_vars.push_back(s);
    p.partial_sums.push_back(sum);
  }
  p.v2 = v2;
  p.V2 = s * static_cast<double>(n) / v2;
  return p;
}

double total(const std::vector<double> &v) {
  long double s = 0;
  for (double x : v)
    s += x;
  return static_cast<double>(s);
}

} // namespace

TEST_CASE("compute_d examples") {
  CHECK(compute_d(ScaledRademacher{2.0}, 10, NormMode::L1) == 0.0);
  CHECK(compute_d(ScaledRademacher{2.0}, 10, NormMode::Linf) == 0.0);
  CHECK(compute_d(DiscreteDist::point_mass(9.0), 10.0, NormMode::L1) == doctest::Approx(1.0));
  CHECK(compute_d(DiscreteDist::point_mass(9.0), 10.0, NormMode::Linf) == doctest::Approx(1.0));

  // enumeration of the 2^3 sign paths: sum sigma^2 = 1 + s(X_1)^2 + s(X_2)^2
  double d1 = 0.0, dinf = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    double sum = 1.0;
    for (int k = 0; k < 2; ++k) {
      const double s = (mask >> k) & 1 ? 1.5 : 0.5;
      sum += s * s;
    }
    d1 += std::abs(sum - 3.5) / 8.0;
    dinf = std::max(dinf, std::abs(sum - 3.5));
  }
  CHECK(compute_d(kSignScale, 3, NormMode::L1) == doctest::Approx(d1).epsilon(1e-15));
  CHECK(compute_d(kSignScale, 3, NormMode::Linf) == doctest::Approx(dinf).epsilon(1e-15));
  CHECK(d1 == 1.0);
  CHECK(dinf == 2.0);
  CHECK(parse_norm_mode(to_string(NormMode::L1)) == NormMode::L1);
  CHECK_THROWS_AS(parse_norm_mode("l2"), DomainError);
}

TEST_CASE("plan arithmetic") {
  const auto plan = make_plan(10, 10.0, 1.0, 1.0, NormMode::Linf);
  CHECK(plan.n_hat == 12);
  CHECK(plan.v_hat2 == 11.0);
  CHECK(plan.tail_length() == 3);
  const auto auto_plan = make_plan(kSignScale, 5, NormMode::Linf);
  CHECK(auto_plan.u == 1.5);
  CHECK(auto_plan.d == compute_d(kSignScale, 5, NormMode::Linf));
  CHECK(auto_plan.n_hat == 5 + static_cast<std::size_t>(std::floor(2 * auto_plan.d / 2.25)));
  CHECK_THROWS_AS(make_plan(10, 10.0, 0.0, 1.0, NormMode::Linf), DomainError);
  CHECK_THROWS_AS(make_plan(10, 10.0, 1.0, -1.0, NormMode::Linf), DomainError);
}

TEST_CASE("augmentation examples") {
  SUBCASE("unit V2, d = 0") {
    const Path p = sample_path(ScaledRademacher{1.0}, 6, {1, 0, 0});
    const auto plan = make_plan(ScaledRademacher{1.0}, 6, NormMode::Linf);
    const auto aug = augment_path(p, plan, {1, 0, 1000});
    CHECK(aug.k == 0);
    CHECK(aug.residual == 0.0);
    CHECK(aug.path.size() == 7);
    CHECK(aug.path.values.back() == 0.0);
    CHECK(aug.path.V2 == 1.0);
  }
  SUBCASE("deterministic V2 = 0.9") {
    const Path p = constant_path(10, 0.9, 10.0);
    const auto plan = make_plan(10, 10.0, 1.0, 1.0, NormMode::Linf);
    const auto aug = augment_path(p, plan, {2, 0, 0});
    CHECK(aug.k == 2);
    CHECK(aug.path.size() == 13);
    CHECK(std::vector<double>(aug.path.cond_vars.begin() + 10, aug.path.cond_vars.end()) ==
          std::vector<double>{1.0, 1.0, 0.0});
    CHECK(aug.path.v2 == 11.0);
    CHECK(std::abs(aug.path.V2 - 1.0) <= 1e-12);
  }
  SUBCASE("V2 = 0.95 on this path") {
    const Path p = constant_path(10, 0.95, 10.0);
    const auto plan = make_plan(10, 10.0, 1.0, 1.0, NormMode::Linf);
    const auto aug = augment_path(p, plan, {3, 0, 0});
    CHECK(aug.residual == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(aug.k == 1);
    CHECK(aug.tail_amplitudes[0] == 1.0);
    CHECK(aug.tail_amplitudes[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(aug.tail_amplitudes[2] == 0.0);
    CHECK(std::abs(aug.path.values[11]) == aug.tail_amplitudes[1]);
  }
}

TEST_CASE("augmentation failures") {
  // L1 mode on pscale n = 3: d_1 = 1, u = 1.5, tail length 1. The path with
  // sum sigma^2 = 5.5 leaves a negative residual; the one with 1.5 leaves a
  // residual of 3 > 2 d_1 that does not fit in the tail.
  const auto plan = make_plan(kSignScale, 3, NormMode::L1);
  CHECK(plan.tail_length() == 1);
  int negative = 0, inconsistent = 0, fine = 0;
  for (std::uint64_t r = 0; r < 64; ++r) {
    const Path p = sample_path(kSignScale, 3, {4, r, 0});
    const double sum = total(p.cond_vars);
    if (sum == 5.5) {
      try {
        augment_path(p, plan, {4, r, 100});
        FAIL("expected a negative residual");
      } catch (const NegativeResidualError &e) {
        CHECK(e.residual() == doctest::Approx(3.5 + 1.0 - sum));
        ++negative;
      }
    } else if (sum == 1.5) {
      CHECK_THROWS_AS(augment_path(p, plan, {4, r, 100}), PlanInconsistencyError);
      ++inconsistent;
    } else {
      const auto aug = augment_path(p, plan, {4, r, 100});
      CHECK(aug.k == 0);
      CHECK(aug.residual == 1.0);
      ++fine;
    }
  }
  CHECK(negative > 0);
  CHECK(inconsistent > 0);
  CHECK(fine > 0);

  // Linf mode never hits either failure
  const auto linf = make_plan(kSignScale, 3, NormMode::Linf);
  for (std::uint64_t r = 0; r < 64; ++r)
    CHECK_NOTHROW(augment_path(sample_path(kSignScale, 3, {4, r, 0}), linf, {4, r, 100}));

  const Path p = constant_path(10, 0.5, 10.0);
  // d too small for this path: residual 6 needs 7 increments, tail has 3
  CHECK_THROWS_AS(augment_path(p, make_plan(10, 10.0, 1.0, 1.0, NormMode::Linf), {}),
                  PlanInconsistencyError);
  CHECK_THROWS_AS(augment_path(p, make_plan(11, 10.0, 1.0, 6.0, NormMode::Linf), {}),
                  PlanInconsistencyError);
}

TEST_CASE("augmented paths are normalized, bounded and class members") {
  const std::vector<MdsModel> models{
      kSignScale, PredictableScaleRademacher{2.0, 0.5, 3.0},
      AdditiveNoise{kSignScale, DiscreteDist::rademacher(0.5)},
      MultiplicativeNoise{kSignScale, DiscreteDist({{-2.0, 0.25}, {0.0, 0.25}, {1.0, 0.5}})},
      ScaledRademacher{1.0}};
  for (const auto &m : models) {
    for (std::size_t n : {3u, 17u, 64u}) {
      const auto plan = make_plan(m, n, NormMode::Linf);
      CHECK(plan.n_hat == n + static_cast<std::size_t>(std::floor(2 * plan.d / (plan.u * plan.u))));
      for (std::uint64_t r = 0; r < 50; ++r) {
        const Path p = sample_path(m, n, {9, r, 0});
        const auto aug = augment_path(p, plan, {9, r, 1u << 20});
        CHECK(aug.path.size() == plan.n_hat + 1);
        CHECK(std::abs(total(aug.path.cond_vars) / plan.v_hat2 - 1.0) <= 1e-12);
        CHECK(std::abs(aug.path.V2 - 1.0) <= 1e-12);
        for (std::size_t j = n; j < aug.path.size(); ++j) {
          CHECK(std::abs(aug.path.values[j]) <= plan.u);
          CHECK(aug.path.values[j] * aug.path.values[j] ==
                doctest::Approx(aug.path.cond_vars[j]).epsilon(1e-12));
        }
        for (std::size_t j = 0; j < n; ++j)
          CHECK(aug.path.values[j] == p.values[j]);
        if (r < 3) {
          const auto rep = verify_augmented_membership(m, plan, aug);
          CHECK(rep.member);
        }
      }
    }
  }
}

TEST_CASE("augmented tails have the right second moment") {
  // E sum X_hat^2 = v_hat^2 over the joint law of path and tail
  const std::size_t n = 12, reps = 40000;
  const auto plan = make_plan(kSignScale, n, NormMode::Linf);
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    const auto aug = augment_path(sample_path(kSignScale, n, {10, r, 0}), plan, {10, r, 1000});
    double q = 0.0;
    for (double x : aug.path.values)
      q += x * x;
    sum += q;
    sum2 += q * q;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - plan.v_hat2) <= 5.0 * se);
}

TEST_CASE("theorem 2 terms") {
  const auto t = theorem2_bound_terms(1.0, 100, 10.0, 0.01, 0.01, 0.05);
  CHECK(t.linf_term == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(t.l1_term == doctest::Approx(0.21544346900318838).epsilon(1e-14));
  CHECK(t.min_term == t.linf_term);
  CHECK(t.rate_term == doctest::Approx(std::log(100.0) / 10.0));
  const auto unit = theorem2_bound_terms(ScaledRademacher{1.0}, 64, 0.1);
  CHECK(unit.linf_term == 0.0);
  CHECK(unit.l1_term == 0.0);
  CHECK(unit.min_term == 0.0);
  CHECK(unit.rate_term == doctest::Approx(std::log(64.0) / 8.0));
  const auto ps = theorem2_bound_terms(kSignScale, 3, 0.0);
  CHECK(ps.linf_term == doctest::Approx(std::sqrt(2.0 / 3.5)));
  CHECK(ps.l1_term == doctest::Approx(std::cbrt(1.0 / 3.5)));
}
