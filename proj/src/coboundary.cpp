#include "mdslab/coboundary.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "mdslab/errors.hpp"
#include "mdslab/format.hpp"
#include "mdslab/parallel.hpp"

namespace mdslab {

double FiniteCoeffs::at(std::int64_t j) const noexcept {
  if (j < lo || j > hi())
    return 0.0;
  return values[static_cast<std::size_t>(j - lo)];
}

void validate(const CoeffSeq &coeffs) {
  if (const auto *f = std::get_if<FiniteCoeffs>(&coeffs)) {
    if (f->values.empty())
      throw DomainError("coefficients: empty finite support");
    for (double v : f->values)
      if (!std::isfinite(v))
        throw DomainError("coefficients: non-finite value");
  } else if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs)) {
    if (!(std::abs(g->rho) < 1.0))
      throw DomainError("coefficients: geometric family needs |rho| < 1");
  } else if (const auto *p = std::get_if<PolynomialCoeffs>(&coeffs)) {
    if (!(p->s > 1.0))
      throw DomainError("coefficients: polynomial family needs s > 1");
  }
}

double coefficient_sum(const CoeffSeq &coeffs) {
  validate(coeffs);
  if (const auto *f = std::get_if<FiniteCoeffs>(&coeffs)) {
    double a = 0.0;
    for (double v : f->values)
      a += v;
    return a;
  }
  if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs))
    return 1.0 / (1.0 - g->rho);
  return std::riemann_zeta(std::get<PolynomialCoeffs>(coeffs).s);
}

double square_sum(const CoeffSeq &coeffs) {
  validate(coeffs);
  if (const auto *f = std::get_if<FiniteCoeffs>(&coeffs)) {
    double a = 0.0;
    for (double v : f->values)
      a += v * v;
    return a;
  }
  if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs))
    return 1.0 / (1.0 - g->rho * g->rho);
  return std::riemann_zeta(2.0 * std::get<PolynomialCoeffs>(coeffs).s);
}

Truncation truncate(const CoeffSeq &coeffs, double tol) {
  validate(coeffs);
  if (const auto *f = std::get_if<FiniteCoeffs>(&coeffs))
    return {*f, 0.0};
  if (!(tol > 0.0))
    throw DomainError("truncate: tolerance must be positive");
  Truncation t;
  if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs)) {
    // sum_{j > J} rho^{2j} = rho^{2(J+1)} / (1 - rho^2)
    const double r2 = g->rho * g->rho;
    std::int64_t J = 0;
    double tail = r2 / (1.0 - r2);
    double term = 1.0;
    t.coeffs.lo = 0;
    t.coeffs.values.push_back(1.0);
    while (tail > tol) {
      ++J;
      term *= g->rho;
      t.coeffs.values.push_back(term);
      tail = std::pow(r2, static_cast<double>(J + 1)) / (1.0 - r2);
    }
    t.tail_l2 = tail;
    return t;
  }
  const double s = std::get<PolynomialCoeffs>(coeffs).s;
  // sum_{j > J} j^{-2s} <= J^{1-2s} / (2s - 1)
  t.coeffs.lo = 1;
  std::int64_t J = 1;
  t.coeffs.values.push_back(1.0);
  const auto bound = [s](std::int64_t j) {
    return std::pow(static_cast<double>(j), 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  };
  while (bound(J) > tol) {
    ++J;
    t.coeffs.values.push_back(std::pow(static_cast<double>(J), -s));
    if (J > (std::int64_t{1} << 26))
      throw UnsupportedError("truncate: polynomial tail decays too slowly");
  }
  t.tail_l2 = bound(J);
  return t;
}

namespace {

// Hurwitz tail sum_{j >= k} j^{-s} by Euler-Maclaurin, accurate for k >= 100.
double hurwitz_tail(double s, double k) {
  return std::pow(k, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(k, -s) +
         s * std::pow(k, -s - 1.0) / 12.0 -
         s * (s + 1.0) * (s + 2.0) * std::pow(k, -s - 3.0) / 720.0;
}

} // namespace

Condition3Report condition3_check(const CoeffSeq &coeffs, double p, std::size_t K) {
  validate(coeffs);
  if (!(p >= 3.0) || std::isinf(p))
    throw DomainError("condition3_check: p must be a finite real >= 3");
  if (K == 0)
    throw DomainError("condition3_check: K must be positive");
  Condition3Report rep;
  rep.K = K;
  const double A = coefficient_sum(coeffs);
  rep.printed_form_diverges = A != 0.0;

  if (const auto *f = std::get_if<FiniteCoeffs>(&coeffs)) {
    const std::int64_t reach = std::max<std::int64_t>({f->hi(), -f->lo, 0});
    double total = 0.0, partial = 0.0;
    for (std::int64_t k = 1; k <= reach; ++k) {
      double upper = 0.0, lower = 0.0;
      for (std::int64_t j = std::max(k, f->lo); j <= f->hi(); ++j)
        upper += f->at(j);
      for (std::int64_t j = f->lo; j <= std::min(-k, f->hi()); ++j)
        lower += f->at(j);
      const double term = std::pow(std::abs(upper), p) + std::pow(std::abs(lower), p);
      total += term;
      if (static_cast<std::size_t>(k) <= K)
        partial += term;
    }
    rep.partial_sum = partial;
    rep.series_value = total;
    rep.series_exact = true;
    rep.tail_estimate = total - partial;
    rep.note = "finite support: only finitely many tail sums are nonzero";
  } else if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs)) {
    // sum_{j >= k} rho^j = rho^k / (1 - rho); negative-index tails vanish.
    const double scale = std::pow(std::abs(1.0 - g->rho), -p);
    const double rp = std::pow(std::abs(g->rho), p);
    double partial = 0.0, rk = 1.0;
    for (std::size_t k = 1; k <= K; ++k) {
      rk *= rp;
      partial += rk * scale;
      if (rk * scale < 1e-300)
        break;
    }
    rep.partial_sum = partial;
    rep.series_value = rp * scale / (1.0 - rp);
    rep.series_exact = true;
    rep.tail_estimate = rep.series_value - partial;
    rep.note = "geometric tails rho^k/(1-rho)";
  } else {
    const double s = std::get<PolynomialCoeffs>(coeffs).s;
    // Tails from the far end backwards: T_K by Euler-Maclaurin, then
    // T_k = T_{k+1} + k^{-s}.
    const std::size_t start = std::max<std::size_t>(K, 1000);
    double tail = hurwitz_tail(s, static_cast<double>(start));
    std::vector<double> tails(start + 1);
    tails[start] = tail;
    for (std::size_t k = start; k-- > 1;) {
      tail += std::pow(static_cast<double>(k), -s);
      tails[k] = tail;
    }
    double partial = 0.0;
    for (std::size_t k = 1; k <= K; ++k)
      partial += std::pow(tails[k], p);
    rep.partial_sum = partial;
    const double decay = p * (s - 1.0);
    rep.verdict = decay > 1.0 ? Verdict::converges : Verdict::diverges;
    // T_k ~ k^{1-s}/(s-1), so sum_{k>K} T_k^p ~ K^{1-decay} / ((s-1)^p (decay-1)).
    rep.tail_estimate = decay > 1.0 ? std::pow(static_cast<double>(K), 1.0 - decay) /
                                          (std::pow(s - 1.0, p) * (decay - 1.0))
                                    : std::numeric_limits<double>::infinity();
    rep.series_value = partial + rep.tail_estimate;
    rep.note = "polynomial tails ~ k^{1-s}/(s-1); converges iff p(s-1) > 1";
  }
  if (rep.printed_form_diverges)
    rep.note += "; the sum_{j<=k} reading diverges since A != 0";
  return rep;
}

CoboundaryDecomposition coboundary_decompose(const FiniteCoeffs &coeffs) {
  validate(CoeffSeq{coeffs});
  CoboundaryDecomposition dec;
  dec.A = coefficient_sum(CoeffSeq{coeffs});
  // c_i = sum_{j >= -i} alpha_j for i < 0 and -sum_{j <= -i-1} alpha_j for
  // i >= 0; the first vanishes below -hi and the second above -lo - 1.
  const std::int64_t first = std::min<std::int64_t>(-coeffs.hi(), 0);
  const std::int64_t last = std::max<std::int64_t>(-coeffs.lo - 1, -1);
  for (std::int64_t i = first; i <= last; ++i) {
    double c = 0.0;
    if (i < 0) {
      for (std::int64_t j = std::max(-i, coeffs.lo); j <= coeffs.hi(); ++j)
        c += coeffs.at(j);
    } else {
      for (std::int64_t j = coeffs.lo; j <= std::min(-i - 1, coeffs.hi()); ++j)
        c -= coeffs.at(j);
    }
    if (c != 0.0)
      dec.g_coeffs[i] = c;
  }
  return dec;
}

namespace {

struct InnovationParts {
  double c = 0.0;
  const NoiseLaw *noise = nullptr;
  bool multiplicative = false;
};

InnovationParts innovation_parts(const MdsModel &m) {
  if (const auto *r = std::get_if<ScaledRademacher>(&m))
    return {r->c, nullptr, false};
  if (const auto *a = std::get_if<AdditiveNoise>(&m))
    return {std::get<ScaledRademacher>(a->base).c, &a->noise, false};
  const auto &mul = std::get<MultiplicativeNoise>(m);
  return {std::get<ScaledRademacher>(mul.base).c, &mul.noise, true};
}

// ||eps||_p upper bound (exact for the Rademacher part).
double innovation_norm_bound(const MdsModel &m, double p) {
  const InnovationParts parts = innovation_parts(m);
  if (!parts.noise)
    return parts.c;
  const double noise = std::isinf(p) ? ess_sup_abs(*parts.noise)
                                     : std::pow(abs_moment(*parts.noise, p), 1.0 / p);
  return parts.multiplicative ? parts.c * noise : parts.c + noise;
}

} // namespace

void validate_innovation(const MdsModel &innovation) {
  validate(innovation);
  if (!is_iid(innovation))
    throw UnsupportedError("linear process: innovations must be i.i.d. (stationary, V^2 = 1)");
}

CoboundaryDecomposition coboundary_decompose(const FiniteCoeffs &coeffs,
                                             const MdsModel &innovation, double p) {
  validate_innovation(innovation);
  if (!(p >= 1.0))
    throw DomainError("coboundary_decompose: p must be at least 1");
  CoboundaryDecomposition dec = coboundary_decompose(coeffs);
  dec.p = p;
  if (dec.g_coeffs.empty()) {
    dec.g_norm_p = 0.0;
    dec.g_norm_exact = true;
    return dec;
  }

  bool exact = false;
  try {
    const DiscreteDist step = iid_step_law(innovation);
    // Law of g = sum_i c_i eps_i by repeated convolution.
    std::map<double, double> law{{0.0, 1.0}};
    exact = true;
    for (const auto &[i, c] : dec.g_coeffs) {
      if (law.size() * step.size() > (std::size_t{1} << 20)) {
        exact = false;
        break;
      }
      std::map<double, double> next;
      for (const auto &[v, pv] : law)
        for (const auto &a : step.atoms())
          next[v + c * a.value] += pv * a.prob;
      law = std::move(next);
    }
    if (exact) {
      double acc = 0.0;
      for (const auto &[v, pv] : law)
        acc = std::isinf(p) ? std::max(acc, std::abs(v)) : acc + pv * std::pow(std::abs(v), p);
      dec.g_norm_p = std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
    }
  } catch (const UnsupportedError &) {
    exact = false;
  }
  if (!exact) {
    double sum_abs = 0.0;
    for (const auto &[i, c] : dec.g_coeffs)
      sum_abs += std::abs(c);
    dec.g_norm_p = sum_abs * innovation_norm_bound(innovation, p);
  }
  dec.g_norm_exact = exact;
  return dec;
}

std::map<std::int64_t, double> telescoping_residual(const FiniteCoeffs &coeffs,
                                                    const CoboundaryDecomposition &dec) {
  const auto g = [&](std::int64_t i) {
    const auto it = dec.g_coeffs.find(i);
    return it == dec.g_coeffs.end() ? 0.0 : it->second;
  };
  std::int64_t lo = -coeffs.hi(), hi = -coeffs.lo;
  lo = std::min(lo, std::int64_t{0});
  hi = std::max(hi, std::int64_t{0});
  if (!dec.g_coeffs.empty()) {
    lo = std::min(lo, dec.g_coeffs.begin()->first);
    hi = std::max(hi, dec.g_coeffs.rbegin()->first + 1);
  }
  std::map<std::int64_t, double> residual;
  for (std::int64_t i = lo; i <= hi; ++i) {
    const double f = coeffs.at(-i);
    const double m = i == 0 ? dec.A : 0.0;
    residual[i] = f - m - g(i) + g(i - 1);
  }
  return residual;
}

namespace {

// Innovation indices touched by X_1..X_n, by eps_1..eps_n and by g o T^k
// for k = 1..n+1.
std::pair<std::int64_t, std::int64_t> innovation_window(const FiniteCoeffs &coeffs,
                                                        std::int64_t n) {
  return {std::min<std::int64_t>(1 - coeffs.hi(), 1), std::max<std::int64_t>(n - coeffs.lo, n)};
}

StreamKey innovation_key(const StreamKey &key, std::int64_t first_index) {
  return {key.master_seed, key.substream_id,
          key.step + kInnovationOrigin + static_cast<std::uint64_t>(first_index)};
}

} // namespace

LinearProcessPath simulate_linear_process(const FiniteCoeffs &coeffs,
                                          const MdsModel &innovation, std::size_t n,
                                          const StreamKey &key) {
  validate(CoeffSeq{coeffs});
  validate_innovation(innovation);
  if (n == 0)
    throw DomainError("simulate_linear_process: n must be positive");
  LinearProcessPath path;
  const auto nn = static_cast<std::int64_t>(n);
  const auto [first_index, last_index] = innovation_window(coeffs, nn);
  path.first_index = first_index;
  path.innovations.resize(static_cast<std::size_t>(last_index - path.first_index + 1));
  sample_values(innovation, innovation_key(key, path.first_index), path.innovations);

  double s = 0.0;
  for (std::int64_t k = 1; k <= nn; ++k) {
    double x = 0.0;
    for (std::int64_t j = k - coeffs.hi(); j <= k - coeffs.lo; ++j)
      x += coeffs.at(k - j) * path.eps(j);
    s += x;
    path.values.push_back(x);
    path.partial_sums.push_back(s);
  }
  return path;
}

namespace {

struct LinearKernel {
  std::int64_t first_index = 0;
  std::vector<double> weights; // w_j = sum_{k=1}^n alpha_{k-j}
  std::size_t n = 0;
  double A = 0.0;
  double v_n_m = 0.0;
};

LinearKernel make_kernel(const FiniteCoeffs &coeffs, const MdsModel &innovation,
                         std::size_t n, std::size_t reps, double delta) {
  validate(CoeffSeq{coeffs});
  validate_innovation(innovation);
  if (n == 0)
    throw DomainError("estimate_linear_process: n must be positive");
  if (reps < 100)
    throw DomainError("estimate_linear_process: reps must be at least 100");
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("estimate_linear_process: delta must lie in (0,1)");
  LinearKernel kern;
  kern.n = n;
  kern.A = coefficient_sum(CoeffSeq{coeffs});
  if (kern.A == 0.0)
    throw DegenerateModelError("estimate_linear_process: A = 0, martingale part vanishes");
  kern.v_n_m = std::abs(kern.A) * std::sqrt(theoretical_v2(innovation, n));
  const auto nn = static_cast<std::int64_t>(n);
  const auto [first_index, last_index] = innovation_window(coeffs, nn);
  kern.first_index = first_index;
  for (std::int64_t j = first_index; j <= last_index; ++j) {
    double w = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(1, j + coeffs.lo);
         k <= std::min(nn, j + coeffs.hi()); ++k)
      w += coeffs.at(k - j);
    kern.weights.push_back(w);
  }
  return kern;
}

template <class Loop>
LinearProcessEstimate run_kernel(const LinearKernel &kern, const MdsModel &innovation,
                                 std::size_t reps, const StreamKey &key, double delta,
                                 Loop &&loop) {
  std::vector<double> f(reps), m(reps);
  const std::size_t eps_offset = static_cast<std::size_t>(1 - kern.first_index);
  loop(reps, [&](std::size_t r) {
    const StreamKey rk{key.master_seed, key.substream_id + r, key.step};
    std::vector<double> eps(kern.weights.size());
    sample_values(innovation, innovation_key(rk, kern.first_index), eps);
    double sf = 0.0, se = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i)
      sf += kern.weights[i] * eps[i];
    for (std::size_t i = 0; i < kern.n; ++i)
      se += eps[eps_offset + i];
    f[r] = sf / kern.v_n_m;
    m[r] = kern.A * se / kern.v_n_m;
  });
  std::sort(f.begin(), f.end());
  std::sort(m.begin(), m.end());
  LinearProcessEstimate est;
  est.v_n_m = kern.v_n_m;
  for (auto [slot, sample] : {std::pair{&est.f, &f}, std::pair{&est.m, &m}}) {
    slot->n = kern.n;
    slot->reps = reps;
    slot->ks = ks_distance_to_normal(*sample);
    slot->dkw_radius = dkw_radius(reps, delta);
    slot->confidence = delta;
    slot->key = key;
  }
  return est;
}

} // namespace

LinearProcessEstimate estimate_linear_process(const FiniteCoeffs &coeffs,
                                              const MdsModel &innovation, std::size_t n,
                                              std::size_t reps, const StreamKey &key,
                                              double delta, int workers) {
  const LinearKernel kern = make_kernel(coeffs, innovation, n, reps, delta);
  return run_kernel(kern, innovation, reps, key, delta,
                    [workers](std::size_t count, auto &&body) {
                      parallel_for(count, body, workers);
                    });
}

LinearProcessEstimate estimate_linear_process_serial(const FiniteCoeffs &coeffs,
                                                     const MdsModel &innovation,
                                                     std::size_t n, std::size_t reps,
                                                     const StreamKey &key, double delta) {
  const LinearKernel kern = make_kernel(coeffs, innovation, n, reps, delta);
  return run_kernel(kern, innovation, reps, key, delta,
                    [](std::size_t count, auto &&body) { serial_for(count, body); });
}

double correction_term(double g_norm, double p, std::size_t n) {
  if (!(p >= 1.0))
    throw DomainError("correction_term: p must be at least 1");
  if (n == 0)
    throw DomainError("correction_term: n must be positive");
  const double nn = static_cast<double>(n);
  if (std::isinf(p))
    return 2.0 * g_norm / std::sqrt(nn);
  return 2.0 * std::pow(g_norm, p / (p + 1.0)) / std::pow(nn, p / (2.0 * (p + 1.0)));
}

Theorem3Report theorem3_rate_check(std::span<const DeltaEstimate> f_grid,
                                   std::span<const DeltaEstimate> m_grid, double g_norm,
                                   double p) {
  if (!(p >= 1.0))
    throw DomainError("theorem3_rate_check: p must be at least 1");
  if (f_grid.size() != m_grid.size())
    throw DomainError("theorem3_rate_check: grids differ in length");
  Theorem3Report rep;
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f_grid.size(); ++i) {
    if (f_grid[i].n != m_grid[i].n)
      throw DomainError("theorem3_rate_check: grids are not aligned on n");
    Theorem3Point pt;
    pt.n = f_grid[i].n;
    pt.delta_f = f_grid[i].ks;
    pt.delta_m = m_grid[i].ks;
    pt.correction = correction_term(g_norm, p, pt.n);
    pt.ratio = pt.correction > 0.0 ? (pt.delta_f - 2.0 * pt.delta_m) / pt.correction
                                   : std::numeric_limits<double>::quiet_NaN();
    if (pt.correction > 0.0) {
      rep.max_ratio = std::max(rep.max_ratio, pt.ratio);
      rep.min_ratio = std::min(rep.min_ratio, pt.ratio);
      rep.bounded = rep.bounded && std::isfinite(pt.ratio);
    }
    rep.points.push_back(pt);
  }
  return rep;
}

namespace {

double parse_real(const std::string &s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw DomainError("coefficients: expected a number, got '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
    ++used;
  if (used != s.size())
    throw DomainError("coefficients: expected a number, got '" + s + "'");
  return v;
}

std::string inner_arg(const std::string &s, const std::string &name) {
  if (s.size() < name.size() + 2 || s.back() != ')')
    throw DomainError("coefficients: malformed '" + s + "'");
  return s.substr(name.size() + 1, s.size() - name.size() - 2);
}

} // namespace

CoeffSeq parse_coeffs(const std::string &spec) {
  std::string s;
  for (char ch : spec)
    if (!std::isspace(static_cast<unsigned char>(ch)))
      s += ch;
  CoeffSeq out;
  if (s.rfind("geometric(", 0) == 0) {
    out = GeometricCoeffs{parse_real(inner_arg(s, "geometric"))};
  } else if (s.rfind("polynomial(", 0) == 0) {
    out = PolynomialCoeffs{parse_real(inner_arg(s, "polynomial"))};
  } else {
    // [@lo:]v0,v1,...
    FiniteCoeffs f;
    std::string list = s;
    if (!s.empty() && s.front() == '@') {
      const auto colon = s.find(':');
      if (colon == std::string::npos)
        throw DomainError("coefficients: '@lo:' prefix needs a colon");
      const double lo = parse_real(s.substr(1, colon - 1));
      if (lo != std::floor(lo) || std::abs(lo) > 1e15)
        throw DomainError("coefficients: '@lo:' offset must be an integer");
      f.lo = static_cast<std::int64_t>(lo);
      list = s.substr(colon + 1);
    }
    std::size_t pos = 0;
    while (pos <= list.size()) {
      const auto comma = list.find(',', pos);
      f.values.push_back(parse_real(
          list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
      if (comma == std::string::npos)
        break;
      pos = comma + 1;
    }
    out = std::move(f);
  }
  validate(out);
  return out;
}

std::string to_string(const CoeffSeq &coeffs) {
  if (const auto *g = std::get_if<GeometricCoeffs>(&coeffs))
    return "geometric(" + format_real(g->rho) + ")";
  if (const auto *p = std::get_if<PolynomialCoeffs>(&coeffs))
    return "polynomial(" + format_real(p->s) + ")";
  const auto &f = std::get<FiniteCoeffs>(coeffs);
  std::string s = "@" + std::to_string(f.lo) + ":";
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s += (i ? "," : "") + format_real(f.values[i]);
  return s;
}

} // namespace mdslab
