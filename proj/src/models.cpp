#include "mdslab/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "mdslab/errors.hpp"
#include "mdslab/format.hpp"
#include "mdslab/numerics.hpp"

namespace mdslab {

double PredictableScaleRademacher::s_min() const noexcept {
  return std::min({first, after_pos, after_neg});
}
double PredictableScaleRademacher::s_max() const noexcept {
  return std::max({first, after_pos, after_neg});
}

namespace {

// Base sequences are normalized to the predictable-scale form; a scaled
// Rademacher sequence is the constant-scale special case.
struct ScaleRule {
  double first;
  double after_pos;
  double after_neg;

  double at(std::size_t k, double prev) const noexcept {
    if (k == 1)
      return first;
    return prev > 0.0 ? after_pos : after_neg;
  }
  bool constant() const noexcept { return first == after_pos && first == after_neg; }
};

ScaleRule rule_of(const BaseModel &base) {
  if (const auto *r = std::get_if<ScaledRademacher>(&base))
    return {r->c, r->c, r->c};
  const auto &p = std::get<PredictableScaleRademacher>(base);
  return {p.first, p.after_pos, p.after_neg};
}

enum class Compose { none, add, mul };

struct Parts {
  BaseModel base;
  Compose compose = Compose::none;
  const NoiseLaw *noise = nullptr;
};

Parts parts_of(const MdsModel &model) {
  return std::visit(
      [](const auto &m) -> Parts {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditiveNoise>)
          return {m.base, Compose::add, &m.noise};
        else if constexpr (std::is_same_v<T, MultiplicativeNoise>)
          return {m.base, Compose::mul, &m.noise};
        else
          return {BaseModel{m}, Compose::none, nullptr};
      },
      model);
}

double noise_var(const Parts &p) {
  return p.noise ? abs_moment(*p.noise, 2.0) : 0.0;
}

double noise_mean(const NoiseLaw &law) {
  if (const auto *d = std::get_if<DiscreteDist>(&law))
    return d->mean();
  return 0.0;
}

class Sampler {
public:
  explicit Sampler(const MdsModel &model)
      : parts_(parts_of(model)), rule_(rule_of(parts_.base)),
        noise_var_(noise_var(parts_)) {
    validate(model);
  }

  // sink(value, cond_var, base_value) once per step, in order.
  template <class Sink>
  void run(std::size_t n, const StreamKey &key, Sink &&sink) const {
    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto blk =
          random_block({key.master_seed, key.substream_id, key.step + (k - 1)});
      const double s = rule_.at(k, prev);
      const double x = (blk[0] & 1u) ? s : -s;
      prev = x;
      switch (parts_.compose) {
      case Compose::none:
        sink(x, s * s, x);
        break;
      case Compose::add: {
        const double eps = draw(*parts_.noise, open_uniform(blk[2], blk[3]));
        sink(x + eps, s * s + noise_var_, x);
        break;
      }
      case Compose::mul: {
        const double eps = draw(*parts_.noise, open_uniform(blk[2], blk[3]));
        sink(x * eps, s * s * noise_var_, x);
        break;
      }
      }
    }
  }

private:
  Parts parts_;
  ScaleRule rule_;
  double noise_var_;
};

} // namespace

void validate(const MdsModel &model) {
  const Parts p = parts_of(model);
  const ScaleRule r = rule_of(p.base);
  for (double s : {r.first, r.after_pos, r.after_neg})
    if (!(s > 0.0) || !std::isfinite(s))
      throw DomainError("model: scales must be positive and finite");
  if (!p.noise)
    return;
  if (const auto *u = std::get_if<UniformNoise>(p.noise); u && !(u->half_width >= 0.0))
    throw DomainError("model: uniform half-width must be nonnegative");
  if (const auto *g = std::get_if<NormalNoise>(p.noise); g && !(g->sigma >= 0.0))
    throw DomainError("model: normal sigma must be nonnegative");
  if (std::abs(noise_mean(*p.noise)) > 1e-12)
    throw DomainError("model: noise must have zero mean");
  if (!(abs_moment(*p.noise, 2.0) > 0.0))
    throw DegenerateModelError("model: noise has zero second moment");
}

double bound(const BaseModel &base) noexcept {
  const ScaleRule r = rule_of(base);
  return std::max({r.first, r.after_pos, r.after_neg});
}

GammaSequence gamma_sequence(const MdsModel &model, std::size_t n) {
  validate(model);
  const Parts p = parts_of(model);
  const double m = bound(p.base);
  double g = m;
  if (p.compose != Compose::none) {
    const double ratio = abs_moment(*p.noise, 3.0) / abs_moment(*p.noise, 2.0);
    g = (p.compose == Compose::add) ? 4.0 * std::max(m, ratio) : m * ratio;
  }
  return {std::vector<double>(n, g), n ? g : 0.0};
}

double theoretical_v2(const MdsModel &model, std::size_t n) {
  validate(model);
  if (n == 0)
    return 0.0;
  const Parts p = parts_of(model);
  const ScaleRule r = rule_of(p.base);
  const double tail = 0.5 * (r.after_pos * r.after_pos + r.after_neg * r.after_neg);
  const double base = r.constant()
                          ? static_cast<double>(n) * r.first * r.first
                          : r.first * r.first + static_cast<double>(n - 1) * tail;
  switch (p.compose) {
  case Compose::add:
    return base + static_cast<double>(n) * noise_var(p);
  case Compose::mul:
    return base * noise_var(p);
  case Compose::none:
    break;
  }
  return base;
}

DiscreteDist sum_cond_var_law(const MdsModel &model, std::size_t n) {
  validate(model);
  if (n == 0)
    throw DomainError("sum_cond_var_law: n must be positive");
  const Parts p = parts_of(model);
  const ScaleRule r = rule_of(p.base);

  std::vector<Atom> atoms;
  if (r.constant()) {
    atoms.push_back({static_cast<double>(n) * r.first * r.first, 1.0});
  } else {
    // The signs driving the scales are fair coins independent of the past,
    // so the number of positive predecessors is Binomial(n-1, 1/2).
    const std::size_t trials = n - 1;
    std::vector<double> logw(trials + 1);
    for (std::size_t j = 0; j <= trials; ++j)
      logw[j] = std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) -
                std::lgamma(trials - j + 1.0);
    const double top = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (auto &w : logw) {
      w = std::exp(w - top);
      total += w;
    }
    const double pos2 = r.after_pos * r.after_pos;
    const double neg2 = r.after_neg * r.after_neg;
    for (std::size_t j = 0; j <= trials; ++j) {
      const double prob = std::max(logw[j] / total, std::numeric_limits<double>::min());
      atoms.push_back({r.first * r.first + static_cast<double>(j) * pos2 +
                           static_cast<double>(trials - j) * neg2,
                       prob});
    }
  }

  const double nv = noise_var(p);
  for (auto &a : atoms) {
    if (p.compose == Compose::add)
      a.value += static_cast<double>(n) * nv;
    else if (p.compose == Compose::mul)
      a.value *= nv;
  }
  return DiscreteDist(std::move(atoms));
}

bool has_unit_V2(const MdsModel &model, std::size_t n) {
  return sum_cond_var_law(model, n).size() == 1;
}

bool is_iid(const MdsModel &model) noexcept {
  return rule_of(parts_of(model).base).constant();
}

DiscreteDist iid_step_law(const MdsModel &model) {
  validate(model);
  if (!is_iid(model))
    throw UnsupportedError("iid_step_law: model steps are not i.i.d.");
  const Parts p = parts_of(model);
  const double c = rule_of(p.base).first;
  if (p.compose == Compose::none)
    return DiscreteDist::rademacher(c);
  const auto *noise = std::get_if<DiscreteDist>(p.noise);
  if (!noise)
    throw UnsupportedError("iid_step_law: continuous noise has no finite law");
  std::vector<Atom> atoms;
  for (double sign : {-1.0, 1.0})
    for (const auto &e : noise->atoms())
      atoms.push_back({p.compose == Compose::add ? sign * c + e.value : sign * c * e.value,
                       0.5 * e.prob});
  return DiscreteDist(std::move(atoms));
}

double cond_var_from_prefix(const MdsModel &model, std::span<const double> base_prefix) {
  const Parts p = parts_of(model);
  const ScaleRule r = rule_of(p.base);
  const std::size_t k = base_prefix.size() + 1;
  const double s = r.at(k, k > 1 ? base_prefix.back() : 0.0);
  switch (p.compose) {
  case Compose::add:
    return s * s + noise_var(p);
  case Compose::mul:
    return s * s * noise_var(p);
  case Compose::none:
    break;
  }
  return s * s;
}

Path sample_path(const MdsModel &model, std::size_t n, const StreamKey &key) {
  if (n == 0)
    throw DomainError("sample_path: n must be positive");
  const Sampler sampler(model);
  const bool composite = !std::holds_alternative<ScaledRademacher>(model) &&
                         !std::holds_alternative<PredictableScaleRademacher>(model);
  Path path;
  path.values.reserve(n);
  path.cond_vars.reserve(n);
  path.partial_sums.reserve(n);
  if (composite)
    path.base_values.reserve(n);

  double s = 0.0;
  CompensatedSum var_total;
  sampler.run(n, key, [&](double y, double var, double x) {
    s += y;
    path.values.push_back(y);
    path.cond_vars.push_back(var);
    path.partial_sums.push_back(s);
    if (composite)
      path.base_values.push_back(x);
    var_total.add(var);
  });
  path.v2 = theoretical_v2(model, n);
  path.V2 = var_total.value() / path.v2;
  return path;
}

double sample_sum(const MdsModel &model, std::size_t n, const StreamKey &key) {
  const Sampler sampler(model);
  double s = 0.0;
  sampler.run(n, key, [&](double y, double, double) { s += y; });
  return s;
}

void sample_values(const MdsModel &model, const StreamKey &key, std::span<double> out) {
  const Sampler sampler(model);
  std::size_t i = 0;
  sampler.run(out.size(), key, [&](double y, double, double) { out[i++] = y; });
}

double class_excess(const DiscreteDist &conditional_law, double gamma) {
  return abs_moment(conditional_law, 3.0) - gamma * abs_moment(conditional_law, 2.0);
}

MembershipReport verify_class_membership(const MdsModel &model, std::size_t n,
                                         double gamma_override) {
  GammaSequence gs = gamma_sequence(model, n);
  if (gamma_override > 0.0)
    std::fill(gs.gamma.begin(), gs.gamma.end(), gamma_override);
  const Parts p = parts_of(model);
  const ScaleRule r = rule_of(p.base);
  const double nv = noise_var(p);

  MembershipReport report;
  report.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<double> scales{r.first};
    if (k > 1)
      scales = {r.after_pos, r.after_neg};
    for (double s : scales) {
      // Conditional on the past, the base step is +-s with probability 1/2.
      double third = 0.0, second = 0.0, mean = 0.0;
      switch (p.compose) {
      case Compose::none:
        third = s * s * s;
        second = s * s;
        break;
      case Compose::add:
        third = 0.5 * (shifted_abs_third_moment(*p.noise, s) +
                       shifted_abs_third_moment(*p.noise, -s));
        second = s * s + nv;
        if (const auto *d = std::get_if<DiscreteDist>(p.noise)) {
          for (const auto &e : d->atoms())
            mean += e.prob * 0.5 * ((s + e.value) + (-s + e.value));
        }
        break;
      case Compose::mul:
        third = s * s * s * abs_moment(*p.noise, 3.0);
        second = s * s * nv;
        if (const auto *d = std::get_if<DiscreteDist>(p.noise)) {
          for (const auto &e : d->atoms())
            mean += e.prob * 0.5 * (s * e.value - s * e.value);
        }
        break;
      }
      const double excess = third - gs.gamma[k - 1] * second;
      ++report.states_checked;
      if (excess > report.max_excess) {
        report.max_excess = excess;
        report.worst_step = k;
      }
      report.max_abs_cond_mean = std::max(report.max_abs_cond_mean, std::abs(mean));
    }
  }
  report.member = report.max_excess <= 1e-12 && report.max_abs_cond_mean <= 1e-12;
  return report;
}

// ---------------------------------------------------------------------------
// Descriptors

namespace {

std::string to_string(const BaseModel &base) {
  if (const auto *r = std::get_if<ScaledRademacher>(&base))
    return "rademacher(" + format_real(r->c) + ")";
  const auto &p = std::get<PredictableScaleRademacher>(base);
  return "pscale(" + format_real(p.first) + "," + format_real(p.after_pos) + "," +
         format_real(p.after_neg) + ")";
}

struct Call {
  std::string name;
  std::vector<std::string> args;
  bool has_parens = false;
};

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.front()))
    s.erase(s.begin());
  while (!s.empty() && ws(s.back()))
    s.pop_back();
  return s;
}

Call parse_call(const std::string &text) {
  const std::string s = trim(text);
  Call call;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    call.name = s;
    return call;
  }
  if (s.back() != ')')
    throw DomainError("model spec: missing ')' in '" + s + "'");
  call.name = trim(s.substr(0, open));
  call.has_parens = true;
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  int depth = 0;
  std::string cur;
  for (char ch : inner) {
    if (ch == '(')
      ++depth;
    if (ch == ')')
      --depth;
    if (depth < 0)
      throw DomainError("model spec: unbalanced parentheses in '" + s + "'");
    if (ch == ',' && depth == 0) {
      call.args.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (depth != 0)
    throw DomainError("model spec: unbalanced parentheses in '" + s + "'");
  if (!trim(cur).empty() || !call.args.empty())
    call.args.push_back(trim(cur));
  return call;
}

double parse_number(const std::string &s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw DomainError("model spec: expected a number, got '" + s + "'");
  }
  if (used != s.size())
    throw DomainError("model spec: expected a number, got '" + s + "'");
  return v;
}

void expect_arity(const Call &c, std::size_t n) {
  if (c.args.size() != n)
    throw DomainError("model spec: " + c.name + " takes " + std::to_string(n) +
                      " argument(s)");
}

BaseModel parse_base(const Call &c) {
  if (c.name == "rademacher") {
    expect_arity(c, 1);
    return ScaledRademacher{parse_number(c.args[0])};
  }
  if (c.name == "pscale") {
    expect_arity(c, 3);
    return PredictableScaleRademacher{parse_number(c.args[0]), parse_number(c.args[1]),
                                      parse_number(c.args[2])};
  }
  throw UnsupportedError("model spec: unknown base model '" + c.name + "'");
}

} // namespace

NoiseLaw parse_noise(const std::string &spec) {
  const Call c = parse_call(spec);
  if (c.name == "rad" && !c.has_parens)
    return DiscreteDist::rademacher(1.0);
  if (c.name == "uniform") {
    expect_arity(c, 1);
    return UniformNoise{parse_number(c.args[0])};
  }
  if (c.name == "normal") {
    expect_arity(c, 1);
    return NormalNoise{parse_number(c.args[0])};
  }
  if (c.name == "discrete") {
    expect_arity(c, 1);
    std::vector<Atom> atoms;
    std::string rest = c.args[0];
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto bar = rest.find('|', pos);
      const std::string item =
          trim(rest.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos));
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw DomainError("model spec: discrete atoms are written value:prob");
      atoms.push_back({parse_number(trim(item.substr(0, colon))),
                       parse_number(trim(item.substr(colon + 1)))});
      if (bar == std::string::npos)
        break;
      pos = bar + 1;
    }
    return DiscreteDist(std::move(atoms));
  }
  throw UnsupportedError("model spec: unknown noise family '" + c.name + "'");
}

MdsModel parse_model(const std::string &spec) {
  const Call c = parse_call(spec);
  MdsModel model;
  if (c.name == "additive" || c.name == "multiplicative") {
    expect_arity(c, 2);
    const BaseModel base = parse_base(parse_call(c.args[0]));
    NoiseLaw noise = parse_noise(c.args[1]);
    if (c.name == "additive")
      model = AdditiveNoise{base, std::move(noise)};
    else
      model = MultiplicativeNoise{base, std::move(noise)};
  } else {
    model = std::visit([](const auto &b) -> MdsModel { return b; }, parse_base(c));
  }
  validate(model);
  return model;
}

std::string to_string(const MdsModel &model) {
  return std::visit(
      [](const auto &m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditiveNoise>)
          return "additive(" + to_string(m.base) + "," + to_string(m.noise) + ")";
        else if constexpr (std::is_same_v<T, MultiplicativeNoise>)
          return "multiplicative(" + to_string(m.base) + "," + to_string(m.noise) + ")";
        else
          return to_string(BaseModel{m});
      },
      model);
}

} // namespace mdslab
