#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mdslab/distributions.hpp"
#include "mdslab/stream.hpp"

namespace mdslab {

/// X_k = c * xi_k with i.i.d. Rademacher signs xi_k.
struct ScaledRademacher {
  double c = 1.0;
};

/// X_k = s_k * xi_k where the scale is predictable and driven by the sign of
/// the previous value: s_1 = first, s_k = after_pos if X_{k-1} > 0 and
/// after_neg otherwise.
struct PredictableScaleRademacher {
  double first = 1.0;
  double after_pos = 1.5;
  double after_neg = 0.5;

  double s_min() const noexcept;
  double s_max() const noexcept;
};

using BaseModel = std::variant<ScaledRademacher, PredictableScaleRademacher>;

/// Y_k = X_k + eps_k, eps i.i.d., independent of X.
struct AdditiveNoise {
  BaseModel base;
  NoiseLaw noise;
};

/// Y_k = X_k * eps_k, eps i.i.d., independent of X.
struct MultiplicativeNoise {
  BaseModel base;
  NoiseLaw noise;
};

using MdsModel = std::variant<ScaledRademacher, PredictableScaleRademacher,
                              AdditiveNoise, MultiplicativeNoise>;

/// One realized trajectory. For composite models base_values holds the
/// underlying bounded sequence X (the noise-free part); it is empty for
/// primitive kinds, whose values already are the base sequence.
struct Path {
  std::vector<double> values;
  std::vector<double> cond_vars;
  std::vector<double> partial_sums;
  std::vector<double> base_values;
  double v2 = 0.0;
  double V2 = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// Throws DomainError on nonpositive scales or noise with nonzero mean, and
/// DegenerateModelError on zero-variance noise.
void validate(const MdsModel &model);

/// Uniform bound M of a base sequence.
double bound(const BaseModel &base) noexcept;

struct GammaSequence {
  std::vector<double> gamma;
  double u_n = 0.0; // max_k gamma_k
};

GammaSequence gamma_sequence(const MdsModel &model, std::size_t n);

/// v_n^2 = sum_k E X_k^2, exact.
double theoretical_v2(const MdsModel &model, std::size_t n);

/// Exact law of sum_k sigma_k^2 over the n steps.
DiscreteDist sum_cond_var_law(const MdsModel &model, std::size_t n);

/// True when V_n^2 = 1 almost surely.
bool has_unit_V2(const MdsModel &model, std::size_t n);

/// True when the steps are i.i.d. (usable as stationary innovations).
bool is_iid(const MdsModel &model) noexcept;

/// Marginal law of one step for discrete i.i.d. models; throws
/// UnsupportedError when the marginal is continuous or not i.i.d.
DiscreteDist iid_step_law(const MdsModel &model);

/// sigma_k^2 recomputed from the base prefix X_1..X_{k-1} (k = size + 1).
double cond_var_from_prefix(const MdsModel &model,
                            std::span<const double> base_prefix);

/// Path of length n. Step k (1-based) draws from block key.step + k - 1 of
/// substream (key.master_seed, key.substream_id).
Path sample_path(const MdsModel &model, std::size_t n, const StreamKey &key);

/// S_n of the path sample_path would return for the same key, without
/// materializing it. Bit-identical to sample_path(...).partial_sums.back().
double sample_sum(const MdsModel &model, std::size_t n, const StreamKey &key);

/// X_1..X_n only, written to out (size n); same draws as sample_path.
void sample_values(const MdsModel &model, const StreamKey &key, std::span<double> out);

struct MembershipReport {
  double max_excess = 0.0;      // max of E(|X|^3|F) - gamma E(X^2|F)
  double max_abs_cond_mean = 0.0;
  std::size_t worst_step = 0;   // 1-based
  std::size_t states_checked = 0;
  bool member = true;
};

/// Excess E|Z|^3 - gamma E Z^2 of one conditional law.
double class_excess(const DiscreteDist &conditional_law, double gamma);

/// Walks every step and every reachable predictable state with exact
/// conditional moments (finite sums for discrete noise, closed forms for
/// uniform and normal noise). Membership failures are reported, not thrown.
/// A positive gamma_override replaces every gamma_k.
MembershipReport verify_class_membership(const MdsModel &model, std::size_t n,
                                         double gamma_override = 0.0);

/// Canonical descriptor, parseable by parse_model.
std::string to_string(const MdsModel &model);

/// Grammar:
///   model := rademacher(c) | pscale(first,after_pos,after_neg)
///          | additive(base,noise) | multiplicative(base,noise)
///   base  := rademacher(c) | pscale(...)
///   noise := rad | uniform(a) | normal(sigma) | discrete(v:p|v:p|...)
/// Throws DomainError on malformed input, UnsupportedError on unknown names.
MdsModel parse_model(const std::string &spec);
NoiseLaw parse_noise(const std::string &spec);

} // namespace mdslab
