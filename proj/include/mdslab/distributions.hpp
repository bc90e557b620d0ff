#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mdslab {

/// Standard normal CDF. Throws DomainError on non-finite input.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x) noexcept;

/// Inverse of std_normal_cdf on (0,1). Throws DomainError outside.
double std_normal_quantile(double p);

struct Atom {
  double value;
  double prob;
};

/// Finite-support law. Atoms are kept sorted by value, strictly increasing,
/// with positive probabilities summing to one (1e-12 tolerance).
class DiscreteDist {
public:
  static constexpr double kNormTolerance = 1e-12;

  /// Validates and sorts; duplicate values are merged.
  explicit DiscreteDist(std::vector<Atom> atoms);

  /// Exact form: probabilities are weights[i] / sum(weights), where the
  /// weights are small nonnegative integers.
  static DiscreteDist from_weights(std::span<const double> values,
                                   std::span<const std::uint64_t> weights);

  static DiscreteDist point_mass(double v);
  static DiscreteDist rademacher(double scale = 1.0);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double mean() const noexcept;
  /// Smallest index i with cumulative probability >= u (inverse-CDF draw).
  double quantile(double u) const noexcept;
  double max_abs() const noexcept;

private:
  DiscreteDist() = default;
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  void finalize();
};

/// Uniform(-half_width, half_width).
struct UniformNoise {
  double half_width;
};

/// Centered normal with standard deviation sigma.
struct NormalNoise {
  double sigma;
};

/// Laws the noise of a composite model may follow.
using NoiseLaw = std::variant<DiscreteDist, UniformNoise, NormalNoise>;

/// E|Z|^k. Exact sum for discrete laws; closed form for uniform and normal.
double abs_moment(const NoiseLaw &law, double k);
double abs_moment(const DiscreteDist &dist, double k);

/// E|a + Z|^3 for a real shift a, used by conditional third-moment checks.
double shifted_abs_third_moment(const NoiseLaw &law, double shift);

/// Inverse-CDF draw of the law from a uniform in (0,1).
double draw(const NoiseLaw &law, double uniform);

/// Ess sup |Z|; +inf for the normal family.
double ess_sup_abs(const NoiseLaw &law) noexcept;

std::string to_string(const NoiseLaw &law);

} // namespace mdslab
