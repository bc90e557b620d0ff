#include "mdslab/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mdslab/coboundary.hpp"
#include "mdslab/csv.hpp"
#include "mdslab/empirics.hpp"
#include "mdslab/errors.hpp"
#include "mdslab/format.hpp"
#include "mdslab/parallel.hpp"
#include "mdslab/smoothing.hpp"
#include "mdslab/svg_plot.hpp"

namespace mdslab {

namespace fs = std::filesystem;

namespace {

// Every configuration key, in echo order.
const std::vector<std::string> kKeys = {"model", "n-grid", "reps",    "seed",  "delta-conf",
                                        "out",   "plot",   "mode",    "workers", "input",
                                        "coeffs", "p",     "joints"};

// Tail signs of augmented path r come from substream r, steps from here on;
// the path itself uses steps 0..n-1.
constexpr std::uint64_t kTailStep = std::uint64_t{1} << 40;

constexpr std::size_t kTailSamplePaths = 10;
constexpr int kHistogramBins = 20;
constexpr double kHistogramHalfWidth = 1e-12;

const std::vector<double> kLemmaK = {1.0, 2.0, 3.0};
const std::vector<double> kLemmaR = {1.0, 2.0, std::numeric_limits<double>::infinity()};

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

std::uint64_t parse_u64(const std::string &field, const std::string &v) {
  std::uint64_t x = 0;
  const auto *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc() || ptr != end)
    throw ConfigError(field, "'" + v + "' is not a nonnegative integer");
  return x;
}

double parse_double(const std::string &field, const std::string &v) {
  try {
    return parse_real_field(v);
  } catch (const DomainError &) {
    throw ConfigError(field, "'" + v + "' is not a real number");
  }
}

bool parse_bool(const std::string &field, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  throw ConfigError(field, "'" + v + "' is not a boolean");
}

std::string join_grid(const std::vector<std::size_t> &g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i)
    s += (i ? "," : "") + std::to_string(g[i]);
  return s;
}

KeyValues defaults_for(Subcommand sub) {
  KeyValues d{{"model", "rademacher(1)"},
              {"n-grid", "2^4..2^10"},
              {"reps", "10000"},
              {"seed", "1"},
              {"delta-conf", "0.01"},
              {"out", "mdslab_out"},
              {"plot", "false"},
              {"mode", "Linf"},
              {"workers", "0"},
              {"input", ""},
              {"coeffs", "1,1"},
              {"p", "inf"},
              {"joints", "1000"}};
  if (sub == Subcommand::augment_demo) {
    d["model"] = "pscale(1,1.5,0.5)";
    d["n-grid"] = "64";
  } else if (sub == Subcommand::linear_process) {
    d["n-grid"] = "2^6..2^12";
  }
  return d;
}

std::string real(double x) { return format_real(x); }

void write_table(const ExperimentConfig &cfg, const std::string &name, const CsvTable &t,
                 RunResult &res) {
  write_csv_file((fs::path(cfg.out) / name).string(), t);
  res.files.push_back(name);
}

void maybe_plot(const ExperimentConfig &cfg, const std::string &name,
                const std::vector<GridPoint> &grid, const std::string &title, std::ostream &log,
                RunResult &res) {
  if (!cfg.plot)
    return;
  try {
    const RateFit fit = fit_rate(grid, RateForm::power);
    const std::string err = try_write_rate_plot((fs::path(cfg.out) / name).string(), grid, fit, title);
    if (err.empty()) {
      res.files.push_back(name);
      return;
    }
    log << "warning: plot skipped: " << err << '\n';
  } catch (const std::exception &e) {
    log << "warning: plot skipped: " << e.what() << '\n';
  }
}

void write_metadata(const ExperimentConfig &cfg,
                    const std::vector<std::pair<std::string, std::string>> &derived,
                    RunResult &res) {
  std::ofstream os(fs::path(cfg.out) / "metadata.txt", std::ios::binary);
  os << "tool=mdslab\n";
  os << "version=" << kToolVersion << '\n';
  os << "subcommand=" << to_string(cfg.subcommand) << '\n';
  for (const auto &[k, v] : echo_config(cfg))
    os << k << '=' << v << '\n';
  os << "log_base=e\n";
  os << "real_format=%.17g\n";
  os << "stream=philox4x32-10; replication r uses substream r, all grid points share substreams\n";
  for (const auto &[k, v] : derived)
    os << k << '=' << v << '\n';
  if (!os)
    throw std::runtime_error("cannot write metadata.txt");
  res.files.push_back("metadata.txt");
}

// --- subcommands ------------------------------------------------------------

std::vector<GridPoint> run_simulate(const ExperimentConfig &cfg, std::ostream &log,
                                    RunResult &res) {
  const MdsModel model = parse_model(cfg.model);
  CsvTable t;
  t.header = {"n", "reps", "ks", "dkw_radius", "u_n", "v_n", "bound_ratio"};
  std::vector<GridPoint> grid;
  for (std::size_t n : cfg.n_grid) {
    const auto est = estimate_delta_n(model, n, cfg.reps, {cfg.seed, 0, 0}, cfg.delta_conf,
                                      cfg.workers);
    const double u_n = gamma_sequence(model, n).u_n;
    const double v_n = std::sqrt(theoretical_v2(model, n));
    t.rows.push_back({std::to_string(n), std::to_string(cfg.reps), real(est.ks),
                      real(est.dkw_radius), real(u_n), real(v_n),
                      real(bound_ratio(est, u_n, v_n))});
    grid.push_back({static_cast<double>(n), est.ks});
    log << "n=" << n << " ks=" << real(est.ks) << '\n';
  }
  write_table(cfg, "simulate.csv", t, res);
  return grid;
}

void rate_fit(const ExperimentConfig &cfg, std::ostream &log, RunResult &res) {
  std::vector<GridPoint> grid;
  std::string source;
  if (cfg.input.empty()) {
    grid = run_simulate(cfg, log, res);
    source = "simulate.csv";
  } else {
    CsvTable in;
    try {
      in = read_csv_file(cfg.input);
      for (std::size_t i = 0; i < in.rows.size(); ++i)
        grid.push_back({in.real_at(i, "n"), in.real_at(i, "ks")});
    } catch (const DomainError &e) {
      throw ConfigError("input", e.what());
    }
    source = cfg.input;
  }
  CsvTable t;
  t.header = {"form", "C", "b", "r2", "points"};
  RateFit power;
  for (RateForm form : {RateForm::power, RateForm::power_log}) {
    RateFit fit;
    try {
      fit = fit_rate(grid, form);
    } catch (const DomainError &e) {
      throw ConfigError(cfg.input.empty() ? "n-grid" : "input", e.what());
    }
    if (form == RateForm::power)
      power = fit;
    t.rows.push_back({to_string(form), real(fit.C), real(fit.b), real(fit.r2),
                      std::to_string(grid.size())});
    log << to_string(form) << ": C=" << real(fit.C) << " b=" << real(fit.b)
        << " r2=" << real(fit.r2) << '\n';
  }
  write_table(cfg, "rate_fit.csv", t, res);
  maybe_plot(cfg, "rate_fit.svg", grid, "Kolmogorov distance vs n", log, res);
  write_metadata(cfg, {{"rate_fit.source", source}}, res);
}

struct AugmentOutcome {
  bool ok = false;
  double V2_before = 0.0;
  std::size_t k = 0;
  double V2_residual = 0.0;
  double residual = 0.0;
  std::string error;
  std::vector<double> amplitudes, values;
};

void augment_demo(const ExperimentConfig &cfg, std::ostream &log, RunResult &res) {
  const MdsModel model = parse_model(cfg.model);
  const std::size_t n = cfg.n_grid.front();
  AugmentationPlan plan;
  try {
    plan = make_plan(model, n, cfg.mode);
  } catch (const UnsupportedError &e) {
    throw ConfigError("mode", e.what());
  }
  std::vector<AugmentOutcome> outcomes(cfg.reps);
  parallel_for(
      cfg.reps,
      [&](std::size_t r) {
        AugmentOutcome &o = outcomes[r];
        const Path path = sample_path(model, n, {cfg.seed, r, 0});
        o.V2_before = path.V2;
        try {
          const AugmentedPath aug = augment_path(path, plan, {cfg.seed, r, kTailStep});
          o.ok = true;
          o.k = aug.k;
          o.residual = aug.residual;
          o.V2_residual = aug.path.V2 - 1.0;
          if (r < kTailSamplePaths) {
            o.amplitudes = aug.tail_amplitudes;
            o.values.assign(aug.path.values.begin() + static_cast<std::ptrdiff_t>(n),
                            aug.path.values.end());
          }
        } catch (const NegativeResidualError &e) {
          o.residual = e.residual();
          o.error = e.what();
        } catch (const PlanInconsistencyError &e) {
          o.error = e.what();
        }
      },
      cfg.workers);

  CsvTable main, tails, hist, failures;
  main.header = {"path_id", "V2_before", "d", "k", "n_hat", "V2_after_residual"};
  tails.header = {"path_id", "j", "amplitude", "value"};
  hist.header = {"bin_lo", "bin_hi", "count"};
  failures.header = {"path_id", "V2_before", "residual", "error"};
  std::vector<std::size_t> counts(kHistogramBins + 2, 0);
  const double width = 2 * kHistogramHalfWidth / kHistogramBins;
  std::size_t failed = 0;
  double worst = 0.0;
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    const AugmentOutcome &o = outcomes[r];
    if (!o.ok) {
      ++failed;
      failures.rows.push_back({std::to_string(r), real(o.V2_before), real(o.residual), o.error});
      continue;
    }
    main.rows.push_back({std::to_string(r), real(o.V2_before), real(plan.d), std::to_string(o.k),
                         std::to_string(plan.n_hat), real(o.V2_residual)});
    for (std::size_t j = 0; j < o.amplitudes.size(); ++j)
      tails.rows.push_back({std::to_string(r), std::to_string(j + 1), real(o.amplitudes[j]),
                            real(o.values[j])});
    worst = std::max(worst, std::abs(o.V2_residual));
    const double x = o.V2_residual;
    std::size_t bin;
    if (x < -kHistogramHalfWidth)
      bin = 0;
    else if (x >= kHistogramHalfWidth)
      bin = kHistogramBins + 1;
    else
      bin = 1 + std::min<std::size_t>(kHistogramBins - 1,
                                      static_cast<std::size_t>((x + kHistogramHalfWidth) / width));
    ++counts[bin];
  }
  for (int b = 0; b < kHistogramBins + 2; ++b) {
    const double lo = b == 0 ? -INFINITY : -kHistogramHalfWidth + (b - 1) * width;
    const double hi = b == kHistogramBins + 1 ? INFINITY : -kHistogramHalfWidth + b * width;
    hist.rows.push_back({real(lo), real(hi), std::to_string(counts[static_cast<std::size_t>(b)])});
  }
  write_table(cfg, "augment.csv", main, res);
  write_table(cfg, "augment_tails.csv", tails, res);
  write_table(cfg, "augment_hist.csv", hist, res);
  if (failed)
    write_table(cfg, "augment_failures.csv", failures, res);
  write_metadata(cfg,
                 {{"augment.n", std::to_string(n)},
                  {"augment.u", real(plan.u)},
                  {"augment.d", real(plan.d)},
                  {"augment.n_hat", std::to_string(plan.n_hat)},
                  {"augment.v_hat2", real(plan.v_hat2)},
                  {"augment.length_convention", "augmented length = n_hat + 1"},
                  {"augment.augmented_length", std::to_string(plan.n_hat + 1)},
                  {"augment.failed_paths", std::to_string(failed)},
                  {"augment.max_abs_V2_residual", real(worst)}},
                 res);
  log << "paths=" << cfg.reps << " failed=" << failed << " max|V2-1|=" << real(worst) << '\n';
  if (failed) {
    res.exit_code = 3;
    res.message = "augment-demo: " + std::to_string(failed) + " of " + std::to_string(cfg.reps) +
                  " paths failed (see augment_failures.csv)";
  }
}

void linear_process(const ExperimentConfig &cfg, std::ostream &log, RunResult &res) {
  const MdsModel innovation = parse_model(cfg.model);
  const CoeffSeq coeffs = parse_coeffs(cfg.coeffs);
  const Truncation trunc = truncate(coeffs);
  const CoboundaryDecomposition dec = coboundary_decompose(trunc.coeffs, innovation, cfg.p);
  std::vector<DeltaEstimate> f_grid, m_grid;
  std::vector<GridPoint> grid;
  for (std::size_t n : cfg.n_grid) {
    const auto est = estimate_linear_process(trunc.coeffs, innovation, n, cfg.reps,
                                             {cfg.seed, 0, 0}, cfg.delta_conf, cfg.workers);
    f_grid.push_back(est.f);
    m_grid.push_back(est.m);
    grid.push_back({static_cast<double>(n), est.f.ks});
    log << "n=" << n << " ks_f=" << real(est.f.ks) << " ks_m=" << real(est.m.ks) << '\n';
  }
  const Theorem3Report rep = theorem3_rate_check(f_grid, m_grid, dec.g_norm_p, cfg.p);
  CsvTable t;
  t.header = {"n", "reps", "ks_f", "ks_m", "g_norm", "p", "ratio"};
  for (const auto &pt : rep.points)
    t.rows.push_back({std::to_string(pt.n), std::to_string(cfg.reps), real(pt.delta_f),
                      real(pt.delta_m), real(dec.g_norm_p), real(cfg.p), real(pt.ratio)});
  write_table(cfg, "linear_process.csv", t, res);
  maybe_plot(cfg, "linear_process.svg", grid, "Kolmogorov distance of the linear process", log,
             res);

  std::vector<std::pair<std::string, std::string>> derived{
      {"linear.A", real(dec.A)},
      {"linear.g_norm_exact", dec.g_norm_exact ? "true" : "false"},
      {"linear.truncation_tail_l2", real(trunc.tail_l2)},
      {"linear.support", std::to_string(trunc.coeffs.lo) + ".." + std::to_string(trunc.coeffs.hi())},
      {"linear.normalization", "both S_n(f) and S_n(m) divided by v_n(m) = |A| v_n(eps)"}};
  if (std::isfinite(cfg.p) && cfg.p >= 3.0) {
    const auto c3 = condition3_check(coeffs, cfg.p, 1000);
    derived.emplace_back("condition3.verdict",
                         c3.verdict == Verdict::converges ? "converges" : "diverges");
    derived.emplace_back("condition3.series_value", real(c3.series_value));
    derived.emplace_back("condition3.printed_form_diverges",
                         c3.printed_form_diverges ? "true" : "false");
  } else {
    derived.emplace_back("condition3.verdict", "not evaluated (needs finite p >= 3)");
  }
  derived.emplace_back("condition3.index_convention", "tails sum_{j>=k} and sum_{j<=-k}");
  write_metadata(cfg, derived, res);
}

void lemma_check(const ExperimentConfig &cfg, std::ostream &log, RunResult &res) {
  const std::vector<double> lambdas = log_grid(1e-3, 1e2, 50);
  const std::size_t per_joint = kLemmaK.size() * kLemmaR.size();
  std::vector<std::vector<std::string>> rows(cfg.joints * per_joint);
  parallel_for(
      cfg.joints,
      [&](std::size_t id) {
        const DiscreteJoint joint = random_joint({cfg.seed, id, 0});
        std::size_t slot = id * per_joint;
        for (double k : kLemmaK)
          for (double r : kLemmaR) {
            const SmoothingReport rep = lemma2_bound_check(joint, k, r);
            const std::size_t v =
                rep.violations.size() + intermediate_inequality_check(joint, k, r, lambdas).size();
            rows[slot++] = {std::to_string(id), real(k),          real(r),
                            real(rep.beta),     real(rep.delta_x), real(rep.delta_xy),
                            real(rep.bound),    real(rep.slack),   std::to_string(v)};
          }
      },
      cfg.workers);
  CsvTable t;
  t.header = {"joint_id", "k", "r", "beta", "delta_x", "delta_xy", "bound", "slack", "violations"};
  t.rows = std::move(rows);
  std::size_t total = 0;
  for (const auto &row : t.rows)
    total += std::stoul(row.back());
  write_table(cfg, "lemma_check.csv", t, res);
  write_metadata(cfg,
                 {{"lemma.k", "1,2,3"},
                  {"lemma.r", "1,2,inf"},
                  {"lemma.lambda_grid", "50 log-spaced points on [1e-3, 1e2]"},
                  {"lemma.t_grid", "atoms of X+Y and X-+lambda, each +-1e-9"},
                  {"lemma.c_prime", "2 (2 pi)^(-k/(2(k+1)))"},
                  {"lemma.total_violations", std::to_string(total)}},
                 res);
  log << "joints=" << cfg.joints << " violations=" << total << '\n';
}

} // namespace

std::string to_string(Subcommand sub) {
  switch (sub) {
  case Subcommand::simulate: return "simulate";
  case Subcommand::rate_fit: return "rate-fit";
  case Subcommand::augment_demo: return "augment-demo";
  case Subcommand::linear_process: return "linear-process";
  case Subcommand::lemma_check: return "lemma-check";
  }
  return "?";
}

Subcommand parse_subcommand(const std::string &s) {
  for (Subcommand sub : {Subcommand::simulate, Subcommand::rate_fit, Subcommand::augment_demo,
                         Subcommand::linear_process, Subcommand::lemma_check})
    if (to_string(sub) == s)
      return sub;
  throw ConfigError("subcommand", "unknown subcommand '" + s + "'");
}

KeyValues parse_config_text(const std::string &text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", "line " + std::to_string(lineno) + " is not key=value");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw ConfigError(key, "unknown configuration key (line " + std::to_string(lineno) + ")");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_config_file(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::size_t> parse_n_grid(const std::string &s) {
  std::vector<std::size_t> grid;
  const std::string v = trim(s);
  const auto dots = v.find("..");
  if (dots != std::string::npos) {
    const auto exponent = [&](std::string part) {
      part = trim(part);
      if (part.rfind("2^", 0) != 0)
        throw ConfigError("n-grid", "range bounds must look like 2^k");
      return parse_u64("n-grid", part.substr(2));
    };
    const auto lo = exponent(v.substr(0, dots)), hi = exponent(v.substr(dots + 2));
    if (lo > hi || hi > 40)
      throw ConfigError("n-grid", "invalid range '" + v + "'");
    for (auto e = lo; e <= hi; ++e)
      grid.push_back(std::size_t{1} << e);
    return grid;
  }
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const std::string item =
        trim(v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    grid.push_back(static_cast<std::size_t>(parse_u64("n-grid", item)));
    if (comma == std::string::npos)
      break;
    pos = comma + 1;
  }
  return grid;
}

ExperimentConfig resolve_config(Subcommand sub, const KeyValues &file, const KeyValues &flags) {
  KeyValues kv = defaults_for(sub);
  for (const auto *layer : {&file, &flags})
    for (const auto &[k, v] : *layer) {
      const std::string key = normalize_key(k);
      if (!kv.count(key))
        throw ConfigError(key, "unknown configuration key");
      kv[key] = v;
    }

  ExperimentConfig c;
  c.subcommand = sub;
  c.model = kv["model"];
  c.n_grid = parse_n_grid(kv["n-grid"]);
  c.reps = static_cast<std::size_t>(parse_u64("reps", kv["reps"]));
  c.seed = parse_u64("seed", kv["seed"]);
  c.delta_conf = parse_double("delta-conf", kv["delta-conf"]);
  c.out = kv["out"];
  c.plot = parse_bool("plot", kv["plot"]);
  try {
    c.mode = parse_norm_mode(kv["mode"]);
  } catch (const std::exception &) {
    throw ConfigError("mode", "'" + kv["mode"] + "' is not L1 or Linf");
  }
  const auto workers = parse_u64("workers", kv["workers"]);
  if (workers > 4096)
    throw ConfigError("workers", "at most 4096");
  c.workers = static_cast<int>(workers);
  c.input = kv["input"];
  c.coeffs = kv["coeffs"];
  c.p = parse_double("p", kv["p"]);
  c.joints = static_cast<std::size_t>(parse_u64("joints", kv["joints"]));

  // validation
  if (c.n_grid.empty())
    throw ConfigError("n-grid", "must not be empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] == 0)
      throw ConfigError("n-grid", "values must be positive");
    if (i && c.n_grid[i] <= c.n_grid[i - 1])
      throw ConfigError("n-grid", "must be strictly increasing");
  }
  const bool estimates = sub == Subcommand::simulate || sub == Subcommand::linear_process ||
                         (sub == Subcommand::rate_fit && c.input.empty());
  if (estimates && c.reps < 100)
    throw ConfigError("reps", "estimation needs at least 100 replications");
  if (sub == Subcommand::augment_demo && c.reps == 0)
    throw ConfigError("reps", "must be positive");
  if (sub == Subcommand::augment_demo && c.n_grid.size() != 1)
    throw ConfigError("n-grid", "augment-demo takes a single n");
  if ((sub == Subcommand::simulate || sub == Subcommand::rate_fit) && c.n_grid.front() < 2)
    throw ConfigError("n-grid", "bound ratios need n >= 2");
  if (sub == Subcommand::rate_fit && c.input.empty() && c.n_grid.size() < 4)
    throw ConfigError("n-grid", "rate fitting needs at least 4 grid points");
  if (!(c.delta_conf > 0.0 && c.delta_conf < 1.0))
    throw ConfigError("delta-conf", "must lie in (0,1)");
  if (c.out.empty())
    throw ConfigError("out", "must not be empty");
  if (sub == Subcommand::lemma_check && c.joints == 0)
    throw ConfigError("joints", "must be positive");
  if (!(c.p >= 1.0))
    throw ConfigError("p", "must be at least 1 (inf allowed)");

  if (sub != Subcommand::lemma_check && !(sub == Subcommand::rate_fit && !c.input.empty())) {
    MdsModel model;
    try {
      model = parse_model(c.model);
      validate(model);
      if (sub == Subcommand::linear_process)
        validate_innovation(model);
    } catch (const std::exception &e) {
      throw ConfigError("model", e.what());
    }
    c.model = to_string(model);
  }
  if (sub == Subcommand::linear_process) {
    try {
      const CoeffSeq seq = parse_coeffs(c.coeffs);
      if (coefficient_sum(seq) == 0.0)
        throw DomainError("coefficients sum to 0, the martingale part vanishes");
      c.coeffs = to_string(seq);
    } catch (const std::exception &e) {
      throw ConfigError("coeffs", e.what());
    }
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig &c) {
  return {{"model", c.model},
          {"n-grid", join_grid(c.n_grid)},
          {"reps", std::to_string(c.reps)},
          {"seed", std::to_string(c.seed)},
          {"delta-conf", format_real(c.delta_conf)},
          {"out", c.out},
          {"plot", c.plot ? "true" : "false"},
          {"mode", to_string(c.mode)},
          {"workers", std::to_string(c.workers)},
          {"input", c.input},
          {"coeffs", c.coeffs},
          {"p", format_real(c.p)},
          {"joints", std::to_string(c.joints)}};
}

RunResult run_experiment(const ExperimentConfig &cfg, std::ostream &log) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out))
    throw ConfigError("out", "cannot create directory '" + cfg.out + "'");
  RunResult res;
  switch (cfg.subcommand) {
  case Subcommand::simulate: {
    const auto grid = run_simulate(cfg, log, res);
    maybe_plot(cfg, "simulate.svg", grid, "Kolmogorov distance vs n", log, res);
    write_metadata(cfg, {}, res);
    break;
  }
  case Subcommand::rate_fit: rate_fit(cfg, log, res); break;
  case Subcommand::augment_demo: augment_demo(cfg, log, res); break;
  case Subcommand::linear_process: linear_process(cfg, log, res); break;
  case Subcommand::lemma_check: lemma_check(cfg, log, res); break;
  }
  return res;
}

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Martingale CLT rate experiments"};
  app.name("mdslab");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"simulate", "Monte Carlo Kolmogorov distances and bound ratios over an n grid"},
      {"rate-fit", "fit C n^b and C n^-1/2 ln n to a distance grid"},
      {"augment-demo", "variance-normalizing augmentation of sampled paths"},
      {"linear-process", "linear process vs its martingale part over an n grid"},
      {"lemma-check", "exact smoothing inequality checks on random discrete joints"}};
  const std::map<std::string, std::string> help = {
      {"model", "model descriptor, e.g. rademacher(1), pscale(1,1.5,0.5), additive(rademacher(1),rad)"},
      {"n-grid", "n values: 16,32,64 or 2^4..2^10"},
      {"reps", "replications (paths for augment-demo)"},
      {"seed", "master seed"},
      {"delta-conf", "DKW confidence level delta"},
      {"out", "output directory"},
      {"mode", "L1 or Linf"},
      {"workers", "worker threads, 0 for every processor"},
      {"input", "rate-fit: CSV with n and ks columns"},
      {"coeffs", "coefficients: [@lo:]a0,a1,..., geometric(r), polynomial(s)"},
      {"p", "moment exponent of g (inf allowed)"},
      {"joints", "lemma-check: number of random joints"}};

  struct Bound {
    CLI::App *app = nullptr;
    std::string config;
    std::map<std::string, std::string> values;
    bool plot = false;
  };
  std::vector<Bound> bound(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Bound &b = bound[i];
    b.app = app.add_subcommand(subs[i].first, subs[i].second);
    b.app->add_option("--config", b.config, "flat key=value configuration file");
    for (const auto &key : kKeys)
      if (key != "plot")
        b.app->add_option("--" + key, b.values[key], help.at(key));
    b.app->add_flag("--plot", b.plot, "write an SVG rate plot");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    Bound &b = bound[i];
    if (!b.app->parsed())
      continue;
    try {
      KeyValues file;
      if (!b.config.empty())
        file = read_config_file(b.config);
      KeyValues flags;
      for (const auto &[key, value] : b.values)
        if (b.app->get_option("--" + key)->count() > 0)
          flags[key] = value;
      if (b.plot)
        flags["plot"] = "true";
      const ExperimentConfig cfg = resolve_config(parse_subcommand(subs[i].first), file, flags);
      const RunResult res = run_experiment(cfg, out);
      if (!res.message.empty())
        err << res.message << '\n';
      return res.exit_code;
    } catch (const ConfigError &e) {
      err << "invalid configuration: " << e.what() << '\n';
      return 2;
    } catch (const std::exception &e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

} // namespace mdslab
