#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unistd.h>

#include "mdslab/csv.hpp"
#include "mdslab/errors.hpp"
#include "mdslab/experiment.hpp"
#include "mdslab/format.hpp"
#include "mdslab/svg_plot.hpp"

using namespace mdslab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() /
           ("mdslab_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &name) const { return (path / name).string(); }
};

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mdslab");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string config_error_field(Subcommand sub, const KeyValues &flags) {
  try {
    resolve_config(sub, {}, flags);
  } catch (const ConfigError &e) {
    return e.field();
  }
  return "";
}

} // namespace

TEST_CASE("reals survive the CSV format") {
  const double specials[] = {0.0, -0.0, 1.0 / 3, 5e-324, 2.2250738585072014e-308,
                             std::numeric_limits<double>::max(), -1e300, 0.1, 123456789.125,
                             std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()};
  for (double x : specials) {
    const double y = parse_real_field(format_real(x));
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
  }
  CHECK(std::isnan(parse_real_field(format_real(std::nan("")))));
  std::uint64_t bits = 0x9E3779B97F4A7C15ull;
  for (int i = 0; i < 100000; ++i) {
    bits ^= bits << 13, bits ^= bits >> 7, bits ^= bits << 17;
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x))
      continue;
    const double y = parse_real_field(format_real(x));
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
  }
  CHECK_THROWS_AS(parse_real_field(""), DomainError);
  CHECK_THROWS_AS(parse_real_field("1.5x"), DomainError);
  CHECK_THROWS_AS(parse_real_field("1e999"), DomainError);
}

TEST_CASE("CSV round trip with quoting") {
  CsvTable t;
  t.header = {"id", "model", "note"};
  t.rows = {{"1", "additive(rademacher(1),rad)", "plain"},
            {"2", "x", "has \"quotes\", commas\nand a newline"},
            {"3", "", ""}};
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  const CsvTable back = read_csv(is);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  std::ostringstream again;
  write_csv(again, back);
  CHECK(again.str() == os.str());

  std::istringstream crlf("a,b\r\n1,2\r\n");
  const auto c = read_csv(crlf);
  CHECK(c.rows[0] == std::vector<std::string>{"1", "2"});
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(read_csv(ragged), DomainError);
  std::istringstream open_quote("a\n\"x\n");
  CHECK_THROWS_AS(read_csv(open_quote), DomainError);
  CHECK_THROWS_AS(t.column("missing"), DomainError);
}

TEST_CASE("configuration text") {
  const auto kv = parse_config_text("# sweep\nmodel = pscale(1,1.5,0.5)  # trailing\n\nn_grid=16,32\n");
  CHECK(kv.at("model") == "pscale(1,1.5,0.5)");
  CHECK(kv.at("n-grid") == "16,32");
  try {
    parse_config_text("colour=blue\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.field() == "colour");
  }
  CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/mdslab.cfg"), ConfigError);
}

TEST_CASE("n grids") {
  CHECK(parse_n_grid("16, 32,64") == std::vector<std::size_t>{16, 32, 64});
  CHECK(parse_n_grid("2^4..2^6") == std::vector<std::size_t>{16, 32, 64});
  CHECK_THROWS_AS(parse_n_grid("4..8"), ConfigError);
  CHECK_THROWS_AS(parse_n_grid("16,x"), ConfigError);
  CHECK_THROWS_AS(parse_n_grid("2^6..2^4"), ConfigError);
}

TEST_CASE("precedence: flags over file over defaults") {
  const auto def = resolve_config(Subcommand::simulate, {}, {});
  CHECK(def.reps == 10000);
  CHECK(def.n_grid.front() == 16);
  CHECK(def.n_grid.back() == 1024);
  CHECK(def.model == "rademacher(1)");
  const auto file = resolve_config(Subcommand::simulate, {{"reps", "500"}, {"seed", "9"}}, {});
  CHECK(file.reps == 500);
  CHECK(file.seed == 9);
  const auto flag =
      resolve_config(Subcommand::simulate, {{"reps", "500"}, {"seed", "9"}}, {{"reps", "700"}});
  CHECK(flag.reps == 700);
  CHECK(flag.seed == 9);
  CHECK(resolve_config(Subcommand::augment_demo, {}, {}).n_grid == std::vector<std::size_t>{64});
}

TEST_CASE("config echo reproduces the effective configuration") {
  for (Subcommand sub : {Subcommand::simulate, Subcommand::rate_fit, Subcommand::augment_demo,
                         Subcommand::linear_process, Subcommand::lemma_check}) {
    const auto cfg = resolve_config(sub, {}, {{"seed", "42"}});
    const auto echo = echo_config(cfg);
    CHECK(echo.size() == 13);
    KeyValues as_flags(echo.begin(), echo.end());
    CHECK(echo_config(resolve_config(sub, {}, as_flags)) == echo);
  }
}

TEST_CASE("invalid configurations name the field") {
  CHECK(config_error_field(Subcommand::simulate, {{"n-grid", "32,16"}}) == "n-grid");
  CHECK(config_error_field(Subcommand::simulate, {{"n-grid", "1,2,4"}}) == "n-grid");
  CHECK(config_error_field(Subcommand::simulate, {{"reps", "50"}}) == "reps");
  CHECK(config_error_field(Subcommand::simulate, {{"reps", "-3"}}) == "reps");
  CHECK(config_error_field(Subcommand::simulate, {{"seed", "abc"}}) == "seed");
  CHECK(config_error_field(Subcommand::simulate, {{"delta-conf", "1.5"}}) == "delta-conf");
  CHECK(config_error_field(Subcommand::simulate, {{"model", "cauchy(1)"}}) == "model");
  CHECK(config_error_field(Subcommand::simulate, {{"model", "additive(rademacher(1),normal(0))"}}) ==
        "model");
  CHECK(config_error_field(Subcommand::simulate, {{"mode", "L2"}}) == "mode");
  CHECK(config_error_field(Subcommand::simulate, {{"plot", "maybe"}}) == "plot");
  CHECK(config_error_field(Subcommand::simulate, {{"out", ""}}) == "out");
  CHECK(config_error_field(Subcommand::augment_demo, {{"n-grid", "16,32"}}) == "n-grid");
  CHECK(config_error_field(Subcommand::linear_process, {{"coeffs", "1,-1"}}) == "coeffs");
  CHECK(config_error_field(Subcommand::linear_process, {{"model", "pscale(1,2,0.5)"}}) == "model");
  CHECK(config_error_field(Subcommand::linear_process, {{"p", "0.5"}}) == "p");
  CHECK(config_error_field(Subcommand::lemma_check, {{"joints", "0"}}) == "joints");
  CHECK(config_error_field(Subcommand::rate_fit, {{"n-grid", "16,32,64"}}) == "n-grid");
  CHECK(config_error_field(Subcommand::simulate, {{"frobnicate", "1"}}) == "frobnicate");
}

TEST_CASE("cli exit codes and diagnostics") {
  TempDir dir("exit");
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"--version"}).out.find(kToolVersion) != std::string::npos);
  CHECK(cli({}).code == 2);
  CHECK(cli({"simulate", "--bogus", "1"}).code == 2);
  const auto bad = cli({"simulate", "--n-grid", "64,32", "--out", dir / "bad"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("n-grid") != std::string::npos);
  const auto missing_cfg = cli({"simulate", "--config", dir / "none.cfg"});
  CHECK(missing_cfg.code == 2);
  CHECK(missing_cfg.err.find("config") != std::string::npos);

  // L1 mode on the sign-driven scale model fails on some paths
  const auto aug = cli({"augment-demo", "--mode", "L1", "--n-grid", "3", "--reps", "200", "--out",
                        dir / "l1"});
  CHECK(aug.code == 3);
  CHECK(aug.err.find("paths failed") != std::string::npos);
  CHECK(fs::exists(dir / "l1/augment_failures.csv"));
  const auto ok = cli({"augment-demo", "--reps", "300", "--out", dir / "linf"});
  CHECK(ok.code == 0);
}

TEST_CASE("simulate is byte-identical across runs and worker counts") {
  TempDir dir("det");
  std::string reference;
  for (const char *w : {"1", "2", "3", "1"}) {
    const std::string out = dir / (std::string("w") + w);
    const auto r = cli({"simulate", "--model", "pscale(1,1.5,0.5)", "--n-grid", "16,64",
                        "--reps", "1000", "--seed", "7", "--workers", w, "--out", out});
    REQUIRE(r.code == 0);
    const std::string csv = slurp(out + "/simulate.csv");
    if (reference.empty())
      reference = csv;
    CHECK(csv == reference);
  }
  const auto other = cli({"simulate", "--model", "pscale(1,1.5,0.5)", "--n-grid", "16,64",
                          "--reps", "1000", "--seed", "8", "--out", dir / "seed8"});
  CHECK(slurp(dir / "seed8/simulate.csv") != reference);
}

TEST_CASE("config file and flags combine") {
  TempDir dir("cfg");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# simulate sweep\nreps = 200\nn-grid = 16,32\nseed = 5\nout = " << (dir / "from_file")
        << "\n";
  }
  REQUIRE(cli({"simulate", "--config", dir / "run.cfg"}).code == 0);
  const auto meta = slurp(dir / "from_file/metadata.txt");
  CHECK(meta.find("reps=200\n") != std::string::npos);
  CHECK(meta.find("seed=5\n") != std::string::npos);
  CHECK(meta.find("log_base=e\n") != std::string::npos);
  CHECK(meta.find("joints=1000\n") != std::string::npos); // defaults echoed too
  REQUIRE(cli({"simulate", "--config", dir / "run.cfg", "--reps", "300", "--out", dir / "flag"})
              .code == 0);
  const auto t = read_csv_file(dir / "flag/simulate.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[0][t.column("reps")] == "300");
}

TEST_CASE("every emitted CSV re-reads losslessly") {
  TempDir dir("rt");
  REQUIRE(cli({"simulate", "--n-grid", "16,32,64,128", "--reps", "500", "--out", dir / "s"}).code == 0);
  REQUIRE(cli({"rate-fit", "--input", dir / "s/simulate.csv", "--out", dir / "r"}).code == 0);
  REQUIRE(cli({"augment-demo", "--reps", "50", "--out", dir / "a"}).code == 0);
  REQUIRE(cli({"augment-demo", "--reps", "50", "--mode", "L1", "--n-grid", "3", "--out", dir / "a1"})
              .code == 3);
  REQUIRE(cli({"linear-process", "--n-grid", "64,128", "--reps", "500", "--out", dir / "lp"}).code == 0);
  REQUIRE(cli({"lemma-check", "--joints", "20", "--out", dir / "lc"}).code == 0);
  std::size_t files = 0;
  for (const auto &entry : fs::recursive_directory_iterator(dir.path)) {
    if (entry.path().extension() != ".csv")
      continue;
    ++files;
    const std::string bytes = slurp(entry.path().string());
    std::istringstream is(bytes);
    const CsvTable t = read_csv(is);
    std::ostringstream os;
    write_csv(os, t);
    CHECK_MESSAGE(os.str() == bytes, entry.path().string());
  }
  CHECK(files >= 10);
  const auto sim = read_csv_file(dir / "s/simulate.csv");
  CHECK(sim.header == std::vector<std::string>{"n", "reps", "ks", "dkw_radius", "u_n", "v_n",
                                               "bound_ratio"});
  CHECK(read_csv_file(dir / "a/augment.csv").header ==
        std::vector<std::string>{"path_id", "V2_before", "d", "k", "n_hat", "V2_after_residual"});
  CHECK(read_csv_file(dir / "lp/linear_process.csv").header ==
        std::vector<std::string>{"n", "reps", "ks_f", "ks_m", "g_norm", "p", "ratio"});
  CHECK(read_csv_file(dir / "lc/lemma_check.csv").header ==
        std::vector<std::string>{"joint_id", "k", "r", "beta", "delta_x", "delta_xy", "bound",
                                 "slack", "violations"});
}

TEST_CASE("rate-fit on an exact power law") {
  TempDir dir("fit");
  CsvTable in;
  in.header = {"n", "ks"};
  for (int e = 4; e <= 10; ++e) {
    const double n = std::ldexp(1.0, e);
    in.rows.push_back({format_real(n), format_real(0.4 / std::sqrt(n))});
  }
  write_csv_file(dir / "grid.csv", in);
  REQUIRE(cli({"rate-fit", "--input", dir / "grid.csv", "--out", dir / "out"}).code == 0);
  const auto t = read_csv_file(dir / "out/rate_fit.csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "power");
  CHECK(t.real_at(0, "b") == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(t.real_at(0, "C") == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(t.real_at(0, "r2") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cli({"rate-fit", "--input", dir / "missing.csv", "--out", dir / "o2"}).code == 2);
}

TEST_CASE("lemma-check reports no violations") {
  TempDir dir("lemma");
  REQUIRE(cli({"lemma-check", "--joints", "100", "--seed", "11", "--out", dir / "o"}).code == 0);
  const auto t = read_csv_file(dir / "o/lemma_check.csv");
  CHECK(t.rows.size() == 900);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    CHECK(t.rows[i][t.column("violations")] == "0");
}

TEST_CASE("outputs stay inside the output directory") {
  TempDir dir("contain");
  const auto before = std::distance(fs::directory_iterator(dir.path), fs::directory_iterator{});
  REQUIRE(cli({"simulate", "--n-grid", "16,32,64,128", "--reps", "200", "--plot", "--out",
               dir / "only"})
              .code == 0);
  std::set<std::string> top;
  for (const auto &e : fs::directory_iterator(dir.path))
    top.insert(e.path().filename().string());
  CHECK(before == 0);
  CHECK(top == std::set<std::string>{"only"});
  std::set<std::string> inside;
  for (const auto &e : fs::directory_iterator(dir / "only"))
    inside.insert(e.path().filename().string());
  CHECK(inside == std::set<std::string>{"metadata.txt", "simulate.csv", "simulate.svg"});
}

TEST_CASE("plot failures do not fail the run") {
  TempDir dir("plot");
  fs::create_directories(dir / "o/simulate.svg"); // a directory where the file should go
  const auto r = cli({"simulate", "--n-grid", "16,32,64,128", "--reps", "200", "--plot", "--out",
                      dir / "o"});
  CHECK(r.code == 0);
  CHECK(r.out.find("plot skipped") != std::string::npos);
  CHECK(fs::exists(dir / "o/simulate.csv"));

  const std::vector<GridPoint> pts{{16, 0.1}, {64, 0.05}};
  RateFit fit;
  fit.C = 0.4;
  fit.b = -0.5;
  const std::string svg = render_rate_plot(pts, fit, "a < b & c");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK_THROWS_AS(render_rate_plot(std::vector<GridPoint>{}, fit, "x"), DomainError);
  CHECK_FALSE(try_write_rate_plot(dir / "no/such/dir/x.svg", pts, fit, "x").empty());
}
