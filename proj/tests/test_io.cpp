#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "reflect/cli.hpp"

using namespace reflect;
namespace fs = std::filesystem;

namespace {

const GasSetup<double> gas2 = incident_shock(2.0, 1.0, 2.0);

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::vector<const char*> argv{"reflect"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc =
      cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return read_text_file(a) == read_text_file(b);
}

}  // namespace

TEST_CASE("configurations round-trip byte for byte") {
  RunConfig base;
  const std::string text = serialize(base);
  CHECK(serialize(parse_config(text)) == text);

  RunConfig c;
  c.resolution = 48;
  c.sigma = 0.02;
  c.omega = 0.65;
  c.out_dir = "run_a";
  c.emit_global_field = false;
  c.global_xi_min = -2.5;
  c.global_xi_max = 1.0;
  const std::string mutated = serialize(c);
  CHECK(serialize(parse_config(mutated)) == mutated);
  CHECK(mutated.find("sigma=0.02\n") != std::string::npos);
  CHECK(mutated.find("theta_w=") == std::string::npos);

  RunConfig t;
  t.theta_w = 1.5;
  const std::string angled = serialize(t);
  CHECK(angled.find("theta_w=1.5\n") != std::string::npos);
  CHECK(angled.find("sigma=") == std::string::npos);
  CHECK(serialize(parse_config(angled)) == angled);

  const RunConfig defaults = parse_config("");
  CHECK(defaults.sigma == 0.01);
  CHECK(defaults.resolution == 64);
  CHECK(defaults.out_dir == "out");

  const RunConfig commented =
      parse_config("# header\n\n  gamma = 2.5 # inline note\nresolution=32\n");
  CHECK(commented.gamma == 2.5);
  CHECK(commented.resolution == 32);
}

TEST_CASE("malformed configurations are refused") {
  CHECK_THROWS_AS(parse_config("wavelength=3\n"), ParseError);
  CHECK_THROWS_AS(parse_config("resolution=abc\n"), ParseError);
  CHECK_THROWS_AS(parse_config("resolution=2.5\n"), ParseError);
  CHECK_THROWS_AS(parse_config("emit_psi_field=maybe\n"), ParseError);
  CHECK_THROWS_AS(parse_config("gamma=2\ngamma=2.1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("sigma=0.01\ntheta_w=1.5\n"), ParseError);
  CHECK_THROWS_AS(parse_config("just a line\n"), ParseError);
  CHECK_THROWS_AS(parse_config("omega=\n"), ParseError);
}

TEST_CASE("hashing is stable and sensitive") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.resolution = 65;
  CHECK(config_hash(a) != config_hash(b));

  const std::string hex = hash_hex(config_hash(a));
  CHECK(hex.size() == 16);
  CHECK(hex.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("csv writers round-trip exactly through the reader") {
  const StateTwo<double> st = state2_solve(gas2, std::numbers::pi / 2 - 0.01);
  const auto fb = FreeBoundaryCurve::straight_reference(st, 8);
  IterationConfig it;
  const auto dom = build_domain(st, fb, 8, 8, it.epsilon_for(st));
  const ArrayXXd psi = 0.1 * dom.x * dom.x;
  const std::uint64_t hash = 0x0123456789abcdefULL;

  const fs::path dir = fresh_dir("reflect_io_csv");
  write_text_file(dir / "field.csv", field_csv(dom, psi, hash));
  const CsvTable t = read_csv(dir / "field.csv");
  REQUIRE(t.columns ==
          std::vector<std::string>{"i", "j", "xi", "eta", "x", "y", "psi"});
  CHECK(t.config_hash == "0123456789abcdef");
  REQUIRE(t.rows.size() == 81);
  const auto& row = t.rows[3 * 9 + 5];  // node (3, 5)
  CHECK(row[0] == 3.0);
  CHECK(row[1] == 5.0);
  CHECK(row[2] == dom.xi(3, 5));
  CHECK(row[3] == dom.eta(3, 5));
  CHECK(row[6] == psi(3, 5));

  write_text_file(dir / "curve.csv", curve_csv(fb, hash));
  const CsvTable ct = read_csv(dir / "curve.csv");
  REQUIRE(ct.columns == std::vector<std::string>{"eta", "xi"});
  REQUIRE(ct.rows.size() == 9);
  CHECK(ct.rows[0][0] == fb.samples_eta()[0]);
  CHECK(ct.rows[8][1] == fb.samples_val()[8]);

  const std::vector<Vec2<double>> pts{{1.0, 2.0}, {0.5, 1.5}, {0.25, 1.0}};
  write_text_file(dir / "poly.csv", polyline_csv(pts, hash));
  const CsvTable pt = read_csv(dir / "poly.csv");
  REQUIRE(pt.rows.size() == 3);
  CHECK(pt.rows[1][0] == 1.5);  // eta column first
  CHECK(pt.rows[1][1] == 0.5);

  CHECK_THROWS_AS(read_csv(dir / "absent.csv"), ParseError);
  write_text_file(dir / "headerless.csv", "1,2\n");
  CHECK_THROWS_AS(read_csv(dir / "headerless.csv"), ParseError);
}

TEST_CASE("solve emits a complete, byte-stable run directory") {
  RunConfig cfg;
  cfg.sigma = 0.01;
  cfg.resolution = 16;
  cfg.global_nx = 24;
  cfg.global_ny = 16;
  const fs::path work = fresh_dir("reflect_io_solve");
  const fs::path cfg_path = work / "run.cfg";
  write_text_file(cfg_path, serialize(cfg));

  const fs::path dir_a = work / "a";
  const fs::path dir_b = work / "b";
  std::string out;
  REQUIRE(run_cli({"solve", cfg_path.string(), "--out", dir_a.string()},
                  &out) == 0);
  CHECK(out.find("converged=true") != std::string::npos);
  CHECK(out.find("FAIL") == std::string::npos);
  REQUIRE(run_cli({"solve", cfg_path.string(), "--out", dir_b.string()}) == 0);

  for (const char* name :
       {"config.echo", "summary.txt", "psi_field.csv", "free_boundary.csv",
        "shock_polyline.csv", "global_field.csv"}) {
    INFO(name);
    REQUIRE(fs::exists(dir_a / name));
    CHECK(same_bytes(dir_a / name, dir_b / name));
  }
  CHECK(read_text_file(dir_a / "config.echo") == serialize(cfg));

  const std::string summary = read_text_file(dir_a / "summary.txt");
  CHECK(summary.find("config_hash=" + hash_hex(config_hash(cfg))) !=
        std::string::npos);
  CHECK(summary.find("converged=true\n") != std::string::npos);
  CHECK(summary.find("verification_pass=true\n") != std::string::npos);
  CHECK(summary.find("check_shock_conditions=pass\n") != std::string::npos);

  SECTION("verify accepts the emitted directory") {
    std::string vout;
    CHECK(run_cli({"verify", "--dir", dir_a.string()}, &vout) == 0);
    CHECK(vout.find("PASS") != std::string::npos);
    CHECK(vout.find("FAIL") == std::string::npos);
  }

  SECTION("verify flags a corrupted field") {
    // Bump one interior psi value; node coordinates stay consistent.
    const fs::path field = dir_a / "psi_field.csv";
    std::istringstream in(read_text_file(field));
    std::string line, rebuilt;
    int lineno = 0;
    const int target = 2 + 8 * 17 + 4;  // header lines + node (8, 4)
    while (std::getline(in, line)) {
      if (lineno == target) line = line.substr(0, line.rfind(',') + 1) + "0.5";
      rebuilt += line + "\n";
      ++lineno;
    }
    write_text_file(field, rebuilt);
    std::string vout;
    CHECK(run_cli({"verify", "--dir", dir_a.string()}, &vout) == 3);
    CHECK(vout.find("FAIL") != std::string::npos);
  }

  SECTION("verify refuses a stale configuration echo") {
    RunConfig other = cfg;
    other.resolution = 24;
    write_text_file(dir_a / "config.echo", serialize(other));
    std::string eout;
    CHECK(run_cli({"verify", "--dir", dir_a.string()}, nullptr, &eout) == 1);
    CHECK(eout.find("config.echo") != std::string::npos);
  }
}

TEST_CASE("head-on solve leaves a straight shock trace") {
  RunConfig cfg;
  cfg.theta_w = std::numbers::pi / 2;
  cfg.resolution = 16;
  cfg.global_nx = 16;
  cfg.global_ny = 12;
  const fs::path work = fresh_dir("reflect_io_headon");
  const fs::path cfg_path = work / "run.cfg";
  write_text_file(cfg_path, serialize(cfg));
  REQUIRE(run_cli({"solve", cfg_path.string(), "--out",
                   (work / "out").string()}) == 0);

  const StateTwo<double> st = state2_solve(gas2, std::numbers::pi / 2);
  const CsvTable poly = read_csv(work / "out" / "shock_polyline.csv");
  REQUIRE(poly.rows.size() > 10);
  double dev = 0;
  for (const auto& r : poly.rows) {
    dev = std::max(dev, std::abs(r[1] - (st.u2 + st.nr.xibar)));
  }
  CHECK(dev < 1e-6);
}

TEST_CASE("command line maps failures onto distinct exit codes") {
  std::string out, err;

  SECTION("missing required option is a usage error") {
    CHECK(run_cli({"state2", "--gamma", "2", "--rho0", "1"}, &out, &err) == 1);
  }

  SECTION("no subcommand is a usage error") {
    CHECK(run_cli({}, &out, &err) == 1);
  }

  SECTION("help exits cleanly") {
    CHECK(run_cli({"--help"}, &out, &err) == 0);
    CHECK(out.find("state2") != std::string::npos);
  }

  SECTION("state2 prints the reflection state") {
    REQUIRE(run_cli({"state2", "--gamma", "2", "--rho0", "1", "--rho1", "2",
                     "--theta-w", "1.5707963267948966"},
                    &out) == 0);
    CHECK(out.find("rho2bar=3.33333333333") != std::string::npos);
    CHECK(out.find("xibar=-1.22474487139") != std::string::npos);
    CHECK(out.find("c2bar=1.82574185835") != std::string::npos);
    CHECK(out.find("P0_xi=") != std::string::npos);
  }

  SECTION("state2 needs exactly one angle option") {
    CHECK(run_cli({"state2", "--gamma", "2", "--rho0", "1", "--rho1", "2"},
                  &out, &err) == 1);
    CHECK(run_cli({"state2", "--gamma", "2", "--rho0", "1", "--rho1", "2",
                   "--sigma", "0.01", "--theta-w", "1.5"},
                  &out, &err) == 1);
  }

  SECTION("angle outside the solver basin is a solver failure") {
    CHECK(run_cli({"state2", "--gamma", "2", "--rho0", "1", "--rho1", "2",
                   "--sigma", "0.5"},
                  &out, &err) == 2);
  }

  SECTION("missing configuration file is a usage error") {
    CHECK(run_cli({"solve", "/nonexistent/run.cfg"}, &out, &err) == 1);
  }
}

TEST_CASE("sweep writes the study table") {
  RunConfig cfg;
  cfg.resolution = 16;
  const fs::path work = fresh_dir("reflect_io_sweep");
  const fs::path cfg_path = work / "base.cfg";
  write_text_file(cfg_path, serialize(cfg));

  std::string out;
  REQUIRE(run_cli({"sweep", "--config", cfg_path.string(), "--sigma", "0",
                   "--out", (work / "study").string()},
                  &out) == 0);
  CHECK(out.find("converged=true") != std::string::npos);

  const CsvTable t = read_csv(work / "study" / "sweep.csv");
  REQUIRE(t.columns ==
          std::vector<std::string>{"sigma", "theta_w", "sup_f_deviation",
                                   "w11_distance", "endpoint_error",
                                   "outer_iterations", "converged"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == 0.0);
  CHECK(t.rows[0][2] <= 1e-10);  // head-on shock is exactly straight
  CHECK(t.rows[0][6] == 1.0);

  SECTION("an empty sigma list is a usage error") {
    std::string err;
    CHECK(run_cli({"sweep", "--config", cfg_path.string(), "--out",
                   (work / "s2").string()},
                  &out, &err) == 1);
  }
}
