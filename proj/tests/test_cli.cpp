#include <algorithm>
#include <cmath>
#include <sstream>

#include "arisac/cli.hpp"
#include "doctest.h"

using namespace arisac;
using namespace arisac::cli;

namespace {

std::string desk_config() {
  return "n_antennas = 4\n"
         "m_elements = 4\n"
         "k_users = 2\n"
         "a_max = 4\n"
         "gamma_db = 10\n";
}

driver::DriverOptions fast_opts() {
  driver::DriverOptions opts;
  opts.max_outer = 4;
  opts.inner.max_iters = 8;
  return opts;
}

std::vector<std::string> csv_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("an empty config yields the documented defaults") {
  const ConfigResult res = parse_scenario_config("");
  REQUIRE(res.ok());
  CHECK(res.sc.n_antennas == 16);
  CHECK(res.sc.m_elements == 8);
  CHECK(res.sc.k_users == 2);
  CHECK(res.sc.n_samples == 1024);
  CHECK(res.sc.a_max == 8.0);
  REQUIRE(res.sc.sinr_targets.size() == 2);
  CHECK(res.sc.sinr_targets[0] == doctest::Approx(db_to_linear(16.0)));
  CHECK(watt_to_dbm(res.sc.p_bs) == doctest::Approx(23.0));
}

TEST_CASE("dBm keys convert at the parse boundary") {
  const ConfigResult res = parse_scenario_config(
      "p_bs_dbm = 27\np_ris_dbm = 13\nnoise_dbm = -70\n");
  REQUIRE(res.ok());
  CHECK(res.sc.p_bs == doctest::Approx(dbm_to_watt(27.0)));
  CHECK(res.sc.p_ris == doctest::Approx(dbm_to_watt(13.0)));
  CHECK(res.sc.noise_user == doctest::Approx(dbm_to_watt(-70.0)));
  CHECK(res.sc.noise_ris == doctest::Approx(dbm_to_watt(-70.0)));
  CHECK(res.sc.noise_bs == doctest::Approx(dbm_to_watt(-70.0)));
}

TEST_CASE("every config problem is reported with its line") {
  const ConfigResult res = parse_scenario_config(
      "a_max = 0.5\n"
      "bogus_key = 3\n"
      "n_antennas = charlie\n");
  REQUIRE(!res.ok());
  bool saw_amax = false, saw_bogus = false, saw_number = false;
  for (const auto& e : res.errors) {
    if (e.find("a_max") != std::string::npos) saw_amax = true;
    if (e.find("line 2") != std::string::npos &&
        e.find("bogus_key") != std::string::npos)
      saw_bogus = true;
    if (e.find("line 3") != std::string::npos) saw_number = true;
  }
  CHECK(saw_amax);
  CHECK(saw_bogus);
  CHECK(saw_number);
}

TEST_CASE("an undersized surface budget raises a warning, not an error") {
  const ConfigResult res = parse_scenario_config("p_ris_dbm = -95\n");
  REQUIRE(res.ok());
  REQUIRE(!res.warnings.empty());
  CHECK(res.warnings[0].find("signal-free draw") != std::string::npos);
}

TEST_CASE("sweep specs parse values, seeds, and variants") {
  const SweepSpecResult res = parse_sweep_spec(
      desk_config() +
      "sweep_param = p_bs\n"
      "sweep_values = 17, 23, 29\n"
      "seeds = 1, 2, 3\n"
      "variants = aris-isac, aris-radar-only\n"
      "out = /tmp/sweep_out\n");
  REQUIRE(res.ok());
  CHECK(res.spec.param == "p_bs");
  CHECK(res.spec.values == std::vector<double>{17.0, 23.0, 29.0});
  CHECK(res.spec.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(res.spec.variants == std::vector<std::string>{"aris-isac", "aris-radar-only"});
  CHECK(res.spec.out_dir == "/tmp/sweep_out");
  CHECK(res.base.n_antennas == 4);

  const SweepSpecResult bad = parse_sweep_spec("sweep_param = warp\nsweep_values = 1\n");
  REQUIRE(!bad.ok());
  CHECK(bad.errors[0].find("sweep_param") != std::string::npos);
}

TEST_CASE("swept parameters land on the right scenario fields") {
  Scenario base = parse_scenario_config(desk_config()).sc;
  CHECK(apply_param(base, "p_bs", 26.0).p_bs == doctest::Approx(dbm_to_watt(26.0)));
  CHECK(apply_param(base, "gamma", 12.0).sinr_targets[0] ==
        doctest::Approx(db_to_linear(12.0)));
  CHECK(apply_param(base, "m_elements", 6.0).m_elements == 6);
  CHECK(apply_param(base, "n_antennas", 8.0).n_antennas == 8);
  const Scenario more_users = apply_param(base, "k_users", 3.0);
  CHECK(more_users.k_users == 3);
  CHECK(more_users.sinr_targets.size() == 3);
  CHECK(more_users.sinr_targets[2] == doctest::Approx(base.sinr_targets[0]));
  CHECK(apply_param(base, "ris_x_position", -7.5).ris_pos.x == -7.5);
  CHECK_THROWS_AS(apply_param(base, "bandwidth", 1.0), std::invalid_argument);
}

TEST_CASE("a singleton sweep emits exactly one data row with the fixed schema") {
  const Scenario base = parse_scenario_config(desk_config()).sc;
  SweepSpec spec;
  spec.param = "p_bs";
  spec.values = {23.0};
  spec.seeds = {1};
  spec.variants = {"aris-isac"};
  const SweepResult res = run_sweep(spec, base, fast_opts());
  const auto lines = csv_lines(res.csv);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] ==
        "variant,param,value,seed,crb_rad2,crb_db,min_sinr_db,bs_power_w,"
        "ris_power_w,outer_iters,wall_ms,status");
  const auto fields = csv_fields(lines[1]);
  REQUIRE(fields.size() == 12);
  CHECK(fields[0] == "aris-isac");
  CHECK(fields[1] == "p_bs");
  CHECK(fields[3] == "1");
  CHECK((fields[11] == "converged" || fields[11] == "max-iter"));
  CHECK(std::stod(fields[4]) > 0.0);
}

TEST_CASE("more transmit power never worsens the median bound") {
  const Scenario base = parse_scenario_config(desk_config()).sc;
  SweepSpec spec;
  spec.param = "p_bs";
  spec.values = {20.0, 23.0, 29.0};
  spec.seeds = {1, 2, 3};
  spec.variants = {"aris-isac"};
  const SweepResult res = run_sweep(spec, base, fast_opts());
  const auto lines = csv_lines(res.median_csv);
  REQUIRE(lines.size() == 4);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv_fields(lines[i]);
    REQUIRE(f.size() == 7);
    CHECK(f[3] == "3");  // all seeds succeeded
    const double crb_db = std::stod(f[5]);
    CHECK(crb_db <= prev + 1e-9);
    prev = crb_db;
  }
}

TEST_CASE("medians agree with an independent aggregation of the raw rows") {
  const Scenario base = parse_scenario_config(desk_config()).sc;
  SweepSpec spec;
  spec.param = "gamma";
  spec.values = {6.0, 10.0};
  spec.seeds = {1, 2, 3};
  spec.variants = {"aris-isac"};
  const SweepResult res = run_sweep(spec, base, fast_opts());
  for (const double value : spec.values) {
    std::vector<double> crbs;
    for (const auto& r : res.rows)
      if (r.value == value && (r.status == "converged" || r.status == "max-iter"))
        crbs.push_back(r.crb_db);
    REQUIRE(crbs.size() == 3);
    std::sort(crbs.begin(), crbs.end());
    const double expect = crbs[1];
    bool found = false;
    for (const auto& line : csv_lines(res.median_csv)) {
      const auto f = csv_fields(line);
      if (f.size() == 7 && f[0] == "aris-isac" && std::stod(f[2]) == value) {
        CHECK(std::stod(f[5]) == doctest::Approx(expect).epsilon(1e-9));
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("identical sweeps give identical output up to timing") {
  const Scenario base = parse_scenario_config(desk_config()).sc;
  SweepSpec spec;
  spec.param = "m_elements";
  spec.values = {4.0};
  spec.seeds = {1, 2};
  spec.variants = {"aris-isac", "aris-radar-only"};
  const SweepResult a = run_sweep(spec, base, fast_opts());
  const SweepResult b = run_sweep(spec, base, fast_opts(), 2);
  CHECK(strip_timing(a.csv) == strip_timing(b.csv));
  CHECK(a.median_csv == b.median_csv);
}

TEST_CASE("a failing run is a status entry, not an abort") {
  const Scenario base = parse_scenario_config(desk_config()).sc;
  SweepSpec spec;
  spec.param = "gamma";
  spec.values = {100.0};  // unreachable target
  spec.seeds = {1};
  spec.variants = {"aris-isac"};
  const SweepResult res = run_sweep(spec, base, fast_opts());
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].status == "infeasible");
  // The median table simply has no surviving rows for this point.
  CHECK(csv_lines(res.median_csv).size() == 1);
}
