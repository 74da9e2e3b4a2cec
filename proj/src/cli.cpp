#include "arisac/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "arisac/model.hpp"

namespace arisac::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int(const std::string& s, long long& out) {
  try {
    std::size_t pos = 0;
    out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Signal-free surface power draw at full amplitude; the budget must at
// least cover it or no reflection vector is feasible.
double static_draw_at_full_amplitude(const Scenario& sc) {
  const double d = scenario::distance(sc.ris_pos, sc.target_pos);
  const double alpha_sq =
      scenario::path_loss(d, sc.pl_exp_ris_target, sc.pathloss_ref, sc.pathloss_d0);
  const double u = sc.m_elements * sc.a_max * sc.a_max;
  return sc.rcs_var * sc.noise_ris * alpha_sq * alpha_sq * u * u +
         2.0 * sc.noise_ris * u;
}

// Applies one key to the scenario; returns an error string or "".
std::string apply_key(Scenario& sc, const std::string& key, const std::string& val,
                      bool& gamma_seen, double& gamma_linear) {
  double d = 0.0;
  long long i = 0;
  const auto want_double = [&](double& target) -> std::string {
    if (!parse_double(val, d)) return "expected a number for '" + key + "'";
    target = d;
    return "";
  };
  const auto want_int = [&](int& target) -> std::string {
    if (!parse_int(val, i)) return "expected an integer for '" + key + "'";
    target = static_cast<int>(i);
    return "";
  };

  if (key == "n_antennas") return want_int(sc.n_antennas);
  if (key == "m_elements") return want_int(sc.m_elements);
  if (key == "k_users") return want_int(sc.k_users);
  if (key == "n_samples") return want_int(sc.n_samples);
  if (key == "seed") {
    if (!parse_int(val, i) || i < 0) return "expected a nonnegative integer for 'seed'";
    sc.seed = static_cast<std::uint64_t>(i);
    return "";
  }
  if (key == "p_bs") return want_double(sc.p_bs);
  if (key == "p_ris") return want_double(sc.p_ris);
  if (key == "p_bs_dbm") {
    const auto e = want_double(sc.p_bs);
    if (e.empty()) sc.p_bs = dbm_to_watt(sc.p_bs);
    return e;
  }
  if (key == "p_ris_dbm") {
    const auto e = want_double(sc.p_ris);
    if (e.empty()) sc.p_ris = dbm_to_watt(sc.p_ris);
    return e;
  }
  if (key == "noise_dbm") {
    if (!parse_double(val, d)) return "expected a number for 'noise_dbm'";
    sc.noise_user = sc.noise_ris = sc.noise_bs = dbm_to_watt(d);
    return "";
  }
  if (key == "noise_user_dbm" || key == "noise_ris_dbm" || key == "noise_bs_dbm") {
    if (!parse_double(val, d)) return "expected a number for '" + key + "'";
    (key == "noise_user_dbm" ? sc.noise_user
                             : key == "noise_ris_dbm" ? sc.noise_ris : sc.noise_bs) =
        dbm_to_watt(d);
    return "";
  }
  if (key == "a_max") return want_double(sc.a_max);
  if (key == "rcs_var") return want_double(sc.rcs_var);
  if (key == "gamma_db") {
    if (!parse_double(val, d)) return "expected a number for 'gamma_db'";
    gamma_seen = true;
    gamma_linear = db_to_linear(d);
    return "";
  }
  if (key == "gamma") {
    if (!parse_double(val, d)) return "expected a number for 'gamma'";
    gamma_seen = true;
    gamma_linear = d;
    return "";
  }
  if (key == "rician_k_db") {
    const auto e = want_double(sc.rician_k);
    if (e.empty()) sc.rician_k = db_to_linear(sc.rician_k);
    return e;
  }
  if (key == "rician_k") return want_double(sc.rician_k);
  if (key == "bs_x") return want_double(sc.bs_pos.x);
  if (key == "bs_y") return want_double(sc.bs_pos.y);
  if (key == "ris_x") return want_double(sc.ris_pos.x);
  if (key == "ris_y") return want_double(sc.ris_pos.y);
  if (key == "target_x") return want_double(sc.target_pos.x);
  if (key == "target_y") return want_double(sc.target_pos.y);
  if (key == "user_center_x") return want_double(sc.user_center.x);
  if (key == "user_center_y") return want_double(sc.user_center.y);
  if (key == "user_radius") return want_double(sc.user_radius);
  if (key == "pl_exp_bs_ris") return want_double(sc.pl_exp_bs_ris);
  if (key == "pl_exp_bs_user") return want_double(sc.pl_exp_bs_user);
  if (key == "pl_exp_ris_user") return want_double(sc.pl_exp_ris_user);
  if (key == "pl_exp_ris_target") return want_double(sc.pl_exp_ris_target);
  if (key == "pathloss_ref") return want_double(sc.pathloss_ref);
  if (key == "pathloss_d0") return want_double(sc.pathloss_d0);
  if (key == "n_samples_l") return want_int(sc.n_samples);
  return "unknown key '" + key + "'";
}

// Parses scenario keys, skipping any key in `reserved` (used by the sweep
// spec parser, which shares the file format).
ConfigResult parse_config_lines(const std::string& text,
                                const std::vector<std::string>& reserved) {
  ConfigResult res;
  bool gamma_seen = false;
  double gamma_linear = db_to_linear(16.0);  // documented default target
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      res.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (std::find(reserved.begin(), reserved.end(), key) != reserved.end()) continue;
    const std::string err = apply_key(res.sc, key, val, gamma_seen, gamma_linear);
    if (!err.empty())
      res.errors.push_back("line " + std::to_string(lineno) + ": " + err);
  }
  res.sc.set_uniform_sinr_target(gamma_linear);
  for (const auto& v : res.sc.validate()) res.errors.push_back(v);
  if (res.errors.empty() && static_draw_at_full_amplitude(res.sc) >= res.sc.p_ris)
    res.warnings.push_back(
        "surface power budget is below the signal-free draw at full amplitude; "
        "the reflection vector will be scaled down");
  return res;
}

driver::DesignResult run_variant(const std::string& variant, const Scenario& sc,
                                 const scenario::ChannelSet& ch,
                                 const driver::DriverOptions& opts) {
  if (variant == "aris-isac") return driver::run_bcd(sc, ch, opts);
  if (variant == "pris-isac") return driver::run_passive_baseline(sc, ch, opts);
  if (variant == "aris-radar-only") return driver::run_radar_only(sc, ch, opts);
  throw std::invalid_argument("unknown variant '" + variant + "'");
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ConfigResult parse_scenario_config(const std::string& text) {
  return parse_config_lines(text, {});
}

ConfigResult load_scenario_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    ConfigResult res;
    res.errors.push_back("cannot open config file '" + path + "'");
    return res;
  }
  std::ostringstream os;
  os << f.rdbuf();
  return parse_scenario_config(os.str());
}

SweepSpecResult parse_sweep_spec(const std::string& text) {
  SweepSpecResult res;
  const std::vector<std::string> reserved = {"sweep_param", "sweep_values", "seeds",
                                             "variants", "out"};
  // First pass: the sweep keys themselves.
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;  // reported by the scenario pass
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "sweep_param") {
      res.spec.param = val;
    } else if (key == "sweep_values") {
      for (const auto& item : split(val, ',')) {
        double d = 0.0;
        if (!parse_double(item, d))
          res.errors.push_back("line " + std::to_string(lineno) +
                               ": bad sweep value '" + item + "'");
        else
          res.spec.values.push_back(d);
      }
    } else if (key == "seeds") {
      for (const auto& item : split(val, ',')) {
        long long s = 0;
        if (!parse_int(item, s) || s < 0)
          res.errors.push_back("line " + std::to_string(lineno) + ": bad seed '" +
                               item + "'");
        else
          res.spec.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "variants") {
      res.spec.variants = split(val, ',');
    } else if (key == "out") {
      res.spec.out_dir = val;
    }
  }
  ConfigResult base = parse_config_lines(text, reserved);
  res.base = base.sc;
  for (const auto& e : base.errors) res.errors.push_back(e);

  if (res.spec.variants.empty()) res.spec.variants = {"aris-isac"};
  if (res.spec.seeds.empty()) res.spec.seeds = {1};
  static const std::vector<std::string> known_params = {
      "p_bs", "gamma", "m_elements", "n_antennas", "k_users", "ris_x_position"};
  if (std::find(known_params.begin(), known_params.end(), res.spec.param) ==
      known_params.end())
    res.errors.push_back("sweep_param must be one of p_bs, gamma, m_elements, "
                         "n_antennas, k_users, ris_x_position");
  if (res.spec.values.empty()) res.errors.push_back("sweep_values is empty");
  return res;
}

Scenario apply_param(const Scenario& base, const std::string& param, double value) {
  Scenario sc = base;
  if (param == "p_bs") {
    sc.p_bs = dbm_to_watt(value);
  } else if (param == "gamma") {
    sc.set_uniform_sinr_target(db_to_linear(value));
  } else if (param == "m_elements") {
    sc.m_elements = static_cast<int>(std::lround(value));
  } else if (param == "n_antennas") {
    sc.n_antennas = static_cast<int>(std::lround(value));
  } else if (param == "k_users") {
    sc.k_users = static_cast<int>(std::lround(value));
    const double gamma = base.sinr_targets.empty() ? db_to_linear(16.0)
                                                   : base.sinr_targets.front();
    sc.set_uniform_sinr_target(gamma);
  } else if (param == "ris_x_position") {
    sc.ris_pos.x = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + param + "'");
  }
  return sc;
}

SweepResult run_sweep(const SweepSpec& spec, const Scenario& base,
                      const driver::DriverOptions& opts, int jobs) {
  struct Task {
    std::string variant;
    double value;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& variant : spec.variants)
    for (const double value : spec.values)
      for (const std::uint64_t seed : spec.seeds) tasks.push_back({variant, value, seed});

  SweepResult res;
  res.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      SweepRow row;
      row.variant = t.variant;
      row.param = spec.param;
      row.value = t.value;
      row.seed = t.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        Scenario sc = apply_param(base, spec.param, t.value);
        sc.seed = t.seed;
        sc.require_valid();
        const auto ch = scenario::synthesize_channels(sc);
        const auto dres = run_variant(t.variant, sc, ch, opts);
        switch (dres.status) {
          case driver::RunStatus::Converged: row.status = "converged"; break;
          case driver::RunStatus::MaxIter: row.status = "max-iter"; break;
          case driver::RunStatus::Infeasible: row.status = "infeasible"; break;
        }
        if (dres.status != driver::RunStatus::Infeasible) {
          row.crb_rad2 = dres.crb_theta;
          row.crb_db = linear_to_db(dres.crb_theta);
          const auto& last = dres.trace.back();
          row.min_sinr_db = sc.k_users > 0 && t.variant != "aris-radar-only"
                                ? last.min_sinr_margin_db +
                                      linear_to_db(sc.sinr_targets.front())
                                : std::numeric_limits<double>::infinity();
          row.bs_power_w = last.bs_power_w;
          row.ris_power_w = last.ris_power_w;
          row.outer_iters = static_cast<int>(dres.trace.size());
        }
      } catch (const std::exception& e) {
        std::string what = e.what();
        std::replace(what.begin(), what.end(), ',', ';');
        std::replace(what.begin(), what.end(), '\n', ' ');
        row.status = "error: " + what;
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      res.rows[i] = std::move(row);
    }
  };
  const int nworkers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  res.csv = rows_to_csv(res.rows);
  res.median_csv = rows_to_median_csv(res.rows);
  return res;
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "variant,param,value,seed,crb_rad2,crb_db,min_sinr_db,bs_power_w,"
        "ris_power_w,outer_iters,wall_ms,status\n";
  for (const auto& r : rows) {
    os << r.variant << ',' << r.param << ',' << fmt(r.value) << ',' << r.seed << ','
       << fmt(r.crb_rad2) << ',' << fmt(r.crb_db) << ',' << fmt(r.min_sinr_db) << ','
       << fmt(r.bs_power_w) << ',' << fmt(r.ris_power_w) << ',' << r.outer_iters << ','
       << fmt(r.wall_ms) << ',' << r.status << '\n';
  }
  return os.str();
}

std::string rows_to_median_csv(const std::vector<SweepRow>& rows) {
  struct Group {
    std::string variant;
    double value;
    std::vector<double> crb_rad2, crb_db, min_sinr_db;
  };
  std::vector<Group> groups;
  std::string param;
  for (const auto& r : rows) {
    param = r.param;
    if (r.status != "converged" && r.status != "max-iter") continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.variant == r.variant && g.value == r.value;
    });
    if (it == groups.end()) {
      groups.push_back({r.variant, r.value, {}, {}, {}});
      it = groups.end() - 1;
    }
    it->crb_rad2.push_back(r.crb_rad2);
    it->crb_db.push_back(r.crb_db);
    it->min_sinr_db.push_back(r.min_sinr_db);
  }
  std::ostringstream os;
  os << "variant,param,value,n_seeds,median_crb_rad2,median_crb_db,"
        "median_min_sinr_db\n";
  for (const auto& g : groups) {
    os << g.variant << ',' << param << ',' << fmt(g.value) << ',' << g.crb_rad2.size()
       << ',' << fmt(median_of(g.crb_rad2)) << ',' << fmt(median_of(g.crb_db)) << ','
       << fmt(median_of(g.min_sinr_db)) << '\n';
  }
  return os.str();
}

std::string strip_timing(const std::string& csv) {
  std::ostringstream os;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) {
    const auto cols = split(line, ',');
    bool first = true;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i == 10) continue;  // wall_ms
      if (!first) os << ',';
      first = false;
      os << cols[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace arisac::cli
