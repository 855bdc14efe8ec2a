#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flcboot/errors.hpp"
#include "flcboot/harness.hpp"

namespace flcboot {

// Grammar of the experiment configuration file; also printed by the CLI's
// print-schema command.
inline const char* config_schema_text() {
  return R"(flcboot experiment configuration, schema version 1

Plain text. One "key = value" pair per line. Lines whose first non-blank
character is '#' are comments. A line of the form [scenario] or [method]
opens a new section; keys before the first section are global. Unknown keys
are errors.

Global keys:
  schema      = 1                   required, must equal 1
  replicates  = <int >= 1>          datasets per scenario (default 1)
  alpha       = <real in (0,1)>     nominal level (default 0.05)
  seed        = <uint64>            master seed (default 0)
  workers     = <int >= 1>          worker threads (default 1)
  output      = <path>              CSV destination (default results.csv)

[scenario] keys (one section per simulation cell):
  setting = s1 | s2 | s3            required
  n       = <int >= 1>              number of clusters (required)
  m       = <int >= 1>              cluster size (required)
  error   = normal | student | chisq | 2cmm
                                    error distribution (default normal);
                                    aliases: student_t3, chisq3, mixture
  sigma   = <real > 0>              error scale (default 1)
  d       = a b c d                 row-major 2x2 matrix: the full covariance
                                    for s1, the tested block for s2
                                    (default all zero)
  tau     = <real >= 0>             s3 covariance parameter (default 0)
  beta    = v1 v2 ...               fixed-effect coefficients; the length sets
                                    the number of fixed covariates (default:
                                    ones; 2 for s1/s2, 8 for s3)
  label   = <string>                row label in the output table (optional)
  r0      = <int>                   override of the untested column count
  seed    = <uint64>                per-scenario generation seed (optional)

[method] keys (one section per testing method):
  name    = flc | bt | bt_nonnull | bt_mn | fdb | db   required
  b       = <int >= 1>              bootstrap samples (default 199)
  b2      = <int >= 1>              second-level samples, db only (default 1)
  m_boot  = <int >= 1> | auto       bt_mn resample size parameter
                                    (default auto: variance-ratio heuristic)
)";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline long long parse_int(const std::string& value, const std::string& key) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + value + "'");
  return v;
}

inline double parse_real(const std::string& value, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  return v;
}

inline std::vector<double> parse_reals(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_real(token, key));
  if (out.empty()) throw ConfigError("config: '" + key + "' expects at least one number");
  return out;
}

inline Setting parse_setting(const std::string& value) {
  const std::string v = lower(value);
  if (v == "s1" || v == "1") return Setting::S1;
  if (v == "s2" || v == "2") return Setting::S2;
  if (v == "s3" || v == "3") return Setting::S3;
  throw ConfigError("config: unknown setting '" + value + "'");
}

inline ErrorTag parse_error_tag(const std::string& value) {
  const std::string v = lower(value);
  if (v == "normal" || v == "gaussian") return ErrorTag::NORMAL;
  if (v == "student" || v == "student_t3" || v == "t3") return ErrorTag::STUDENT_T3;
  if (v == "chisq" || v == "chisq3" || v == "chisq3_centered") return ErrorTag::CHISQ3_CENTERED;
  if (v == "2cmm" || v == "mixture" || v == "two_comp_mixture") return ErrorTag::TWO_COMP_MIXTURE;
  throw ConfigError("config: unknown error distribution '" + value + "'");
}

inline Method parse_method_name(const std::string& value) {
  const std::string v = lower(value);
  if (v == "flc") return Method::FLC;
  if (v == "bt") return Method::BT;
  if (v == "bt_nonnull") return Method::BT_NONNULL;
  if (v == "bt_mn") return Method::BT_MN;
  if (v == "fdb") return Method::FDB;
  if (v == "db") return Method::DB;
  throw ConfigError("config: unknown method '" + value + "'");
}

// Raw scenario keys; resolved into a ScenarioSpec once the section closes so
// key order inside the section does not matter.
struct ScenarioDraft {
  bool has_setting = false;
  Setting setting = Setting::S1;
  int n = 0, m = 0;
  ErrorTag error = ErrorTag::NORMAL;
  double sigma = 1.0;
  std::vector<double> d;
  double tau = 0.0;
  bool has_tau = false;
  std::vector<double> beta;
  std::string label;
  int r0 = -1;
  std::uint64_t seed = 0;

  ScenarioSpec resolve() const {
    if (!has_setting) throw ConfigError("config: [scenario] missing 'setting'");
    if (n < 1 || m < 1) throw ConfigError("config: [scenario] needs n >= 1 and m >= 1");
    ScenarioSpec spec = make_scenario(setting, n, m, ErrorDistribution{error, sigma});
    if (!d.empty()) {
      if (setting == Setting::S3)
        throw ConfigError("config: 'd' is not accepted for s3; use 'tau'");
      if (d.size() != 4)
        throw ConfigError("config: 'd' expects 4 entries (row-major 2x2)");
      Eigen::Matrix2d block;
      block << d[0], d[1], d[2], d[3];
      if (setting == Setting::S1)
        spec.D = block;
      else
        spec.D.bottomRightCorner(2, 2) = block;
    }
    if (has_tau) {
      if (setting != Setting::S3) throw ConfigError("config: 'tau' applies to s3 only");
      spec.tau = tau;
    }
    if (!beta.empty())
      spec.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                                    static_cast<Eigen::Index>(beta.size()));
    spec.label = label;
    spec.r0_override = r0;
    spec.seed = seed;
    return spec;
  }
};

struct MethodDraft {
  bool has_name = false;
  Method method = Method::FLC;
  int b = 199;
  int b2 = 1;
  int m = 0;

  MethodSpec resolve() const {
    if (!has_name) throw ConfigError("config: [method] missing 'name'");
    MethodSpec spec;
    spec.method = method;
    spec.B = b;
    spec.B2 = b2;
    spec.m = m;
    return spec;
  }
};

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  config.output_path = "results.csv";

  enum class Section { GLOBAL, SCENARIO, METHOD };
  Section section = Section::GLOBAL;
  detail::ScenarioDraft scenario;
  detail::MethodDraft method;
  bool schema_seen = false;

  auto close_section = [&] {
    if (section == Section::SCENARIO) config.scenarios.push_back(scenario.resolve());
    if (section == Section::METHOD) config.methods.push_back(method.resolve());
  };

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: malformed section header: " + line);
      const std::string name = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
      close_section();
      if (name == "scenario") {
        section = Section::SCENARIO;
        scenario = detail::ScenarioDraft{};
      } else if (name == "method") {
        section = Section::METHOD;
        method = detail::MethodDraft{};
      } else {
        throw ConfigError("config: unknown section [" + name + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' on line " + std::to_string(line_no));
    const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: empty key or value on line " + std::to_string(line_no));

    if (section == Section::GLOBAL) {
      if (key == "schema") {
        if (detail::parse_int(value, key) != 1)
          throw ConfigError("config: unsupported schema version '" + value + "'");
        schema_seen = true;
      } else if (key == "replicates") {
        config.replicates = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "alpha") {
        config.alpha = detail::parse_real(value, key);
      } else if (key == "seed") {
        config.seed = detail::parse_u64(value, key);
      } else if (key == "workers") {
        config.workers = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "output") {
        config.output_path = value;
      } else {
        throw ConfigError("config: unknown global key '" + key + "'");
      }
    } else if (section == Section::SCENARIO) {
      if (key == "setting") {
        scenario.setting = detail::parse_setting(value);
        scenario.has_setting = true;
      } else if (key == "n") {
        scenario.n = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "m") {
        scenario.m = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "error") {
        scenario.error = detail::parse_error_tag(value);
      } else if (key == "sigma") {
        scenario.sigma = detail::parse_real(value, key);
      } else if (key == "d") {
        scenario.d = detail::parse_reals(value, key);
      } else if (key == "tau") {
        scenario.tau = detail::parse_real(value, key);
        scenario.has_tau = true;
      } else if (key == "beta") {
        scenario.beta = detail::parse_reals(value, key);
      } else if (key == "label") {
        scenario.label = value;
      } else if (key == "r0") {
        scenario.r0 = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "seed") {
        scenario.seed = detail::parse_u64(value, key);
      } else {
        throw ConfigError("config: unknown [scenario] key '" + key + "'");
      }
    } else {
      if (key == "name") {
        method.method = detail::parse_method_name(value);
        method.has_name = true;
      } else if (key == "b") {
        method.b = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "b2") {
        method.b2 = static_cast<int>(detail::parse_int(value, key));
      } else if (key == "m_boot") {
        method.m = detail::lower(value) == "auto"
                       ? 0
                       : static_cast<int>(detail::parse_int(value, key));
        if (detail::lower(value) != "auto" && method.m < 1)
          throw ConfigError("config: m_boot must be >= 1 or auto");
      } else {
        throw ConfigError("config: unknown [method] key '" + key + "'");
      }
    }
  }
  close_section();

  if (!schema_seen) throw ConfigError("config: missing required 'schema = 1'");
  validate(config);
  return config;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot read config file: " + path);
  return parse_config(file);
}

}  // namespace flcboot
