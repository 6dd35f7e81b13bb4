#include "photostat/reports.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

double number_from(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw IoError("fit report: '" + where + "' is not a number");
}

const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw IoError("fit report: missing '" + where + key + "'");
  return j.at(key);
}

ojson measured(Measured m) { return {{"value", number(m.value)}, {"error", number(m.error)}}; }

ojson named_list(const std::vector<NamedValue>& v) {
  ojson a = ojson::array();
  for (const auto& n : v) {
    a.push_back({{"name", n.name}, {"value", number(n.value.value)}, {"error", number(n.value.error)},
                 {"unit", n.unit}});
  }
  return a;
}

std::vector<NamedValue> named_list_from(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw IoError("fit report: '" + where + "' must be an array");
  std::vector<NamedValue> out;
  for (const auto& e : j) {
    NamedValue n;
    n.name = field(e, "name", where + ".").get<std::string>();
    n.value.value = number_from(field(e, "value", where + "."), where + "." + n.name);
    n.value.error = number_from(field(e, "error", where + "."), where + "." + n.name);
    if (e.contains("unit")) n.unit = e.at("unit").get<std::string>();
    out.push_back(std::move(n));
  }
  return out;
}

ojson interval(const MeasuredInterval& m) { return {{"lower", measured(m.lower)}, {"upper", measured(m.upper)}}; }
ojson interval(const Interval& m) { return {{"lower", m.lower}, {"upper", m.upper}}; }

}  // namespace

std::string version() { return PHOTOSTAT_VERSION; }

ojson to_json(const Provenance& p) {
  ojson j{{"tool", p.tool}, {"version", p.version.empty() ? version() : p.version}, {"command", p.command}};
  if (!p.config_digest.empty()) j["config_digest"] = p.config_digest;
  j["rng_seed"] = p.rng_seed;
  ojson in = ojson::object();
  for (const auto& [k, v] : p.inputs) in[k] = v;
  j["inputs"] = in;
  return j;
}

ojson to_json(const FitReport& r) {
  ojson j;
  j["schema"] = kFitReportSchema;
  j["model"] = r.model;
  j["weighting"] = r.weighting;
  j["parameters"] = named_list(r.parameters);
  j["fixed"] = named_list(r.fixed);
  ojson cov = ojson::array();
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) row.push_back(number(r.covariance(i, k)));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["chi2"] = r.chi2;
  j["dof"] = r.dof;
  j["chi2_per_dof"] = r.chi2_per_dof;
  j["derived"] = named_list(r.derived);
  ojson stages = ojson::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"name", s.name},
                      {"parameters", named_list(s.parameters)},
                      {"chi2", s.chi2},
                      {"dof", s.dof},
                      {"iterations", s.iterations},
                      {"converged", s.converged}});
  }
  j["stages"] = stages;
  return j;
}

static FitReport parse_fit_report(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("fit report: document is not an object");
  const auto schema = field(j, "schema", "").get<std::string>();
  if (schema != kFitReportSchema) throw IoError("fit report: unsupported schema '" + schema + "'");
  FitReport r;
  r.model = field(j, "model", "").get<std::string>();
  r.weighting = field(j, "weighting", "").get<std::string>();
  r.parameters = named_list_from(field(j, "parameters", ""), "parameters");
  r.fixed = named_list_from(field(j, "fixed", ""), "fixed");
  r.derived = named_list_from(field(j, "derived", ""), "derived");
  const auto& cov = field(j, "covariance", "");
  const auto n = static_cast<Eigen::Index>(r.parameters.size());
  if (!cov.is_array() || static_cast<Eigen::Index>(cov.size()) != n) {
    throw IoError("fit report: covariance must be a square matrix matching the parameters");
  }
  r.covariance.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = cov[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw IoError("fit report: covariance must be a square matrix matching the parameters");
    }
    for (Eigen::Index k = 0; k < n; ++k) r.covariance(i, k) = number_from(row[static_cast<std::size_t>(k)], "covariance");
  }
  r.chi2 = number_from(field(j, "chi2", ""), "chi2");
  r.dof = field(j, "dof", "").get<int>();
  r.chi2_per_dof = number_from(field(j, "chi2_per_dof", ""), "chi2_per_dof");
  for (const auto& s : field(j, "stages", "")) {
    FitStage st;
    st.name = field(s, "name", "stages.").get<std::string>();
    st.parameters = named_list_from(field(s, "parameters", "stages."), "stages.parameters");
    st.chi2 = number_from(field(s, "chi2", "stages."), "stages.chi2");
    st.dof = field(s, "dof", "stages.").get<int>();
    st.iterations = field(s, "iterations", "stages.").get<int>();
    st.converged = field(s, "converged", "stages.").get<bool>();
    r.stages.push_back(std::move(st));
  }
  return r;
}

FitReport fit_report_from_json(const nlohmann::json& j) {
  try {
    return parse_fit_report(j);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("fit report: malformed field: ") + e.what());
  }
}

ojson to_json(const EfficiencyReport& r) {
  ojson j;
  j["schema"] = kEfficiencyReportSchema;
  j["method"] = to_string(r.method);
  j["assumption"] = assumption_label(r.method);
  if (r.eta_x) j["eta_x"] = measured(*r.eta_x);
  if (r.eta_x_bounds) j["eta_x_bounds"] = interval(*r.eta_x_bounds);
  if (r.eta_qe) j["eta_qe"] = measured(*r.eta_qe);
  if (r.epsilon_bounds) j["epsilon_bounds"] = interval(*r.epsilon_bounds);
  if (r.xi_ratio_bounds) j["xi_ratio_bounds"] = interval(*r.xi_ratio_bounds);
  if (r.occupation_bounds) j["occupation_bounds"] = interval(*r.occupation_bounds);
  if (r.alpha_upper) j["alpha_upper"] = *r.alpha_upper;
  if (r.rho) j["rho"] = *r.rho;
  if (r.eta_ratio) j["eta_ratio"] = *r.eta_ratio;
  return j;
}

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace photostat
