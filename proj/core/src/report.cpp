#include "gma/report.hpp"

#include "gma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace gma {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double from_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json to_json(const CheckResult& r) {
  json j;
  j["name"] = r.name;
  j["kind"] = to_string(r.kind);
  j["lhs"] = num(r.lhs);
  j["rhs"] = num(r.rhs);
  j["residual_or_slack"] = num(r.residual_or_slack);
  j["tolerance"] = num(r.tolerance);
  j["pass"] = r.pass;
  j["status"] = to_string(r.status);
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (!r.terms.empty()) {
    json t = json::object();
    for (const auto& [k, v] : r.terms) t[k] = num(v);
    j["terms"] = t;
  }
  if (r.samples) {
    json p = json::array();
    for (double x : r.samples->point) p.push_back(num(x));
    j["samples"] = {{"point", p}, {"value", num(r.samples->value)}};
  }
  if (!r.notes.empty()) j["notes"] = r.notes;
  if (!r.parts.empty()) {
    json parts = json::array();
    for (const auto& p : r.parts) parts.push_back(to_json(p));
    j["parts"] = parts;
  }
  return j;
}

CheckResult parse(const json& j) {
  CheckResult r;
  r.name = j.at("name").get<std::string>();
  auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    r.kind = CheckKind::Identity;
  } else if (kind == "inequality") {
    r.kind = CheckKind::Inequality;
  } else {
    throw InvalidArgument("report: unknown check kind '" + kind + "'");
  }
  r.lhs = from_num(j.at("lhs"));
  r.rhs = from_num(j.at("rhs"));
  r.residual_or_slack = from_num(j.at("residual_or_slack"));
  r.tolerance = from_num(j.at("tolerance"));
  r.pass = j.at("pass").get<bool>();
  auto status = j.value("status", std::string(r.pass ? "pass" : "fail"));
  r.status = status == "pass" ? CheckStatus::Pass
             : status == "skipped" ? CheckStatus::Skipped
                                   : CheckStatus::Fail;
  r.reason = j.value("reason", std::string());
  if (j.contains("terms")) {
    for (const auto& [k, v] : j["terms"].items()) r.add_term(k, from_num(v));
  }
  if (j.contains("samples")) {
    const auto& s = j["samples"];
    WorstSample w;
    w.point.resize(static_cast<Eigen::Index>(s.at("point").size()));
    for (std::size_t k = 0; k < s["point"].size(); ++k) w.point[k] = from_num(s["point"][k]);
    w.value = from_num(s.at("value"));
    r.samples = w;
  }
  if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
  if (j.contains("parts")) {
    for (const auto& p : j["parts"]) r.parts.push_back(parse(p));
  }
  return r;
}

}  // namespace

std::string to_json_line(const CheckResult& r) { return to_json(r).dump(); }

CheckResult from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("report: malformed JSON line: ") + e.what());
  }
  try {
    return parse(j);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("report: bad check record: ") + e.what());
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(std::span<const CheckResult> results) {
  std::ostringstream os;
  os << "name,kind,lhs,rhs,residual_or_slack,tolerance,pass\n";
  for (const auto& r : results) {
    std::string pass = r.status == CheckStatus::Skipped ? "skipped" : (r.pass ? "true" : "false");
    os << csv_field(r.name) << ',' << to_string(r.kind) << ',' << format_double(r.lhs) << ','
       << format_double(r.rhs) << ',' << format_double(r.residual_or_slack) << ','
       << format_double(r.tolerance) << ',' << pass << '\n';
  }
  return os.str();
}

void sort_by_name(std::vector<CheckResult>& results) {
  std::stable_sort(results.begin(), results.end(),
                   [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
}

}  // namespace gma
