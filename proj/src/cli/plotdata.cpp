#include "liouville/cli.hpp"

namespace liouville::cli {

using json = nlohmann::ordered_json;

namespace {

const json& block(const json& report, const char* name) {
  if (!report.contains("blocks") || !report["blocks"].contains(name))
    throw Error(ErrorKind::MissingBlock, std::string("report has no '") + name + "' block");
  return report["blocks"][name];
}

std::string num(const json& v) { return v.is_number() ? fmt17(v.get<double>()) : "nan"; }

std::string header(const char* first, std::size_t n, const char* prefix) {
  std::string out = first;
  for (std::size_t k = 0; k < n; ++k) out += std::string(",") + prefix + std::to_string(k + 1);
  return out;
}

// seed, theta_1..theta_p, coordinates
std::string torus_csv(const json& report) {
  const json& b = block(report, "chart");
  const auto coords = report["settings"]["coords"].get<std::vector<std::string>>();
  std::string rows;
  std::size_t p = 0;
  for (const auto& entry : b) {
    if (!entry.contains("samples")) continue;
    const json& s = entry["samples"];
    for (std::size_t f = 0; f < s["x"].size(); ++f) {
      p = s["theta"][f].size();
      rows += entry["seed"].get<std::string>();
      for (const auto& t : s["theta"][f]) rows += "," + num(t);
      for (const auto& x : s["x"][f]) rows += "," + num(x);
      rows += "\n";
    }
  }
  if (rows.empty()) throw Error(ErrorKind::MissingBlock, "chart block has no torus samples");
  std::string out = header("seed", p, "theta_");
  for (const auto& c : coords) out += "," + c;
  return out + "\n" + rows;
}

// torus_id, F_1..F_q, mu_1..mu_p
std::string actions_csv(const json& report) {
  const json& b = block(report, "actions");
  std::string rows;
  std::size_t q = 0, p = 0;
  for (const auto& entry : b) {
    if (!entry.contains("mu")) continue;
    q = entry["levels"].size();
    p = entry["mu"].size();
    rows += entry["seed"].get<std::string>();
    for (const auto& v : entry["levels"]) rows += "," + num(v);
    for (const auto& v : entry["mu"]) rows += "," + num(v);
    rows += "\n";
  }
  if (rows.empty()) throw Error(ErrorKind::MissingBlock, "actions block has no action values");
  std::string out = header("torus_id", q, "F_");
  for (std::size_t k = 0; k < p; ++k) out += ",mu_" + std::to_string(k + 1);
  return out + "\n" + rows;
}

// seed, tensor, theta_1..theta_p, deviation; last angle fastest
std::string deviation_csv(const json& report) {
  const json& b = block(report, "conservation");
  std::string rows;
  std::size_t p = 0;
  for (const auto& entry : b) {
    const std::size_t n = entry["grid"].get<std::size_t>();
    p = entry["p"].get<std::size_t>();
    for (const auto& t : entry["tensors"]) {
      if (!t.contains("deviation_field")) continue;
      const json& field = t["deviation_field"];
      for (std::size_t f = 0; f < field.size(); ++f) {
        rows += entry["seed"].get<std::string>() + "," + t["tensor"].get<std::string>();
        std::vector<std::size_t> idx(p);
        std::size_t r = f;
        for (std::size_t k = p; k-- > 0;) {
          idx[k] = r % n;
          r /= n;
        }
        for (std::size_t k = 0; k < p; ++k) rows += "," + fmt17(static_cast<double>(idx[k]) / static_cast<double>(n));
        rows += "," + num(field[f]) + "\n";
      }
    }
  }
  if (rows.empty()) throw Error(ErrorKind::MissingBlock, "conservation block has no deviation field");
  return header("seed,tensor", p, "theta_") + ",deviation\n" + rows;
}

}  // namespace

std::string plotdata(const json& report, std::string_view what) {
  if (what == "torus") return torus_csv(report);
  if (what == "actions") return actions_csv(report);
  if (what == "deviation") return deviation_csv(report);
  throw Error(ErrorKind::Config, "plotdata takes torus, actions or deviation, got '" + std::string(what) + "'");
}

}  // namespace liouville::cli
