#pragma once

// File formats for the command-line tool: manifests, CSV populations, JSON
// reports and CSV companions. Needs nlohmann/json on the include path.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "covmany/errors.hpp"
#include "covmany/estimators.hpp"
#include "covmany/oracle.hpp"
#include "covmany/procedures.hpp"
#include "covmany/simgen.hpp"

namespace covmany {

using json = nlohmann::ordered_json;

enum class ManifestTest { prop, eq, kron };

struct PopulationEntry {
  std::string name;
  std::string path;
};

struct Manifest {
  std::vector<PopulationEntry> populations;
  bool center = false;
  double alpha = 0.05;
  ManifestTest test = ManifestTest::prop;
  bool header = false;
};

inline Manifest parse_manifest(const json& j, const std::filesystem::path& base = {}) {
  if (!j.is_object()) throw InputError("manifest: top level must be an object");
  Manifest m;
  try {
    if (!j.contains("populations") || !j["populations"].is_array())
      throw InputError("manifest: 'populations' must be an array");
    for (const auto& e : j["populations"]) {
      PopulationEntry p;
      p.name = e.at("name").get<std::string>();
      std::filesystem::path path = e.at("path").get<std::string>();
      if (path.is_relative() && !base.empty()) path = base / path;
      p.path = path.string();
      m.populations.push_back(std::move(p));
    }
    m.center = j.value("center", false);
    m.alpha = j.value("alpha", 0.05);
    m.header = j.value("header", false);
    const std::string t = j.value("test", std::string("prop"));
    if (t == "prop")
      m.test = ManifestTest::prop;
    else if (t == "eq")
      m.test = ManifestTest::eq;
    else if (t == "kron")
      m.test = ManifestTest::kron;
    else
      throw InputError("manifest: unknown test '" + t + "' (expected prop, eq or kron)");
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
  if (m.populations.size() < 2) throw InputError("manifest: at least two populations are required");
  if (!(m.alpha > 0.0 && m.alpha < 1.0)) throw InputError("manifest: alpha must lie in (0, 1)");
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("manifest '" + path + "': " + e.what());
  }
  return parse_manifest(j, std::filesystem::path(path).parent_path());
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Rows are observations, columns variables; returned transposed to p x n.
inline Matrix read_csv_table(std::istream& in, const std::string& label, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = sv.find(',', start);
      const std::string_view cell =
          detail::trim(sv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw InputError(label + ":" + std::to_string(lineno) + ": non-numeric cell '" + std::string(cell) + "'");
      if (!std::isfinite(v))
        throw InputError(label + ":" + std::to_string(lineno) + ": non-finite value");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows.empty()) width = row.size();
    if (row.size() != width)
      throw InputError(label + ":" + std::to_string(lineno) + ": ragged row (" + std::to_string(row.size()) +
                       " columns, expected " + std::to_string(width) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw InputError(label + ": need at least two observations");
  Matrix x(static_cast<Index>(width), static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < width; ++j) x(static_cast<Index>(j), static_cast<Index>(k)) = rows[k][j];
  return x;
}

inline Sample load_population(const std::string& path, bool center, bool header = false) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open population file '" + path + "'");
  Sample s(read_csv_table(in, path, header));
  return center ? center_sample(s) : s;
}

// JSON text with every double printed with 17 significant digits; NaN and
// infinities become null.
inline void dump_json(std::ostream& out, const json& j, int indent = 2, int depth = 0) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump_json(out, it.value(), indent, depth + 1);
      }
      out << nl << pad_end << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      // numeric rows stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_primitive();
      out << '[';
      if (!flat) out << nl;
      bool first = true;
      for (const auto& e : j) {
        if (!first) out << (flat ? ", " : ",") << (flat ? "" : nl);
        first = false;
        if (!flat) out << pad;
        dump_json(out, e, indent, depth + 1);
      }
      if (!flat) out << nl << pad_end;
      out << ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      // keep it a JSON real
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out << s;
      return;
    }
    default:
      out << j.dump();
  }
}

inline std::string to_json_text(const json& j) {
  std::ostringstream os;
  dump_json(os, j);
  os << '\n';
  return os.str();
}

inline json to_json(const TestReport& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["p"] = r.p;
  j["q"] = r.q;
  j["n_list"] = r.n_list;
  j["statistic"] = r.statistic;
  j["variance_hat"] = r.variance_hat;
  j["z"] = r.z;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject"] = r.reject;
  return j;
}

inline TestReport test_report_from_json(const json& j) {
  TestReport r;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "proportionality")
    r.kind = TestKind::proportionality;
  else if (kind == "equality")
    r.kind = TestKind::equality;
  else if (kind == "kronecker_spec")
    r.kind = TestKind::kronecker_spec;
  else
    throw InputError("unknown report kind '" + kind + "'");
  r.p = j.at("p").get<Index>();
  r.q = j.at("q").get<Index>();
  r.n_list = j.at("n_list").get<std::vector<Index>>();
  r.statistic = j.at("statistic").get<double>();
  r.variance_hat = j.at("variance_hat").get<double>();
  r.z = j.at("z").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.reject = j.at("reject").get<bool>();
  return r;
}

inline json to_json(const PairwiseReport& r) {
  json j;
  json g = json::array(), c = json::array();
  for (Index i = 0; i < r.g_matrix.rows(); ++i) {
    json gr = json::array(), cr = json::array();
    for (Index k = 0; k < r.g_matrix.cols(); ++k) {
      gr.push_back(r.g_matrix(i, k));
      cr.push_back(r.class_matrix(i, k));
    }
    g.push_back(std::move(gr));
    c.push_back(std::move(cr));
  }
  j["g_matrix"] = std::move(g);
  j["row_order"] = r.row_order;
  j["quartiles"] = {r.quartiles[0], r.quartiles[1], r.quartiles[2]};
  j["class_matrix"] = std::move(c);
  return j;
}

inline json to_json(const PowerCurve& pc) {
  json j;
  j["beta"] = pc.beta;
  j["empirical"] = pc.empirical;
  j["theoretical"] = pc.theoretical;
  j["n_reps"] = pc.n_reps;
  j["seed"] = pc.seed;
  return j;
}

inline json to_json(const SizeResult& s, const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["noise"] = to_string(c.noise);
  j["p"] = c.p;
  j["q"] = c.q;
  j["n_low"] = c.n_low;
  j["n_high"] = c.n_high;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["n_reps"] = s.n_reps;
  j["rejections"] = s.rejections;
  j["rate"] = s.rate;
  j["se"] = s.se;
  return j;
}

inline json to_json(const OracleReport& r) {
  json j;
  j["target_name"] = r.target_name;
  j["analytic"] = r.analytic;
  j["mc_mean"] = r.mc_mean;
  j["mc_se"] = r.mc_se;
  j["n_draws"] = r.n_draws;
  j["z_score"] = r.z_score;
  j["pass"] = r.pass;
  j["criterion"] = to_string(r.criterion);
  return j;
}

inline json to_json(const ScanResult& s, Index p_sub, Index n_rep) {
  json j;
  j["p_sub"] = p_sub;
  j["n_rep"] = n_rep;
  j["z_min"] = s.z_min;
  j["z_max"] = s.z_max;
  j["z_mean"] = s.z_mean;
  j["reject_fraction"] = s.reject_fraction;
  j["z_values"] = s.z_values;
  j["mean_pairwise"] = to_json(s.mean_pairwise);
  return j;
}

inline void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_report(const json& j, const std::string& path) { write_text(to_json_text(j), path); }

namespace detail {

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string power_curve_csv(const PowerCurve& pc) {
  std::string s = "beta,empirical,theoretical\n";
  for (std::size_t k = 0; k < pc.beta.size(); ++k)
    s += detail::fmt17(pc.beta[k]) + "," + detail::fmt17(pc.empirical[k]) + "," +
         detail::fmt17(pc.theoretical[k]) + "\n";
  return s;
}

// Heatmap data: rows and columns both in row_order (descending row average).
inline std::string pairwise_csv(const PairwiseReport& r, const std::vector<std::string>& names, bool classes) {
  std::string s = "population";
  for (Index k : r.row_order) s += "," + names[static_cast<std::size_t>(k)];
  s += "\n";
  for (Index i : r.row_order) {
    s += names[static_cast<std::size_t>(i)];
    for (Index k : r.row_order)
      s += "," + (classes ? std::to_string(r.class_matrix(i, k)) : detail::fmt17(r.g_matrix(i, k)));
    s += "\n";
  }
  return s;
}

}  // namespace covmany
