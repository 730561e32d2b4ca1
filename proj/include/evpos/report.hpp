#ifndef EVPOS_REPORT_HPP
#define EVPOS_REPORT_HPP

// Matrix analysis documents: input parsing, the certify -> classify -> project pipeline, and the report.
//
// Input:  {"matrix": [[...]], "tolerances": {"positivity": 1e-9, "dp_terms": 12}, "grid": {"t_min": 1e-3, "t_max": 20,
//          "points": 256}, "perturbation": [[...]]}
// Only "matrix" is required.

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evpos/json_io.hpp"
#include "evpos/perturbation.hpp"

namespace evpos {

inline constexpr const char *kToolVersion = "0.3.0";

struct GridSettings {
  double t_min = 1e-3;
  double t_max = 20.0;
  std::size_t points = 256;

  TimeGrid grid() const { return TimeGrid::log_spaced(t_min, t_max, points, true); }
};

struct AnalysisInput {
  Matrix matrix;
  std::optional<Matrix> perturbation;
  double tol = kDefaultPositivityTol;
  std::optional<int> dp_terms; // requested Dyson-Phillips N, raised if the tail bound misses
  GridSettings grid;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string &text, std::size_t byte)
{
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Matrix square_matrix(const Json &j, const char *key, std::size_t max_dim)
{
  Matrix m;
  try {
    m = jio::get_mat(j);
  } catch (const InputError &e) {
    throw InputError(std::string("\"") + key + "\": " + e.what());
  }
  if (m.rows() == 0 || m.rows() != m.cols())
    throw InputError(std::string("\"") + key + "\" must be a non-empty square matrix");
  if (static_cast<std::size_t>(m.rows()) > max_dim)
    throw DimensionTooLarge(std::string("\"") + key + "\" has dimension " + std::to_string(m.rows()) +
                            " above the cap " + std::to_string(max_dim));
  if (!m.allFinite())
    throw InputError(std::string("\"") + key + "\" has non-finite entries");
  return m;
}

} // namespace detail

/// Throws InputError (with 1-based line and column for syntax errors) or DimensionTooLarge.
inline AnalysisInput parse_analysis_input(const std::string &text, std::size_t max_dim = 64)
{
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error &e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    // the message already names the line and column
    throw InputError(e.what(), line, col);
  }
  if (!doc.is_object())
    throw InputError("the document must be a JSON object", 1, 1);
  for (const auto &[key, _] : doc.items())
    if (key != "matrix" && key != "perturbation" && key != "tolerances" && key != "grid")
      throw InputError("unknown key \"" + key + "\"");
  if (!doc.contains("matrix"))
    throw InputError("missing \"matrix\"");

  AnalysisInput in;
  in.matrix = detail::square_matrix(doc["matrix"], "matrix", max_dim);
  if (doc.contains("perturbation") && !doc["perturbation"].is_null()) {
    in.perturbation = detail::square_matrix(doc["perturbation"], "perturbation", max_dim);
    if (in.perturbation->rows() != in.matrix.rows())
      throw InputError("\"perturbation\" and \"matrix\" differ in dimension");
  }
  try {
    if (doc.contains("tolerances")) {
      const auto &t = doc["tolerances"];
      for (const auto &[key, _] : t.items())
        if (key != "positivity" && key != "dp_terms")
          throw InputError("unknown key \"tolerances." + key + "\"");
      if (t.contains("positivity"))
        in.tol = jio::get_num(t["positivity"]);
      if (t.contains("dp_terms") && !t["dp_terms"].is_null()) {
        if (!t["dp_terms"].is_number_integer())
          throw InputError("\"tolerances.dp_terms\" must be an integer");
        in.dp_terms = t["dp_terms"].get<int>();
      }
    }
    if (doc.contains("grid")) {
      const auto &g = doc["grid"];
      for (const auto &[key, _] : g.items())
        if (key != "t_min" && key != "t_max" && key != "points" && key != "kind")
          throw InputError("unknown key \"grid." + key + "\"");
      if (g.contains("kind") && g["kind"] != "log-spaced+0")
        throw InputError("\"grid.kind\" must be \"log-spaced+0\"");
      if (g.contains("t_min"))
        in.grid.t_min = jio::get_num(g["t_min"]);
      if (g.contains("t_max"))
        in.grid.t_max = jio::get_num(g["t_max"]);
      if (g.contains("points")) {
        if (!g["points"].is_number_unsigned())
          throw InputError("\"grid.points\" must be a non-negative integer");
        in.grid.points = g["points"].get<std::size_t>();
      }
    }
  } catch (const Json::exception &e) {
    throw InputError(std::string("bad tolerances/grid: ") + e.what());
  }
  if (!(in.tol > 0.0) || !(in.grid.t_min > 0.0) || !(in.grid.t_max > in.grid.t_min) || in.grid.points < 2)
    throw InputError("need tol > 0, 0 < t_min < t_max and points >= 2");
  if (in.dp_terms && (*in.dp_terms < 1 || *in.dp_terms > 200))
    throw InputError("dp_terms must lie in [1, 200]");
  return in;
}

inline AnalysisInput load_analysis_input(const std::string &path, std::size_t max_dim = 64)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_analysis_input(ss.str(), max_dim);
}

struct AnalysisReport {
  std::string tool_version = kToolVersion;
  AnalysisInput input;
  PositivityVerdict positivity;
  SpectralCertificate certificate;
  IrreducibilityReport irreducibility;
  std::optional<ProjectionReport> projection;
  std::string projection_note;
  std::optional<Json> perturbation;
  std::vector<std::string> violations; // consistency failures, each with its witness
  std::vector<std::pair<std::string, double>> timings_ms;

  bool consistent() const { return violations.empty(); }
};

inline void to_json(Json &j, const AnalysisInput &in)
{
  j = Json{{"matrix", jio::mat(in.matrix)},
           {"perturbation", in.perturbation ? jio::mat(*in.perturbation) : Json(nullptr)},
           {"tolerances", {{"positivity", jio::num(in.tol)}, {"dp_terms", jio::opt(in.dp_terms)}}},
           {"grid", {{"kind", "log-spaced+0"},
                     {"t_min", jio::num(in.grid.t_min)},
                     {"t_max", jio::num(in.grid.t_max)},
                     {"points", in.grid.points}}}};
}
inline void from_json(const Json &j, AnalysisInput &in)
{
  in.matrix = jio::get_mat(j.at("matrix"));
  in.perturbation = j.at("perturbation").is_null() ? std::nullopt
                                                   : std::optional<Matrix>(jio::get_mat(j.at("perturbation")));
  in.tol = jio::get_num(j.at("tolerances").at("positivity"));
  in.dp_terms = jio::get_opt<int>(j.at("tolerances").at("dp_terms"));
  const auto &g = j.at("grid");
  in.grid.t_min = jio::get_num(g.at("t_min"));
  in.grid.t_max = jio::get_num(g.at("t_max"));
  in.grid.points = g.at("points").get<std::size_t>();
}

inline void to_json(Json &j, const AnalysisReport &r)
{
  Json timings = Json::object();
  for (const auto &[k, v] : r.timings_ms)
    timings[k] = jio::num(v);
  j = Json{{"tool", {{"name", "evpos"}, {"version", r.tool_version}}},
           {"input", r.input},
           {"positivity", r.positivity},
           {"spectral_certificate", r.certificate},
           {"irreducibility", r.irreducibility},
           {"projection", r.projection ? Json(*r.projection) : Json(nullptr)},
           {"projection_note", r.projection_note},
           {"perturbation", r.perturbation ? *r.perturbation : Json(nullptr)},
           {"violations", r.violations},
           {"timings_ms", timings}};
}
inline void from_json(const Json &j, AnalysisReport &r)
{
  r.tool_version = j.at("tool").at("version").get<std::string>();
  r.input = j.at("input").get<AnalysisInput>();
  r.positivity = j.at("positivity").get<PositivityVerdict>();
  r.certificate = j.at("spectral_certificate").get<SpectralCertificate>();
  r.irreducibility = j.at("irreducibility").get<IrreducibilityReport>();
  r.projection = j.at("projection").is_null() ? std::nullopt
                                              : std::optional<ProjectionReport>(j.at("projection").get<ProjectionReport>());
  r.projection_note = j.at("projection_note").get<std::string>();
  r.perturbation = j.at("perturbation").is_null() ? std::nullopt : std::optional<Json>(j.at("perturbation"));
  r.violations = j.at("violations").get<std::vector<std::string>>();
  r.timings_ms.clear();
  for (const auto &[k, v] : j.at("timings_ms").items())
    r.timings_ms.emplace_back(k, jio::get_num(v));
}

/// The report without its timing block; equal for equal inputs.
inline Json deterministic_part(const AnalysisReport &r)
{
  Json j = r;
  j.erase("timings_ms");
  return j;
}

namespace detail {

class StageTimer {
public:
  explicit StageTimer(std::vector<std::pair<std::string, double>> &out) : out_(out) {}
  void lap(const std::string &name)
  {
    const auto now = std::chrono::steady_clock::now();
    out_.emplace_back(name, std::chrono::duration<double, std::milli>(now - last_).count());
    last_ = now;
  }

private:
  std::vector<std::pair<std::string, double>> &out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline Json premise_json(const PremiseReport &p)
{
  Json j{{"holds", p.holds}, {"samples", p.samples}, {"witness", nullptr}};
  if (p.witness)
    j["witness"] = Json{{"s", jio::num(p.witness->s)},
                        {"t", jio::num(p.witness->t)},
                        {"row", p.witness->row},
                        {"col", p.witness->col},
                        {"value", jio::num(p.witness->value)}};
  return j;
}

} // namespace detail

/// certify -> classify -> irreducibility -> dominant projection, plus domination and the Dyson-Phillips
/// series when a perturbation is given. Consistency failures are collected in violations, not thrown.
inline AnalysisReport analyze(const AnalysisInput &in, DysonPhillipsConfig dp = {})
{
  if (in.dp_terms)
    dp.max_terms = *in.dp_terms;
  AnalysisReport r;
  r.input = in;
  detail::StageTimer timer(r.timings_ms);
  const TimeGrid grid = in.grid.grid();
  const MatrixSemigroup sg(in.matrix);

  std::tie(r.certificate, r.positivity) = certify_eventual_strong_positivity(in.matrix, grid, in.tol);
  timer.lap("certify");

  r.irreducibility = classify(sg, grid, in.tol);
  if (!r.irreducibility.diagram_consistent)
    for (const auto &v : r.irreducibility.conditions.diagram_violations)
      r.violations.push_back("implication diagram: " + v);
  timer.lap("irreducibility");

  const bool assert_positive = r.irreducibility.classification == IrreducibilityClass::PersistentlyIrreducible &&
                               is_eventually_positive(r.positivity.cls) && !r.positivity.grid_limited;
  try {
    r.projection = dominant_projection(in.matrix, assert_positive);
    if (!r.projection->accepted())
      r.violations.push_back("dominant projection residuals exceed 1e-8");
  } catch (const CertificateMissing &e) {
    r.projection_note = e.what();
  } catch (const ConsistencyViolation &e) {
    r.violations.push_back(std::string("eigenvector positivity: ") + e.what());
  }
  timer.lap("projection");

  if (in.perturbation) {
    const Matrix &b = *in.perturbation;
    Json p;
    const DominationReport d = domination_survey(sg, b, grid, dp, in.tol);
    p["domination"] = Json{{"premise", detail::premise_json(d.premise)},
                           {"conclusion_checked", d.conclusion_checked},
                           {"conclusion_holds", d.conclusion_holds},
                           {"conclusion_min", jio::num(d.conclusion_min)},
                           {"conclusion_t", jio::num(d.conclusion_t)},
                           {"conclusion_row", d.conclusion_row},
                           {"conclusion_col", d.conclusion_col},
                           {"method", d.method}};
    if (d.premise.holds && d.conclusion_checked && !d.conclusion_holds)
      r.violations.push_back("domination conclusion failed at t = " + std::to_string(d.conclusion_t));
    Json series = Json::array();
    for (double t : {0.5, 1.0, 2.0}) {
      const auto s = dyson_phillips_terms(sg, b, t, dp);
      const double err = (s.sum - expm(in.matrix + b, t)).norm();
      series.push_back(Json{{"t", jio::num(t)},
                            {"terms", s.n_terms},
                            {"tail_bound", jio::num(s.tail_bound)},
                            {"quadrature_error", jio::num(s.quadrature_error)},
                            {"rule", s.rule},
                            {"difference_to_expm", jio::num(err)}});
    }
    p["dyson_phillips"] = series;
    r.perturbation = p;
    timer.lap("perturbation");
  }
  return r;
}

} // namespace evpos

#endif // EVPOS_REPORT_HPP
