#ifndef EVPOS_JSON_IO_HPP
#define EVPOS_JSON_IO_HPP

// JSON conversion for the library's report types. Doubles are written with the shortest round-trip
// representation; non-finite values become the strings "inf", "-inf", "nan".

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <json.hpp>

#include "evpos/irreducibility.hpp"
#include "evpos/lattice.hpp"
#include "evpos/positivity.hpp"
#include "evpos/spectral.hpp"

namespace evpos {

using Json = nlohmann::ordered_json;

namespace jio {

inline Json num(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  return x;
}

inline double get_num(const Json &j)
{
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan")
      return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
      return std::numeric_limits<double>::infinity();
    if (s == "-inf")
      return -std::numeric_limits<double>::infinity();
    throw InputError("expected a number, got \"" + s + "\"");
  }
  if (!j.is_number())
    throw InputError("expected a number");
  return j.get<double>();
}

inline Json vec(const Vector &v)
{
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(num(v(i)));
  return a;
}

inline Vector get_vec(const Json &j)
{
  if (!j.is_array())
    throw InputError("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = get_num(j[i]);
  return v;
}

/// Row-major array of rows.
inline Json mat(const Matrix &m)
{
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    a.push_back(vec(m.row(i).transpose()));
  return a;
}

inline Matrix get_mat(const Json &j)
{
  if (!j.is_array())
    throw InputError("expected an array of rows");
  if (j.empty())
    return Matrix(0, 0);
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw InputError("row " + std::to_string(i) + " does not have " + std::to_string(cols) + " entries");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = get_num(j[i][k]);
  }
  return m;
}

template <typename T>
Json opt(const std::optional<T> &o)
{
  return o ? Json(*o) : Json(nullptr);
}

inline Json opt_num(const std::optional<double> &o) { return o ? num(*o) : Json(nullptr); }

inline std::optional<double> get_opt_num(const Json &j)
{
  if (j.is_null())
    return std::nullopt;
  return get_num(j);
}

template <typename T>
std::optional<T> get_opt(const Json &j)
{
  if (j.is_null())
    return std::nullopt;
  return j.get<T>();
}

inline Json mask(const IdealMask &m)
{
  Json j;
  j["dim"] = m.dim();
  j["indices"] = m.indices();
  return j;
}

inline IdealMask get_mask(const Json &j)
{
  return IdealMask::from_indices(j.at("dim").get<std::size_t>(), j.at("indices").get<std::vector<std::size_t>>());
}

template <typename E, std::size_t N>
E enum_from(const std::string &s, const E (&all)[N])
{
  for (E e : all)
    if (s == to_string(e))
      return e;
  throw InputError("unknown enumerator \"" + s + "\"");
}

inline constexpr VerdictClass kVerdicts[] = {VerdictClass::Positive, VerdictClass::UniformlyEventuallyStronglyPositive,
                                             VerdictClass::UniformlyEventuallyPositive,
                                             VerdictClass::NotEventuallyPositive, VerdictClass::Inconclusive};
inline constexpr IrreducibilityClass kIrreducibility[] = {IrreducibilityClass::PersistentlyIrreducible,
                                                          IrreducibilityClass::IrreducibleNotPersistent,
                                                          IrreducibilityClass::Reducible};
inline constexpr ConditionStatus kConditionStatus[] = {ConditionStatus::Holds, ConditionStatus::ViolatedWithWitness,
                                                       ConditionStatus::GridLimited};

} // namespace jio

inline void to_json(Json &j, const Evidence &e)
{
  j = Json{{"t", jio::num(e.t)}, {"row", e.row}, {"col", e.col}, {"value", jio::num(e.value)}, {"note", e.note}};
}
inline void from_json(const Json &j, Evidence &e)
{
  e.t = jio::get_num(j.at("t"));
  e.row = j.at("row").get<Eigen::Index>();
  e.col = j.at("col").get<Eigen::Index>();
  e.value = jio::get_num(j.at("value"));
  e.note = j.at("note").get<std::string>();
}

inline void to_json(Json &j, const PositivityVerdict &v)
{
  j = Json{{"class", to_string(v.cls)},
           {"onset_t0", jio::opt_num(v.onset_t0)},
           {"strong_onset_t0", jio::opt_num(v.strong_onset_t0)},
           {"certified", v.certified},
           {"grid_limited", v.grid_limited},
           {"method", v.method},
           {"evidence", v.evidence}};
}
inline void from_json(const Json &j, PositivityVerdict &v)
{
  v.cls = jio::enum_from(j.at("class").get<std::string>(), jio::kVerdicts);
  v.onset_t0 = jio::get_opt_num(j.at("onset_t0"));
  v.strong_onset_t0 = jio::get_opt_num(j.at("strong_onset_t0"));
  v.certified = j.at("certified").get<bool>();
  v.grid_limited = j.at("grid_limited").get<bool>();
  v.method = j.at("method").get<std::string>();
  v.evidence = j.at("evidence").get<std::vector<Evidence>>();
}

inline void to_json(Json &j, const SpectralCertificate &c)
{
  j = Json{{"spectral_bound", jio::num(c.spectral_bound)},
           {"dominant_is_real_simple", c.dominant_is_real_simple},
           {"spectral_gap", jio::num(c.spectral_gap)},
           {"right_vec", jio::vec(c.right_vec)},
           {"left_vec", jio::vec(c.left_vec)},
           {"pairing", jio::num(c.pairing)},
           {"min_entry_projection", jio::num(c.min_entry_projection)},
           {"constant_c", jio::num(c.constant_c)},
           {"eigvec_condition", jio::num(c.eigvec_condition)},
           {"vectors_strictly_positive", c.vectors_strictly_positive}};
}
inline void from_json(const Json &j, SpectralCertificate &c)
{
  c.spectral_bound = jio::get_num(j.at("spectral_bound"));
  c.dominant_is_real_simple = j.at("dominant_is_real_simple").get<bool>();
  c.spectral_gap = jio::get_num(j.at("spectral_gap"));
  c.right_vec = jio::get_vec(j.at("right_vec"));
  c.left_vec = jio::get_vec(j.at("left_vec"));
  c.pairing = jio::get_num(j.at("pairing"));
  c.min_entry_projection = jio::get_num(j.at("min_entry_projection"));
  c.constant_c = jio::get_num(j.at("constant_c"));
  c.eigvec_condition = jio::get_num(j.at("eigvec_condition"));
  c.vectors_strictly_positive = j.at("vectors_strictly_positive").get<bool>();
}

inline void to_json(Json &j, const PairingWitness &w)
{
  j = Json{{"f_index", w.f_index},
           {"phi_index", w.phi_index},
           {"t0", jio::num(w.t0)},
           {"t", jio::num(w.t)},
           {"value", jio::num(w.value)}};
}
inline void from_json(const Json &j, PairingWitness &w)
{
  w.f_index = j.at("f_index").get<std::size_t>();
  w.phi_index = j.at("phi_index").get<std::size_t>();
  w.t0 = jio::get_num(j.at("t0"));
  w.t = jio::get_num(j.at("t"));
  w.value = jio::get_num(j.at("value"));
}

inline void to_json(Json &j, const ConditionResult &c)
{
  j = Json{{"status", to_string(c.status)}, {"tested", c.tested},
           {"satisfied", c.satisfied},      {"witness", jio::opt(c.witness)},
           {"counterexample", jio::opt(c.counterexample)}, {"note", c.note}};
}
inline void from_json(const Json &j, ConditionResult &c)
{
  c.status = jio::enum_from(j.at("status").get<std::string>(), jio::kConditionStatus);
  c.tested = j.at("tested").get<std::size_t>();
  c.satisfied = j.at("satisfied").get<std::size_t>();
  c.witness = jio::get_opt<PairingWitness>(j.at("witness"));
  c.counterexample = jio::get_opt<PairingWitness>(j.at("counterexample"));
  c.note = j.at("note").get<std::string>();
}

inline void to_json(Json &j, const ConditionsTable &t)
{
  j = Json{{"ii", t.ii},
           {"iv", t.iv},
           {"v", t.v},
           {"diagram_consistent", t.diagram_consistent},
           {"diagram_violations", t.diagram_violations}};
}
inline void from_json(const Json &j, ConditionsTable &t)
{
  t.ii = j.at("ii").get<ConditionResult>();
  t.iv = j.at("iv").get<ConditionResult>();
  t.v = j.at("v").get<ConditionResult>();
  t.diagram_consistent = j.at("diagram_consistent").get<bool>();
  t.diagram_violations = j.at("diagram_violations").get<std::vector<std::string>>();
}

inline void to_json(Json &j, const NearThresholdEntry &e)
{
  j = Json{{"row", e.row}, {"col", e.col}, {"value", jio::num(e.value)}};
}
inline void from_json(const Json &j, NearThresholdEntry &e)
{
  e.row = j.at("row").get<Eigen::Index>();
  e.col = j.at("col").get<Eigen::Index>();
  e.value = jio::get_num(j.at("value"));
}

inline void to_json(Json &j, const IrreducibilityReport &r)
{
  j = Json{{"classification", to_string(r.classification)},
           {"witness_ideal", r.witness_ideal ? jio::mask(*r.witness_ideal) : Json(nullptr)},
           {"witness_onset", jio::opt_num(r.witness_onset)},
           {"conditions", r.conditions},
           {"diagram_consistent", r.diagram_consistent},
           {"grid_limited", r.grid_limited},
           {"nilpotent_at", jio::opt_num(r.nilpotent_at)},
           {"near_threshold", r.near_threshold},
           {"method", r.method}};
}
inline void from_json(const Json &j, IrreducibilityReport &r)
{
  r.classification = jio::enum_from(j.at("classification").get<std::string>(), jio::kIrreducibility);
  r.witness_ideal = j.at("witness_ideal").is_null() ? std::nullopt
                                                    : std::optional<IdealMask>(jio::get_mask(j.at("witness_ideal")));
  r.witness_onset = jio::get_opt_num(j.at("witness_onset"));
  r.conditions = j.at("conditions").get<ConditionsTable>();
  r.diagram_consistent = j.at("diagram_consistent").get<bool>();
  r.grid_limited = j.at("grid_limited").get<bool>();
  r.nilpotent_at = jio::get_opt_num(j.at("nilpotent_at"));
  r.near_threshold = j.at("near_threshold").get<std::vector<NearThresholdEntry>>();
  r.method = j.at("method").get<std::string>();
}

inline void to_json(Json &j, const ProjectionReport &p)
{
  Json h = Json::array(), d = Json::array();
  for (double x : p.horizons)
    h.push_back(jio::num(x));
  for (double x : p.distances)
    d.push_back(jio::num(x));
  j = Json{{"lambda", jio::num(p.lambda)},
           {"projection", jio::mat(p.projection)},
           {"rank", p.rank},
           {"u", jio::vec(p.u)},
           {"phi", jio::vec(p.phi)},
           {"residual_idempotent", jio::num(p.residual_idempotent)},
           {"residual_eigen", jio::num(p.residual_eigen)},
           {"residual_rank_one", jio::num(p.residual_rank_one)},
           {"rank_one_form", p.rank_one_form},
           {"u_strictly_positive", p.u_strictly_positive},
           {"phi_strictly_positive", p.phi_strictly_positive},
           {"positivity_asserted", p.positivity_asserted},
           {"horizons", h},
           {"distances", d},
           {"decay_constant", jio::num(p.decay_constant)}};
}
inline void from_json(const Json &j, ProjectionReport &p)
{
  p.lambda = jio::get_num(j.at("lambda"));
  p.projection = jio::get_mat(j.at("projection"));
  p.rank = j.at("rank").get<int>();
  p.u = jio::get_vec(j.at("u"));
  p.phi = jio::get_vec(j.at("phi"));
  p.residual_idempotent = jio::get_num(j.at("residual_idempotent"));
  p.residual_eigen = jio::get_num(j.at("residual_eigen"));
  p.residual_rank_one = jio::get_num(j.at("residual_rank_one"));
  p.rank_one_form = j.at("rank_one_form").get<bool>();
  p.u_strictly_positive = j.at("u_strictly_positive").get<bool>();
  p.phi_strictly_positive = j.at("phi_strictly_positive").get<bool>();
  p.positivity_asserted = j.at("positivity_asserted").get<bool>();
  p.horizons.clear();
  p.distances.clear();
  for (const auto &x : j.at("horizons"))
    p.horizons.push_back(jio::get_num(x));
  for (const auto &x : j.at("distances"))
    p.distances.push_back(jio::get_num(x));
  p.decay_constant = jio::get_num(j.at("decay_constant"));
}

} // namespace evpos

#endif // EVPOS_JSON_IO_HPP
