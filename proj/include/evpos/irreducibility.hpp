#ifndef EVPOS_IRREDUCIBILITY_HPP
#define EVPOS_IRREDUCIBILITY_HPP

// Invariant ideals, (persistent) irreducibility and the weak pairing conditions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evpos/errors.hpp"
#include "evpos/lattice.hpp"
#include "evpos/parallel.hpp"
#include "evpos/positivity.hpp"
#include "evpos/scc.hpp"
#include "evpos/semigroup.hpp"

namespace evpos {

/// Entries with |a_ij| <= tol * (1 + max |A|) count as structural zeros.
inline double pattern_threshold(const Matrix &a, double tol) { return tol * (1.0 + max_abs(a)); }

/// Edge j -> i iff |a_ij| exceeds the pattern threshold, i != j.
inline Digraph sign_pattern_digraph(const Matrix &a, double tol = kDefaultPositivityTol)
{
  if (a.rows() != a.cols())
    throw PreconditionError("sign_pattern_digraph: matrix must be square");
  const auto n = static_cast<std::size_t>(a.rows());
  const double thr = pattern_threshold(a, tol);
  Digraph g(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (i != j && std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > thr)
        g.add_edge(j, i);
  return g;
}

struct NearThresholdEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

/// Non-zero off-diagonal entries within two decades of the pattern threshold.
inline std::vector<NearThresholdEntry> near_threshold_entries(const Matrix &a, double tol)
{
  const double thr = pattern_threshold(a, tol);
  std::vector<NearThresholdEntry> out;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double v = std::abs(a(i, j));
      if (i != j && v > 0.0 && v >= 0.01 * thr && v <= 100.0 * thr)
        out.push_back({i, j, a(i, j)});
    }
  return out;
}

/// span{e_j : j in S} is A-invariant: a_ij is a structural zero for all i outside S, j in S.
inline bool ideal_invariant_under_generator(const Matrix &a, const IdealMask &s, double tol = kDefaultPositivityTol)
{
  if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != s.dim())
    throw PreconditionError("ideal_invariant_under_generator: dimension mismatch");
  const double thr = pattern_threshold(a, tol);
  const auto n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!s.contains(static_cast<std::size_t>(j)))
      continue;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!s.contains(static_cast<std::size_t>(i)) && std::abs(a(i, j)) > thr)
        return false;
  }
  return true;
}

inline constexpr std::size_t kBruteForceMaxDim = 16;

/// All 2^n masks tested one by one.
inline std::vector<IdealMask> enumerate_invariant_ideals_brute_force(const Matrix &a, double tol = kDefaultPositivityTol)
{
  const auto n = static_cast<std::size_t>(a.rows());
  if (n > kBruteForceMaxDim)
    throw DimensionTooLarge("enumerate_invariant_ideals_brute_force: dim " + std::to_string(n) + " > " +
                            std::to_string(kBruteForceMaxDim));
  const std::uint64_t total = std::uint64_t{1} << n;
  auto flags = parallel_map(static_cast<std::size_t>(total), [&](std::size_t w) {
    return ideal_invariant_under_generator(a, IdealMask::from_word(n, w), tol) ? 1 : 0;
  });
  std::vector<IdealMask> out;
  for (std::uint64_t w = 0; w < total; ++w)
    if (flags[static_cast<std::size_t>(w)])
      out.push_back(IdealMask::from_word(n, w));
  std::sort(out.begin(), out.end());
  return out;
}

/// Vertex sets closed under out-edges: unions of strong components closed under successors.
inline std::vector<IdealMask> closed_vertex_sets(const Digraph &g, std::size_t max_count = std::size_t{1} << 20)
{
  const SccDecomposition scc = tarjan_scc(g);
  const auto succ = condensation(g, scc);
  const std::size_t c = scc.count();
  std::vector<IdealMask> out;
  std::vector<bool> chosen(c, false);
  // Successors carry smaller component numbers, so they are decided first.
  auto rec = [&](auto &&self, std::size_t k) -> void {
    if (k == c) {
      if (out.size() >= max_count)
        throw DimensionTooLarge("closed_vertex_sets: more than " + std::to_string(max_count) + " closed sets");
      IdealMask m(g.n);
      for (std::size_t comp = 0; comp < c; ++comp)
        if (chosen[comp])
          for (std::size_t v : scc.members[comp])
            m.insert(v);
      out.push_back(std::move(m));
      return;
    }
    chosen[k] = false;
    self(self, k + 1);
    bool allowed = true;
    for (std::size_t s : succ[k])
      allowed = allowed && chosen[s];
    if (allowed) {
      chosen[k] = true;
      self(self, k + 1);
      chosen[k] = false;
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<IdealMask> enumerate_invariant_ideals_graph(const Matrix &a, double tol = kDefaultPositivityTol,
                                                               std::size_t max_count = std::size_t{1} << 20)
{
  return closed_vertex_sets(sign_pattern_digraph(a, tol), max_count);
}

/// Graph method, cross-checked by brute force when dim <= 16.
inline std::vector<IdealMask> enumerate_invariant_ideals(const Matrix &a, double tol = kDefaultPositivityTol)
{
  auto graph = enumerate_invariant_ideals_graph(a, tol);
  if (static_cast<std::size_t>(a.rows()) <= kBruteForceMaxDim) {
    if (enumerate_invariant_ideals_brute_force(a, tol) != graph)
      throw ConsistencyViolation("enumerate_invariant_ideals: brute force and SCC enumeration disagree");
  }
  return graph;
}

enum class ConditionStatus { Holds, ViolatedWithWitness, GridLimited };

inline const char *to_string(ConditionStatus s)
{
  switch (s) {
  case ConditionStatus::Holds:
    return "holds";
  case ConditionStatus::ViolatedWithWitness:
    return "violated-with-witness";
  case ConditionStatus::GridLimited:
    return "grid-limited";
  }
  return "grid-limited";
}

/// <phi_{phi_index}, e^{tA} f_{f_index}> at time t (for threshold t0 where relevant).
struct PairingWitness {
  std::size_t f_index = 0;
  std::size_t phi_index = 0;
  double t0 = 0.0;
  double t = 0.0;
  double value = 0.0;
};

struct ConditionResult {
  ConditionStatus status = ConditionStatus::Holds;
  std::size_t tested = 0;
  std::size_t satisfied = 0;
  std::optional<PairingWitness> witness;        // a satisfied instance
  std::optional<PairingWitness> counterexample; // an unsatisfied instance (t = t0, value = 0)
  std::string note;
};

struct ConditionsTable {
  ConditionResult ii; // weak condition at arbitrary times
  ConditionResult iv; // weak condition at large times or 0
  ConditionResult v;  // weak condition at large times
  bool diagram_consistent = true;
  std::vector<std::string> diagram_violations;
};

inline std::vector<Vector> basis_vectors(Eigen::Index n)
{
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < n; ++i)
    out.push_back(unit_vector(n, i));
  return out;
}

/// Strictly positive vectors with entries in [0.1, 1], from a fixed seed.
inline std::vector<Vector> random_positive_vectors(Eigen::Index n, std::size_t count, unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  std::vector<Vector> out;
  for (std::size_t k = 0; k < count; ++k) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = ud(rng);
    out.push_back(v);
  }
  return out;
}

namespace detail {

/// <phi, e^{tA} f> vanishes identically iff phi^T A^k f = 0 for k < n (matrix generators only).
inline bool pairing_identically_zero(const Matrix &a, const Vector &f, const Vector &phi, double tol)
{
  const double scale = std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
  Vector v = f;
  double size = f.cwiseAbs().sum() * phi.cwiseAbs().sum();
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    if (std::abs(phi.dot(v)) > tol * size)
      return false;
    v = a * v;
    size *= scale;
  }
  return true;
}

struct PairingSamples {
  std::vector<double> times;
  std::vector<Matrix> values;     // (#phi x #f) per time
  std::vector<double> thresholds; // per time, before scaling with the vector sizes
  std::optional<double> nilpotent_at;
};

inline PairingSamples sample_pairings(const SemigroupProvider &p, const std::vector<Vector> &fs,
                                      const std::vector<Vector> &phis, const TimeGrid &grid, double tol)
{
  PairingSamples s;
  s.times = grid.adapted_to(p).points();
  if (s.times.front() > 0.0)
    s.times.insert(s.times.begin(), 0.0);
  const auto n = p.dim();
  Matrix fm(n, static_cast<Eigen::Index>(fs.size())), pm(n, static_cast<Eigen::Index>(phis.size()));
  for (std::size_t k = 0; k < fs.size(); ++k)
    fm.col(static_cast<Eigen::Index>(k)) = fs[k];
  for (std::size_t k = 0; k < phis.size(); ++k)
    pm.col(static_cast<Eigen::Index>(k)) = phis[k];
  struct Sample {
    Matrix q;
    double thr = 0.0;
    bool zero = false;
  };
  auto samples = parallel_map(s.times.size(), [&](std::size_t i) {
    const Matrix e = p.evaluate(s.times[i]);
    const double m = max_abs(e);
    return Sample{pm.transpose() * e * fm, tol * std::max(1.0, m), m == 0.0};
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].zero && !s.nilpotent_at)
      s.nilpotent_at = s.times[i];
    s.values.push_back(std::move(samples[i].q));
    s.thresholds.push_back(samples[i].thr);
  }
  return s;
}

inline void finish_condition(ConditionResult &c, bool any_definite)
{
  if (c.satisfied == c.tested)
    c.status = ConditionStatus::Holds;
  else
    c.status = any_definite ? ConditionStatus::ViolatedWithWitness : ConditionStatus::GridLimited;
}

} // namespace detail

/// Samples <phi, e^{tA} f> for every (f, phi) and every threshold t0 and aggregates the three weak
/// conditions. A missing witness is definite when the pairing provably vanishes (Krylov test for
/// matrix generators, or e^{t0 A} = 0 for nilpotent providers); otherwise it is grid-limited.
inline ConditionsTable weak_conditions_test(const SemigroupProvider &p, const std::vector<Vector> &fs,
                                            const std::vector<Vector> &phis, const std::vector<double> &t0_list,
                                            const TimeGrid &grid, double tol = kDefaultPositivityTol)
{
  for (const auto &f : fs)
    if (f.size() != p.dim() || !is_nonzero_positive(f))
      throw PreconditionError("weak_conditions_test: test vectors must be positive and non-zero");
  for (const auto &phi : phis)
    if (phi.size() != p.dim() || !is_nonzero_positive(phi))
      throw PreconditionError("weak_conditions_test: test functionals must be positive and non-zero");
  if (fs.empty() || phis.empty() || t0_list.empty())
    throw PreconditionError("weak_conditions_test: empty test family");

  const auto s = detail::sample_pairings(p, fs, phis, grid, tol);
  const Matrix *gen = p.generator();
  ConditionsTable table;
  table.ii.note = "exists t >= 0";
  table.iv.note = "for each t0, exists t in {0} u [t0, inf)";
  table.v.note = "for each t0, exists t >= t0";
  bool def_ii = false, def_iv = false, def_v = false;

  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
      const double size = fs[fi].cwiseAbs().sum() * phis[pi].cwiseAbs().sum();
      auto nonzero = [&](std::size_t k) {
        return std::abs(s.values[k](static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(fi))) >
               s.thresholds[k] * size;
      };
      auto value = [&](std::size_t k) {
        return s.values[k](static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(fi));
      };
      const bool identically_zero = gen && detail::pairing_identically_zero(*gen, fs[fi], phis[pi], tol);

      std::optional<std::size_t> first;
      for (std::size_t k = 0; k < s.times.size() && !first; ++k)
        if (nonzero(k))
          first = k;
      ++table.ii.tested;
      if (first) {
        ++table.ii.satisfied;
        if (!table.ii.witness)
          table.ii.witness = PairingWitness{fi, pi, 0.0, s.times[*first], value(*first)};
      } else {
        def_ii = def_ii || identically_zero;
        if (!table.ii.counterexample || identically_zero)
          table.ii.counterexample = PairingWitness{fi, pi, 0.0, 0.0, 0.0};
      }
      for (double t0 : t0_list) {
        std::optional<std::size_t> late;
        for (std::size_t k = 0; k < s.times.size() && !late; ++k)
          if (s.times[k] >= t0 && nonzero(k))
            late = k;
        const bool dead = s.nilpotent_at && *s.nilpotent_at <= t0;
        const bool definite_v = identically_zero || dead;
        // Exact value at t = 0 is <phi, f>.
        const bool definite_iv = identically_zero || (dead && phis[pi].dot(fs[fi]) == 0.0);

        std::optional<std::size_t> zero_or_late;
        for (std::size_t k = 0; k < s.times.size() && !zero_or_late; ++k)
          if ((s.times[k] == 0.0 || s.times[k] >= t0) && nonzero(k))
            zero_or_late = k;

        ++table.iv.tested;
        if (zero_or_late) {
          ++table.iv.satisfied;
          if (!table.iv.witness)
            table.iv.witness = PairingWitness{fi, pi, t0, s.times[*zero_or_late], value(*zero_or_late)};
        } else {
          def_iv = def_iv || definite_iv;
          if (!table.iv.counterexample || definite_iv)
            table.iv.counterexample = PairingWitness{fi, pi, t0, t0, 0.0};
        }

        ++table.v.tested;
        if (late) {
          ++table.v.satisfied;
          if (!table.v.witness)
            table.v.witness = PairingWitness{fi, pi, t0, s.times[*late], value(*late)};
        } else {
          def_v = def_v || definite_v;
          if (!table.v.counterexample || definite_v)
            table.v.counterexample = PairingWitness{fi, pi, t0, t0, 0.0};
        }

        // Witness propagation along (v) => (iv) => (ii) on this instance.
        if (late && !zero_or_late)
          table.diagram_violations.push_back("(v) witness is not a (iv) witness");
        if (zero_or_late && !first)
          table.diagram_violations.push_back("(iv) witness is not a (ii) witness");
      }
    }
  }
  detail::finish_condition(table.ii, def_ii);
  detail::finish_condition(table.iv, def_iv);
  detail::finish_condition(table.v, def_v);

  auto holds = [](const ConditionResult &c) { return c.status == ConditionStatus::Holds; };
  auto refuted = [](const ConditionResult &c) { return c.status == ConditionStatus::ViolatedWithWitness; };
  if (holds(table.v) && !holds(table.iv))
    table.diagram_violations.push_back("(v) holds but (iv) does not");
  if (holds(table.iv) && !holds(table.ii))
    table.diagram_violations.push_back("(iv) holds but (ii) does not");
  if (refuted(table.ii) && !refuted(table.iv))
    table.diagram_violations.push_back("(ii) refuted but (iv) not refuted");
  table.diagram_consistent = table.diagram_violations.empty();
  return table;
}

enum class IrreducibilityClass { PersistentlyIrreducible, IrreducibleNotPersistent, Reducible };

inline const char *to_string(IrreducibilityClass c)
{
  switch (c) {
  case IrreducibilityClass::PersistentlyIrreducible:
    return "PersistentlyIrreducible";
  case IrreducibilityClass::IrreducibleNotPersistent:
    return "IrreducibleNotPersistent";
  case IrreducibilityClass::Reducible:
    return "Reducible";
  }
  return "Reducible";
}

struct IrreducibilityReport {
  IrreducibilityClass classification = IrreducibilityClass::Reducible;
  std::optional<IdealMask> witness_ideal;
  std::optional<double> witness_onset;
  ConditionsTable conditions;
  bool diagram_consistent = true;
  bool grid_limited = false;
  std::optional<double> nilpotent_at;
  std::vector<NearThresholdEntry> near_threshold;
  std::string method;
};

namespace detail {

/// A non-trivial closed set: the sink component with the smallest vertex.
inline std::optional<IdealMask> sink_component_mask(const Digraph &g)
{
  const SccDecomposition scc = tarjan_scc(g);
  if (scc.count() <= 1)
    return std::nullopt;
  const auto succ = condensation(g, scc);
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < scc.count(); ++c)
    if (succ[c].empty() && (!best || scc.members[c].front() < scc.members[*best].front()))
      best = c;
  return IdealMask::from_indices(g.n, scc.members[*best]);
}

inline Digraph sampled_digraph(const std::vector<Matrix> &evals, const std::vector<double> &times, double t_from,
                               double tol)
{
  const auto n = static_cast<std::size_t>(evals.front().rows());
  Digraph g(n);
  for (std::size_t k = 0; k < evals.size(); ++k) {
    if (times[k] < t_from || times[k] == 0.0)
      continue;
    const Matrix &e = evals[k];
    const double thr = sign_threshold(e, tol);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        if (i != j && std::abs(e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > thr)
          g.add_edge(j, i);
  }
  return g;
}

} // namespace detail

/// Matrix providers: sign-pattern SCC decides irreducibility, which equals persistent irreducibility for
/// analytic semigroups. Other providers: sampled digraphs over the grid and over tails t >= t0, with
/// exact nilpotency detection. The conditions table is always attached.
inline IrreducibilityReport classify(const SemigroupProvider &p, const TimeGrid &grid_in,
                                     double tol = kDefaultPositivityTol,
                                     std::vector<double> t0_list = {0.0, 1.0, 5.0})
{
  const TimeGrid grid = grid_in.adapted_to(p);
  const auto n = p.dim();
  IrreducibilityReport r;

  std::vector<double> t0s;
  for (double t0 : t0_list)
    if (t0 <= grid.points().back())
      t0s.push_back(t0);
  if (t0s.empty())
    t0s.push_back(0.0);
  auto fs = basis_vectors(n);
  auto extra = random_positive_vectors(n, 2, 2024);
  fs.insert(fs.end(), extra.begin(), extra.end());
  r.conditions = weak_conditions_test(p, fs, fs, t0s, grid, tol);
  r.diagram_consistent = r.conditions.diagram_consistent;

  if (const Matrix *a = p.generator()) {
    r.method = "sign-pattern";
    r.grid_limited = false;
    r.near_threshold = near_threshold_entries(*a, tol);
    const Digraph g = sign_pattern_digraph(*a, tol);
    if (auto w = detail::sink_component_mask(g)) {
      if (!ideal_invariant_under_generator(*a, *w, tol) || w->is_trivial())
        throw ConsistencyViolation("classify: sink component is not an invariant ideal");
      r.classification = IrreducibilityClass::Reducible;
      r.witness_ideal = *w;
      r.witness_onset = 0.0;
    } else {
      r.classification = IrreducibilityClass::PersistentlyIrreducible;
    }
    return r;
  }

  r.method = "sampled";
  r.grid_limited = true;
  const auto &pts = grid.points();
  std::vector<double> times = pts;
  const auto evals = parallel_map(times.size(), [&](std::size_t k) { return p.evaluate(times[k]); });
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] > 0.0 && max_abs(evals[k]) == 0.0) {
      r.nilpotent_at = times[k];
      break;
    }

  const Digraph all = detail::sampled_digraph(evals, times, 0.0, tol);
  if (auto w = detail::sink_component_mask(all)) {
    r.classification = IrreducibilityClass::Reducible;
    r.witness_ideal = *w;
    r.witness_onset = 0.0;
    return r;
  }
  if (n <= 1) {
    r.classification = IrreducibilityClass::PersistentlyIrreducible;
    return r;
  }
  if (r.nilpotent_at) {
    // e^{tA} = 0 for t >= t_nil: every ideal is eventually invariant.
    r.classification = IrreducibilityClass::IrreducibleNotPersistent;
    r.witness_ideal = IdealMask::from_indices(static_cast<std::size_t>(n), {0});
    r.witness_onset = *r.nilpotent_at;
    r.grid_limited = false;
    return r;
  }
  const std::size_t m = times.size();
  for (std::size_t q = 1; q <= 6; ++q) {
    const double t0 = times[q * m / 8];
    if (auto w = detail::sink_component_mask(detail::sampled_digraph(evals, times, t0, tol))) {
      r.classification = IrreducibilityClass::IrreducibleNotPersistent;
      r.witness_ideal = *w;
      r.witness_onset = t0;
      return r;
    }
  }
  r.classification = IrreducibilityClass::PersistentlyIrreducible;
  return r;
}

struct PrincipalIdealReport {
  bool trivial = false; // h = 0
  bool premise_holds = false;
  double premise_max_excess = 0.0;
  IdealMask support;
  std::optional<double> onset; // support invariance and positivity on E_h for all later samples
  bool support_invariant = false;
  bool gauge_bound_holds = false;
  double max_gauge_ratio = 0.0;
  std::size_t gauge_samples = 0;
  std::vector<std::string> violations;
};

/// Premise e^{tA} h <= h for sampled t >= t0_premise; then support invariance of E_h and the
/// gauge bound ||e^{tA} f||_h <= 2 ||f||_h for random f in E_h past the detected onset.
inline PrincipalIdealReport eventual_invariance_of_principal_ideal(const SemigroupProvider &p, const Vector &h,
                                                                   double t0_premise, const TimeGrid &grid_in,
                                                                   double tol = kDefaultPositivityTol,
                                                                   std::size_t n_random = 16)
{
  if (h.size() != p.dim() || !is_positive(h, 0.0))
    throw PreconditionError("eventual_invariance_of_principal_ideal: h must be a positive carrier vector");
  PrincipalIdealReport r;
  const GaugeContext ctx(h);
  r.support = ctx.support();
  if (r.support.empty()) {
    r.trivial = r.premise_holds = r.support_invariant = r.gauge_bound_holds = true;
    r.onset = t0_premise;
    return r;
  }
  const TimeGrid grid = grid_in.adapted_to(p);
  std::vector<double> times = grid.tail(t0_premise);
  if (times.empty())
    throw PreconditionError("eventual_invariance_of_principal_ideal: no grid points past t0");
  const auto evals = parallel_map(times.size(), [&](std::size_t k) { return p.evaluate(times[k]); });

  const double hs = std::max(1.0, h.cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < times.size(); ++k) {
    Eigen::Index i = 0;
    const double excess = (evals[k] * h - h).maxCoeff(&i);
    r.premise_max_excess = std::max(r.premise_max_excess, excess);
    if (excess > tol * std::max(hs, max_abs(evals[k]) * hs))
      throw PremiseViolation("eventual_invariance_of_principal_ideal: (e^{tA}h)(" + std::to_string(i) + ") exceeds h(" +
                             std::to_string(i) + ") by " + std::to_string(excess) + " at t = " +
                             std::to_string(times[k]));
  }
  r.premise_holds = true;

  const auto n = p.dim();
  auto ok = [&](std::size_t k) {
    const Matrix &e = evals[k];
    const double thr = sign_threshold(e, tol);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!r.support.contains(static_cast<std::size_t>(j)))
        continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!r.support.contains(static_cast<std::size_t>(i)) && std::abs(e(i, j)) > thr)
          return false;
        if (e(i, j) < -thr)
          return false;
      }
    }
    return true;
  };
  std::optional<std::size_t> start;
  for (std::size_t k = times.size(); k-- > 0;) {
    if (!ok(k))
      break;
    start = k;
  }
  if (!start) {
    r.violations.push_back("no sampled tail on which E_h is invariant and e^{tA} is positive");
    return r;
  }
  r.onset = times[*start];
  r.support_invariant = true;

  std::vector<Vector> fs{h, -h};
  std::mt19937 rng(977);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (std::size_t k = 0; k < n_random; ++k) {
    Vector f(n);
    for (Eigen::Index i = 0; i < n; ++i)
      f(i) = ud(rng) * h(i);
    fs.push_back(f);
  }
  r.gauge_bound_holds = true;
  for (std::size_t k = *start; k < times.size(); ++k) {
    for (const auto &f : fs) {
      const double gf = *gauge_norm(f, ctx);
      if (gf == 0.0)
        continue;
      Vector img = evals[k] * f;
      // Entries outside the support below the sign threshold count as zero.
      const double thr = sign_threshold(evals[k], tol) * f.cwiseAbs().sum();
      for (Eigen::Index i = 0; i < n; ++i)
        if (!r.support.contains(static_cast<std::size_t>(i)) && std::abs(img(i)) <= thr)
          img(i) = 0.0;
      const auto g = gauge_norm(img, ctx);
      ++r.gauge_samples;
      if (!g) {
        r.gauge_bound_holds = false;
        r.violations.push_back("e^{tA}f left E_h at t = " + std::to_string(times[k]));
        continue;
      }
      r.max_gauge_ratio = std::max(r.max_gauge_ratio, *g / gf);
      if (*g > 2.0 * gf + 1e-9) {
        r.gauge_bound_holds = false;
        r.violations.push_back("gauge ratio " + std::to_string(*g / gf) + " at t = " + std::to_string(times[k]));
      }
    }
  }
  return r;
}

struct SuperFixedVector {
  Vector h;
  double max_excess = 0.0; // max over samples of (e^{tA}h - h)
  std::size_t samples = 0;
};

/// h = int_{t1}^inf e^{tA} f dt = e^{t1 A} (-A)^{-1} f for s(A) < 0; then e^{tA} h <= h for all t >= 0.
inline SuperFixedVector build_super_fixed_vector(const Matrix &a, const Vector &f, double t1,
                                                 double tol = kDefaultPositivityTol)
{
  if (a.rows() != a.cols() || f.size() != a.rows())
    throw PreconditionError("build_super_fixed_vector: dimension mismatch");
  if (!is_nonzero_positive(f))
    throw PreconditionError("build_super_fixed_vector: f must be positive and non-zero");
  if (t1 < 0.0)
    throw PreconditionError("build_super_fixed_vector: t1 must be >= 0");
  const double s = spectral_bound(a);
  if (!(s < 0.0))
    throw SpectralBoundNotNegative("build_super_fixed_vector: s(A) = " + std::to_string(s) + " is not negative");

  const TimeGrid grid = TimeGrid::default_grid();
  const double fs = f.cwiseAbs().maxCoeff();
  for (double tau : grid.points()) {
    const Vector v = expm(a, t1 + tau) * f;
    Eigen::Index i = 0;
    if (v.minCoeff(&i) < -tol * fs)
      throw PremiseViolation("build_super_fixed_vector: (e^{tA}f)(" + std::to_string(i) + ") < 0 at t = " +
                             std::to_string(t1 + tau));
  }

  SuperFixedVector r;
  r.h = expm(a, t1) * Eigen::PartialPivLU<Matrix>(-a).solve(f);
  const double hs = r.h.cwiseAbs().maxCoeff();
  if (!(hs > 0.0) || r.h.minCoeff() < -tol * hs)
    throw ConsistencyViolation("build_super_fixed_vector: h is not positive and non-zero");
  for (double t : grid.points()) {
    const double excess = (expm(a, t) * r.h - r.h).maxCoeff();
    r.max_excess = std::max(r.max_excess, excess);
    ++r.samples;
  }
  if (r.max_excess > tol * hs)
    throw ConsistencyViolation("build_super_fixed_vector: e^{tA}h <= h fails by " + std::to_string(r.max_excess));
  return r;
}

struct NonvanishingReport {
  bool passed = true;
  double min_column_norm = std::numeric_limits<double>::infinity(); // min ||e^{tA} e_i||
  double min_row_norm = std::numeric_limits<double>::infinity();    // min ||(e^{tA})^T e_j||
  std::vector<Evidence> violations;                                 // first 64
  std::size_t violation_count = 0;
};

/// e^{tA} f != 0 and (e^{tA})' phi != 0 for all sampled t and positive basis vectors.
inline NonvanishingReport strict_nonvanishing_check(const SemigroupProvider &p, const TimeGrid &grid_in,
                                                    double tol = kDefaultPositivityTol)
{
  const TimeGrid grid = grid_in.adapted_to(p);
  const auto &pts = grid.points();
  struct Norms {
    Vector cols, rows;
  };
  const auto norms = parallel_map(pts.size(), [&](std::size_t k) {
    const Matrix e = p.evaluate(pts[k]);
    return Norms{e.colwise().norm().transpose(), e.rowwise().norm()};
  });
  NonvanishingReport r;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (Eigen::Index i = 0; i < norms[k].cols.size(); ++i) {
      r.min_column_norm = std::min(r.min_column_norm, norms[k].cols(i));
      r.min_row_norm = std::min(r.min_row_norm, norms[k].rows(i));
      if (norms[k].cols(i) <= tol) {
        ++r.violation_count;
        if (r.violations.size() < 64)
          r.violations.push_back({pts[k], -1, i, norms[k].cols(i), "e^{tA} e_i = 0"});
      }
      if (norms[k].rows(i) <= tol) {
        ++r.violation_count;
        if (r.violations.size() < 64)
          r.violations.push_back({pts[k], i, -1, norms[k].rows(i), "(e^{tA})' e_j = 0"});
      }
    }
  }
  r.passed = r.violation_count == 0;
  return r;
}

} // namespace evpos

#endif // EVPOS_IRREDUCIBILITY_HPP
