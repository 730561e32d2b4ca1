#ifndef EVPOS_POSITIVITY_HPP
#define EVPOS_POSITIVITY_HPP

// Positivity, eventual positivity and eventual strong positivity of semigroups:
// spectral certificates, grid classification, spectral-radius lower bounds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evpos/errors.hpp"
#include "evpos/lattice.hpp"
#include "evpos/semigroup.hpp"
#include "evpos/spectral.hpp"

namespace evpos {

enum class VerdictClass {
  Positive,
  UniformlyEventuallyStronglyPositive,
  UniformlyEventuallyPositive,
  NotEventuallyPositive,
  Inconclusive
};

inline const char *to_string(VerdictClass c)
{
  switch (c) {
  case VerdictClass::Positive:
    return "Positive";
  case VerdictClass::UniformlyEventuallyStronglyPositive:
    return "UniformlyEventuallyStronglyPositive";
  case VerdictClass::UniformlyEventuallyPositive:
    return "UniformlyEventuallyPositive";
  case VerdictClass::NotEventuallyPositive:
    return "NotEventuallyPositive";
  case VerdictClass::Inconclusive:
    return "Inconclusive";
  }
  return "Inconclusive";
}

inline bool is_eventually_positive(VerdictClass c)
{
  return c == VerdictClass::Positive || c == VerdictClass::UniformlyEventuallyStronglyPositive ||
         c == VerdictClass::UniformlyEventuallyPositive;
}

/// One sampled fact supporting a verdict: the entry (row, col) of e^{tA} had this value.
struct Evidence {
  double t = 0.0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
  std::string note;
};

struct PositivityVerdict {
  VerdictClass cls = VerdictClass::Inconclusive;
  std::optional<double> onset_t0;        // positivity onset
  std::optional<double> strong_onset_t0; // strict positivity onset (strong classes only)
  std::vector<Evidence> evidence;
  bool certified = false;   // true: the onset is proved, not sampled
  bool grid_limited = true; // true: conclusions only hold on the sampled times
  std::string method;
};

struct SpectralCertificate {
  double spectral_bound = 0.0;
  bool dominant_is_real_simple = false;
  double spectral_gap = 0.0;
  Vector right_vec;
  Vector left_vec;
  double pairing = 0.0;
  double min_entry_projection = 0.0; // min entry of u phi^T
  double constant_c = 0.0;           // ||e^{-s t} e^{tA} - u phi^T||_max <= C e^{-gap t}
  double eigvec_condition = 0.0;     // cond_2 of the eigenvector matrix
  bool vectors_strictly_positive = false;
};

/// Relative threshold used for operator sign tests: tol * max(1, max |entry|).
inline double sign_threshold(const Matrix &e, double tol) { return tol * std::max(1.0, max_abs(e)); }

/// Off-diagonal entries >= 0: the semigroup is positive for all t.
inline bool is_metzler(const Matrix &a)
{
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) < 0.0)
        return false;
  return true;
}

/// Sampled classification. Never certified; NotEventuallyPositive only means the last quarter of
/// the grid still shows violations.
inline PositivityVerdict classify_on_grid(const SemigroupProvider &p, const TimeGrid &grid_in,
                                          double tol = kDefaultPositivityTol)
{
  const TimeGrid grid = grid_in.adapted_to(p);
  const auto &pts = grid.points();
  struct Sample {
    EntryWitness min;
    double threshold = 0.0;
  };
  const auto samples = parallel_map(pts.size(), [&](std::size_t i) {
    const Matrix e = p.evaluate(pts[i]);
    return Sample{min_entry(e), sign_threshold(e, tol)};
  });

  PositivityVerdict v;
  v.method = "grid";
  v.certified = false;
  v.grid_limited = true;
  long last_violation = -1;
  long last_not_strict = -1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].min.value < -samples[i].threshold)
      last_violation = static_cast<long>(i);
    if (!(samples[i].min.value > samples[i].threshold))
      last_not_strict = static_cast<long>(i);
  }
  const long n = static_cast<long>(samples.size());
  const long tail_start = n - std::max<long>(1, n / 4);

  auto record = [&](long i, const char *note) {
    const auto &s = samples[static_cast<std::size_t>(i)];
    v.evidence.push_back({pts[static_cast<std::size_t>(i)], s.min.row, s.min.col, s.min.value, note});
  };

  if (last_violation < 0) {
    v.cls = VerdictClass::Positive;
    v.onset_t0 = pts.front();
    record(0, "first sample, no violation anywhere on the grid");
    return v;
  }
  record(last_violation, "last sampled sign violation");
  if (last_violation >= tail_start) {
    v.cls = VerdictClass::NotEventuallyPositive;
    return v;
  }
  v.onset_t0 = pts[static_cast<std::size_t>(last_violation + 1)];
  record(last_violation + 1, "first sample of the violation-free tail");
  if (last_not_strict < tail_start && last_not_strict + 1 < n) {
    v.cls = VerdictClass::UniformlyEventuallyStronglyPositive;
    v.strong_onset_t0 = pts[static_cast<std::size_t>(last_not_strict + 1)];
    record(last_not_strict + 1, "first sample of the strictly positive tail");
  } else {
    v.cls = VerdictClass::UniformlyEventuallyPositive;
  }
  return v;
}

/// Spectral certificate of a matrix generator, without a verdict.
inline SpectralCertificate spectral_certificate(const Matrix &a)
{
  SpectralCertificate c;
  const DominantEigen d = dominant_eigen(a);
  c.spectral_bound = d.spectral_bound;
  c.dominant_is_real_simple = d.real_simple && std::abs(d.pairing) > kEigenResidualTol;
  c.spectral_gap = d.spectral_gap;
  c.right_vec = d.u;
  c.left_vec = d.phi;
  c.pairing = d.pairing;
  if (!c.dominant_is_real_simple)
    return c;
  const Matrix proj = d.u * d.phi.transpose();
  c.min_entry_projection = proj.minCoeff();
  c.vectors_strictly_positive = is_quasi_interior(d.u, 0.0) && is_quasi_interior(d.phi, 0.0);

  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success)
    throw EigenSolverFailure("spectral_certificate: eigenvector computation failed");
  Eigen::MatrixXcd v = es.eigenvectors();
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    v.col(j).normalize();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto &sv = svd.singularValues();
  c.eigvec_condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  // ||e^{t(A-s)}(I - P)||_2 <= cond(V) e^{-gap t}; the safety factor and (1 + ||P||_max) keep C conservative.
  c.constant_c = 1.1 * c.eigvec_condition * (1.0 + proj.cwiseAbs().maxCoeff());
  return c;
}

/// Certifies eventual strong positivity from a simple, real, strictly dominant eigenvalue with
/// strictly positive eigenvectors; Metzler generators are certified positive. Anything else falls
/// back to grid sampling with certified = false.
inline std::pair<SpectralCertificate, PositivityVerdict>
certify_eventual_strong_positivity(const Matrix &a, const TimeGrid &grid = TimeGrid::default_grid(),
                                   double tol = kDefaultPositivityTol)
{
  if (a.rows() != a.cols() || a.rows() == 0)
    throw PreconditionError("certify_eventual_strong_positivity: matrix must be square and non-empty");
  SpectralCertificate cert = spectral_certificate(a);
  PositivityVerdict v;

  if (is_metzler(a)) {
    v.cls = VerdictClass::Positive;
    v.onset_t0 = 0.0;
    v.certified = true;
    v.grid_limited = false;
    v.method = "metzler";
    v.evidence.push_back({0.0, 0, 0, 0.0, "all off-diagonal entries are >= 0"});
    return {cert, v};
  }

  const bool certifiable = cert.dominant_is_real_simple && cert.vectors_strictly_positive &&
                           cert.min_entry_projection > 0.0 && std::isfinite(cert.constant_c) &&
                           cert.eigvec_condition < 1e10;
  if (certifiable) {
    const double t0 = std::max(0.0, std::log(cert.constant_c / cert.min_entry_projection) / cert.spectral_gap);
    v.cls = VerdictClass::UniformlyEventuallyStronglyPositive;
    v.onset_t0 = t0;
    v.strong_onset_t0 = t0;
    v.certified = true;
    v.grid_limited = false;
    v.method = "spectral";
    std::ostringstream note;
    note << "C = " << cert.constant_c << ", min(u phi^T) = " << cert.min_entry_projection
         << ", gap = " << cert.spectral_gap;
    v.evidence.push_back({t0, 0, 0, cert.min_entry_projection, note.str()});
    try {
      const auto w = min_entry(expm(a, t0));
      v.evidence.push_back({t0, w.row, w.col, w.value, "min entry of e^{t0 A}"});
    } catch (const OverflowError &) {
    }
    return {cert, v};
  }

  MatrixSemigroup sg(a);
  v = classify_on_grid(sg, grid, tol);
  v.method = "grid (certificate unavailable)";
  return {cert, v};
}

/// Outcome of the spectral-radius lower bound check spr(T) >= delta.
struct SprReport {
  bool premise_domination = false;      // T h >= delta h
  bool premise_nonvanishing = false;    // T^n h != 0 for n <= n_max
  bool premise_eventually_positive = false;
  int n0 = -1;                          // T^n >= 0 for n0 <= n <= n_max
  double spr = 0.0;                     // from the eigenvalues
  double spr_power_iteration = std::numeric_limits<double>::quiet_NaN();
  bool power_iteration_converged = false;
  bool conclusion_holds = false;        // spr >= delta (1 - 1e-9)
  bool chain_holds = false;             // T^{n0+k} h >= delta^k T^{n0} h, k <= 10
  std::vector<std::string> failures;
};

/// Power iteration started at h: ||T x_k|| / ||x_k|| for the normalized iterates.
inline std::pair<double, bool> spectral_radius_power_iteration(const Matrix &t, const Vector &h, int max_iter = 20000,
                                                               double rel_tol = 1e-13)
{
  Vector x = h.normalized();
  double est = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Vector y = t * x;
    const double ny = y.norm();
    if (ny == 0.0)
      return {0.0, true};
    if (k > 0 && std::abs(ny - est) <= rel_tol * ny)
      return {ny, true};
    est = ny;
    x = y / ny;
  }
  return {est, false};
}

inline SprReport spr_lower_bound_check(const Matrix &t, const Vector &h, double delta, int n_max = 20,
                                       double tol = kDefaultPositivityTol)
{
  const auto n = t.rows();
  if (t.cols() != n || h.size() != n)
    throw PreconditionError("spr_lower_bound_check: dimension mismatch");
  if (!is_nonzero_positive(h))
    throw PreconditionError("spr_lower_bound_check: h must satisfy h >= 0, h != 0");
  if (!(delta > 0.0) || n_max < 1)
    throw PreconditionError("spr_lower_bound_check: need delta > 0 and n_max >= 1");

  SprReport r;
  const Vector th = t * h;
  r.premise_domination = ((th - delta * h).array() >= -tol * std::max(1.0, th.cwiseAbs().maxCoeff())).all();
  if (!r.premise_domination)
    r.failures.push_back("T h >= delta h fails");

  std::vector<Matrix> powers;
  powers.reserve(static_cast<std::size_t>(n_max + 11));
  Matrix pw = Matrix::Identity(n, n);
  powers.push_back(pw);
  r.premise_nonvanishing = true;
  const double tnorm = std::max(operator_norm2(t), 1e-300);
  for (int k = 1; k <= n_max + 10; ++k) {
    pw = pw * t;
    powers.push_back(pw);
    if (k <= n_max) {
      const Vector v = pw * h;
      const double floor = 1e-14 * std::pow(tnorm, k) * h.cwiseAbs().maxCoeff();
      if (!(v.cwiseAbs().maxCoeff() > floor) && r.premise_nonvanishing) {
        r.premise_nonvanishing = false;
        r.failures.push_back("T^" + std::to_string(k) + " h = 0");
      }
    }
  }
  int n0 = -1;
  for (int k = n_max; k >= 1; --k) {
    const Matrix &m = powers[static_cast<std::size_t>(k)];
    if (m.minCoeff() >= -sign_threshold(m, tol))
      n0 = k;
    else
      break;
  }
  r.n0 = n0;
  r.premise_eventually_positive = n0 >= 1 && n0 <= std::max(1, n_max / 2);
  if (!r.premise_eventually_positive)
    r.failures.push_back("powers T^n are not eventually positive up to n_max = " + std::to_string(n_max));

  r.spr = spectral_radius(t);
  std::tie(r.spr_power_iteration, r.power_iteration_converged) = spectral_radius_power_iteration(t, h);
  r.conclusion_holds = r.spr >= delta * (1.0 - 1e-9);

  if (n0 >= 1) {
    const Vector base = powers[static_cast<std::size_t>(n0)] * h;
    r.chain_holds = true;
    for (int k = 0; k <= 10; ++k) {
      const Vector lhs = powers[static_cast<std::size_t>(n0 + k)] * h;
      const Vector rhs = std::pow(delta, k) * base;
      const double thr = tol * std::max({1.0, lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()});
      if (((lhs - rhs).array() < -thr).any()) {
        r.chain_holds = false;
        break;
      }
    }
  }

  if (!r.failures.empty()) {
    std::string msg = "spr_lower_bound_check premise violated:";
    for (const auto &f : r.failures)
      msg += " [" + f + "]";
    throw PremiseViolation(msg);
  }
  if (!r.conclusion_holds || !r.chain_holds)
    throw ConsistencyViolation("spr_lower_bound_check: premises hold but spr(T) = " + std::to_string(r.spr) +
                               " < delta = " + std::to_string(delta) + " or the power chain fails");
  return r;
}

enum class ConstructionStatus { Success, SearchFailure, PremiseFailure };

inline const char *to_string(ConstructionStatus s)
{
  switch (s) {
  case ConstructionStatus::Success:
    return "Success";
  case ConstructionStatus::SearchFailure:
    return "SearchFailure";
  case ConstructionStatus::PremiseFailure:
    return "PremiseFailure";
  }
  return "SearchFailure";
}

struct NonemptySpectrumReport {
  ConstructionStatus status = ConstructionStatus::SearchFailure;
  double onset_t0 = 0.0;
  std::vector<std::pair<Eigen::Index, double>> index_times; // support index x -> t_x
  std::vector<double> covering_times;                       // T = sum of e^{tA} over these
  double delta = 0.0;
  std::optional<SprReport> spr;
  std::string message;
};

/// Builds T = sum_x e^{t_x A} from times t_x >= t0 with (e^{t_x A} h)(x) > 0, finds the largest
/// delta with T h >= delta h and checks spr(T) >= delta. Failures are reported, not thrown.
inline NonemptySpectrumReport nonempty_spectrum_construction(const SemigroupProvider &p, const Vector &h,
                                                             const TimeGrid &grid_in,
                                                             std::optional<double> t0_override = std::nullopt,
                                                             double tol = kDefaultPositivityTol, int n_max = 20)
{
  if (h.size() != p.dim() || !is_nonzero_positive(h))
    throw PreconditionError("nonempty_spectrum_construction: h must be a non-zero positive carrier vector");
  const TimeGrid grid = grid_in.adapted_to(p);
  NonemptySpectrumReport r;
  const PositivityVerdict v = classify_on_grid(p, grid, tol);
  if (!is_eventually_positive(v.cls)) {
    r.status = ConstructionStatus::PremiseFailure;
    r.message = "provider is not eventually positive on the grid";
    return r;
  }
  r.onset_t0 = std::max(v.onset_t0.value_or(0.0), t0_override.value_or(0.0));

  const double floor = tol * h.cwiseAbs().maxCoeff();
  const auto tail = grid.tail(r.onset_t0);
  std::vector<Vector> images;
  images.reserve(tail.size());
  for (double t : tail)
    images.push_back(p.apply(t, h));
  for (Eigen::Index x = 0; x < h.size(); ++x) {
    if (!(h(x) > 0.0))
      continue;
    bool found = false;
    for (std::size_t k = 0; k < tail.size(); ++k) {
      if (images[k](x) > floor) {
        r.index_times.emplace_back(x, tail[k]);
        if (std::find(r.covering_times.begin(), r.covering_times.end(), tail[k]) == r.covering_times.end())
          r.covering_times.push_back(tail[k]);
        found = true;
        break;
      }
    }
    if (!found) {
      r.status = ConstructionStatus::SearchFailure;
      r.message = "no t >= " + std::to_string(r.onset_t0) + " on the grid with (e^{tA} h)(" + std::to_string(x) +
                  ") > 0";
      return r;
    }
  }
  std::sort(r.covering_times.begin(), r.covering_times.end());
  Matrix t = Matrix::Zero(p.dim(), p.dim());
  for (double s : r.covering_times)
    t += p.evaluate(s);
  const Vector th = t * h;
  r.delta = std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < h.size(); ++x)
    if (h(x) > 0.0)
      r.delta = std::min(r.delta, th(x) / h(x));
  if (!(r.delta > tol)) {
    r.status = ConstructionStatus::SearchFailure;
    r.message = "no delta > tol with T h >= delta h";
    return r;
  }
  try {
    r.spr = spr_lower_bound_check(t, h, r.delta, n_max, tol);
    r.status = ConstructionStatus::Success;
    r.message = "spr(T) >= " + std::to_string(r.delta);
  } catch (const PremiseViolation &e) {
    r.status = ConstructionStatus::PremiseFailure;
    r.message = e.what();
  }
  return r;
}

/// e^{sA} 1 >= (1/2) 1 at the given time (the AM-space variant of the construction).
inline bool unit_half_domination(const SemigroupProvider &p, double s)
{
  const Vector one = Vector::Ones(p.dim());
  return ((p.apply(s, one) - 0.5 * one).array() >= 0.0).all();
}

struct ApproximationReport {
  std::vector<Vector> sequence; // g_0, g_1, ... (one per time)
  std::vector<double> gaps;     // ||g_n - g||_2
  std::vector<double> gap_bounds; // sum_{k >= n} ||e^{t_k A} g - g||_2
  bool sandwich_holds = false;  // 0 <= g_n <= e^{t_n A} g
  bool monotone = false;        // g_n <= g_{n+1}
};

/// g_n = (g - sum_{k >= n} (g - e^{t_k A} g)^+)^+ for a strictly decreasing list of times.
inline ApproximationReport approximate_from_below(const SemigroupProvider &p, const Vector &g,
                                                  const std::vector<double> &times, double tol = kDefaultPositivityTol)
{
  if (g.size() != p.dim())
    throw PreconditionError("approximate_from_below: dimension mismatch");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] < 0.0 || (k > 0 && !(times[k] < times[k - 1])))
      throw PreconditionError("approximate_from_below: times must be >= 0 and strictly decreasing");

  std::vector<Vector> images;
  images.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    images.push_back(p.apply(times[k], g));
    Eigen::Index i = 0;
    const double m = images.back().size() ? images.back().minCoeff(&i) : 0.0;
    if (m < -tol * std::max(1.0, g.cwiseAbs().maxCoeff()))
      throw PremiseViolation("approximate_from_below: e^{tA} g has entry " + std::to_string(m) + " at index " +
                             std::to_string(i) + " for t = " + std::to_string(times[k]));
  }

  ApproximationReport r;
  const std::size_t n = times.size();
  r.sequence.resize(n);
  r.gaps.resize(n);
  r.gap_bounds.resize(n);
  Vector tail_sum = Vector::Zero(g.size());
  double bound = 0.0;
  for (std::size_t idx = n; idx-- > 0;) {
    tail_sum += pos_part(g - images[idx]);
    bound += (images[idx] - g).norm();
    r.sequence[idx] = pos_part(g - tail_sum);
    r.gaps[idx] = (r.sequence[idx] - g).norm();
    r.gap_bounds[idx] = bound;
  }
  const double thr = tol * std::max(1.0, g.cwiseAbs().maxCoeff());
  r.sandwich_holds = true;
  r.monotone = true;
  for (std::size_t k = 0; k < n; ++k) {
    if ((r.sequence[k].array() < -thr).any() || ((r.sequence[k] - images[k]).array() > thr).any())
      r.sandwich_holds = false;
    if (k + 1 < n && ((r.sequence[k] - r.sequence[k + 1]).array() > thr).any())
      r.monotone = false;
  }
  return r;
}

} // namespace evpos

#endif // EVPOS_POSITIVITY_HPP
