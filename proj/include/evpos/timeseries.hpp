#ifndef EVPOS_TIMESERIES_HPP
#define EVPOS_TIMESERIES_HPP

// Plot data as CSV: header row, one row per grid time, 17 significant digits, LF line endings.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "evpos/coupled_gamma.hpp"
#include "evpos/rational_step.hpp"
#include "evpos/spectral.hpp"

namespace evpos {

enum class Quantity { Orbit, Pairing, RescaledDistance, SupportFront };

inline const char *to_string(Quantity q)
{
  switch (q) {
  case Quantity::Orbit:
    return "orbit";
  case Quantity::Pairing:
    return "pairing";
  case Quantity::RescaledDistance:
    return "rescaled-distance";
  case Quantity::SupportFront:
    return "support-front";
  }
  return "orbit";
}

inline Quantity parse_quantity(const std::string &s)
{
  for (Quantity q : {Quantity::Orbit, Quantity::Pairing, Quantity::RescaledDistance, Quantity::SupportFront})
    if (s == to_string(q))
      return q;
  throw InputError("unknown quantity \"" + s + "\" (orbit, pairing, rescaled-distance, support-front)");
}

inline std::string fmt17(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream &out) const
  {
    auto line = [&](const std::vector<std::string> &cells) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header);
    for (const auto &r : rows)
      line(r);
  }
};

/// t, e^{tA} f componentwise, on n points of [0, t_max].
inline CsvTable orbit_series(const Matrix &a, const Vector &f, double t_max, std::size_t n)
{
  if (f.size() != a.rows())
    throw PreconditionError("orbit series: vector and matrix differ in dimension");
  CsvTable t;
  t.header.push_back("t");
  for (Eigen::Index i = 0; i < f.size(); ++i)
    t.header.push_back("x" + std::to_string(i));
  const TimeGrid grid = TimeGrid::uniform(0.0, t_max, n);
  for (double s : grid.points()) {
    const Vector x = expm(a, s) * f;
    std::vector<std::string> row{fmt17(s)};
    for (Eigen::Index i = 0; i < x.size(); ++i)
      row.push_back(fmt17(x(i)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// t, ||e^{-s(A) t} e^{tA} - P||_2 with P the dominant spectral projection.
inline CsvTable rescaled_distance_series(const Matrix &a, double t_max, std::size_t n)
{
  ProjectionReport p;
  try {
    p = dominant_projection(a);
  } catch (const CertificateMissing &e) {
    throw InapplicableQuantity(std::string("rescaled-distance: ") + e.what());
  }
  CsvTable t;
  t.header = {"t", "distance"};
  const TimeGrid grid = TimeGrid::uniform(0.0, t_max, n);
  for (double s : grid.points())
    t.rows.push_back({fmt17(s), fmt17(operator_norm2(std::exp(-p.lambda * s) * expm(a, s) - p.projection))});
  return t;
}

/// <S_t r_k, r_j> at t = m / 2^depth, m = 0 .. 2^depth, with the exact value as a fraction.
inline CsvTable pairing_series(int k, int j, int depth)
{
  if (depth < 0 || depth > 16)
    throw PreconditionError("pairing series: depth must lie in [0, 16]");
  CsvTable t;
  t.header = {"t", "pairing", "t_exact", "pairing_exact"};
  for (std::int64_t m = 0; m <= (std::int64_t{1} << depth); ++m) {
    const Rational s = dyadic(m, depth);
    const Rational v = pairing(k, j, s);
    t.rows.push_back({fmt17(static_cast<double>(s)), fmt17(static_cast<double>(v)), to_string(s), to_string(v)});
  }
  return t;
}

/// t, first cell of the second component of e^{tC}(e3, 0), its left edge, and 1 - t.
inline CsvTable support_front_series(const CoupledGammaConfig &cfg)
{
  const CoupledGammaModel model(cfg.h, cfg.half_width);
  const auto &spec = model.spec();
  const long steps = spec.steps(cfg.t_max);
  const auto levels = model.series({unit_vector(3, 2), GridFunction::zero(spec)}, steps, cfg.max_terms);
  CsvTable t;
  t.header = {"t", "support_lo", "front", "one_minus_t"};
  for (long q = 1; q <= steps; ++q) {
    const auto s = CoupledGammaModel::sum_at(levels, static_cast<std::size_t>(q));
    const double time = q * spec.h;
    t.rows.push_back({fmt17(time), std::to_string(s.f.support_lo()), fmt17(spec.left(s.f.support_lo())),
                      fmt17(1.0 - time)});
  }
  return t;
}

} // namespace evpos

#endif // EVPOS_TIMESERIES_HPP
