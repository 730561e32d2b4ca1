// evpos: command-line front end.
//
//   evpos analyze --matrix FILE [--tol --grid-points --t-max --dp-terms --max-dim --report-out FILE]
//   evpos examples run {ex3_10|ex5_2|ex5_6} [--depth --tol --grid-points --t-max --grid-h --L --dp-terms
//                                           --report-out FILE]
//   evpos timeseries {orbit|pairing|rescaled-distance|support-front} [--matrix FILE | --example NAME] ...
//
// Exit codes: 0 all asserted claims hold, 1 usage or input error, 2 consistency violation.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evpos/evpos.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kViolation = 2;

struct Options {
  std::string matrix_file;
  std::string example;
  std::string quantity;
  std::string report_out;
  std::string csv_out;
  std::string vector;
  std::optional<double> tol;
  std::optional<std::size_t> grid_points;
  std::optional<double> t_max;
  std::optional<int> depth;
  std::optional<double> grid_h;
  std::optional<double> half_width;
  std::optional<int> dp_terms;
  std::size_t max_dim = 64;
  int k = 1;
  int j = 2;
};

void emit(const std::string &text, const std::string &path)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw evpos::InputError("cannot write " + path);
  out << text;
}

evpos::DysonPhillipsConfig dp_config(const Options &o)
{
  evpos::DysonPhillipsConfig c;
  if (o.dp_terms) {
    if (*o.dp_terms < 1 || *o.dp_terms > 200)
      throw evpos::InputError("--dp-terms must lie in [1, 200]");
    c.max_terms = *o.dp_terms;
  }
  return c;
}

int run_analyze(const Options &o)
{
  evpos::AnalysisInput in = evpos::load_analysis_input(o.matrix_file, o.max_dim);
  if (o.tol)
    in.tol = *o.tol;
  if (o.grid_points)
    in.grid.points = *o.grid_points;
  if (o.t_max)
    in.grid.t_max = *o.t_max;
  if (o.dp_terms)
    in.dp_terms = *o.dp_terms;
  if (!(in.tol > 0.0) || in.grid.points < 2 || !(in.grid.t_max > in.grid.t_min))
    throw evpos::InputError("need --tol > 0, --grid-points >= 2 and --t-max > t_min");

  const evpos::AnalysisReport r = evpos::analyze(in, dp_config(o));
  emit(evpos::Json(r).dump(2) + "\n", o.report_out);
  std::cerr << "positivity: " << evpos::to_string(r.positivity.cls)
            << ", irreducibility: " << evpos::to_string(r.irreducibility.classification) << "\n";
  if (!r.consistent()) {
    for (const auto &v : r.violations)
      std::cerr << "violation: " << v << "\n";
    return kViolation;
  }
  return kOk;
}

int run_examples(const Options &o)
{
  dp_config(o); // validates --dp-terms
  evpos::ExampleRun run;
  if (o.example == "ex3_10") {
    evpos::ShiftExampleConfig c;
    if (o.depth)
      c.depth = *o.depth;
    run = evpos::run_shift_example(c);
  } else if (o.example == "ex5_2") {
    evpos::MatrixExampleConfig c;
    if (o.tol)
      c.tol = *o.tol;
    if (o.grid_points)
      c.grid_points = *o.grid_points;
    if (o.t_max)
      c.t_max = *o.t_max;
    c.dp_terms = o.dp_terms;
    run = evpos::run_matrix_example(c);
  } else if (o.example == "ex5_6") {
    evpos::CoupledGammaConfig c;
    if (o.grid_h)
      c.h = *o.grid_h;
    if (o.half_width)
      c.half_width = *o.half_width;
    if (o.t_max)
      c.t_max = *o.t_max;
    if (o.tol)
      c.tol = *o.tol;
    if (o.dp_terms)
      c.max_terms = *o.dp_terms;
    run = evpos::run_coupled_example(c);
  } else {
    throw evpos::InputError("unknown example \"" + o.example + "\" (ex3_10, ex5_2, ex5_6)");
  }
  emit(evpos::Json(run).dump(2) + "\n", o.report_out);
  for (const auto &c : run.claims)
    std::cerr << (c.passed ? "PASS " : (c.must_pass ? "FAIL " : "note ")) << run.name << " " << c.id << "\n";
  return run.ok() ? kOk : kViolation;
}

evpos::Vector parse_vector(const std::string &s, Eigen::Index n)
{
  if (s.empty())
    return evpos::Vector::Ones(n);
  std::vector<double> xs;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw evpos::InputError("--vector: cannot parse \"" + item + "\"");
    }
  }
  if (static_cast<Eigen::Index>(xs.size()) != n)
    throw evpos::InputError("--vector has " + std::to_string(xs.size()) + " entries, expected " + std::to_string(n));
  return Eigen::Map<const evpos::Vector>(xs.data(), n);
}

int run_timeseries(const Options &o)
{
  const evpos::Quantity q = evpos::parse_quantity(o.quantity);
  const std::size_t n = o.grid_points.value_or(101);
  const double t_max = o.t_max.value_or(2.0);
  if (n < 2 || !(t_max > 0.0))
    throw evpos::InputError("need --grid-points >= 2 and --t-max > 0");

  auto matrix_input = [&]() -> evpos::Matrix {
    if (!o.matrix_file.empty())
      return evpos::load_analysis_input(o.matrix_file, o.max_dim).matrix;
    if (o.example == "ex5_2")
      return evpos::models::third_row_positive_generator();
    throw evpos::InapplicableQuantity(std::string(evpos::to_string(q)) +
                                      " needs a matrix input (--matrix FILE or --example ex5_2)");
  };

  evpos::CsvTable table;
  switch (q) {
  case evpos::Quantity::Orbit: {
    const evpos::Matrix a = matrix_input();
    table = evpos::orbit_series(a, parse_vector(o.vector, a.rows()), t_max, n);
    break;
  }
  case evpos::Quantity::RescaledDistance:
    table = evpos::rescaled_distance_series(matrix_input(), t_max, n);
    break;
  case evpos::Quantity::Pairing:
    if (!o.matrix_file.empty() || (!o.example.empty() && o.example != "ex3_10"))
      throw evpos::InapplicableQuantity("pairing is defined for the shift example only (--example ex3_10)");
    table = evpos::pairing_series(o.k, o.j, o.depth.value_or(4));
    break;
  case evpos::Quantity::SupportFront: {
    if (o.example != "ex5_6")
      throw evpos::InapplicableQuantity("support-front is defined for the coupled example only (--example ex5_6)");
    evpos::CoupledGammaConfig c;
    if (o.grid_h)
      c.h = *o.grid_h;
    if (o.half_width)
      c.half_width = *o.half_width;
    c.t_max = o.t_max.value_or(4.0);
    table = evpos::support_front_series(c);
    break;
  }
  }
  std::ostringstream out;
  table.write(out);
  emit(out.str(), o.csv_out);
  return kOk;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Eventual positivity and irreducibility checks for operator semigroups"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App *sc) {
    sc->add_option("--tol", o.tol, "positivity tolerance");
    sc->add_option("--grid-points", o.grid_points, "number of sampled times");
    sc->add_option("--t-max", o.t_max, "largest sampled time");
    sc->add_option("--dp-terms", o.dp_terms, "requested Dyson-Phillips terms (raised if the tail bound misses)");
    sc->add_option("--max-dim", o.max_dim, "largest accepted matrix dimension");
  };

  auto *analyze = app.add_subcommand("analyze", "classify a matrix semigroup and write a JSON report");
  analyze->add_option("--matrix", o.matrix_file, "input JSON document")->required();
  analyze->add_option("--report-out", o.report_out, "report path (default stdout)");
  add_common(analyze);

  auto *examples = app.add_subcommand("examples", "run a scripted verification suite");
  auto *run = examples->add_subcommand("run", "run one example");
  examples->require_subcommand(1);
  run->add_option("name", o.example, "ex3_10, ex5_2 or ex5_6")->required();
  run->add_option("--depth", o.depth, "dyadic witness search depth");
  run->add_option("--grid-h", o.grid_h, "grid step of the coupled example");
  run->add_option("--L", o.half_width, "grid half width of the coupled example");
  run->add_option("--report-out", o.report_out, "report path (default stdout)");
  add_common(run);

  auto *ts = app.add_subcommand("timeseries", "write plot data as CSV");
  ts->add_option("quantity", o.quantity, "orbit, pairing, rescaled-distance or support-front")->required();
  ts->add_option("--matrix", o.matrix_file, "input JSON document");
  ts->add_option("--example", o.example, "ex3_10, ex5_2 or ex5_6");
  ts->add_option("--vector", o.vector, "initial value for orbit, comma separated (default ones)");
  ts->add_option("--k", o.k, "first Rademacher index");
  ts->add_option("--j", o.j, "second Rademacher index");
  ts->add_option("--depth", o.depth, "dyadic depth of the pairing times");
  ts->add_option("--grid-h", o.grid_h, "grid step of the coupled example");
  ts->add_option("--L", o.half_width, "grid half width of the coupled example");
  ts->add_option("--out", o.csv_out, "CSV path (default stdout)");
  add_common(ts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (analyze->parsed())
      return run_analyze(o);
    if (run->parsed())
      return run_examples(o);
    return run_timeseries(o);
  } catch (const evpos::InputError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const evpos::PreconditionError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const evpos::DimensionTooLarge &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const evpos::ShiftNotOnGrid &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const evpos::ConsistencyViolation &e) {
    std::cerr << "consistency violation: " << e.what() << "\n";
    return kViolation;
  } catch (const evpos::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  }
}
