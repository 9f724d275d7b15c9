#include "conic/scenario.hpp"

#include "conic/logspiral.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace conic {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // collapse -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::runtime_error("scenario: " + where + ": " + what);
}

double num_or(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<double>();
}

int int_or(const json& j, const char* key, int def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<int>();
}

bool bool_or(const json& j, const char* key, bool def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<bool>();
}

std::string str_or(const json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<std::string>();
}

double parse_eta(const json& j) {
  if (!j.contains("eta")) return std::numeric_limits<double>::infinity();
  const json& e = j.at("eta");
  if (e.is_string()) {
    if (e.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    fail("eta", "expected a number or \"inf\"");
  }
  return e.get<double>();
}

BoundaryGeometry parse_boundary(const json& j, const std::string& base_dir) {
  std::string type = j.at("type").get<std::string>();
  if (type == "circle") return Circle{j.at("circumference").get<double>()};
  if (type == "sphere")
    return RoundSphere{j.at("dimension").get<int>(), num_or(j, "radius", 1.0)};
  if (type == "torus") {
    auto p = j.at("periods").get<std::vector<double>>();
    FlatTorus t;
    t.periods = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<long>(p.size()));
    return t;
  }
  if (type == "mesh") {
    if (j.contains("file")) {
      fs::path path = j.at("file").get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = fs::path(base_dir) / path;
      return load_mesh_file(path.string());
    }
    MeshGraph m;
    for (const auto& v : j.at("vertices")) {
      auto c = v.get<std::vector<double>>();
      m.vertices.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<long>(c.size())));
    }
    for (const auto& e : j.at("edges")) {
      if (e.size() != 3) fail("mesh", "edges are [i, j, weight] triples");
      m.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
      m.weights.push_back(e.at(2).get<double>());
    }
    m.finalize();
    return m;
  }
  fail("boundary", "unknown type '" + type + "'");
}

MetricFamily parse_family(const json& j) {
  if (!j.is_object()) fail("family", "expected an object");
  std::string type = str_or(j, "type", "constant");
  if (type == "constant") return ConstantFamily{num_or(j, "scale", 1.0)};
  if (type == "warped") {
    std::string name = j.at("name").get<std::string>();
    WarpedFamily w;
    w.name = name;
    if (name == "one_plus_r2")
      w.f = [](double r) { return 1.0 + r * r; };
    else if (name == "one_plus_r")
      w.f = [](double r) { return 1.0 + r; };
    else if (name == "gaussian")
      w.f = [](double r) { return std::exp(-r * r); };
    else
      fail("family", "unknown warp '" + name + "'");
    return w;
  }
  if (type == "tabulated") {
    TabulatedFamily t;
    t.radii = j.at("radii").get<std::vector<double>>();
    t.scales = j.at("scales").get<std::vector<double>>();
    return t;
  }
  fail("family", "unknown type '" + type + "'");
}

struct NamedMetric {
  ConicMetricSpec spec;
  bool ac = false;
};

BoundaryPoint parse_y(const json& j) {
  auto c = j.get<std::vector<double>>();
  BoundaryPoint y;
  y.coords = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<long>(c.size()));
  return y;
}

ChartPoint parse_point(const json& j, const BoundaryGeometry& geom) {
  ChartPoint p;
  p.y = normalize_point(geom, parse_y(j.at("y")));
  p.r = j.at("r").get<double>();
  return p;
}

GridDiscretization parse_grid(const json& j, const GridDiscretization& def) {
  GridDiscretization g = def;
  if (j.is_null()) return g;
  g.n_r = int_or(j, "n_r", g.n_r);
  g.n_y = int_or(j, "n_y", g.n_y);
  g.r_min = num_or(j, "r_min", g.r_min);
  g.r_max = num_or(j, "r_max", g.r_max);
  g.include_apex = bool_or(j, "apex", g.include_apex);
  std::string sp = str_or(j, "spacing", "");
  if (sp == "uniform") g.spacing = GridDiscretization::Spacing::Uniform;
  else if (sp == "geometric") g.spacing = GridDiscretization::Spacing::Geometric;
  else if (!sp.empty()) fail("grid", "unknown spacing '" + sp + "'");
  return g;
}

// Deterministic sampling helpers; avoids implementation-defined distribution
// code so outputs match across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

BoundaryPoint random_boundary_point(const BoundaryGeometry& geom, std::mt19937_64& rng) {
  if (auto* c = std::get_if<Circle>(&geom))
    return make_circle_point(uniform_in(rng, 0, c->circumference));
  if (auto* s = std::get_if<RoundSphere>(&geom)) {
    // Box-Muller on our own uniforms, then project to the sphere
    Eigen::VectorXd u(s->dimension + 1);
    for (int i = 0; i <= s->dimension; i += 2) {
      double a = std::sqrt(-2.0 * std::log(std::max(unit_uniform(rng), 1e-300)));
      double b = 2.0 * M_PI * unit_uniform(rng);
      u[i] = a * std::cos(b);
      if (i + 1 <= s->dimension) u[i + 1] = a * std::sin(b);
    }
    if (u.norm() < 1e-12) u.setUnit(0);
    return make_sphere_point(u.normalized());
  }
  if (auto* t = std::get_if<FlatTorus>(&geom)) {
    Eigen::VectorXd c(t->periods.size());
    for (int i = 0; i < c.size(); ++i) c[i] = uniform_in(rng, 0, t->periods[i]);
    return make_torus_point(c);
  }
  const auto& m = std::get<MeshGraph>(geom);
  int e = static_cast<int>(rng() % m.edges.size());
  return make_mesh_edge_point(m, e, uniform_in(rng, 0, 1));
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

std::string fmt_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ";";
    s += format_double(v[i]);
  }
  return s;
}

struct RunContext {
  const ScenarioOptions* opts;
  std::map<std::string, NamedMetric> metrics;
  std::map<std::string, std::pair<std::vector<ChartPiece>, std::vector<Seam>>> quotients;
  std::uint64_t seed = 1;
  fs::path out_dir;
};

const NamedMetric& metric_of(const RunContext& ctx, const json& task) {
  auto it = ctx.metrics.find(task.at("metric").get<std::string>());
  if (it == ctx.metrics.end()) fail("task", "unknown metric '" + task.at("metric").get<std::string>() + "'");
  return it->second;
}

// ---- task: distance -------------------------------------------------------

void run_distance_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                       TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  const ConicMetricSpec& spec = nm.spec;
  bool ac = bool_or(task, "ac", nm.ac);
  bool force_graph = bool_or(task, "force_graph", false);
  double slack = num_or(task, "slack", force_graph ? 0.02 : 1e-9);

  std::vector<std::pair<ChartPoint, ChartPoint>> pairs;
  if (task.contains("pairs"))
    for (const auto& pr : task.at("pairs"))
      pairs.push_back({parse_point(pr.at(0), spec.boundary), parse_point(pr.at(1), spec.boundary)});
  if (task.contains("sample")) {
    const json& s = task.at("sample");
    int count = int_or(s, "count", 16);
    double r_lo = num_or(s, "r_min", ac ? 0.1 : 0.0);
    double r_hi = num_or(s, "r_max", std::isfinite(spec.eta) ? spec.eta : 1.0);
    for (int i = 0; i < count; ++i) {
      ChartPoint a{random_boundary_point(spec.boundary, rng), uniform_in(rng, r_lo, r_hi)};
      ChartPoint b{random_boundary_point(spec.boundary, rng), uniform_in(rng, r_lo, r_hi)};
      pairs.push_back({a, b});
    }
  }
  if (pairs.empty()) fail(out.task, "no pairs given");

  double r_hi = 0;
  for (auto& [a, b] : pairs) r_hi = std::max({r_hi, a.r, b.r});
  GridDiscretization def;
  def.r_max = std::isfinite(spec.eta) ? spec.eta : std::max(r_hi, 1e-9);
  if (ac) {
    def.r_min = def.r_max / 256;
    for (auto& [a, b] : pairs) def.r_min = std::min({def.r_min, a.r, b.r});
    def.include_apex = false;
    def.spacing = GridDiscretization::Spacing::Geometric;
  }
  GridDiscretization grid = parse_grid(task.contains("grid") ? task.at("grid") : json(), def);

  MetricSpec mspec = ac ? MetricSpec{AcMetricSpec{spec}} : MetricSpec{spec};
  std::optional<ChartGraph> shared_graph;
  bool needs_graph = force_graph || !std::holds_alternative<ConstantFamily>(spec.family);
  if (needs_graph) shared_graph.emplace(build_graph(mspec, grid));

  DistanceOptions dopts;
  dopts.grid = grid;
  dopts.force_graph = force_graph;
  if (shared_graph) dopts.graph = &*shared_graph;

  bool simple = std::holds_alternative<ConstantFamily>(spec.family);
  std::vector<DistanceResult> results(pairs.size());
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i)
      results[i] = ac ? ac_distance(AcMetricSpec{spec}, pairs[i].first, pairs[i].second, dopts)
                      : conic_distance(spec, pairs[i].first, pairs[i].second, dopts);
  };
  int threads = std::max(1, ctx.opts->threads);
  if (threads == 1 || pairs.size() < 4) {
    work(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (pairs.size() + threads - 1) / threads;
    for (size_t b = 0; b < pairs.size(); b += chunk)
      pool.emplace_back(work, b, std::min(b + chunk, pairs.size()));
    for (auto& t : pool) t.join();
  }

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"pair", "y", "r", "y2", "r2", "distance", "method", "lower", "upper",
                    "within_bounds"});
  out.files.push_back(csv.filename().string());

  const char* method_names[] = {"exact", "graph", "refined"};
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    const auto& res = results[i];
    dmin = std::min(dmin, res.value);
    dmax = std::max(dmax, res.value);
    std::string lower = "", upper = "", within = "";
    if (simple) {
      double d_N = spec.boundary_distance0(a.y, b.y);
      std::pair<double, double> bounds;
      if (ac) {
        ChartPoint ia = conic_inversion(a), ib = conic_inversion(b);
        bounds = conic_sandwich_bounds(ia, ib, d_N);
      } else {
        bounds = conic_sandwich_bounds(a, b, d_N);
      }
      bool ok = res.value >= bounds.first * (1 - slack) - 1e-12 &&
                res.value <= bounds.second * (1 + slack) + 1e-12;
      lower = format_double(bounds.first);
      upper = format_double(bounds.second);
      within = ok ? "1" : "0";
      if (!ok) {
        out.ok = false;
        out.violations.push_back(out.task + " pair " + std::to_string(i) + ": distance " +
                                 format_double(res.value) + " outside [" + lower + ", " + upper +
                                 "]");
      }
    }
    w.row({std::to_string(i), fmt_vec(a.y.coords), format_double(a.r), fmt_vec(b.y.coords),
           format_double(b.r), format_double(res.value),
           method_names[static_cast<int>(res.method)], lower, upper, within});
  }
  out.stats["pairs"] = static_cast<double>(pairs.size());
  out.stats["min_distance"] = dmin;
  out.stats["max_distance"] = dmax;
}

// ---- task: geodesic -------------------------------------------------------

void run_geodesic_task(const RunContext& ctx, const json& task, TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  const ConicMetricSpec& spec = nm.spec;
  bool ac = bool_or(task, "ac", nm.ac);
  ChartPoint a = parse_point(task.at("from"), spec.boundary);
  ChartPoint b = parse_point(task.at("to"), spec.boundary);
  DistanceOptions dopts;
  dopts.exact_path_points = int_or(task, "points", 65);
  GridDiscretization def;
  def.r_max = std::isfinite(spec.eta) ? spec.eta : std::max({a.r, b.r, 1e-9});
  if (ac) {
    def.r_min = std::min(a.r, b.r) / 4;
    def.include_apex = false;
    def.spacing = GridDiscretization::Spacing::Geometric;
  }
  dopts.grid = parse_grid(task.contains("grid") ? task.at("grid") : json(), def);
  DistanceResult res = ac ? ac_distance(AcMetricSpec{spec}, a, b, dopts)
                          : conic_distance(spec, a, b, dopts);

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"index", "y", "r"});
  out.files.push_back(csv.filename().string());
  for (size_t i = 0; i < res.path.points.size(); ++i)
    w.row({std::to_string(i), fmt_vec(res.path.points[i].y.coords),
           format_double(res.path.points[i].r)});
  out.stats["length"] = res.value;
  out.stats["points"] = static_cast<double>(res.path.points.size());

  // the reported length must match the emitted polyline
  MetricSpec mspec = ac ? MetricSpec{AcMetricSpec{spec}} : MetricSpec{spec};
  double poly = curve_length(mspec, res.path);
  out.stats["polyline_length"] = poly;
  if (poly > res.value * 1.02 + 1e-9) {
    out.ok = false;
    out.violations.push_back(out.task + ": emitted path length " + format_double(poly) +
                             " exceeds reported distance " + format_double(res.value));
  }
}

// ---- task: norm_bracket ---------------------------------------------------

void run_norm_bracket_task(const RunContext& ctx, const json& task, TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  double r_max = num_or(task, "r_max", std::isfinite(nm.spec.eta) ? nm.spec.eta * 0.5 : 1.0);
  auto [lo, hi] = norm_ratio_bracket(nm.spec, r_max, int_or(task, "samples", 256));
  out.stats["lower"] = lo;
  out.stats["upper"] = hi;
  if (task.contains("expect")) {
    double elo = task.at("expect").at(0).get<double>();
    double ehi = task.at("expect").at(1).get<double>();
    if (lo < elo || hi > ehi) {
      out.ok = false;
      out.violations.push_back(out.task + ": norm ratio bracket [" + format_double(lo) + ", " +
                               format_double(hi) + "] escapes expected [" + format_double(elo) +
                               ", " + format_double(ehi) + "]");
    }
  }
  if (!(lo > 0)) {
    out.ok = false;
    out.violations.push_back(out.task + ": metric degenerates against its simple companion");
  }
}

// ---- task: inversion_duality ---------------------------------------------

void run_inversion_duality_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                                TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  const ConicMetricSpec& spec = nm.spec;
  std::vector<std::pair<ChartPoint, ChartPoint>> pairs;
  if (task.contains("pairs"))
    for (const auto& pr : task.at("pairs"))
      pairs.push_back({parse_point(pr.at(0), spec.boundary), parse_point(pr.at(1), spec.boundary)});
  if (task.contains("sample")) {
    const json& s = task.at("sample");
    double r_lo = num_or(s, "r_min", 0.25);
    double r_hi = num_or(s, "r_max", 1.0);
    for (int i = 0, n = int_or(s, "count", 16); i < n; ++i)
      pairs.push_back({{random_boundary_point(spec.boundary, rng), uniform_in(rng, r_lo, r_hi)},
                       {random_boundary_point(spec.boundary, rng), uniform_in(rng, r_lo, r_hi)}});
  }
  if (pairs.empty()) fail(out.task, "no pairs given");

  DistanceOptions dopts;
  dopts.force_graph = bool_or(task, "force_graph", false);
  double r_lo = 1e300, r_hi = 0;
  for (auto& [a, b] : pairs) {
    r_lo = std::min({r_lo, a.r, b.r});
    r_hi = std::max({r_hi, a.r, b.r});
  }
  GridDiscretization def;
  def.r_max = r_hi;
  def.r_min = r_lo / 2;
  def.include_apex = false;
  def.spacing = GridDiscretization::Spacing::Geometric;
  dopts.grid = parse_grid(task.contains("grid") ? task.at("grid") : json(), def);

  DualityReport rep = inversion_duality_check(spec, pairs, dopts);

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"pair", "y", "r", "y2", "r2", "conic", "ac", "weight", "ratio"});
  out.files.push_back(csv.filename().string());
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& row = rep.rows[i];
    w.row({std::to_string(i), fmt_vec(row.x.y.coords), format_double(row.x.r),
           fmt_vec(row.x2.y.coords), format_double(row.x2.r), format_double(row.d0),
           format_double(row.dinf), format_double(row.weight), format_double(row.ratio)});
  }
  out.stats["min_ratio"] = rep.min_ratio;
  out.stats["max_ratio"] = rep.max_ratio;
  if (task.contains("expect")) {
    double elo = task.at("expect").at(0).get<double>();
    double ehi = task.at("expect").at(1).get<double>();
    if (rep.min_ratio < elo || rep.max_ratio > ehi) {
      out.ok = false;
      out.violations.push_back(out.task + ": ratio bracket [" + format_double(rep.min_ratio) +
                               ", " + format_double(rep.max_ratio) + "] escapes expected [" +
                               format_double(elo) + ", " + format_double(ehi) + "]");
    }
  }
}

// ---- quotient helpers -----------------------------------------------------

std::pair<std::vector<ChartPiece>, std::vector<Seam>> parse_quotient(const RunContext& ctx,
                                                                     const json& j) {
  std::vector<ChartPiece> pieces;
  for (const auto& pj : j.at("pieces")) {
    ChartPiece p;
    p.name = str_or(pj, "name", "piece" + std::to_string(pieces.size()));
    auto it = ctx.metrics.find(pj.at("metric").get<std::string>());
    if (it == ctx.metrics.end()) fail("quotient", "unknown metric in piece '" + p.name + "'");
    p.spec = it->second.spec;
    p.apex = str_or(pj, "apex", "");
    p.ac_end = bool_or(pj, "ac_end", false);
    GridDiscretization def;
    def.r_max = std::isfinite(p.spec.eta) ? p.spec.eta : 1.0;
    if (p.ac_end) {
      def.r_min = def.r_max / 256;
      def.include_apex = false;
      def.spacing = GridDiscretization::Spacing::Geometric;
    }
    p.grid = parse_grid(pj.contains("grid") ? pj.at("grid") : json(), def);
    pieces.push_back(std::move(p));
  }
  std::vector<Seam> seams;
  if (j.contains("seams"))
    for (const auto& sj : j.at("seams"))
      seams.push_back({sj.at("a").get<int>(), sj.at("b").get<int>(), num_or(sj, "offset", 0.0)});
  return {pieces, seams};
}

const std::pair<std::vector<ChartPiece>, std::vector<Seam>>& quotient_of(const RunContext& ctx,
                                                                         const json& task) {
  std::string name = task.at("quotient").get<std::string>();
  auto it = ctx.quotients.find(name);
  if (it == ctx.quotients.end()) fail("task", "unknown quotient '" + name + "'");
  return it->second;
}

QuotientPoint parse_qpoint(const json& j, const std::vector<ChartPiece>& pieces) {
  if (j.contains("apex")) return QuotientPoint::at_apex(j.at("apex").get<std::string>());
  int piece = j.at("piece").get<int>();
  if (piece < 0 || piece >= static_cast<int>(pieces.size())) fail("point", "piece out of range");
  return QuotientPoint::chart(piece, parse_point(j, pieces[piece].spec.boundary));
}

void run_quotient_distance_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                                TaskOutcome& out) {
  const auto& [pieces, seams] = quotient_of(ctx, task);
  QuotientSpace space(pieces, seams);

  std::vector<std::pair<QuotientPoint, QuotientPoint>> pairs;
  if (task.contains("pairs"))
    for (const auto& pr : task.at("pairs"))
      pairs.push_back({parse_qpoint(pr.at(0), pieces), parse_qpoint(pr.at(1), pieces)});
  if (task.contains("sample")) {
    const json& s = task.at("sample");
    for (int i = 0, n = int_or(s, "count", 12); i < n; ++i) {
      int pa = static_cast<int>(rng() % pieces.size());
      int pb = static_cast<int>(rng() % pieces.size());
      auto rnd = [&](int p) {
        const auto& spec = pieces[p].spec;
        double hi = pieces[p].grid.r_max;
        double lo = pieces[p].ac_end ? pieces[p].grid.r_min : 0.0;
        return QuotientPoint::chart(
            p, {random_boundary_point(spec.boundary, rng), uniform_in(rng, lo, hi)});
      };
      pairs.push_back({rnd(pa), rnd(pb)});
    }
  }
  if (pairs.empty()) fail(out.task, "no pairs given");

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"pair", "piece", "y", "r", "piece2", "y2", "r2", "chain", "base"});
  out.files.push_back(csv.filename().string());
  double slack = num_or(task, "slack", 1e-9);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    double chain = space.quotient_distance(a, b);
    bool has_apex = a.piece < 0 || b.piece < 0;
    double base = has_apex ? std::numeric_limits<double>::infinity() : space.base_distance(a, b);
    double back = space.quotient_distance(b, a);
    auto piece_id = [](const QuotientPoint& q) {
      return q.piece < 0 ? "apex:" + q.apex : std::to_string(q.piece);
    };
    auto coords = [](const QuotientPoint& q) {
      return q.piece < 0 ? std::string() : fmt_vec(q.point.y.coords);
    };
    auto radius = [](const QuotientPoint& q) {
      return q.piece < 0 ? std::string() : format_double(q.point.r);
    };
    w.row({std::to_string(i), piece_id(a), coords(a), radius(a), piece_id(b), coords(b), radius(b),
           format_double(chain), format_double(base)});
    if (chain > base * (1 + slack) + 1e-12) {
      out.ok = false;
      out.violations.push_back(out.task + " pair " + std::to_string(i) +
                               ": chain distance exceeds base distance");
    }
    if (std::abs(chain - back) > slack * std::max(1.0, chain) + 1e-12) {
      out.ok = false;
      out.violations.push_back(out.task + " pair " + std::to_string(i) + ": asymmetric distance " +
                               format_double(chain) + " vs " + format_double(back));
    }
    if (task.contains("expect") && i < task.at("expect").size()) {
      double e = task.at("expect").at(i).get<double>();
      double tol = num_or(task, "expect_tol", 1e-6);
      if (std::abs(chain - e) > tol * std::max(1.0, std::abs(e))) {
        out.ok = false;
        out.violations.push_back(out.task + " pair " + std::to_string(i) + ": distance " +
                                 format_double(chain) + " != expected " + format_double(e));
      }
    }
  }
  out.stats["pairs"] = static_cast<double>(pairs.size());
}

void run_completion_duality_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                                 TaskOutcome& out) {
  const auto& [pieces, seams] = quotient_of(ctx, task);
  CompletionSpec comp = build_completion(pieces, seams);

  std::vector<std::pair<QuotientPoint, QuotientPoint>> pairs;
  const json& s = task.contains("sample") ? task.at("sample") : json::object();
  int count = int_or(s, "count", 16);
  // sample on the ac ends, where the two readings genuinely differ
  std::vector<int> end_pieces;
  for (size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].ac_end) end_pieces.push_back(static_cast<int>(i));
  if (end_pieces.empty()) fail(out.task, "completion needs at least one ac end");
  for (int i = 0; i < count; ++i) {
    auto rnd = [&]() {
      int p = end_pieces[rng() % end_pieces.size()];
      const auto& piece = pieces[p];
      return QuotientPoint::chart(p, {random_boundary_point(piece.spec.boundary, rng),
                                      uniform_in(rng, piece.grid.r_min, piece.grid.r_max)});
    };
    pairs.push_back({rnd(), rnd()});
  }

  DualityReport rep = completion_duality_check(comp, pairs);

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"pair", "completed", "original", "weight", "ratio"});
  out.files.push_back(csv.filename().string());
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& row = rep.rows[i];
    w.row({std::to_string(i), format_double(row.d0), format_double(row.dinf),
           format_double(row.weight), format_double(row.ratio)});
  }
  out.stats["min_ratio"] = rep.min_ratio;
  out.stats["max_ratio"] = rep.max_ratio;
  if (task.contains("expect")) {
    double elo = task.at("expect").at(0).get<double>();
    double ehi = task.at("expect").at(1).get<double>();
    if (rep.min_ratio < elo || rep.max_ratio > ehi) {
      out.ok = false;
      out.violations.push_back(out.task + ": ratio bracket [" + format_double(rep.min_ratio) +
                               ", " + format_double(rep.max_ratio) + "] escapes expected [" +
                               format_double(elo) + ", " + format_double(ehi) + "]");
    }
  }
}

// ---- task: lne_scan -------------------------------------------------------

ParamSubmanifold build_submanifold(const json& j, const ConicMetricSpec& spec) {
  std::string kind = j.at("kind").get<std::string>();
  ParamSubmanifold X;
  X.name = str_or(j, "name", kind);
  if (kind == "radial_ray") {
    double theta = num_or(j, "theta", 0.0);
    double r_max = num_or(j, "r_max", 1.0);
    X.dim = 1;
    X.lo = Eigen::VectorXd::Constant(1, 0.0);
    X.hi = Eigen::VectorXd::Constant(1, r_max);
    X.embed = [theta](const Eigen::VectorXd& p) {
      return ChartPoint{make_circle_point(theta), p[0]};
    };
    return X;
  }
  if (kind == "level_arc") {
    double r0 = num_or(j, "radius", 0.5);
    X.dim = 1;
    X.lo = Eigen::VectorXd::Constant(1, num_or(j, "theta_min", 0.0));
    X.hi = Eigen::VectorXd::Constant(1, num_or(j, "theta_max", 1.0));
    X.embed = [r0](const Eigen::VectorXd& p) { return ChartPoint{make_circle_point(p[0]), r0}; };
    return X;
  }
  if (kind == "tangent_pair") {
    // ray theta = 0 joined at the apex with the strict transform of the
    // parabola (t, t^2); the branches are tangent at the apex, so the pair is
    // connected but not LNE
    double r_max = num_or(j, "r_max", 1.0);
    X.dim = 1;
    X.lo = Eigen::VectorXd::Constant(1, -r_max);
    X.hi = Eigen::VectorXd::Constant(1, r_max);
    X.embed = [](const Eigen::VectorXd& p) {
      double t = p[0];
      if (t <= 0) return ChartPoint{make_circle_point(0.0), -t};
      double theta = std::atan(t);
      return ChartPoint{make_circle_point(theta), t * std::sqrt(1 + t * t)};
    };
    return X;
  }
  if (kind == "spiral_arm") {
    // theta(t) = omega * t: transversal for all omega, LNE for any fixed omega
    double omega = num_or(j, "omega", 1.0);
    double r_max = num_or(j, "r_max", 1.0);
    X.dim = 1;
    X.lo = Eigen::VectorXd::Constant(1, 0.0);
    X.hi = Eigen::VectorXd::Constant(1, r_max);
    double period = std::get<Circle>(spec.boundary).circumference;
    X.embed = [omega, period](const Eigen::VectorXd& p) {
      double theta = std::fmod(omega * p[0], period);
      if (theta < 0) theta += period;
      return ChartPoint{make_circle_point(theta), p[0]};
    };
    return X;
  }
  fail("submanifold", "unknown kind '" + kind + "'");
}

void run_lne_scan_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                       TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  const ConicMetricSpec& spec = nm.spec;

  LneScanOptions sopts;
  sopts.rungs = int_or(task, "rungs", 7);
  sopts.top_scale = num_or(task, "top_scale", 0.5);
  sopts.pairs_per_scale = int_or(task, "pairs_per_scale", 36);
  sopts.growth_tol = num_or(task, "growth_tol", 1.5);
  sopts.seed = rng();

  LneReport rep;
  double predicted_cap = 0;
  if (task.at("submanifold").at("kind") == "cylinder") {
    const json& sub = task.at("submanifold");
    auto crep = cylinder_lne_check(num_or(sub, "arc_min", 0.0), num_or(sub, "arc_max", 1.0),
                                   num_or(sub, "boundary_constant", 1.0), spec, sopts);
    rep = crep.scan;
    predicted_cap = crep.predicted_cap;
    out.stats["predicted_cap"] = crep.predicted_cap;
    out.stats["within_prediction"] = crep.within_prediction ? 1.0 : 0.0;
    if (!crep.within_prediction) {
      out.ok = false;
      out.violations.push_back(out.task + ": cylinder ratio " + format_double(crep.scan.sup) +
                               " breaks the predicted cap " + format_double(crep.predicted_cap));
    }
  } else {
    ParamSubmanifold X = build_submanifold(task.at("submanifold"), spec);
    auto diag = check_p_submanifold(X, spec, num_or(task, "transversality_tol", 0.1));
    out.stats["transversal"] = diag.pass ? 1.0 : 0.0;
    out.stats["min_radial_component"] = diag.min_radial_component;
    if (task.contains("expect_transversal") &&
        diag.pass != task.at("expect_transversal").get<bool>()) {
      out.ok = false;
      out.violations.push_back(out.task + ": transversality check returned " +
                               (diag.pass ? "true" : "false") + ", contrary to expectation");
    }
    InnerMetric inner(X, spec);
    rep = lne_ratio_scan(inner, sopts);
  }

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"rung", "scale", "pairs", "sup_ratio", "witness_a", "witness_b"});
  out.files.push_back(csv.filename().string());
  for (size_t i = 0; i < rep.ladder.size(); ++i) {
    const auto& rec = rep.ladder[i];
    w.row({std::to_string(i), format_double(rec.scale), std::to_string(rec.pairs),
           rec.skipped ? "" : format_double(rec.sup),
           rec.witness_a.size() ? fmt_vec(rec.witness_a) : "",
           rec.witness_b.size() ? fmt_vec(rec.witness_b) : ""});
  }
  bool diverging = rep.verdict == LneReport::Verdict::Diverging;
  out.stats["sup_ratio"] = rep.sup;
  out.stats["diverging"] = diverging ? 1.0 : 0.0;
  out.stats["min_inner_minus_outer"] = rep.min_inner_minus_outer;

  if (rep.min_inner_minus_outer < -sopts.ratio_tolerance) {
    out.ok = false;
    out.violations.push_back(out.task + ": inner distance fell below the ambient distance by " +
                             format_double(-rep.min_inner_minus_outer));
  }
  if (task.contains("expect")) {
    std::string e = task.at("expect").get<std::string>();
    if (e != "bounded" && e != "diverging") fail(out.task, "expect must be bounded|diverging");
    if ((e == "diverging") != diverging) {
      out.ok = false;
      out.violations.push_back(out.task + ": verdict " +
                               (diverging ? "diverging" : "bounded") + ", expected " + e);
    }
  }
  (void)predicted_cap;
}

// ---- task: pullback_check / spiral_geodesic -------------------------------

void run_pullback_check_task(const RunContext& ctx, const json& task, TaskOutcome& out) {
  LogSpiralExample ex = logspiral_example();
  int n_theta = int_or(task, "n_theta", 48);
  int n_r = int_or(task, "n_r", 48);
  double r_lo = num_or(task, "r_min", 1e-3);
  double r_hi = num_or(task, "r_max", 2.0);

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"theta", "r", "residual"});
  out.files.push_back(csv.filename().string());
  double worst = 0;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_r; ++j) {
      double theta = 2 * M_PI * i / n_theta;
      double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(j) / (n_r - 1));
      double res = ex.pullback_residual(theta, r);
      worst = std::max(worst, res);
      w.row({format_double(theta), format_double(r), format_double(res)});
    }
  out.stats["max_residual"] = worst;
  double cap = num_or(task, "expect_max", 1e-9);
  if (worst > cap) {
    out.ok = false;
    out.violations.push_back(out.task + ": pullback residual " + format_double(worst) +
                             " exceeds " + format_double(cap));
  }
}

void run_spiral_geodesic_task(const RunContext& ctx, const json& task, TaskOutcome& out) {
  LogSpiralExample ex = logspiral_example();
  double r0 = num_or(task, "r_from", 1.0);
  double r1 = num_or(task, "r_to", 0.05);
  double a0 = num_or(task, "angle_from", 0.0);
  // geodesics into the origin are logarithmic spirals: in plane polar
  // coordinates alpha(r) = alpha_0 + ln(r_0 / r)
  double a1 = a0 + std::log(r0 / r1);

  PlanarChart chart;
  chart.metric = [&ex](const Eigen::Vector2d& p) { return ex.polar_metric(p[1]); };
  chart.lo = Eigen::Vector2d(-1e300, 1e-6);
  chart.hi = Eigen::Vector2d(1e300, 1e300);

  std::vector<Eigen::Vector2d> seed;
  int n = int_or(task, "points", 33);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    seed.push_back({a0 + t * (a1 - a0), r0 + t * (r1 - r0)});
  }
  RefineOptions ropts;
  ropts.max_iters = int_or(task, "max_iters", 400);
  auto path = refine_planar_geodesic(chart, seed, ropts, int_or(task, "subdivide_rounds", 3));

  fs::path csv = ctx.out_dir / (out.task + ".csv");
  CsvWriter w(csv, {"alpha", "r", "model_alpha"});
  out.files.push_back(csv.filename().string());
  double worst = 0;
  for (const auto& p : path) {
    double model = a0 + std::log(r0 / p[1]);
    worst = std::max(worst, std::abs(p[0] - model));
    w.row({format_double(p[0]), format_double(p[1]), format_double(model)});
  }
  out.stats["length"] = planar_curve_length(chart, path);
  out.stats["max_angle_error"] = worst;
  double cap = num_or(task, "expect_max_angle_error", 0.05);
  if (worst > cap) {
    out.ok = false;
    out.violations.push_back(out.task + ": geodesic strays " + format_double(worst) +
                             " radians from the logarithmic spiral (cap " + format_double(cap) +
                             ")");
  }
}

void run_gluing_check_task(const RunContext& ctx, const json& task, std::mt19937_64& rng,
                           TaskOutcome& out) {
  const NamedMetric& nm = metric_of(ctx, task);
  const ConicMetricSpec& spec = nm.spec;
  int count = int_or(task, "count", 32);
  double worst = 0;
  for (int i = 0; i < count; ++i) {
    ChartPoint p{random_boundary_point(spec.boundary, rng), uniform_in(rng, 0.25, 2.0)};
    Tangent v;
    v.xi = Eigen::VectorXd::Constant(1, uniform_in(rng, -1, 1));
    v.lambda = uniform_in(rng, -1, 1);
    worst = std::max(worst, inversion_gluing_mismatch(spec, p, v));
  }
  out.stats["max_mismatch"] = worst;
  double cap = num_or(task, "expect_max", 1e-12);
  if (worst > cap) {
    out.ok = false;
    out.violations.push_back(out.task + ": inversion gluing mismatch " + format_double(worst) +
                             " exceeds " + format_double(cap));
  }
}

}  // namespace

ScenarioResult run_scenario_text(const std::string& json_text, const ScenarioOptions& opts) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const std::exception& e) {
    fail("parse", e.what());
  }
  if (int_or(root, "schema_version", 1) != 1) fail("parse", "unsupported schema_version");

  RunContext ctx;
  ctx.opts = &opts;
  ctx.seed = opts.seed ? opts.seed : static_cast<std::uint64_t>(num_or(root, "seed", 1));
  ctx.out_dir = opts.out_dir.empty() ? fs::path(".") : fs::path(opts.out_dir);
  fs::create_directories(ctx.out_dir);

  ScenarioResult result;
  result.name = str_or(root, "name", "scenario");
  result.seed = ctx.seed;

  if (root.contains("metrics"))
    for (auto& [name, mj] : root.at("metrics").items()) {
      NamedMetric nm;
      nm.spec.boundary = parse_boundary(mj.at("boundary"), opts.base_dir);
      nm.spec.eta = parse_eta(mj);
      nm.spec.family = parse_family(mj.contains("family") ? mj.at("family") : json::object());
      nm.spec.validate();
      nm.ac = bool_or(mj, "ac", false);
      ctx.metrics.emplace(name, std::move(nm));
    }
  if (root.contains("quotients"))
    for (auto& [name, qj] : root.at("quotients").items())
      ctx.quotients.emplace(name, parse_quotient(ctx, qj));

  if (!root.contains("tasks") || root.at("tasks").empty()) fail("parse", "no tasks");
  int index = 0;
  for (const auto& task : root.at("tasks")) {
    TaskOutcome out;
    out.kind = task.at("task").get<std::string>();
    out.task = str_or(task, "name", out.kind + "_" + std::to_string(index));
    std::mt19937_64 rng(ctx.seed * 1000003ull + static_cast<std::uint64_t>(index));
    if (opts.verbose)
      std::fprintf(stderr, "[%s] running %s (%s)\n", result.name.c_str(), out.task.c_str(),
                   out.kind.c_str());
    try {
      if (out.kind == "distance")
        run_distance_task(ctx, task, rng, out);
      else if (out.kind == "geodesic")
        run_geodesic_task(ctx, task, out);
      else if (out.kind == "norm_bracket")
        run_norm_bracket_task(ctx, task, out);
      else if (out.kind == "inversion_duality")
        run_inversion_duality_task(ctx, task, rng, out);
      else if (out.kind == "quotient_distance")
        run_quotient_distance_task(ctx, task, rng, out);
      else if (out.kind == "completion_duality")
        run_completion_duality_task(ctx, task, rng, out);
      else if (out.kind == "lne_scan")
        run_lne_scan_task(ctx, task, rng, out);
      else if (out.kind == "pullback_check")
        run_pullback_check_task(ctx, task, out);
      else if (out.kind == "spiral_geodesic")
        run_spiral_geodesic_task(ctx, task, out);
      else if (out.kind == "gluing_check")
        run_gluing_check_task(ctx, task, rng, out);
      else
        fail(out.task, "unknown task kind '" + out.kind + "'");
    } catch (const std::runtime_error&) {
      throw;  // malformed input: surface immediately
    }
    if (opts.verbose)
      for (const auto& v : out.violations) std::fprintf(stderr, "  violation: %s\n", v.c_str());
    result.ok = result.ok && out.ok;
    result.tasks.push_back(std::move(out));
    ++index;
  }

  ordered_json summary;
  summary["name"] = result.name;
  summary["seed"] = result.seed;
  summary["ok"] = result.ok;
  summary["tasks"] = ordered_json::array();
  for (const auto& t : result.tasks) {
    ordered_json tj;
    tj["name"] = t.task;
    tj["kind"] = t.kind;
    tj["ok"] = t.ok;
    ordered_json stats;
    for (const auto& [k, v] : t.stats) stats[k] = format_double(v);
    tj["stats"] = stats;
    tj["violations"] = t.violations;
    tj["files"] = t.files;
    summary["tasks"].push_back(tj);
  }
  fs::path spath = ctx.out_dir / "summary.json";
  std::ofstream sout(spath);
  sout << summary.dump(2) << "\n";
  result.summary_path = spath.string();
  return result;
}

ScenarioResult run_scenario_file(const std::string& path, const ScenarioOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  ScenarioOptions local = opts;
  if (local.base_dir.empty()) local.base_dir = fs::path(path).parent_path().string();
  return run_scenario_text(ss.str(), local);
}

}  // namespace conic
