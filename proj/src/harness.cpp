#include "pfem/harness.hpp"

#include "pfem/assembly.hpp"
#include "pfem/projections.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#ifndef PFEM_VERSION
#define PFEM_VERSION "unknown"
#endif

namespace pfem {

namespace {

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON cannot hold infinities; p = q = inf is common here, so such values become strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return shortest(v);
}

std::string point_tag(const Vec2& x) { return "(" + shortest(x.x()) + "," + shortest(x.y()) + ")"; }

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') out.push_back(c);
    else if (out.empty() || out.back() != '_') out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// Meshes of one refinement family: the first level is built from the polygon, later ones by red refinement.
class MeshChain {
 public:
  MeshChain(const Polygon& polygon, int base) : base_(base) {
    meshes_.push_back(build_polygon_mesh(polygon, 1.0 / base));
  }

  MeshPtr at(int level) {
    if (level % base_ != 0 || !is_power_of_two(level / base_)) {
      throw InvalidInput("level " + std::to_string(level) + " is not a dyadic multiple of " + std::to_string(base_));
    }
    std::size_t k = 0;
    for (int ratio = level / base_; ratio > 1; ratio /= 2) ++k;
    while (meshes_.size() <= k) meshes_.push_back(refine_uniform(meshes_.back()));
    return meshes_[k];
  }

 private:
  int base_;
  std::vector<MeshPtr> meshes_;
};

struct Level {
  int level = 0;
  MeshPtr mesh;
  FESpacePtr space;
  OperatorPairPtr pair;
  MeshQuality quality{};
  CoefficientReport certificate{};
};

Level make_level(MeshChain& chain, int level, int r, const CoefficientPtr& a) {
  Level L;
  L.level = level;
  L.mesh = chain.at(level);
  L.space = build_space(L.mesh, r);
  L.quality = measure_quality(*L.mesh);
  L.certificate = validate_coefficient(*a, *L.space);
  if (!L.certificate.pass) {
    throw EllipticityViolation("coefficient " + a->name + " violates its certificate on level " + std::to_string(level),
                               L.certificate.worst_point);
  }
  L.pair = assemble(L.space, a);
  return L;
}

Json certificate_json(const CoefficientField& a, const CoefficientReport& c) {
  Json j;
  j["regularity"] = a.regularity_tag;
  j["lambda"] = a.lambda;
  j["alpha"] = number(a.alpha);
  j["alpha_sup"] = number(a.alpha_sup);
  j["min_eigenvalue"] = c.min_eigenvalue;
  j["max_eigenvalue"] = c.max_eigenvalue;
  j["points_checked"] = c.points_checked;
  j["pass"] = c.pass;
  return j;
}

Json level_record(const Level& L, const CoefficientSpec& cs, double C_star, const std::string& x0, double grading) {
  Json rec;
  Json key;
  key["h"] = L.quality.h;
  key["r"] = L.space->degree();
  key["coefficient"] = cs.tag();
  key["C_star"] = C_star;
  key["x0"] = x0.empty() ? Json(nullptr) : Json(x0);
  rec["key"] = key;
  rec["level"] = L.level;
  rec["target_h"] = 1.0 / L.level;
  rec["mesh"] = {{"vertices", L.mesh->num_vertices()},
                 {"triangles", L.mesh->num_triangles()},
                 {"h", L.quality.h},
                 {"rho_min", L.quality.rho_min},
                 {"K", L.quality.K}};
  rec["dofs"] = L.space->num_dofs();
  rec["certificate"] = certificate_json(*L.pair->coefficient, L.certificate);
  rec["quadrature_order"] = L.pair->quadrature_order;
  rec["grading"] = grading;
  return rec;
}

SeriesCheck make_series(const std::string& quantity, const CoefficientSpec& cs, int r, double p, double q,
                        const std::string& kind, double threshold) {
  SeriesCheck s;
  s.quantity = quantity;
  s.coefficient = cs.tag();
  s.r = r;
  s.p = p;
  s.q = q;
  s.kind = kind;
  s.threshold = threshold;
  return s;
}

void push(SeriesCheck& s, const Level& L, double value) {
  s.levels.push_back(L.level);
  s.h.push_back(L.quality.h);
  s.values.push_back(value);
}

std::string series_id(const SeriesCheck& s) {
  std::string id = s.quantity + "__" + s.coefficient + "__r" + std::to_string(s.r);
  if (s.p != 0.0 || s.q != 0.0) id += "__p" + shortest(s.p) + "_q" + shortest(s.q);
  if (!s.x0.empty()) id += "__x" + s.x0;
  return sanitize(id);
}

// Smooth random scalar field sum c_mn cos(pi (m x + n y) + phase_mn), m, n = 0..2.
struct RandomSmooth {
  struct Term {
    double c, m, n, phase;
  };
  std::vector<Term> terms;

  double operator()(const Vec2& x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.c * std::cos(std::numbers::pi * (t.m * x.x() + t.n * x.y()) + t.phase);
    return v;
  }
};

RandomSmooth random_smooth(std::mt19937_64& gen) {
  RandomSmooth f;
  for (int m = 0; m <= 2; ++m)
    for (int n = 0; n <= 2; ++n) {
      const double c = 2.0 * uniform01(gen) - 1.0;
      const double phase = 2.0 * std::numbers::pi * uniform01(gen);
      f.terms.push_back({c, static_cast<double>(m), static_cast<double>(n), phase});
    }
  return f;
}

// Time profile at the grid points: a few random cosines, or (rough) independent values per grid point.
std::vector<double> random_profile(std::mt19937_64& gen, const std::vector<double>& grid, bool rough) {
  std::vector<double> s(grid.size());
  if (rough) {
    for (auto& v : s) v = 2.0 * uniform01(gen) - 1.0;
    return s;
  }
  const double T = grid.back();
  std::array<double, 4> a{}, theta{};
  for (int k = 0; k < 4; ++k) {
    a[k] = (2.0 * uniform01(gen) - 1.0) / (1.0 + k);
    theta[k] = 2.0 * std::numbers::pi * uniform01(gen);
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int k = 0; k < 4; ++k) s[i] += a[k] * std::cos(k * std::numbers::pi * grid[i] / T + theta[k]);
  return s;
}

// L^q norm of point values against the sampler's quadrature weights.
double weighted_lq(const PointSampler& quad, const Vector& values, double q) {
  double sum = 0.0;
  for (std::size_t k = 0; k < quad.weights.size(); ++k)
    sum += quad.weights[k] * std::pow(std::abs(values[static_cast<Eigen::Index>(k)]), q);
  return std::pow(sum, 1.0 / q);
}

Vector sample_function(const PointSampler& quad, const std::function<double(const Vec2&)>& f) {
  Vector v(static_cast<Eigen::Index>(quad.points.size()));
  for (std::size_t k = 0; k < quad.points.size(); ++k) v[static_cast<Eigen::Index>(k)] = f(quad.points[k]);
  return v;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Exponents are numbers or the strings "inf" / "infinity", matching what reports write.
double exponent(const Json& e) {
  if (e.is_string()) {
    const auto s = e.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw InvalidInput("config: exponent must be a number or \"inf\", got \"" + s + "\"");
  }
  return e.get<double>();
}

void check_pq(const ExperimentConfig& c) {
  for (const auto& pq : c.pq)
    if (!(pq[0] > 1.0 && pq[1] > 1.0 && std::isfinite(pq[0]) && std::isfinite(pq[1])))
      throw InvalidInput("p and q must lie in (1, inf), got (" + shortest(pq[0]) + ", " + shortest(pq[1]) + ")");
}

int first_level(const std::vector<int>& levels) { return *std::min_element(levels.begin(), levels.end()); }

// Returns null and records a note when the level is too large for the dense eigensolve.
std::shared_ptr<const SpectralDecomposition> try_spectral(const Level& L, const ExperimentConfig& c, SweepReport& rep) {
  try {
    return std::make_shared<const SpectralDecomposition>(spectral_decompose(*L.pair, c.dense_cap));
  } catch (const CapExceeded& e) {
    rep.add_note("level " + std::to_string(L.level) + " skipped: " + e.what());
    return nullptr;
  }
}

void add_nonempty(SweepReport& rep, SeriesCheck s) {
  if (s.values.empty()) {
    rep.add_note("series " + series_id(s) + " has no levels and was dropped");
    return;
  }
  rep.add_series(std::move(s));
}

}  // namespace

// ---------------------------------------------------------------- config

std::string CoefficientSpec::tag() const {
  std::string t = name;
  if (!params.empty()) {
    t += "[";
    bool first = true;
    for (const auto& [k, v] : params) {
      if (!first) t += ",";
      t += k + "=" + shortest(v);
      first = false;
    }
    t += "]";
  }
  return t;
}

Polygon ExperimentConfig::polygon() const { return domain.empty() ? Polygon::unit_square() : Polygon(domain); }

void ExperimentConfig::validate() const {
  const Polygon poly = polygon();
  if (coefficients.empty()) throw InvalidInput("config: no coefficients");
  if (degrees.empty()) throw InvalidInput("config: no degrees");
  for (int r : degrees)
    if (r < 1 || r > 4) throw InvalidInput("config: degree " + std::to_string(r) + " outside 1..4");
  auto check_levels = [](const std::vector<int>& lv, const char* what) {
    if (lv.empty()) throw InvalidInput(std::string("config: ") + what + " is empty");
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (lv[i] < 1) throw InvalidInput(std::string("config: ") + what + " must be positive");
      if (i > 0 && lv[i] <= lv[i - 1]) throw InvalidInput(std::string("config: ") + what + " must increase");
      if (lv[i] % lv[0] != 0 || !is_power_of_two(lv[i] / lv[0]))
        throw InvalidInput(std::string("config: ") + what + " must be dyadic multiples of the first entry");
    }
  };
  check_levels(levels, "levels");
  check_levels(superapprox_levels, "superapprox.levels");
  if (reference_level < levels.back() || reference_level % levels.front() != 0 ||
      !is_power_of_two(reference_level / levels.front()))
    throw InvalidInput("config: reference_level must be a dyadic multiple of the levels, at least the finest");
  for (const auto& pq : pq)
    if (!(pq[0] > 1.0 && pq[1] > 1.0)) throw InvalidInput("config: p and q must lie in (1, inf]");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("config: T must be positive");
  if (!(grading >= 1.0)) throw InvalidInput("config: grading must be at least 1");
  if (time_steps < 1) throw InvalidInput("config: time_steps must be positive");
  if (!(C_star > 0.0)) throw InvalidInput("config: C_star must be positive");
  if (samples < 1 || superapprox_samples < 1) throw InvalidInput("config: sample counts must be positive");
  if (!(threshold >= 1.0)) throw InvalidInput("config: threshold must be at least 1");
  if (!(superapprox_radius > 0.0 && superapprox_d > 0.0 && superapprox_d < superapprox_radius))
    throw InvalidInput("config: superapprox needs 0 < d < radius");
  if (manufactured != "sine" && manufactured != "bubble")
    throw InvalidInput("config: manufactured must be \"sine\" or \"bubble\"");
  for (const auto& x : x0)
    if (!poly.contains(x, 0.0)) throw InvalidInput("config: x0 " + point_tag(x) + " is not inside the domain");
}

namespace {

Vec2 vec_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("config: points are [x, y] pairs");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

CoefficientSpec coefficient_from_json(const Json& j) {
  CoefficientSpec c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
    return c;
  }
  for (const auto& [k, v] : j.items()) {
    if (k == "name") c.name = v.get<std::string>();
    else if (k == "params") {
      for (const auto& [pk, pv] : v.items()) c.params[pk] = pv.get<double>();
    } else throw InvalidInput("config: unknown coefficient key \"" + k + "\"");
  }
  return c;
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  ExperimentConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "domain") {
        c.domain.clear();
        for (const auto& p : v) c.domain.push_back(vec_from_json(p));
      } else if (k == "coefficients") {
        c.coefficients.clear();
        for (const auto& e : v) c.coefficients.push_back(coefficient_from_json(e));
      } else if (k == "coefficient") {
        c.coefficients = {coefficient_from_json(v)};
      } else if (k == "degrees") c.degrees = v.get<std::vector<int>>();
      else if (k == "levels") c.levels = v.get<std::vector<int>>();
      else if (k == "reference_level") c.reference_level = v.get<int>();
      else if (k == "pq") {
        c.pq.clear();
        for (const auto& e : v) {
          if (!e.is_array() || e.size() != 2) throw InvalidInput("config: pq entries are [p, q] pairs");
          c.pq.push_back({exponent(e[0]), exponent(e[1])});
        }
      } else if (k == "T") c.T = v.get<double>();
      else if (k == "grading") c.grading = v.get<double>();
      else if (k == "time_steps") c.time_steps = v.get<int>();
      else if (k == "C_star") c.C_star = v.get<double>();
      else if (k == "samples") c.samples = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "threshold") c.threshold = v.get<double>();
      else if (k == "x0") {
        c.x0.clear();
        for (const auto& p : v) c.x0.push_back(vec_from_json(p));
      } else if (k == "superapprox") {
        for (const auto& [sk, sv] : v.items()) {
          if (sk == "levels") c.superapprox_levels = sv.get<std::vector<int>>();
          else if (sk == "radius") c.superapprox_radius = sv.get<double>();
          else if (sk == "d") c.superapprox_d = sv.get<double>();
          else if (sk == "samples") c.superapprox_samples = sv.get<int>();
          else throw InvalidInput("config: unknown superapprox key \"" + sk + "\"");
        }
      } else if (k == "slope_error") c.slope_error = v.get<double>();
      else if (k == "slope_bound") c.slope_bound = v.get<double>();
      else if (k == "manufactured") c.manufactured = v.get<std::string>();
      else if (k == "dense_cap") c.dense_cap = v.get<std::size_t>();
      else if (k == "threads") c.threads = v.get<unsigned>();
      else throw InvalidInput("config: unknown key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  Json dom = Json::array();
  const Polygon poly = c.polygon();
  for (const auto& v : poly.vertices()) dom.push_back({v.x(), v.y()});
  j["domain"] = dom;
  Json coeffs = Json::array();
  for (const auto& cs : c.coefficients) {
    Json e;
    e["name"] = cs.name;
    e["params"] = Json::object();
    for (const auto& [k, v] : cs.params) e["params"][k] = v;
    coeffs.push_back(e);
  }
  j["coefficients"] = coeffs;
  j["degrees"] = c.degrees;
  j["levels"] = c.levels;
  j["reference_level"] = c.reference_level;
  Json pq = Json::array();
  for (const auto& e : c.pq) pq.push_back({number(e[0]), number(e[1])});
  j["pq"] = pq;
  j["T"] = c.T;
  j["grading"] = c.grading;
  j["time_steps"] = c.time_steps;
  j["C_star"] = c.C_star;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  Json x0 = Json::array();
  for (const auto& x : c.x0) x0.push_back({x.x(), x.y()});
  j["x0"] = x0;
  j["superapprox"] = {{"levels", c.superapprox_levels},
                      {"radius", c.superapprox_radius},
                      {"d", c.superapprox_d},
                      {"samples", c.superapprox_samples}};
  j["slope_error"] = c.slope_error;
  j["slope_bound"] = c.slope_bound;
  j["manufactured"] = c.manufactured;
  j["dense_cap"] = c.dense_cap;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path);
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t level, std::uint64_t sample) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(level), hi(level), lo(sample), hi(sample)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------- report

double spread(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx <= 0.0) return 1.0;
  if (*mn <= 0.0) return std::numeric_limits<double>::infinity();
  return *mx / *mn;
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& values) {
  if (h.size() != values.size() || h.size() < 2) throw InvalidInput("loglog_slope: need at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(values[i] > 0.0)) throw InvalidInput("loglog_slope: values must be positive");
    const double x = std::log(h[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw InvalidInput("loglog_slope: all h equal");
  return (n * sxy - sx * sy) / den;
}

SweepReport::SweepReport(std::string experiment, const ExperimentConfig& config)
    : experiment_(std::move(experiment)), config_(config_to_json(config)) {}

void SweepReport::add_record(Json record) { records_.push_back(std::move(record)); }

SeriesCheck& SweepReport::add_series(SeriesCheck s) {
  series_.push_back(std::move(s));
  return series_.back();
}

void SweepReport::add_note(const std::string& note) { notes_.push_back(note); }

void SweepReport::finalize() {
  for (auto& s : series_) {
    for (double v : s.values)
      if (!std::isfinite(v)) throw InternalError("non-finite value in series " + series_id(s));
    if (s.kind == "spread") {
      s.statistic = spread(s.values);
      s.pass = s.statistic <= s.threshold;
    } else if (s.kind == "max") {
      s.statistic = *std::max_element(s.values.begin(), s.values.end());
      s.pass = s.statistic <= s.threshold;
    } else if (s.kind == "min") {
      s.statistic = *std::min_element(s.values.begin(), s.values.end());
      s.pass = s.statistic >= s.threshold;
    } else if (s.kind == "slope" || s.kind == "slope_range") {
      bool positive = s.values.size() >= 2;
      for (double v : s.values) positive = positive && v > 0.0;
      if (!positive) {
        s.statistic = 0.0;
        s.pass = false;
        continue;
      }
      s.statistic = loglog_slope(s.h, s.values);
      s.pass = s.kind == "slope" ? s.statistic >= s.threshold : std::abs(s.statistic - s.threshold) <= s.tolerance;
    } else if (s.kind == "record") {
      s.statistic = spread(s.values);
      s.pass = true;
    } else {
      throw InternalError("unknown series kind " + s.kind);
    }
  }
}

bool SweepReport::pass() const {
  return std::all_of(series_.begin(), series_.end(), [](const SeriesCheck& s) { return s.pass; });
}

Json SweepReport::to_json() const {
  Json j;
  j["experiment"] = experiment_;
  j["version"] = PFEM_VERSION;
  j["environment"] = {{"compiler", __VERSION__},
                      {"cxx_standard", static_cast<long>(__cplusplus)},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"eigensolver", "LAPACKE dsygvd"},
                      {"rng", "mt19937_64 seeded by seed_seq(seed, level, sample)"}};
  j["config"] = config_;
  j["records"] = records_;
  Json series = Json::array();
  for (const auto& s : series_) {
    Json e;
    e["id"] = series_id(s);
    e["quantity"] = s.quantity;
    e["coefficient"] = s.coefficient;
    e["r"] = s.r;
    e["p"] = number(s.p);
    e["q"] = number(s.q);
    e["x0"] = s.x0.empty() ? Json(nullptr) : Json(s.x0);
    e["kind"] = s.kind;
    e["threshold"] = s.threshold;
    if (s.kind == "slope_range") e["tolerance"] = s.tolerance;
    e["levels"] = s.levels;
    e["h"] = s.h;
    e["values"] = s.values;
    e["statistic"] = number(s.statistic);
    e["pass"] = s.pass;
    series.push_back(e);
  }
  j["series"] = series;
  j["notes"] = notes_;
  j["extra"] = extra_;
  j["pass"] = pass();
  return j;
}

void SweepReport::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "report.json");
    if (!os) throw InvalidInput("cannot write report.json in " + dir);
    os << to_json().dump(2) << '\n';
  }
  for (const auto& s : series_) {
    const std::string id = series_id(s);
    std::ofstream csv(fs::path(dir) / (id + ".csv"));
    csv << "level,h,p,q,value\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
      csv << s.levels[i] << ',' << shortest(s.h[i]) << ',' << shortest(s.p) << ',' << shortest(s.q) << ','
          << shortest(s.values[i]) << '\n';
    std::ofstream dat(fs::path(dir) / (id + ".dat"));
    dat << "# h " << s.quantity << '\n';
    for (std::size_t i = 0; i < s.values.size(); ++i) dat << shortest(s.h[i]) << ' ' << shortest(s.values[i]) << '\n';
  }
}

// ---------------------------------------------------------------- sweeps

SweepReport run_mesh_report(const ExperimentConfig& config, const std::string& export_dir) {
  config.validate();
  SweepReport rep("mesh", config);
  const Polygon poly = config.polygon();
  const DomainMetrics m = domain_metrics(poly);
  rep.extra()["domain"] = {{"area", poly.area()},
                           {"diameter", poly.diameter()},
                           {"R0", m.R0},
                           {"K0", m.K0},
                           {"min_angle", m.min_angle},
                           {"K0_formula", m.formula}};
  MeshChain chain(poly, first_level(config.levels));
  CoefficientSpec none{"none", {}};
  SeriesCheck K = make_series("shape_regularity", none, 1, 0, 0, "spread", config.threshold);
  SeriesCheck hs = make_series("mesh_size", none, 1, 0, 0, "slope_range", 1.0);
  hs.tolerance = 1e-9;
  for (int level : config.levels) {
    const MeshPtr mesh = chain.at(level);
    const MeshQuality q = measure_quality(*mesh);
    Json rec;
    rec["key"] = {{"h", q.h}, {"r", nullptr}, {"coefficient", nullptr}, {"C_star", config.C_star}, {"x0", nullptr}};
    rec["level"] = level;
    rec["target_h"] = 1.0 / level;
    rec["mesh"] = {{"vertices", mesh->num_vertices()},
                   {"triangles", mesh->num_triangles()},
                   {"h", q.h},
                   {"rho_min", q.rho_min},
                   {"K", q.K}};
    rep.add_record(rec);
    K.levels.push_back(level);
    K.h.push_back(q.h);
    K.values.push_back(q.K);
    hs.levels.push_back(level);
    hs.h.push_back(1.0 / level);
    hs.values.push_back(q.h);
    if (!export_dir.empty()) {
      std::filesystem::create_directories(export_dir);
      save_mesh((std::filesystem::path(export_dir) / ("mesh_" + std::to_string(level) + ".txt")).string(), *mesh);
    }
  }
  rep.add_series(K);
  rep.add_series(hs);
  rep.finalize();
  return rep;
}

SweepReport run_assembly_report(const ExperimentConfig& config, const std::string& export_dir) {
  config.validate();
  SweepReport rep("assemble", config);
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.levels));
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      SeriesCheck pert = make_series("quadrature_perturbation", cs, r, 0, 0, "max", 1e-2);
      SeriesCheck rowsum = make_series("stiffness_row_sum", cs, r, 0, 0, "max", 1e-10);
      for (int level : config.levels) {
        const Level L = make_level(chain, level, r, a);
        const QuadraturePerturbation qp = quadrature_perturbation(L.space, a);
        // Constants are in the kernel of the full stiffness matrix.
        const Vector ones = Vector::Ones(L.pair->A_full.rows());
        const double rs = (L.pair->A_full * ones).cwiseAbs().maxCoeff() / L.pair->A_full.coeffs().cwiseAbs().maxCoeff();
        Json rec = level_record(L, cs, config.C_star, "", config.grading);
        rec["nnz"] = {{"M", L.pair->M.nonZeros()}, {"A", L.pair->A.nonZeros()}};
        rec["quadrature_perturbation"] = {{"base_order", qp.base_order},
                                          {"doubled_order", qp.doubled_order},
                                          {"stiffness_change", qp.stiffness_change},
                                          {"mass_change", qp.mass_change}};
        rec["stiffness_row_sum"] = rs;
        rep.add_record(rec);
        push(pert, L, qp.stiffness_change);
        push(rowsum, L, rs);
        if (!export_dir.empty()) {
          namespace fs = std::filesystem;
          fs::create_directories(export_dir);
          const std::string stem = sanitize(cs.tag()) + "_r" + std::to_string(r) + "_" + std::to_string(level);
          save_triplets((fs::path(export_dir) / ("M_" + stem + ".txt")).string(), L.pair->M);
          save_triplets((fs::path(export_dir) / ("A_" + stem + ".txt")).string(), L.pair->A);
        }
      }
      rep.add_series(pert);
      rep.add_series(rowsum);
    }
  }
  rep.finalize();
  return rep;
}

SweepReport run_semigroup_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepReport rep("semigroup", config);
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.levels));
  const auto grid = graded_grid(config.T, static_cast<std::size_t>(config.time_steps), config.grading);
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      SeriesCheck s = make_series("linf_stability", cs, r, kInf, kInf, "spread", config.threshold);
      for (int level : config.levels) {
        const Level L = make_level(chain, level, r, a);
        const auto spec = try_spectral(L, config, rep);
        if (!spec) continue;
        const auto n = static_cast<std::size_t>(config.samples);
        std::vector<double> per_sample(n, 0.0);
        parallel_for(
            n,
            [&](std::size_t b, std::size_t e) {
              for (std::size_t i = b; i < e; ++i) {
                auto gen = make_rng(config.seed, static_cast<std::uint64_t>(level), i);
                Vector v(static_cast<Eigen::Index>(L.space->num_dofs()));
                for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = 2.0 * uniform01(gen) - 1.0;
                per_sample[i] = linf_stability_constant(*spec, *L.space, {v}, grid);
              }
            },
            config.threads);
        const double value = *std::max_element(per_sample.begin(), per_sample.end());
        Json rec = level_record(L, cs, config.C_star, "", config.grading);
        rec["samples"] = per_sample;
        rec["linf_stability"] = value;
        rec["lambda_min"] = spec->eigenvalues[0];
        rep.add_record(rec);
        push(s, L, value);
      }
      add_nonempty(rep, s);
    }
  }
  rep.finalize();
  return rep;
}

namespace {

enum class RegKind { maximal, gradient };

SweepReport regularity_sweep(const ExperimentConfig& config, RegKind kind) {
  config.validate();
  check_pq(config);
  SweepReport rep(kind == RegKind::maximal ? "maxreg" : "gradreg", config);
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.levels));
  const auto grid = graded_grid(config.T, static_cast<std::size_t>(config.time_steps), config.grading);
  const std::string quantity = kind == RegKind::maximal ? "maxreg_ratio" : "gradreg_ratio";
  const std::size_t npq = config.pq.size();
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      std::vector<SeriesCheck> series;
      for (const auto& pq : config.pq)
        series.push_back(make_series(quantity, cs, r, pq[0], pq[1], "spread", config.threshold));
      SeriesCheck hilbert = make_series(quantity + "_hilbert", cs, r, 2, 2, "max", 2.01);
      for (int level : config.levels) {
        const Level L = make_level(chain, level, r, a);
        const auto spec = try_spectral(L, config, rep);
        if (!spec) continue;
        const NormEvaluator norms(*L.space, 2 * r + 4);
        const PointSampler& quad = norms.quadrature();
        const int order = 2 * r + 4;
        const auto n = static_cast<std::size_t>(config.samples);
        std::vector<std::vector<double>> ratios(n, std::vector<double>(npq, 0.0));
        parallel_for(
            n,
            [&](std::size_t b, std::size_t e) {
              for (std::size_t i = b; i < e; ++i) {
                auto gen = make_rng(config.seed, static_cast<std::uint64_t>(level), i);
                const std::vector<double> s = random_profile(gen, grid, i % 2 == 1);
                Vector F;
                std::vector<Vector> gvals;  // spatial load components at the quadrature points
                if (kind == RegKind::maximal) {
                  const RandomSmooth g = random_smooth(gen);
                  F = L.pair->restrict(load_vector(*L.space, g, order));
                  gvals.push_back(sample_function(quad, g));
                } else {
                  const RandomSmooth g1 = random_smooth(gen), g2 = random_smooth(gen);
                  const GradientFunction g = [&](const Vec2& x) { return Vec2(g1(x), g2(x)); };
                  F = -L.pair->restrict(divergence_load(*L.space, g, order));
                  gvals.push_back(sample_function(quad, g1));
                  gvals.push_back(sample_function(quad, g2));
                }
                const Vector Fm = spec->eigenvectors.transpose() * F;
                const Vector sv = to_vector(s);
                const Matrix load = Fm * sv.transpose();
                const Matrix u = duhamel_modal_from_coefficients(spec->eigenvalues, load, grid);
                Vector gmag(gvals[0].size());
                for (Eigen::Index k = 0; k < gmag.size(); ++k) {
                  double m2 = 0.0;
                  for (const auto& gv : gvals) m2 += gv[k] * gv[k];
                  gmag[k] = std::sqrt(m2);
                }
                Matrix U1, U2;
                if (kind == RegKind::maximal) {
                  const Matrix Au = spec->eigenvalues.asDiagonal() * u;
                  U1 = spec->eigenvectors * Au;
                  U2 = spec->eigenvectors * (load - Au);
                } else {
                  U1 = spec->eigenvectors * u;
                }
                for (std::size_t k = 0; k < npq; ++k) {
                  const double p = config.pq[k][0], q = config.pq[k][1];
                  const double fnorm = bochner_from_values(grid, sv.cwiseAbs(), p) * weighted_lq(quad, gmag, q);
                  double num = 0.0;
                  if (kind == RegKind::maximal) {
                    num = bochner_from_values(grid, norms.columns(U1, q), p) +
                          bochner_from_values(grid, norms.columns(U2, q), p);
                  } else {
                    const Vector a0 = norms.columns(U1, q), a1 = norms.columns(U1, q, Derivative::gradient);
                    Vector w1q(a0.size());
                    for (Eigen::Index t = 0; t < w1q.size(); ++t)
                      w1q[t] = std::pow(std::pow(a0[t], q) + std::pow(a1[t], q), 1.0 / q);
                    num = bochner_from_values(grid, w1q, p);
                  }
                  ratios[i][k] = num / fnorm;
                }
              }
            },
            config.threads);
        Json rec = level_record(L, cs, config.C_star, "", config.grading);
        Json per = Json::array();
        for (std::size_t k = 0; k < npq; ++k) {
          double mx = 0.0;
          std::vector<double> col;
          for (std::size_t i = 0; i < n; ++i) {
            mx = std::max(mx, ratios[i][k]);
            col.push_back(ratios[i][k]);
          }
          per.push_back({{"p", config.pq[k][0]}, {"q", config.pq[k][1]}, {"max_ratio", mx}, {"samples", col}});
          push(series[k], L, mx);
          if (kind == RegKind::maximal && config.pq[k][0] == 2.0 && config.pq[k][1] == 2.0) push(hilbert, L, mx);
        }
        rec["ratios"] = per;
        rec["load_profiles"] = "even samples smooth in time, odd samples rough (independent values per grid point)";
        rep.add_record(rec);
      }
      for (auto& s : series) add_nonempty(rep, std::move(s));
      if (!hilbert.values.empty()) rep.add_series(hilbert);
    }
  }
  rep.finalize();
  return rep;
}

// Manufactured spatial profile vanishing on the boundary, with its gradient.
struct Profile {
  ScalarFunction w;
  GradientFunction grad;
};

Profile manufactured_profile(const ExperimentConfig& config) {
  const double pi = std::numbers::pi;
  if (config.manufactured == "sine") {
    return {[pi](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
            [pi](const Vec2& x) {
              return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
            }};
  }
  // Product of distances to the edge lines, normalized at the vertex centroid.
  const Polygon poly = config.polygon();
  std::vector<std::pair<Vec2, double>> lines;  // inward unit normal n, offset c: dist = n.x - c
  Vec2 centroid = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 e = poly.next(i) - poly[i];
    const Vec2 n = Vec2(-e.y(), e.x()).normalized();
    lines.emplace_back(n, n.dot(poly[i]));
    centroid += poly[i] / static_cast<double>(poly.size());
  }
  double scale = 1.0;
  for (const auto& [n, c] : lines) scale *= n.dot(centroid) - c;
  scale = 1.0 / scale;
  auto w = [lines, scale](const Vec2& x) {
    double v = scale;
    for (const auto& [n, c] : lines) v *= n.dot(x) - c;
    return v;
  };
  auto grad = [lines, scale](const Vec2& x) {
    Vec2 g = Vec2::Zero();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      double prod = scale;
      for (std::size_t k = 0; k < lines.size(); ++k)
        if (k != i) prod *= lines[k].first.dot(x) - lines[k].second;
      g += prod * lines[i].first;
    }
    return g;
  };
  return {w, grad};
}

}  // namespace

SweepReport run_maxreg_sweep(const ExperimentConfig& config) { return regularity_sweep(config, RegKind::maximal); }

SweepReport run_gradient_maxreg_sweep(const ExperimentConfig& config) {
  return regularity_sweep(config, RegKind::gradient);
}

SweepReport run_error_convergence(const ExperimentConfig& config) {
  config.validate();
  check_pq(config);
  SweepReport rep("converge", config);
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.levels));
  const Profile prof = manufactured_profile(config);
  const double omega = std::numbers::pi / config.T;
  // u = sin(omega t) w(x); the time integrals per mode are done in closed form.
  const auto grid = graded_grid(config.T, static_cast<std::size_t>(config.time_steps), 1.0);
  const Vector gt = to_vector([&] {
    std::vector<double> v;
    for (double t : grid) v.push_back(std::sin(omega * t));
    return v;
  }());
  rep.extra()["manufactured"] = {{"time", "sin(pi t / T)"},
                                 {"space", config.manufactured},
                                 {"time_integration", "closed-form per mode"}};
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      std::vector<SeriesCheck> projected, gap, ratio;
      for (const auto& pq : config.pq) {
        projected.push_back(make_series("projected_error", cs, r, pq[0], pq[1], "record", 0.0));
        gap.push_back(make_series("ritz_gap", cs, r, pq[0], pq[1], "slope", config.slope_bound));
        ratio.push_back(make_series("error_ratio", cs, r, pq[0], pq[1], "spread", config.threshold));
      }
      SeriesCheck l2s = make_series("l2l2_error", cs, r, 2, 2, "slope", config.slope_error);
      for (int level : config.levels) {
        const Level L = make_level(chain, level, r, a);
        for (std::size_t n = 0; n < L.space->num_nodes(); ++n) {
          if (L.space->is_boundary_node(n) && std::abs(prof.w(L.space->node_point(n))) > 1e-10) {
            throw InvalidInput("manufactured solution does not vanish on the boundary at " +
                               point_tag(L.space->node_point(n)));
          }
        }
        const auto spec = try_spectral(L, config, rep);
        if (!spec) continue;
        const int order = 2 * r + 8;
        const Vector Fw = L.pair->restrict(load_vector(*L.space, prof.w, order));
        const GradientFunction flux = [&](const Vec2& x) { return Vec2(a->eval(x) * prof.grad(x)); };
        const Vector FLw = L.pair->restrict(divergence_load(*L.space, flux, order));
        const Vector Phw = L.pair->solve_mass(Fw);
        const Vector Rhw = L.pair->solve_stiffness(FLw);
        const Vector c1 = spec->eigenvectors.transpose() * Fw;   // modal coefficients of P_h w
        const Vector c2 = spec->eigenvectors.transpose() * FLw;  // modal load of A_h R_h w
        const auto nt = static_cast<Eigen::Index>(grid.size());
        Matrix u(c1.size(), nt);
        for (Eigen::Index k = 0; k < c1.size(); ++k) {
          const double lam = spec->eigenvalues[k];
          const double den = lam * lam + omega * omega;
          for (Eigen::Index i = 0; i < nt; ++i) {
            const double t = grid[static_cast<std::size_t>(i)];
            const double decay = std::exp(-lam * t);
            const double s = std::sin(omega * t), c = std::cos(omega * t);
            // int_0^t e^{-lam (t - s)} sin(omega s) ds and the same with omega cos(omega s).
            const double Is = (lam * s - omega * c + omega * decay) / den;
            const double Ic = omega * (lam * c + omega * s - lam * decay) / den;
            u(k, i) = Ic * c1[k] + Is * c2[k];
          }
        }
        const Matrix Uh = spec->eigenvectors * u;
        const Matrix E1 = Phw * gt.transpose() - Uh;
        const NormEvaluator norms(*L.space, 2 * r + 4);
        const PointSampler& quad = norms.quadrature();
        // ||u - u_h||_{L^2(L^2)} at the quadrature points.
        const Vector wq = sample_function(quad, prof.w);
        Matrix Ufull = Matrix::Zero(static_cast<Eigen::Index>(L.space->num_nodes()), nt);
        for (std::size_t d = 0; d < L.space->num_dofs(); ++d)
          Ufull.row(L.space->node_of_dof(d)) = Uh.row(static_cast<Eigen::Index>(d));
        const Matrix Uq = quad.value * Ufull;
        Vector l2(nt);
        for (Eigen::Index i = 0; i < nt; ++i) l2[i] = weighted_lq(quad, wq * gt[i] - Uq.col(i), 2.0);
        const double l2l2 = bochner_from_values(grid, l2, 2.0);
        Json rec = level_record(L, cs, config.C_star, "", 1.0);
        Json per = Json::array();
        for (std::size_t k = 0; k < config.pq.size(); ++k) {
          const double p = config.pq[k][0], q = config.pq[k][1];
          const double e1 = bochner_from_values(grid, norms.columns(E1, q), p);
          const double e2 = bochner_from_values(grid, gt.cwiseAbs(), p) * norms(Vector(Phw - Rhw), q);
          per.push_back({{"p", p}, {"q", q}, {"projected_error", e1}, {"ritz_gap", e2}, {"ratio", e1 / e2}});
          push(projected[k], L, e1);
          push(gap[k], L, e2);
          push(ratio[k], L, e1 / e2);
        }
        rec["errors"] = per;
        rec["l2l2_error"] = l2l2;
        rep.add_record(rec);
        push(l2s, L, l2l2);
      }
      for (auto& s : projected) add_nonempty(rep, std::move(s));
      for (auto& s : gap) add_nonempty(rep, std::move(s));
      for (auto& s : ratio) add_nonempty(rep, std::move(s));
      add_nonempty(rep, l2s);
    }
  }
  rep.finalize();
  return rep;
}

namespace {

void append_green(SweepReport& rep, const ExperimentConfig& config) {
  const Polygon poly = config.polygon();
  const DomainMetrics metrics = domain_metrics(poly);
  MeshChain chain(poly, first_level(config.levels));
  const auto grid = graded_grid(config.T, static_cast<std::size_t>(config.time_steps), config.grading);
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      const Level ref = make_level(chain, config.reference_level, r, a);
      const auto ref_spec = try_spectral(ref, config, rep);
      if (!ref_spec) continue;
      for (const Vec2& x0 : config.x0) {
        const std::string xt = point_tag(x0);
        auto series = [&](const std::string& q, double p, double qq, const std::string& kind) {
          SeriesCheck s = make_series(q, cs, r, p, qq, kind, config.threshold);
          s.x0 = xt;
          return s;
        };
        SeriesCheck I1 = series("green_I1", 1, 1, "spread");
        SeriesCheck I2 = series("green_I2", 1, 1, "record");
        SeriesCheck K = series("green_kappa", 2, 2, "spread");
        SeriesCheck local = series("local_energy_ratio", 2, 2, "spread");
        SeriesCheck gauss = series("gaussian_fit_residual", kInf, kInf, "record");
        SeriesCheck gaussC = series("gaussian_fit_constant", kInf, kInf, "record");
        SeriesCheck l1 = series("green_l1_bound", kInf, 1, "record");
        for (int level : config.levels) {
          const Level L = make_level(chain, level, r, a);
          const auto spec = try_spectral(L, config, rep);
          if (!spec) continue;
          const GreenField coarse = discrete_green(*L.pair, spec, x0, grid);
          const GreenField fine = reference_green(*ref.pair, ref_spec, *L.space, x0, grid);
          const DyadicDecomposition dec = dyadic_decomposition(metrics, x0, L.quality.h, config.C_star, config.T);
          const GreenDiagnostics diag = green_diagnostics(coarse, fine, dec);
          const GaussianFit fit = gaussian_tail_fit(fine, ref.quality.h);
          const GaussianFit fit_h = gaussian_tail_fit(coarse, L.quality.h);
          const double l1b = l1_bound(fine);
          Json rec = level_record(L, cs, config.C_star, xt, config.grading);
          rec["reference_level"] = config.reference_level;
          rec["reference_h"] = ref.quality.h;
          rec["I1"] = diag.functionals.I1;
          rec["I2"] = diag.functionals.I2;
          Json dj;
          dj["trivial"] = dec.trivial;
          dj["J_star"] = dec.J_star;
          dj["R0"] = dec.R0;
          dj["K0"] = dec.K0;
          std::vector<double> radii;
          for (int j = 0; j <= dec.J_star; ++j) radii.push_back(dec.d(j));
          dj["d"] = radii;
          dj["shell_points"] = diag.shell_points;
          dj["total_points"] = diag.total_points;
          rec["decomposition"] = dj;
          rec["kappa"] = {{"total", diag.kappa.total},
                          {"contributions", diag.kappa.contributions},
                          {"grad_norm", diag.kappa.grad_norm},
                          {"dt_norm", diag.kappa.dt_norm},
                          {"dtt_norm", diag.kappa.dtt_norm}};
          Json lj = Json::array();
          double worst = 0.0;
          for (const auto& t : diag.local) {
            lj.push_back({{"j", t.j},
                          {"lhs", t.lhs},
                          {"I", t.I},
                          {"X", t.X},
                          {"H", t.H},
                          {"tail", t.tail},
                          {"rhs", t.rhs},
                          {"ratio", t.ratio}});
            worst = std::max(worst, t.ratio);
          }
          rec["local_energy"] = lj;
          rec["gaussian_fit"] = {{"reference", {{"C", fit.C}, {"residual", fit.residual}, {"samples", fit.samples}}},
                                 {"discrete", {{"C", fit_h.C}, {"residual", fit_h.residual}, {"samples", fit_h.samples}}}};
          rec["l1_bound"] = l1b;
          rep.add_record(rec);
          if (dec.trivial) rep.add_note("level " + std::to_string(level) + " x0 " + xt + ": trivial dyadic decomposition");
          push(I1, L, diag.functionals.I1);
          push(I2, L, diag.functionals.I2);
          push(K, L, diag.kappa.total);
          if (!diag.local.empty()) push(local, L, worst);
          push(gauss, L, fit.residual);
          push(gaussC, L, fit.C);
          push(l1, L, l1b);
        }
        for (auto* s : {&I1, &I2, &K, &local, &gauss, &gaussC, &l1}) add_nonempty(rep, std::move(*s));
      }
    }
  }
}

void append_superapprox(SweepReport& rep, const ExperimentConfig& config) {
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.superapprox_levels));
  Vec2 center = Vec2::Zero();
  for (const auto& v : poly.vertices()) center += v / static_cast<double>(poly.size());
  const Disk D{center, config.superapprox_radius};
  for (const auto& cs : config.coefficients) {
    const CoefficientPtr a = make_sample(cs.name, cs.params, poly);
    for (int r : config.degrees) {
      SeriesCheck s = make_series("superapprox_ratio", cs, r, 2, 2, "spread", config.threshold);
      for (int level : config.superapprox_levels) {
        const Level L = make_level(chain, level, r, a);
        const auto n = static_cast<std::size_t>(config.superapprox_samples);
        std::vector<SuperapproxReport> out(n);
        parallel_for(
            n,
            [&](std::size_t b, std::size_t e) {
              for (std::size_t i = b; i < e; ++i) {
                auto gen = make_rng(config.seed, static_cast<std::uint64_t>(level), 1000 + i);
                Vector psi(static_cast<Eigen::Index>(L.space->num_dofs()));
                for (Eigen::Index k = 0; k < psi.size(); ++k) psi[k] = 2.0 * uniform01(gen) - 1.0;
                out[i] = superapprox_check(*L.pair, D, config.superapprox_d, psi);
              }
            },
            config.threads);
        double worst = 0.0;
        Json samples = Json::array();
        for (const auto& o : out) {
          worst = std::max(worst, o.ratio);
          samples.push_back({{"lhs", o.lhs},
                             {"rhs", o.rhs},
                             {"ratio", o.ratio},
                             {"ritz_term", o.ritz_term},
                             {"l2_term", o.l2_term}});
        }
        Json rec = level_record(L, cs, config.C_star, "", config.grading);
        rec["superapprox"] = {{"center", {center.x(), center.y()}},
                              {"radius", D.radius},
                              {"d", config.superapprox_d},
                              {"kappa", out.front().kappa},
                              {"cutoff_constant", out.front().cutoff_constant},
                              {"max_ratio", worst},
                              {"samples", samples}};
        rep.add_record(rec);
        push(s, L, worst);
      }
      add_nonempty(rep, s);
    }
  }
}

void append_delta(SweepReport& rep, const ExperimentConfig& config) {
  const Polygon poly = config.polygon();
  MeshChain chain(poly, first_level(config.levels));
  CoefficientSpec identity{"identity", {}};
  const CoefficientPtr a = make_sample("identity", {}, poly);
  for (int r : config.degrees) {
    for (const Vec2& x0 : config.x0) {
      const std::string xt = point_tag(x0);
      auto series = [&](const std::string& q, const std::string& kind, double thr) {
        SeriesCheck s = make_series(q, identity, r, kInf, kInf, kind, thr);
        s.x0 = xt;
        return s;
      };
      SeriesCheck repro = series("delta_reproduction", "max", 1e-11);
      SeriesCheck amp = series("discrete_delta_amplitude", "slope_range", -2.0);
      amp.tolerance = 0.3;
      SeriesCheck amp_const = series("discrete_delta_scaled_amplitude", "spread", 2.0);
      SeriesCheck rate = series("discrete_delta_decay_rate", "min", 1e-3);
      SeriesCheck rate_spread = series("discrete_delta_decay_rate_stability", "spread", 2.0);
      SeriesCheck l1 = series("regularized_delta_l1", "spread", config.threshold);
      // One fitting window in units of h for every level, sized so the coarsest mesh still
      // sees whole bins before the boundary; otherwise amplitudes are not comparable.
      double wall = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 e = poly.next(i) - poly[i];
        const double s = std::clamp((x0 - poly[i]).dot(e) / e.squaredNorm(), 0.0, 1.0);
        wall = std::min(wall, (x0 - (poly[i] + s * e)).norm());
      }
      const double coarse_h = measure_quality(*chain.at(first_level(config.levels))).h;
      const double window = std::clamp(std::floor(wall / coarse_h) + 1.0, 2.0, 8.0);
      for (int level : config.levels) {
        const Level L = make_level(chain, level, r, a);
        const RegularizedDelta delta = regularized_delta(*L.space, x0);
        // Reproduction: int delta phi_k = phi_k(x0) for every local basis function on the element.
        const TriangleQuadrature tq(4 * r + 12);
        const int nloc = L.space->local_size();
        std::vector<double> phi(static_cast<std::size_t>(nloc)), phi0(static_cast<std::size_t>(nloc));
        std::vector<double> integral(static_cast<std::size_t>(nloc), 0.0);
        const double area = L.mesh->area(static_cast<std::size_t>(delta.element));
        for (std::size_t k = 0; k < tq.weights().size(); ++k) {
          const auto lam = tq.points()[k];
          L.space->basis().eval(lam, phi);
          const double dv = delta.at_barycentric(lam);
          for (int m = 0; m < nloc; ++m) integral[static_cast<std::size_t>(m)] += area * tq.weights()[k] * dv * phi[static_cast<std::size_t>(m)];
        }
        L.space->basis().eval(barycentric(*L.mesh, static_cast<std::size_t>(delta.element), x0), phi0);
        double err = 0.0;
        for (int m = 0; m < nloc; ++m)
          err = std::max(err, std::abs(integral[static_cast<std::size_t>(m)] - phi0[static_cast<std::size_t>(m)]));
        DiscreteDelta dd = discrete_delta(*L.pair, x0);
        dd.fit = fit_decay(*L.space, dd.coeffs, x0, window);
        Json rec = level_record(L, identity, config.C_star, xt, config.grading);
        rec["delta"] = {{"element", delta.element},
                        {"reproduction_error", err},
                        {"l1", delta.lp_norm(1.0)},
                        {"linf", delta.lp_norm(kInf)},
                        {"amplitude", dd.fit.amplitude},
                        {"decay_rate", dd.fit.rate},
                        {"fit_residual", dd.fit.residual},
                        {"bins", dd.fit.bins},
                        {"fit_window", window},
                        {"peak", dd.coeffs.cwiseAbs().maxCoeff()}};
        rep.add_record(rec);
        push(repro, L, err);
        push(amp, L, dd.fit.amplitude);
        push(amp_const, L, dd.fit.amplitude * L.quality.h * L.quality.h);
        push(rate, L, dd.fit.rate);
        push(rate_spread, L, dd.fit.rate);
        push(l1, L, delta.lp_norm(1.0));
      }
      for (auto* s : {&repro, &amp, &amp_const, &rate, &rate_spread, &l1}) add_nonempty(rep, std::move(*s));
    }
  }
}

}  // namespace

SweepReport run_green_diagnostics(const ExperimentConfig& config) {
  config.validate();
  SweepReport rep("green", config);
  append_green(rep, config);
  append_superapprox(rep, config);
  append_delta(rep, config);
  rep.finalize();
  return rep;
}

SweepReport run_superapprox_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepReport rep("superapprox", config);
  append_superapprox(rep, config);
  rep.finalize();
  return rep;
}

SweepReport run_delta_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepReport rep("delta", config);
  append_delta(rep, config);
  rep.finalize();
  return rep;
}

Json catalogue_json() {
  const Polygon square = Polygon::unit_square();
  Json out = Json::array();
  for (const auto& e : catalogue()) {
    const CoefficientPtr a = make_sample(e.name, e.defaults, square);
    Json j;
    j["name"] = e.name;
    j["regularity"] = e.regularity_tag;
    j["description"] = e.description;
    j["params"] = Json::object();
    for (const auto& [k, v] : e.defaults) j["params"][k] = v;
    j["lambda_unit_square"] = a->lambda;
    j["alpha"] = number(a->alpha);
    j["alpha_sup"] = number(a->alpha_sup);
    out.push_back(j);
  }
  return out;
}

}  // namespace pfem
