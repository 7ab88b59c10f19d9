#pragma once

#include "pfem/greens.hpp"
#include "pfem/norms.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pfem {

using Json = nlohmann::ordered_json;

struct CoefficientSpec {
  std::string name = "identity";
  std::map<std::string, double> params;

  /// name[k=v,...] with shortest round-trip numbers; used as the report key.
  std::string tag() const;
};

/// Configuration of every sweep. Unknown keys are rejected when parsed from JSON.
struct ExperimentConfig {
  std::vector<Vec2> domain;  // empty: unit square
  std::vector<CoefficientSpec> coefficients{CoefficientSpec{}};
  std::vector<int> degrees{1};
  /// Refinement levels as 1/target_h; must be dyadic multiples of the first entry.
  std::vector<int> levels{8, 16, 32};
  int reference_level = 64;
  std::vector<std::array<double, 2>> pq{{{2.0, 2.0}}};
  double T = 1.0;
  double grading = 2.0;
  int time_steps = 200;
  double C_star = 10.0;
  int samples = 20;
  std::uint64_t seed = 20240601;
  double threshold = 3.0;
  std::vector<Vec2> x0{Vec2(0.5, 0.5)};
  /// Levels (1/target_h) of the superapproximation sweep, its disk and cut-off width.
  std::vector<int> superapprox_levels{32, 64, 128};
  double superapprox_radius = 0.5;
  double superapprox_d = 0.45;
  int superapprox_samples = 3;
  /// Minimum slopes for the convergence study.
  double slope_error = 1.8;
  double slope_bound = 0.9;
  /// "sine" (sin pi x sin pi y, unit square only) or "bubble" (product of edge distances).
  std::string manufactured = "sine";
  std::size_t dense_cap = kDenseCap;
  unsigned threads = 0;

  Polygon polygon() const;
  void validate() const;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// Deterministic per-(level, sample) random stream.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t level, std::uint64_t sample);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& gen);

struct SeriesCheck {
  std::string quantity;
  std::string coefficient;
  int r = 1;
  double p = 0.0;
  double q = 0.0;
  std::string x0;
  std::vector<int> levels;
  std::vector<double> h;
  std::vector<double> values;
  /// "spread": max/min <= threshold; "max": every value <= threshold; "min": every value >= threshold;
  /// "slope": log-log slope in h >= threshold; "slope_range": |slope - threshold| <= tolerance;
  /// "record": informational only.
  std::string kind = "spread";
  double threshold = 3.0;
  double tolerance = 0.0;
  double statistic = 0.0;
  bool pass = true;
};

/// Collected measurements of one sweep.
class SweepReport {
 public:
  SweepReport(std::string experiment, const ExperimentConfig& config);

  void add_record(Json record);
  SeriesCheck& add_series(SeriesCheck s);
  void add_note(const std::string& note);
  Json& extra() { return extra_; }

  /// Evaluates every series; throws InternalError on any non-finite value.
  void finalize();
  bool pass() const;
  const std::vector<SeriesCheck>& series() const { return series_; }
  const std::string& experiment() const { return experiment_; }
  Json to_json() const;

  /// report.json, one CSV per series (level,h,p,q,value) and one two-column .dat per series.
  void write(const std::string& dir) const;

 private:
  std::string experiment_;
  Json config_;
  std::vector<Json> records_;
  std::vector<SeriesCheck> series_;
  std::vector<std::string> notes_;
  Json extra_ = Json::object();
};

double spread(const std::vector<double>& values);
/// Least-squares slope of log(value) against log(h).
double loglog_slope(const std::vector<double>& h, const std::vector<double>& values);

SweepReport run_mesh_report(const ExperimentConfig& config, const std::string& export_dir = "");
SweepReport run_assembly_report(const ExperimentConfig& config, const std::string& export_dir = "");
SweepReport run_semigroup_sweep(const ExperimentConfig& config);
SweepReport run_maxreg_sweep(const ExperimentConfig& config);
SweepReport run_gradient_maxreg_sweep(const ExperimentConfig& config);
SweepReport run_error_convergence(const ExperimentConfig& config);
SweepReport run_green_diagnostics(const ExperimentConfig& config);
SweepReport run_superapprox_sweep(const ExperimentConfig& config);
SweepReport run_delta_sweep(const ExperimentConfig& config);
Json catalogue_json();

}  // namespace pfem
