// Command-line front end for the sweeps. Exit codes: 0 all checks pass, 2 threshold violation, 1 error.
#include "pfem/harness.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

pfem::ExperimentConfig resolve(const Options& o, std::string& out) {
  pfem::ExperimentConfig c;
  out = o.out;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw pfem::InvalidInput("cannot open config " + o.config);
    pfem::Json j = pfem::Json::parse(in, nullptr, true, true);
    // The output directory may live in the config; it is not part of the experiment itself.
    if (j.is_object() && j.contains("out")) {
      if (out == "out") out = j["out"].get<std::string>();
      j.erase("out");
    }
    c = pfem::config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

int finish(const pfem::SweepReport& rep, const std::string& out) {
  rep.write(out);
  for (const auto& s : rep.series()) {
    std::cout << (s.pass ? "PASS " : "FAIL ") << s.quantity << ' ' << s.coefficient << " r=" << s.r;
    if (s.p != 0.0 || s.q != 0.0) std::cout << " p=" << s.p << " q=" << s.q;
    if (!s.x0.empty()) std::cout << " x0=" << s.x0;
    std::cout << ' ' << s.kind << '=' << s.statistic << " (threshold " << s.threshold << ")\n";
  }
  std::cout << "report: " << (std::filesystem::path(out) / "report.json").string() << '\n';
  return rep.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parabolic finite element stability experiments"};
  app.require_subcommand(1);
  // Global flags are accepted after the subcommand as well.
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--seed", opt.seed, "seed for randomized inputs (overrides the config)");

  using Runner = std::function<pfem::SweepReport(const pfem::ExperimentConfig&, const std::string&)>;
  const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
      {"mesh", "build the refinement family, report mesh quality, export meshes",
       [](const auto& c, const auto& out) { return pfem::run_mesh_report(c, out); }},
      {"assemble", "assemble M and A, export triplets, report quadrature perturbation",
       [](const auto& c, const auto& out) { return pfem::run_assembly_report(c, out); }},
      {"semigroup", "L-infinity semigroup stability sweep",
       [](const auto& c, const auto&) { return pfem::run_semigroup_sweep(c); }},
      {"maxreg", "maximal L^p(L^q) regularity sweep",
       [](const auto& c, const auto&) { return pfem::run_maxreg_sweep(c); }},
      {"gradreg", "divergence-form forcing gradient estimate sweep",
       [](const auto& c, const auto&) { return pfem::run_gradient_maxreg_sweep(c); }},
      {"converge", "manufactured-solution error study",
       [](const auto& c, const auto&) { return pfem::run_error_convergence(c); }},
      {"green", "Green's function diagnostics, superapproximation and discrete delta",
       [](const auto& c, const auto&) { return pfem::run_green_diagnostics(c); }},
  };
  std::string chosen;
  Runner runner;
  for (const auto& [name, help, run] : commands) {
    app.add_subcommand(name, help)->callback([&, name = name, run = run] {
      chosen = name;
      runner = run;
    });
  }
  bool catalogue = false;
  app.add_subcommand("catalogue", "list the shipped coefficient samples")->callback([&] { catalogue = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (catalogue) {
      const pfem::Json cat = pfem::catalogue_json();
      std::cout << cat.dump(2) << '\n';
      if (app.count("--out")) {
        std::filesystem::create_directories(opt.out);
        std::ofstream(std::filesystem::path(opt.out) / "catalogue.json") << cat.dump(2) << '\n';
      }
      return 0;
    }
    std::string out;
    const pfem::ExperimentConfig config = resolve(opt, out);
    return finish(runner(config, out), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
