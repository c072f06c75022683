#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "chpeakon/stability.hpp"

using namespace chpeakon;

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kConfig = 2;

io::ScenarioConfig config_from(const std::string& path) { return io::parse_config(io::json_argument(path)); }

int simulate_cmd(const std::string& config_path, const std::string& out) {
  auto config = config_from(config_path);
  const std::filesystem::path dir = out.empty() ? config.outputs : out;
  const auto report = run_scenario(config, dir);
  std::cout << "samples," << report.evolution.samples.size() << "\ncollisions," << report.evolution.collisions.size()
            << "\nfinal_t," << io::format(report.evolution.final_state.t) << '\n';
  return kOk;
}

int approximate_cmd(const std::string& profile, double eps, double alpha, unsigned threads, const std::string& out) {
  if (!(eps > 0.0)) throw ConfigError("--eps must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  const bool table = profile.size() > 4 && profile.substr(profile.size() - 4) == ".csv";
  const SampledFunction f = table ? load_tabulated_csv(profile, alpha) : profiles::by_name(profile, alpha);
  const auto r = approximate_to_tolerance(f, eps, threads);
  std::cout << "h1_error,weighted_energy_g,R_eps,N,mollifier_width\n"
            << io::format(r.h1_error) << ',' << io::format(r.weighted_energy_g) << ',' << io::format(r.R_eps) << ','
            << r.N << ',' << io::format(r.mollifier_width) << '\n';
  if (!out.empty()) io::write_json(out, io::to_json(r.g));
  return kOk;
}

int distance_cmd(const std::string& u_arg, const std::string& v_arg, std::size_t budget, std::uint64_t seed,
                 unsigned threads) {
  const auto u = io::state_from_json(io::json_argument(u_arg));
  const auto v = io::state_from_json(io::json_argument(v_arg));
  MinimizeOptions opts;
  opts.budget = budget;
  opts.seed = seed;
  opts.threads = threads;
  const auto r = minimize_j(u, v, opts);
  std::cout << "j_value,transport_cost,mass_mismatch,l1,h1\n"
            << io::format(r.evaluation.j_value) << ',' << io::format(r.evaluation.transport_cost) << ','
            << io::format(r.evaluation.mass_mismatch) << ',' << io::format(l1_distance(u, v)) << ','
            << io::format(h1_distance(u, v)) << '\n';
  return kOk;
}

int stability_cmd(const std::string& config_path) {
  const auto config = config_from(config_path);
  const auto report = run_stability(config, std::filesystem::path(config.outputs));
  std::cout << "t,j_upper,l1,growth_rate_fit\n";
  for (const auto& r : report.records) {
    std::cout << io::format(r.t) << ',' << io::format(r.j_upper) << ',' << io::format(r.l1) << ','
              << io::format(r.growth_rate_fit) << '\n';
  }
  return kOk;
}

int verify_bounds_cmd(const std::string& config_path) {
  const auto config = config_from(config_path);
  const auto report = verify_bounds(config, std::filesystem::path(config.outputs));
  std::size_t violations = 0;
  for (const auto& r : report.rows) {
    if (r.margin >= 0.0) continue;
    ++violations;
    std::cerr << "BoundViolation t=" << io::format(r.t) << ' ' << r.quantity << " value=" << io::format(r.value)
              << " bound=" << io::format(r.bound) << '\n';
  }
  std::cout << "rows," << report.rows.size() << "\nviolations," << violations << '\n';
  return violations == 0 ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camassa-Holm multipeakon solver and stability experiments"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string config, out, profile, u_arg, v_arg;
  double eps = 0.0, alpha = 0.5;
  std::size_t budget = 8;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "run a scenario with collision continuation");
  sim->add_option("--config", config, "scenario JSON file")->required();
  sim->add_option("--out", out, "output directory (defaults to the config's \"outputs\")");

  auto* approx = app.add_subcommand("approximate", "approximate a profile by a multipeakon in H1");
  approx->add_option("--profile", profile, "peakon, gaussian, bump or an (x,f,f_x) CSV table")->required();
  approx->add_option("--eps", eps, "H1 tolerance")->required();
  approx->add_option("--alpha", alpha, "decay exponent in (0,1)");
  approx->add_option("--out", out, "write the multipeakon as JSON here");

  auto* dist = app.add_subcommand("distance", "upper bound on J(u, v)");
  dist->add_option("--u", u_arg, "state JSON (file or inline)")->required();
  dist->add_option("--v", v_arg, "state JSON (file or inline)")->required();
  dist->add_option("--budget", budget, "refinement sweeps");
  dist->add_option("--seed", seed, "RNG seed");

  auto* stab = app.add_subcommand("stability", "track J(u(t), v(t)) for two solutions");
  stab->add_option("--config", config, "scenario JSON with initial_v")->required();

  auto* bounds = app.add_subcommand("verify-bounds", "check the a-priori bounds along a trajectory");
  bounds->add_option("--config", config, "scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return simulate_cmd(config, out);
    if (*approx) return approximate_cmd(profile, eps, alpha, threads, out);
    if (*dist) return distance_cmd(u_arg, v_arg, budget, seed, threads);
    if (*stab) return stability_cmd(config);
    if (*bounds) return verify_bounds_cmd(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
