#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chpeakon/collision_continuation.hpp"
#include "chpeakon/errors.hpp"
#include "chpeakon/hamiltonian_dynamics.hpp"
#include "chpeakon/initial_approximation.hpp"
#include "chpeakon/io.hpp"
#include "chpeakon/peakon_field.hpp"
#include "chpeakon/transport_metric.hpp"

namespace chpeakon {

/// The multipeakon a config's initial datum stands for.
inline MultipeakonState resolve_initial(const io::InitialData& d, double alpha, unsigned threads = 1) {
  if (d.state) return *d.state;
  const bool table = d.profile.size() > 4 && d.profile.substr(d.profile.size() - 4) == ".csv";
  const SampledFunction f =
      table ? load_tabulated_csv(d.profile, alpha, d.rate) : profiles::by_name(d.profile, alpha);
  return approximate_to_tolerance(f, d.eps, threads).g;
}

namespace scenario_detail {

inline MultipeakonState initial_u(const io::ScenarioConfig& config) {
  auto u = resolve_initial(config.initial_u, config.alpha, config.threads);
  if (config.perturb_ties) u.peakons.front().q -= 1e-9;
  return u;
}

inline void require_horizon(const io::ScenarioConfig& config, const MultipeakonState& u) {
  if (!(config.t_end > u.t)) throw ConfigError("\"t_end\" must exceed the initial time");
}

}  // namespace scenario_detail

struct ScenarioReport {
  MultipeakonState initial;
  EvolutionResult evolution;
};

/// Full pipeline with diagnostics at every sample; writes trajectory.csv,
/// diagnostics.csv, continuation.csv and collisions.json to `out_dir` when given.
inline ScenarioReport run_scenario(const io::ScenarioConfig& config,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  ScenarioReport report;
  report.initial = scenario_detail::initial_u(config);
  scenario_detail::require_horizon(config, report.initial);
  SamplingOptions sampling;
  sampling.sample_dt = config.sample_dt;
  sampling.alpha = config.alpha;
  sampling.threads = config.threads;
  report.evolution = evolve(report.initial, config.t_end, config.integrator, sampling);
  if (!out_dir) return report;

  std::filesystem::create_directories(*out_dir);
  const std::size_t n = report.initial.size();
  std::vector<std::string> header{"t"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("q_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) header.push_back("p_" + std::to_string(i));
  header.insert(header.end(), {"H", "E", "I_alpha"});
  io::CsvWriter trajectory(*out_dir / "trajectory.csv", header);
  io::CsvWriter diagnostics(*out_dir / "diagnostics.csv",
                            {"t", "H", "E", "I_alpha", "sup_weighted_u", "l1_ux", "K", "sup_weighted_Px",
                             "sup_u_squared"});
  for (const auto& s : report.evolution.samples) {
    const auto& d = *s.diagnostics;
    std::vector<double> row{s.t};
    for (const auto& pk : s.state.peakons) row.push_back(pk.q);
    for (const auto& pk : s.state.peakons) row.push_back(pk.p);
    row.insert(row.end(), {d.hamiltonian, d.energy_h1, d.weighted_energy});
    trajectory.row(row);
    diagnostics.row({s.t, d.hamiltonian, d.energy_h1, d.weighted_energy, d.sup_weighted_u, d.l1_ux, d.sup_weighted_P,
                     d.sup_weighted_Px, d.sup_u_squared});
  }

  std::vector<std::string> cheader{"collision", "t", "z", "w", "eta", "zeta"};
  for (std::size_t i = 1; i + 2 <= n; ++i) cheader.push_back("spectator_q_" + std::to_string(i));
  for (std::size_t i = 1; i + 2 <= n; ++i) cheader.push_back("spectator_p_" + std::to_string(i));
  io::CsvWriter continuation(*out_dir / "continuation.csv", cheader);
  io::Json collisions = io::Json::array();
  for (std::size_t c = 0; c < report.evolution.collisions.size(); ++c) {
    const auto& rec = report.evolution.collisions[c];
    for (const auto& s : rec.continuation.trace) {
      std::vector<double> row{static_cast<double>(c), s.t, s.z, s.w, s.eta, s.zeta};
      for (const auto& pk : s.spectators) row.push_back(pk.q);
      for (const auto& pk : s.spectators) row.push_back(pk.p);
      continuation.row(row);
    }
    auto rescaled = [](const RescaledCollisionState& s) {
      io::Json sp = io::Json::array();
      for (const auto& pk : s.spectators) sp.push_back({{"q", pk.q}, {"p", pk.p}});
      return io::Json{{"t", s.t}, {"z", s.z}, {"w", s.w}, {"eta", s.eta}, {"zeta", s.zeta}, {"spectators", sp}};
    };
    const auto& ev = rec.event;
    io::Json spectators = io::Json::array();
    for (const auto& pk : ev.spectators) spectators.push_back({{"q", pk.q}, {"p", pk.p}});
    collisions.push_back({{"tau", ev.tau},
                          {"pair", {ev.first, ev.first + 1}},
                          {"q_bar", ev.q_bar},
                          {"e_tau", ev.e_tau},
                          {"colliding", {{{"q", ev.pair.first.q}, {"p", ev.pair.first.p}},
                                         {{"q", ev.pair.second.q}, {"p", ev.pair.second.p}}}},
                          {"spectators", spectators},
                          {"collision_time", rec.continuation.collision_time},
                          {"entry", rescaled(rec.continuation.entry)},
                          {"exit", rescaled(rec.continuation.exit)},
                          {"state_after", io::to_json(rec.continuation.state)}});
  }
  io::write_json(*out_dir / "collisions.json", collisions);
  return report;
}

struct StabilityRecord {
  double t = 0.0;
  double j_upper = 0.0;
  double transport_cost = 0.0;
  double mass_mismatch = 0.0;
  double l1 = 0.0;
  double growth_rate_fit = 0.0;  ///< c in J(t) <= J(0) e^{c t}, shared by all records of a run
};

struct StabilityReport {
  std::vector<StabilityRecord> records;
  double growth_rate = 0.0;
  std::vector<TransportPlan> plans;  ///< best plan at each sample
};

/// Least-squares slope of log(J(t) / J(0)) against t through the origin, using only
/// samples with J > 1e-10. Zero when nothing qualifies.
inline double fit_growth_rate(const std::vector<double>& t, const std::vector<double>& j) {
  if (j.empty() || !(j.front() > 1e-10)) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(j[i] > 1e-10)) continue;
    const double dt = t[i] - t.front();
    num += dt * std::log(j[i] / j.front());
    den += dt * dt;
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Moves every knot (x, y) along the flows of u and v over one sample interval
/// (Heun's method on x' = u(t, x)), then re-anchors the ends on the diagonal.
/// Returns nothing when the result is not a valid plan.
inline std::optional<TransportPlan> advect_plan(const TransportPlan& plan, const MultipeakonState& u0,
                                                const MultipeakonState& u1, const MultipeakonState& v0,
                                                const MultipeakonState& v1) {
  if (plan.knots.size() < 3) return std::nullopt;
  const double dt = u1.t - u0.t;
  const PeakonField fu0(u0), fu1(u1), fv0(v0), fv1(v1);
  auto heun = [dt](const PeakonField& a, const PeakonField& b, double x) {
    const double k1 = a.u(x);
    return x + 0.5 * dt * (k1 + b.u(x + dt * k1));
  };
  // knots that characteristics squeeze together are merged
  TransportPlan out;
  for (std::size_t k = 1; k + 1 < plan.knots.size(); ++k) {
    const auto [x, y] = plan.knots[k];
    const std::pair moved{heun(fu0, fu1, x), heun(fv0, fv1, y)};
    if (!out.knots.empty() && (moved.first - out.knots.back().first < 1e-6 ||
                               moved.second - out.knots.back().second < 1e-6)) {
      continue;
    }
    out.knots.push_back(moved);
  }
  const auto [lo, hi] = metric_detail::hull(u1.positions(), v1.positions());
  double first = lo, last = hi;
  for (const auto& [x, y] : out.knots) {
    first = std::min({first, x, y});
    last = std::max({last, x, y});
  }
  out.knots.insert(out.knots.begin(), {first - 1.0, first - 1.0});
  out.knots.emplace_back(last + 1.0, last + 1.0);
  try {
    out.validate();
  } catch (const DomainError&) {
    return std::nullopt;
  }
  return out;
}

/// J(u(t), v(t)) upper bounds along two collision-free solutions.
inline StabilityReport run_stability(const io::ScenarioConfig& config,
                                     const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  if (!config.initial_v) throw ConfigError("a stability run needs \"initial_v\"");
  const auto u0 = scenario_detail::initial_u(config);
  const auto v0 = resolve_initial(*config.initial_v, config.alpha, config.threads);
  if (u0.t != v0.t) throw ConfigError("initial_u and initial_v must start at the same time");
  scenario_detail::require_horizon(config, u0);

  SamplingOptions sampling;
  sampling.sample_dt = config.sample_dt;
  sampling.origin = u0.t;
  auto run = [&](const MultipeakonState& s, const char* name) {
    auto sim = simulate(s, config.t_end, config.integrator, sampling);
    if (sim.collision) {
      throw CollisionDuringStabilityRun(std::string(name) + " reaches a collision at t = " +
                                        std::to_string(sim.collision->tau) + "; the estimate only covers "
                                        "collision-free intervals");
    }
    return sim.samples;
  };
  const auto us = run(u0, "u");
  const auto vs = run(v0, "v");
  if (us.size() != vs.size()) throw Error("u and v were sampled at different times");

  StabilityReport report;
  std::vector<double> ts, js;
  for (std::size_t i = 0; i < us.size(); ++i) {
    MinimizeOptions opts;
    opts.budget = config.metric_budget;
    opts.seed = config.seed;
    opts.threads = config.threads;
    if (!report.plans.empty()) {
      opts.extra_candidates.push_back(report.plans.back());
      if (auto moved = advect_plan(report.plans.back(), us[i - 1].state, us[i].state, vs[i - 1].state, vs[i].state)) {
        opts.extra_candidates.push_back(std::move(*moved));
      }
    }
    auto best = minimize_j(us[i].state, vs[i].state, opts);
    StabilityRecord rec;
    rec.t = us[i].t;
    rec.j_upper = best.evaluation.j_value;
    rec.transport_cost = best.evaluation.transport_cost;
    rec.mass_mismatch = best.evaluation.mass_mismatch;
    rec.l1 = l1_distance(us[i].state, vs[i].state);
    report.records.push_back(rec);
    report.plans.push_back(std::move(best.plan));
    ts.push_back(rec.t);
    js.push_back(rec.j_upper);
  }
  report.growth_rate = fit_growth_rate(ts, js);
  for (auto& rec : report.records) rec.growth_rate_fit = report.growth_rate;

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    io::CsvWriter csv(*out_dir / "stability.csv",
                      {"t", "j_upper", "transport_cost", "mass_mismatch", "l1", "growth_rate_fit", "gronwall_bound"});
    const double j0 = report.records.front().j_upper;
    for (const auto& r : report.records) {
      csv.row({r.t, r.j_upper, r.transport_cost, r.mass_mismatch, r.l1, r.growth_rate_fit,
               j0 * std::exp(r.growth_rate_fit * (r.t - ts.front()))});
    }
  }
  return report;
}

struct BoundRow {
  double t = 0.0;
  std::string quantity;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  ///< bound - value; a violation when negative
};

struct BoundsReport {
  std::vector<BoundRow> rows;
  bool all_hold() const {
    for (const auto& r : rows) {
      if (r.margin < 0.0) return false;
    }
    return true;
  }
};

/// Checks the a-priori bounds at every sample of the pipeline:
///   weighted_energy  I(t) <= (I(0) + E/2) exp(4 sqrt(E) t / (1 - alpha^2))
///   Px_weighted      sup |P_x| e^{alpha|x|} <= K(0) exp((3 + 2/(1 - alpha^2)) sqrt(E) t), K = sup P e^{alpha|x|}
///   l1_ux            ||u_x||_{L^1} <= 2/alpha + I(t)
///   u_weighted       sup u^2 e^{alpha|x|} <= 2 I(t)
///   u_sup            sup u^2 <= E(t)
/// with E the energy of the initial datum.
inline BoundsReport verify_bounds(const io::ScenarioConfig& config,
                                  const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  const auto scenario = run_scenario(config);
  const auto& samples = scenario.evolution.samples;
  const double alpha = config.alpha;
  const auto& d0 = *samples.front().diagnostics;
  const double E = d0.energy_h1;
  const double I0 = d0.weighted_energy;
  const double K0 = d0.sup_weighted_P;
  const double t0 = samples.front().t;
  const double a2 = 1.0 - alpha * alpha;

  BoundsReport report;
  for (const auto& s : samples) {
    const auto& d = *s.diagnostics;
    const double dt = s.t - t0;
    auto add = [&](const char* name, double value, double bound) {
      report.rows.push_back({s.t, name, value, bound, bound - value});
    };
    add("weighted_energy", d.weighted_energy, (I0 + 0.5 * E) * std::exp(4.0 * std::sqrt(E) * dt / a2));
    add("Px_weighted", d.sup_weighted_Px, K0 * std::exp((3.0 + 2.0 / a2) * std::sqrt(E) * dt));
    add("l1_ux", d.l1_ux, 2.0 / alpha + d.weighted_energy);
    add("u_weighted", d.sup_weighted_u, 2.0 * d.weighted_energy);
    add("u_sup", d.sup_u_squared, d.energy_h1);
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    io::CsvWriter csv(*out_dir / "bounds.csv", {"t", "quantity", "value", "bound", "margin"});
    for (const auto& r : report.rows) csv.row({io::format(r.t), r.quantity}, {r.value, r.bound, r.margin});
  }
  return report;
}

}  // namespace chpeakon
