// Command-line driver: solve the system problem, run one of the three
// mechanisms, compute efficiency bounds and parameter sweeps.
//
// Exit codes: 0 success, 2 input error, 3 capability refusal,
// 4 numerical non-convergence.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dauction/dauction.hpp"
#include "dauction/io.hpp"

namespace {

using namespace dauction;
using io::json;

enum ExitCode { kOk = 0, kInput = 2, kCapability = 3, kConvergence = 4 };

struct Options {
  std::string mechanism;
  std::string path;
  int rounds = 0;
  int samples = 64;
  int starts = 16;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<double> gain_tolerance;
  std::string sweep_csv;
  std::optional<int> worst_case;
  double family_c = 1.0;
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int count = 0;
  std::size_t user = 0;
  std::string command_line;
};

io::ToleranceProfile tolerances(const Options& o) {
  io::ToleranceProfile t = io::tolerance_profile_from_env();
  if (o.tolerance) t.verification = *o.tolerance;
  if (o.gain_tolerance) t.deviation_gain = *o.gain_tolerance;
  return t;
}

json allocation_json(const Allocation& a) {
  return {{"x", io::matrix_json(a.x)}, {"y", io::matrix_json(a.y)}};
}

json ratio_json(const Scenario& s, const Matrix& x) {
  try {
    const EfficiencyResult e = efficiency(s, x);
    return {{"equilibrium_utility", e.stackelberg_utility},
            {"social_utility", e.social_utility},
            {"ratio", e.ratio},
            {"loss", 1.0 - e.ratio}};
  } catch (const UndefinedRatioError& e) {
    return {{"equilibrium_utility", social_utility(s, x)},
            {"social_utility", solve_ml_system(s).utility},
            {"ratio", nullptr},
            {"note", e.what()}};
  }
}

std::vector<CostSpec> link_costs(const Scenario& s) {
  std::vector<CostSpec> costs;
  for (const auto& l : s.links) costs.push_back(l.cost);
  return costs;
}

int emit(io::RunReport report, std::chrono::steady_clock::time_point started, bool ok = true) {
  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cout << report.to_json().dump(2) << "\n";
  return ok ? kOk : kConvergence;
}

int cmd_solve_system(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario s = io::load_scenario(o.path);
  const SystemSolution sol = solve_ml_system(s);
  io::RunReport r{o.command_line, io::scenario_digest(s)};
  r.payload = {{"allocation", allocation_json(sol.allocation)},
               {"lambda", io::vector_json(sol.duals.lambda)},
               {"mu", io::matrix_json(sol.duals.mu)},
               {"utility", sol.utility},
               {"price", sol.price},
               {"degenerate", sol.degenerate}};
  r.residuals = {{"user_stationarity", sol.residuals.user_stationarity},
                 {"link_stationarity", sol.residuals.link_stationarity},
                 {"capacity_slackness", sol.residuals.capacity_slackness},
                 {"matching_slackness", sol.residuals.matching_slackness},
                 {"primal_feasibility", sol.residuals.primal_feasibility},
                 {"dual_feasibility", sol.residuals.dual_feasibility}};
  return emit(std::move(r), started);
}

int run_ptm(const Options& o, const Scenario& s, io::RunReport r,
            std::chrono::steady_clock::time_point started) {
  const io::ToleranceProfile t = tolerances(o);
  const CompetitiveEquilibrium ce = construct_competitive_equilibrium(s, t.verification);
  r.payload = {{"mechanism", "ptm"},
               {"bids", {{"p", io::matrix_json(ce.bids.p)}, {"beta", io::matrix_json(ce.bids.beta)}}},
               {"prices", {{"lambda", io::vector_json(ce.prices.lambda)},
                           {"mu", io::matrix_json(ce.prices.mu)}}},
               {"allocation", allocation_json(ce.allocation)},
               {"c_hat", io::vector_json(ce.c_hat)},
               {"valid", ce.report.valid()},
               {"efficiency", ratio_json(s, ce.allocation.x)}};
  for (const auto& [name, value] : ce.report.residuals) r.residuals[name] = value;
  r.residuals["tolerance"] = ce.report.tolerance;
  const bool ok = ce.report.valid();
  if (!ok) std::cerr << "error: competitive-equilibrium residuals exceed tolerance\n";
  return emit(std::move(r), started, ok);
}

BidProfile random_profile(const Scenario& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(0.0, 1.0);
  BidProfile b = BidProfile::zeros(s.num_users(), s.num_links());
  for (std::size_t m = 0; m < s.num_users(); ++m)
    for (std::size_t l = 0; l < s.num_links(); ++l) {
      b.p(m, l) = draw(rng);
      b.beta(m, l) = draw(rng);
    }
  return b;
}

int run_pam(const Options& o, const Scenario& s, io::RunReport r,
            std::chrono::steady_clock::time_point started) {
  const io::ToleranceProfile t = tolerances(o);
  const BidProfile zero = BidProfile::zeros(s.num_users(), s.num_links());
  const NashReport nash = verify_pam_nash(zero, s, o.samples, t.deviation_gain);
  const Allocation a = ml_network_allocation(zero, ml_network_prices(zero, s));
  r.payload = {{"mechanism", "pam"},
               {"equilibrium", "zero profile"},
               {"certified", nash.certified},
               {"deviations_checked", nash.deviations_checked},
               {"allocation", allocation_json(a)},
               {"efficiency", ratio_json(s, a.x)}};
  if (nash.improving) r.payload["improving_deviation"] = nash.improving->describe();
  if (o.rounds > 0) {
    const std::uint64_t seed = o.seed.value_or(s.seed.value_or(0));
    json steps = json::array();
    for (const auto& step : pam_best_response_dynamics(s, random_profile(s, seed), o.rounds))
      steps.push_back({{"round", step.round},
                       {"utility", step.utility},
                       {"max_bid", step.max_bid},
                       {"user_payoffs", io::vector_json(step.user_payoffs)},
                       {"link_payoffs", io::vector_json(step.link_payoffs)}});
    r.payload["trajectory"] = steps;
    r.payload["trajectory_seed"] = seed;
  }
  r.residuals = {{"max_deviation_gain", nash.max_gain}, {"gain_tolerance", t.deviation_gain}};
  if (!nash.certified) std::cerr << "error: zero profile failed certification\n";
  return emit(std::move(r), started, nash.certified);
}

int run_pall(const Options& o, const Scenario& s, io::RunReport r,
             std::chrono::steady_clock::time_point started) {
  const io::ToleranceProfile t = tolerances(o);
  StackelbergEquilibrium eq;
  if (s.all_linear()) {
    eq = ml_pall_linear_closed_form(s);
  } else {
    if (s.num_links() != 1)
      throw CapabilityError(
          "link-as-leader search with non-linear pay-offs is limited to one link; "
          "several links only have a best-response evaluator");
    StackelbergSearchOptions opts;
    opts.starts = o.starts;
    opts.seed = o.seed.value_or(s.seed.value_or(0));
    eq = pall_link_optimize(s, opts);
  }
  const StackelbergCheck check = verify_stackelberg(eq, s, o.samples, t.verification);
  json eff = ratio_json(s, eq.allocation.x);
  if (s.all_linear()) {
    try {
      const EfficiencyResult b = efficiency_bound(link_costs(s));
      eff["bound"] = b.bound;
      eff["c_at_infimum"] = b.c_at_infimum;
    } catch (const RangeError& e) {
      eff["bound"] = nullptr;
      eff["bound_note"] = e.what();
    }
  }
  r.payload = {{"mechanism", "pall"},
               {"method", eq.closed_form ? "closed_form" : "numeric_search"},
               {"beta_star", io::matrix_json(eq.beta_star)},
               {"p_star", io::matrix_json(eq.p_star)},
               {"allocation", allocation_json(eq.allocation)},
               {"link_payoffs", io::vector_json(eq.link_payoffs)},
               {"user_payoffs", io::vector_json(eq.user_payoffs)},
               {"utility", eq.utility},
               {"incumbents", eq.incumbents.size()},
               {"valid", check.valid},
               {"efficiency", eff}};
  r.residuals = {{"user_foc", check.user_foc},
                 {"link_deviation_gain", check.link_gain},
                 {"stationarity", eq.stationarity},
                 {"tolerance", t.verification}};
  if (!check.valid) std::cerr << "error: Stackelberg verification failed\n";
  return emit(std::move(r), started, check.valid);
}

int cmd_run(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario s = io::load_scenario(o.path);
  io::RunReport r{o.command_line, io::scenario_digest(s)};
  if (o.mechanism == "ptm") return run_ptm(o, s, std::move(r), started);
  if (o.mechanism == "pam") return run_pam(o, s, std::move(r), started);
  return run_pall(o, s, std::move(r), started);
}

void write_curve(const std::string& target, const std::vector<std::pair<double, double>>& rows) {
  std::ostringstream out;
  out << "c,ratio\n";
  for (const auto& [c, h] : rows) out << io::csv_number(c) << "," << io::csv_number(h) << "\n";
  if (target == "-") {
    std::cout << out.str();
    return;
  }
  std::ofstream f(target);
  if (!f) throw InputError(target + ": cannot write sweep file");
  f << out.str();
}

int cmd_efficiency_bound(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<CostSpec> costs;
  if (o.worst_case) {
    costs.push_back(worst_case_family(o.family_c, *o.worst_case));
  } else {
    if (o.path.empty()) throw InputError("efficiency-bound needs a costs file or --worst-case");
    costs = io::load_costs(o.path);
  }
  io::RunReport r{o.command_line, io::sha256_hex(io::serialize_costs(costs))};
  if (o.worst_case) {
    // The family is tabulated only up to 2c, so the ratio is reported at its
    // design slope rather than minimised over the probe grid.
    const double h = bound_ratio_at(costs, o.family_c);
    r.payload = {{"family_index", *o.worst_case}, {"c", o.family_c}, {"bound", h},
                 {"c_at_infimum", o.family_c}};
    if (!o.sweep_csv.empty()) write_curve(o.sweep_csv, {{o.family_c, h}});
  } else {
    const EfficiencyResult b = efficiency_bound(costs);
    r.payload = {{"bound", b.bound}, {"c_at_infimum", b.c_at_infimum}};
    bool same_degree = true;
    for (const auto& c : costs)
      same_degree = same_degree && c.is_polynomial() && c.degree() == costs.front().degree();
    if (same_degree) r.payload["closed_form"] = polynomial_bound_closed_form(costs.front().degree());
    if (!o.sweep_csv.empty()) write_curve(o.sweep_csv, bound_curve(costs));
  }
  if (o.sweep_csv == "-") return kOk;
  return emit(std::move(r), started);
}

// One sweep row: the bound over the template's link costs, the polynomial
// closed form when it applies, and the link-as-leader efficiency when every
// user is linear and every link unbounded.
std::string sweep_row(const std::string& param, double value, const Scenario& s) {
  const auto costs = link_costs(s);
  std::string row = param + "," + io::csv_number(value);
  row += "," + io::csv_number(efficiency_bound(costs).bound);
  bool same_degree = true;
  for (const auto& c : costs)
    same_degree = same_degree && c.is_polynomial() && c.degree() == costs.front().degree();
  row += ",";
  if (same_degree) row += io::csv_number(polynomial_bound_closed_form(costs.front().degree()));
  row += ",";
  if (s.all_linear() && s.all_unbounded())
    row += io::csv_number(efficiency(s, ml_pall_linear_closed_form(s).allocation.x).ratio);
  row += "," + io::csv_number(solve_ml_system(s).utility);
  return row;
}

Scenario with_parameter(Scenario s, const std::string& param, double value, std::size_t user) {
  if (param == "n" || param == "b") {
    for (auto& l : s.links) {
      if (!l.cost.is_polynomial())
        throw InputError("sweep over " + param + " needs polynomial link costs");
      l.cost = param == "n" ? CostSpec::polynomial(l.cost.coefficient(), static_cast<int>(value))
                            : CostSpec::polynomial(value, l.cost.degree());
    }
  } else if (param == "c_m") {
    if (user >= s.num_users()) throw InputError("--user index out of range");
    const PayoffSpec& u = s.users[user];
    s.users[user] = u.is_linear() ? PayoffSpec::linear(value) : PayoffSpec::shifted_log(value);
  } else {
    const Link first = s.links.front();
    s.links.assign(static_cast<std::size_t>(value), first);
  }
  return s;
}

int cmd_sweep(const Options& o) {
  const Scenario base = io::load_scenario(o.path);
  std::vector<double> grid;
  if (o.param == "n" || o.param == "L") {
    const long lo = std::lround(o.from);
    const long hi = std::lround(o.to);
    if (o.param == "n" && lo < 2 && lo <= hi) throw InputError("--from must be >= 2 for n");
    if (o.param == "L" && lo < 1 && lo <= hi) throw InputError("--from must be >= 1 for L");
    for (long k = lo; k <= hi; ++k) grid.push_back(static_cast<double>(k));
  } else {
    for (int i = 0; i < o.count; ++i)
      grid.push_back(o.count == 1 ? o.from : o.from + (o.to - o.from) * i / (o.count - 1));
  }
  std::cout << "parameter,value,bound,closed_form,pall_efficiency,social_utility\n";
  for (double v : grid) std::cout << sweep_row(o.param, v, with_parameter(base, o.param, v, o.user)) << "\n";
  return kOk;
}

int cmd_canonicalize(const Options& o) {
  std::cout << io::serialize_scenario(io::load_scenario(o.path));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-auction rate market: solvers, mechanisms and efficiency bounds"};
  app.require_subcommand(1);
  Options o;
  for (int i = 0; i < argc; ++i) o.command_line += (i ? " " : "") + std::string(argv[i]);

  auto* solve = app.add_subcommand("solve-system", "Social optimum with dual prices");
  solve->add_option("scenario", o.path, "Scenario JSON file")->required();

  auto* run = app.add_subcommand("run", "Run a mechanism on a scenario");
  run->add_option("mechanism", o.mechanism, "ptm, pam or pall")
      ->required()
      ->check(CLI::IsMember({"ptm", "pam", "pall"}));
  run->add_option("scenario", o.path, "Scenario JSON file")->required();
  run->add_option("--rounds", o.rounds, "pam: best-response rounds from a random start");
  run->add_option("--samples", o.samples, "Deviation samples per coordinate")
      ->check(CLI::PositiveNumber);
  run->add_option("--starts", o.starts, "pall: multistart count")->check(CLI::PositiveNumber);
  run->add_option("--seed", o.seed, "Random seed (defaults to the scenario seed, then 0)");
  run->add_option("--tolerance", o.tolerance, "Verification tolerance");
  run->add_option("--gain-tolerance", o.gain_tolerance, "pam: deviation gain tolerance");

  auto* bound = app.add_subcommand("efficiency-bound", "Worst-case efficiency over linear users");
  bound->add_option("costs", o.path, "Costs or scenario JSON file");
  bound->add_option("--sweep-c", o.sweep_csv, "Write the (c, ratio) curve as CSV ('-' = stdout)");
  bound->add_option("--worst-case", o.worst_case, "Use the pathological family with this index")
      ->check(CLI::PositiveNumber);
  bound->add_option("--family-c", o.family_c, "Design slope of the pathological family")
      ->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep over a scenario template (CSV)");
  sweep->add_option("template", o.path, "Scenario JSON file")->required();
  sweep->add_option("--param", o.param, "n, b, c_m or L")
      ->required()
      ->check(CLI::IsMember({"n", "b", "c_m", "L"}));
  sweep->add_option("--from", o.from, "First grid value")->required();
  sweep->add_option("--to", o.to, "Last grid value")->required();
  sweep->add_option("--count", o.count, "Grid points for b and c_m")->check(CLI::NonNegativeNumber);
  sweep->add_option("--user", o.user, "User index for c_m");

  auto* canon = app.add_subcommand("canonicalize", "Print a scenario in canonical form");
  canon->add_option("scenario", o.path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*solve) return cmd_solve_system(o);
    if (*run) return cmd_run(o);
    if (*bound) return cmd_efficiency_bound(o);
    if (*sweep) return cmd_sweep(o);
    if (*canon) return cmd_canonicalize(o);
  } catch (const CapabilityError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kCapability;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const UndefinedRatioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}
