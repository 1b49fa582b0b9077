#include "hrcn/allocator.hpp"
#include "hrcn/harness.hpp"
#include "hrcn/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
    std::string scenario = HRCN_DEFAULT_SCENARIO;
    std::uint64_t seed = 0;
    std::size_t trials = 100;
    std::string out;
    unsigned threads = 0;
    bool open_loop = false;
    bool random_unprojected = false;
};

std::string default_output_dir() {
    const char* env = std::getenv("HRCN_OUTPUT_DIR");
    return env && *env ? env : "results";
}

hrcn::ExperimentConfig experiment_config(const CommonOptions& o) {
    hrcn::ExperimentConfig cfg;
    cfg.trials = o.trials;
    cfg.master_seed = o.seed;
    cfg.threads = o.threads;
    cfg.closed_loop = !o.open_loop;
    cfg.random_projected = !o.random_unprojected;
    return cfg;
}

int run_solve(const CommonOptions& o, std::size_t interval) {
    const hrcn::Scenario scenario = hrcn::load_scenario(o.scenario);
    if (interval < 1 || interval > scenario.grid.num_intervals) {
        throw hrcn::ValidationError("--interval must lie in 1.." + std::to_string(scenario.grid.num_intervals));
    }
    const std::size_t k = interval - 1;
    const hrcn::MeasurementSchedule schedule = hrcn::build_schedule(scenario);
    const auto priors = hrcn::initial_priors(scenario, k);
    const hrcn::AllocationProblem problem(hrcn::IntervalModel(scenario, schedule, k), priors);
    const hrcn::AllocationResult r = hrcn::adam_solve(problem);
    const auto& layout = problem.model().layout();

    std::cout << "interval " << interval << ": " << r.iterations << " iterations, "
              << (r.converged ? "converged" : "iteration cap reached") << "\n";
    std::cout << std::setprecision(10);
    for (Eigen::Index idx = 0; idx < r.z.size(); ++idx) {
        std::cout << "  " << std::left << std::setw(10) << layout.label(idx) << r.z[idx] << "\n";
    }
    std::cout << "g " << r.g << "\n";
    try {
        std::cout << "g_uniform " << hrcn::objective_g(problem, hrcn::baseline_uniform(problem.model())) << "\n";
    } catch (const hrcn::InfeasibleError& e) {
        std::cout << "g_uniform n/a (" << e.certificate() << " not met by the even split)\n";
    }
    for (std::size_t j = 0; j < scenario.comm.num_links; ++j) {
        std::cout << "throughput_j" << (j + 1) << " " << hrcn::throughput_r(problem.model(), j, r.z) << " (floor "
                  << scenario.comm.floor(j, k) << ")\n";
    }
    return 0;
}

void print_summary(const hrcn::ExperimentResult& r) {
    std::cout << "run " << r.run_id << ", " << r.trials << " trials\n";
    std::cout << std::left << std::setw(11) << "policy" << std::setw(16) << "average_rmse" << "g per interval\n";
    for (const auto& s : r.series) {
        std::cout << std::setw(11) << hrcn::to_string(s.policy) << std::setw(16) << hrcn::format_double(s.average_rmse);
        for (double g : s.g) std::cout << ' ' << std::setprecision(6) << g;
        std::cout << "\n";
    }
}

int run_experiment(const CommonOptions& o, const std::vector<std::string>& policies) {
    const hrcn::Scenario scenario = hrcn::load_scenario(o.scenario);
    hrcn::ExperimentConfig cfg = experiment_config(o);
    cfg.policies.clear();
    for (const auto& p : policies) cfg.policies.push_back(hrcn::policy_from_string(p));
    const hrcn::ExperimentResult r = hrcn::compare_allocations(scenario, cfg);
    const std::string dir = o.out.empty() ? default_output_dir() : o.out;
    hrcn::write_result(r, dir);
    print_summary(r);
    std::cout << "wrote " << dir << "/results.csv, manifest.json, trace.jsonl\n";
    return 0;
}

int run_sweep(const CommonOptions& o, const std::string& param, double from, double to, std::size_t steps,
              std::size_t interval) {
    const hrcn::Scenario scenario = hrcn::load_scenario(o.scenario);
    if (steps < 1) throw hrcn::ValidationError("--steps must be at least 1");
    if (interval < 1 || interval > scenario.grid.num_intervals) {
        throw hrcn::ValidationError("--interval must lie in 1.." + std::to_string(scenario.grid.num_intervals));
    }
    std::vector<double> values;
    for (std::size_t n = 0; n < steps; ++n) {
        values.push_back(steps == 1 ? from : from + (to - from) * static_cast<double>(n) / static_cast<double>(steps - 1));
    }
    const hrcn::SweepParam p = hrcn::sweep_param_from_string(param);
    const auto points = hrcn::sweep(scenario, p, values, interval - 1);
    const std::string csv = hrcn::sweep_csv(p, points);
    const std::string dir = o.out.empty() ? default_output_dir() : o.out;
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "sweep.csv", std::ios::binary) << csv;
    std::cout << csv;
    for (const auto& pt : points) {
        if (!pt.feasible) std::cerr << param << "=" << pt.value << " infeasible: " << pt.diagnostic << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radar-communication resource allocation and tracking experiments"};
    app.require_subcommand(1);

    CommonOptions o;
    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--out", o.out, "Output directory (default: $HRCN_OUTPUT_DIR or ./results)");
    };

    auto* solve = app.add_subcommand("solve", "Optimize one interval from the initial tracks; print z and g");
    add_common(solve);
    std::size_t interval = 1;
    solve->add_option("--interval", interval, "Fusion interval, 1-based");

    std::vector<std::string> policies{"optimized", "uniform", "random"};
    auto add_trials = [&o](CLI::App* sub) {
        sub->add_option("--trials", o.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
        sub->add_option("--threads", o.threads, "Worker threads (0: all cores)");
        sub->add_flag("--open-loop", o.open_loop, "Plan around the noise-free initial-track propagation");
        sub->add_flag("--random-unprojected", o.random_unprojected, "Do not project random allocations");
    };

    auto* simulate = app.add_subcommand("simulate", "Full run of one policy over all intervals");
    add_common(simulate);
    add_trials(simulate);
    std::string policy = "optimized";
    simulate->add_option("--policy", policy, "optimized, uniform or random")
        ->check(CLI::IsMember({"optimized", "uniform", "random"}));

    auto* compare = app.add_subcommand("compare", "Compare allocation policies");
    add_common(compare);
    add_trials(compare);
    compare->add_option("--policies", policies, "Subset of optimized, uniform, random")
        ->check(CLI::IsMember({"optimized", "uniform", "random"}));

    auto* sweep = app.add_subcommand("sweep", "Vary a throughput floor or budget and record the optimum");
    add_common(sweep);
    std::string param = "epsilon";
    double from = 0.0;
    double to = 8.0;
    std::size_t steps = 9;
    sweep->add_option("--param", param, "epsilon, mmr-budget, par-budget or bs-budget")
        ->check(CLI::IsMember({"epsilon", "mmr-budget", "par-budget", "bs-budget"}));
    sweep->add_option("--from", from, "First value");
    sweep->add_option("--to", to, "Last value");
    sweep->add_option("--steps", steps, "Number of points");
    sweep->add_option("--interval", interval, "Fusion interval, 1-based");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*solve) return run_solve(o, interval);
        if (*simulate) return run_experiment(o, {policy});
        if (*compare) return run_experiment(o, policies);
        if (*sweep) return run_sweep(o, param, from, to, steps, interval);
    } catch (const hrcn::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\ncertificate: " << e.certificate() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
