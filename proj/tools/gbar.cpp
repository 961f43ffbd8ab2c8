// Command-line front end: solve a scenario, run the benchmark families, or
// replay a stored strategy by simulation.

#include "gbar/error.hpp"
#include "gbar/export.hpp"
#include "gbar/pipeline.hpp"
#include "gbar/scenarios.hpp"
#include "gbar/world.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

using namespace gbar;

namespace {

enum Exit : int {
    kOk = 0,
    kNotEstablished = 1,
    kUsage = 2,
    kIoError = 3,
    kModelError = 4,
};

struct SolveArgs {
    std::string scenario;
    std::string refine = "one-step";
    std::string regions;
    double tol = 1e-6;
    std::optional<double> threshold;
    std::uint64_t runs = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::vector<std::string> exports;
    bool no_certify = false;
    bool no_mdp = false;
    unsigned threads = 0;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create output directory '" + dir + "': " + ec.message());
}

int cmd_solve(const SolveArgs& a) {
    const Scenario scenario = load_scenario(a.scenario);
    PipelineOptions o;
    o.refinement = parse_refinement(a.refine);
    if (!a.regions.empty()) o.regions = parse_regions(read_file(a.regions));
    o.tolerance = a.tol;
    o.threshold = a.threshold;
    o.certify = !a.no_certify;
    o.mdp_bound = !a.no_mdp;
    o.mc_runs = a.runs;
    o.seed = a.seed;
    o.threads = a.threads;
    const PipelineResult result = run_pipeline(scenario, o);

    const std::string text = report_text(result.report);
    std::cout << text;
    if (!a.out.empty()) {
        ensure_dir(a.out);
        const std::string dir = a.out + "/";
        write_file(dir + "report.txt", text);
        write_file(dir + "report.csv", report_csv_header() + "\n" + report_csv_row(result.report) + "\n");
        write_file(dir + "strategy.json", emit_strategy(result.strategy));
        for (const auto& e : a.exports) {
            if (e == "explicit") {
                write_explicit(result.game, dir + "game.explicit");
            } else if (e == "dot") {
                write_file(dir + "game.dot", emit_dot(result.game));
            } else if (e == "external") {
                write_file(dir + "game.prism", emit_prism_pg(result.game));
                const ExplicitModel pomdp = result.pomdp ? *result.pomdp : build_world_pomdp(World(scenario));
                write_file(dir + "pomdp.prism", emit_prism_pomdp(pomdp));
            }
        }
    } else if (!a.exports.empty()) {
        throw Error("cli", "--export needs --out DIR");
    }

    if (a.threshold) {
        const bool safe = result.meets(*a.threshold);
        std::cout << "threshold " << *a.threshold << ": " << (safe ? "p-safe" : "not established") << "\n";
        return safe ? kOk : kNotEstablished;
    }
    return kOk;
}

struct BenchArgs {
    std::string suite;
    std::vector<int> sizes;
    std::vector<int> obstacles{10, 40, 60, 70};
    std::uint64_t seed = 1;
    std::uint64_t runs = 0;
    bool no_certify = false;
    std::string out;
};

std::vector<std::pair<Scenario, Refinement>> bench_rows(const BenchArgs& a) {
    std::vector<std::pair<Scenario, Refinement>> rows;
    auto sizes = [&](std::vector<int> fallback) { return a.sizes.empty() ? fallback : a.sizes; };
    if (a.suite == "sc1") {
        for (int n : sizes({3, 4, 5, 6, 8, 10})) rows.emplace_back(scenarios::sc1(n), Refinement::OneStep);
    } else if (a.suite == "sc2") {
        for (int n : sizes({11, 21})) rows.emplace_back(scenarios::sc2(n), Refinement::OneStep);
    } else if (a.suite == "sc3") {
        for (int k : a.obstacles) rows.emplace_back(scenarios::sc3(k, a.seed), Refinement::OneStep);
    } else if (a.suite == "sc4") {
        for (int c : {0, 2}) rows.emplace_back(scenarios::sc4(c), Refinement::OneStep);
    } else if (a.suite == "sc5") {
        for (int n : sizes({40, 60, 80, 100})) rows.emplace_back(scenarios::sc5(n), Refinement::None);
        for (int n : sizes({40, 60, 80, 100})) rows.emplace_back(scenarios::sc5(n), Refinement::Regions);
    } else {
        throw Error("cli", "unknown benchmark suite '" + a.suite + "' (expected sc1..sc5)");
    }
    return rows;
}

int cmd_bench(const BenchArgs& a) {
    for (int n : a.sizes)
        if (n < 2) throw Error("cli", "invalid size " + std::to_string(n));
    std::ostringstream csv;
    csv << report_csv_header() << "\n";
    std::cout << csv.str() << std::flush;
    for (auto& [scenario, refinement] : bench_rows(a)) {
        PipelineOptions o;
        o.refinement = refinement;
        o.certify = !a.no_certify;
        o.mc_runs = a.runs;
        o.seed = a.seed;
        PipelineResult r = run_pipeline(scenario, o);
        if (refinement == Refinement::Regions) r.report.scenario += "+ref";
        const std::string row = report_csv_row(r.report) + "\n";
        csv << row;
        std::cout << row << std::flush;
    }
    if (!a.out.empty()) write_file(a.out, csv.str());
    return kOk;
}

struct SimulateArgs {
    std::string scenario;
    std::string strategy;
    std::uint64_t runs = 10'000;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 0;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& a) {
    const Scenario scenario = load_scenario(a.scenario);
    const ObservationStrategy strategy = parse_strategy(read_file(a.strategy));
    const ExplicitModel pomdp = build_world_pomdp(World(scenario));
    const SimulationResult r =
        simulate(pomdp, strategy, {.runs = a.runs, .horizon = a.horizon, .seed = a.seed, .threads = a.threads});
    std::printf("runs %llu, goal %llu, truncated %llu\nestimate %.6f  95%% interval [%.6f, %.6f]\n",
                static_cast<unsigned long long>(r.runs), static_cast<unsigned long long>(r.successes),
                static_cast<unsigned long long>(r.truncated), r.estimate, r.low, r.high);
    return kOk;
}

int cmd_generate(const std::string& family, int size, int extra, std::uint64_t seed) {
    Scenario s;
    if (family == "sc1")
        s = scenarios::sc1(size);
    else if (family == "sc2")
        s = scenarios::sc2(size);
    else if (family == "sc3")
        s = scenarios::sc3(extra, seed, size);
    else if (family == "sc4")
        s = scenarios::sc4(extra);
    else if (family == "sc5")
        s = scenarios::sc5(size);
    else
        throw Error("cli", "unknown scenario family '" + family + "'");
    std::cout << serialize_scenario(s) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strategy synthesis for grid worlds with a partially observed opponent"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "build, solve and certify one scenario");
    s->add_option("--scenario", solve.scenario, "scenario JSON file")->required();
    s->add_option("--refine", solve.refine, "history refinement")
        ->check(CLI::IsMember({"none", "one-step", "regions"}));
    s->add_option("--regions", solve.regions, "region partition JSON file");
    s->add_option("--tol", solve.tol, "value iteration tolerance")->check(CLI::PositiveNumber);
    s->add_option("--threshold", solve.threshold, "safety threshold p")->check(CLI::Range(0.0, 1.0));
    s->add_option("--runs", solve.runs, "Monte-Carlo runs (0 = none)");
    s->add_option("--seed", solve.seed, "master seed for simulation");
    s->add_option("--out", solve.out, "output directory");
    s->add_option("--export", solve.exports, "extra exports")
        ->check(CLI::IsMember({"explicit", "dot", "external"}))
        ->delimiter(',');
    s->add_flag("--no-certify", solve.no_certify, "skip certification on the POMDP");
    s->add_flag("--no-mdp", solve.no_mdp, "skip the MDP upper bound");
    s->add_option("--threads", solve.threads, "simulation threads (0 = all cores)");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "run a benchmark family and print CSV");
    b->add_option("suite", bench.suite, "sc1, sc2, sc3, sc4 or sc5")->required();
    b->add_option("--sizes", bench.sizes, "grid sizes (n for sc1/sc2, corridor length for sc5)")->delimiter(',');
    b->add_option("--obstacles", bench.obstacles, "obstacle counts for sc3")->delimiter(',');
    b->add_option("--seed", bench.seed, "layout and simulation seed");
    b->add_option("--runs", bench.runs, "Monte-Carlo runs per row");
    b->add_flag("--no-certify", bench.no_certify, "skip certification");
    b->add_option("--out", bench.out, "also write the CSV to this file");

    SimulateArgs sim;
    auto* m = app.add_subcommand("simulate", "simulate a stored strategy");
    m->add_option("--scenario", sim.scenario, "scenario JSON file")->required();
    m->add_option("--strategy", sim.strategy, "strategy JSON written by solve")->required();
    m->add_option("--runs", sim.runs, "number of runs");
    m->add_option("--seed", sim.seed, "master seed");
    m->add_option("--horizon", sim.horizon, "rounds before a run counts as failure (0 = 100 x (w + h))");
    m->add_option("--threads", sim.threads, "threads (0 = all cores)");

    std::string family;
    int size = 3, extra = 0;
    std::uint64_t gen_seed = 1;
    auto* g = app.add_subcommand("generate", "print a benchmark scenario as JSON");
    g->add_option("family", family, "sc1..sc5")->required();
    g->add_option("--size", size, "grid size or corridor length");
    g->add_option("--extra", extra, "obstacles (sc3) or cameras (sc4)");
    g->add_option("--seed", gen_seed, "layout seed (sc3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (s->parsed()) return cmd_solve(solve);
        if (b->parsed()) return cmd_bench(bench);
        if (m->parsed()) return cmd_simulate(sim);
        if (g->parsed()) return cmd_generate(family, size, extra, gen_seed);
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "] " << e.what() << "\n";
        return e.module() == "io" ? kIoError : kModelError;
    } catch (const std::exception& e) {
        std::cerr << "error [internal] " << e.what() << "\n";
        return kModelError;
    }
    return kUsage;
}
