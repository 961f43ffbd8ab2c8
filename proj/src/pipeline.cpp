#include "gbar/pipeline.hpp"

#include "gbar/world.hpp"

#include <chrono>
#include <cstdio>

namespace gbar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

} // namespace

std::string scenario_digest(const Scenario& scenario) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : serialize_scenario(scenario)) h = (h ^ c) * 1099511628211ull;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RegionPartition partition_for(const Scenario& scenario, const PipelineOptions& options) {
    if (!options.regions.empty()) return make_partition(scenario, options.regions);
    if (!scenario.regions.empty()) return make_partition(scenario, scenario.regions);
    return row_band_partition(scenario, 4);
}

bool PipelineResult::meets(double threshold) const {
    const double v = report.certified_value >= 0 ? report.certified_value : report.pg_value;
    return v >= threshold;
}

PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& options) {
    PipelineResult out;
    EvaluationReport& r = out.report;
    r.scenario = scenario.name.empty() ? "scenario" : scenario.name;
    r.refinement = std::string(to_string(options.refinement));
    r.digest = scenario_digest(scenario);

    auto t0 = Clock::now();
    const World world(scenario);
    std::optional<RegionPartition> partition;
    if (options.refinement == Refinement::Regions) partition = partition_for(scenario, options);
    out.game = build_world_pg(world, options.refinement, partition ? &*partition : nullptr);
    r.build_s = seconds_since(t0);
    r.states = out.game.num_states();
    r.choices = out.game.num_choices();
    r.transitions = out.game.num_transitions();

    t0 = Clock::now();
    Query query;
    query.threshold = options.threshold;
    out.values = solve_pg(out.game, query, {.tolerance = options.tolerance});
    r.solve_s = seconds_since(t0);
    r.pg_value = out.values.initial_value(out.game);
    out.strategy = lift_strategy(out.game, out.values.strategy);
    r.memory_states = out.strategy.memory_size();

    double world_states = 2.0 * static_cast<double>(world.robot.size());
    for (const auto& g : world.opponents) world_states *= static_cast<double>(g.size());
    const bool small_enough = world_states <= static_cast<double>(options.mdp_state_limit);

    if ((options.certify && small_enough) || options.mc_runs > 0) out.pomdp = build_world_pomdp(world);
    if (options.certify && out.pomdp) r.certified_value = certify(*out.pomdp, out.strategy);
    if (options.mdp_bound && small_enough) r.mdp_bound = upper_bound(build_world_mdp(world));
    if (options.mc_runs > 0) {
        out.simulation = simulate(*out.pomdp, out.strategy,
                                  {.runs = options.mc_runs, .seed = options.seed, .threads = options.threads});
        r.mc_estimate = out.simulation.estimate;
        r.mc_half_width = out.simulation.half_width();
    }
    return out;
}

} // namespace gbar
