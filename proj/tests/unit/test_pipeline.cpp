#include "gbar/error.hpp"
#include "gbar/export.hpp"
#include "gbar/pipeline.hpp"
#include "gbar/scenarios.hpp"

#include <doctest.h>

using namespace gbar;

namespace {

std::string stable_text(EvaluationReport r) {
    r.build_s = r.solve_s = 0.0;
    return report_text(r) + report_csv_row(r);
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("3x3 room end to end") {
    const PipelineResult r = run_pipeline(scenarios::sc1(3), {.mc_runs = 20000, .threads = 2});
    CHECK(r.report.pg_value == doctest::Approx(0.8323).epsilon(0.0005));
    CHECK(r.report.certified_value == doctest::Approx(r.report.pg_value).epsilon(1e-6));
    CHECK(r.report.mdp_bound == doctest::Approx(0.83226).epsilon(1e-4));
    CHECK(r.report.mc_estimate >= 0.0);
    CHECK(r.simulation.runs == 20000);
    CHECK(r.report.memory_states == r.strategy.memory_size());
    CHECK(r.pomdp.has_value());
}

TEST_CASE("pipeline results are deterministic") {
    Scenario hidden = scenarios::empty_room(5, 4);
    hidden.obstacles = {{2, 1}, {2, 2}};
    hidden.view_range = 2;
    const PipelineOptions o{.mc_runs = 5000, .seed = 9, .threads = 3};
    const PipelineResult a = run_pipeline(hidden, o);
    PipelineOptions other = o;
    other.threads = 1;
    const PipelineResult b = run_pipeline(hidden, other);
    CHECK(stable_text(a.report) == stable_text(b.report));
    CHECK(emit_explicit(a.game) == emit_explicit(b.game));
    CHECK(emit_strategy(a.strategy) == emit_strategy(b.strategy));
    CHECK(a.simulation.successes == b.simulation.successes);
}

TEST_CASE("scenario digest") {
    const std::string d = scenario_digest(scenarios::sc1(3));
    CHECK(d.size() == 16);
    CHECK(d == scenario_digest(parse_scenario(serialize_scenario(scenarios::sc1(3)))));
    CHECK(d != scenario_digest(scenarios::sc1(4)));
}

TEST_CASE("threshold decision uses the certified value") {
    PipelineResult r;
    r.report.pg_value = 0.6;
    CHECK(r.meets(0.6));
    CHECK_FALSE(r.meets(0.7));
    r.report.certified_value = 0.8;
    CHECK(r.meets(0.7));
    CHECK_FALSE(r.meets(0.81));
}

TEST_CASE("sandwich on small scenarios") {
    for (Refinement ref : {Refinement::None, Refinement::OneStep, Refinement::Regions})
        for (const Scenario& s : {scenarios::sc1(4), scenarios::sc2(7), scenarios::sc5(8)}) {
            CAPTURE(s.name);
            const PipelineResult r = run_pipeline(s, {.refinement = ref});
            CHECK(r.report.pg_value <= r.report.certified_value + 1e-6);
            CHECK(r.report.certified_value <= r.report.mdp_bound + 1e-6);
        }
}

TEST_CASE("room values grow with the room") {
    double last = 0.0;
    for (int n = 3; n <= 6; ++n) {
        const double v = run_pipeline(scenarios::sc1(n), {.certify = false, .mdp_bound = false}).report.pg_value;
        CHECK(v >= last - 1e-9);
        last = v;
    }
}

TEST_CASE("region selection") {
    const Scenario s = scenarios::sc5(8);
    CHECK(partition_for(s, {}).size() == s.regions.size());
    Scenario plain = scenarios::sc1(5);
    CHECK(partition_for(plain, {}).size() == 2);
    PipelineOptions o;
    o.regions = {GridMap(plain).free_cells()};
    CHECK(partition_for(plain, o).size() == 1);
    o.regions = {{{0, 0}}};
    CHECK_THROWS_AS(partition_for(plain, o), Error);
}

}
