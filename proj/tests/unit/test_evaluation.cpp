#include "gbar/abstraction.hpp"
#include "gbar/error.hpp"
#include "gbar/evaluation.hpp"
#include "gbar/scenarios.hpp"
#include "gbar/world.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace gbar;

namespace {

struct Solved {
    ExplicitModel pomdp;
    ExplicitModel game;
    ValueResult values;
    ObservationStrategy strategy;
};

Solved solve(const Scenario& s, Refinement r = Refinement::OneStep) {
    const World w(s);
    Solved out{build_world_pomdp(w), build_world_pg(w, r), {}, {}};
    out.values = solve_pg(out.game, {}, {.tolerance = 1e-10});
    out.strategy = lift_strategy(out.game, out.values.strategy);
    return out;
}

/// Product of POMDP and automaton, explored independently of certify().
double product_oracle(const ExplicitModel& pomdp, const ObservationStrategy& st) {
    std::map<std::pair<StateId, std::uint32_t>, std::size_t> index;
    std::vector<std::pair<StateId, std::uint32_t>> order;
    oracle::Chain c;
    auto id = [&](StateId s, std::uint32_t m) {
        auto [it, fresh] = index.try_emplace({s, m}, order.size());
        if (fresh) {
            order.emplace_back(s, m);
            c.rows.emplace_back();
            c.goal.push_back(pomdp.is_goal(s));
            c.bad.push_back(pomdp.is_bad(s) && !pomdp.is_goal(s));
        }
        return it->second;
    };
    id(pomdp.initial, st.initial);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto [s, m] = order[i];
        if (c.goal[i] || c.bad[i]) {
            c.rows[i].emplace_back(i, 1.0);
            continue;
        }
        ChoiceId chosen = pomdp.end_choice(s);
        for (ChoiceId k = pomdp.first_choice(s); k < pomdp.end_choice(s); ++k)
            if (pomdp.action_name(k) == st.action[m]) chosen = k;
        REQUIRE(chosen != pomdp.end_choice(s));
        for (const auto& t : pomdp.successors(chosen)) {
            const auto next = st.next(m, pomdp.observations[t.target]);
            REQUIRE(next.has_value());
            const std::size_t j = id(t.target, *next);
            c.rows[i].emplace_back(j, t.probability);
        }
    }
    return oracle::reach_avoid(c)[0];
}

Scenario all_cameras(Scenario s) {
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) s.cameras.push_back({x, y});
    return s;
}

} // namespace

TEST_SUITE("evaluation") {

TEST_CASE("certified value equals the MDP bound when everything is observed") {
    for (int n : {3, 4}) {
        const Scenario s = all_cameras(scenarios::sc1(n));
        const Solved r = solve(s);
        const double bound = upper_bound(build_world_mdp(World(s)));
        CHECK(std::abs(certify(r.pomdp, r.strategy) - bound) <= 1e-8);
        CHECK(std::abs(r.values.initial_value(r.game) - bound) <= 1e-8);
    }
}

TEST_CASE("certification agrees with an independent product construction") {
    Scenario hidden = scenarios::empty_room(5, 4);
    hidden.obstacles = {{2, 1}, {2, 2}};
    hidden.view_range = 2;
    for (const Scenario& s : {scenarios::sc1(2), scenarios::sc1(5), hidden, scenarios::sc2(7)}) {
        CAPTURE(s.name);
        for (Refinement ref : {Refinement::None, Refinement::OneStep}) {
            const Solved r = solve(s, ref);
            const double cert = certify(r.pomdp, r.strategy);
            CHECK(std::abs(cert - product_oracle(r.pomdp, r.strategy)) <= 1e-9);
            CHECK(cert >= r.values.initial_value(r.game) - 1e-9);
        }
    }
}

TEST_CASE("certification chain is a valid Markov chain") {
    const Solved r = solve(scenarios::sc1(4));
    const ExplicitModel mc = certification_chain(r.pomdp, r.strategy);
    CHECK(mc.kind == ModelKind::MC);
    CHECK(mc.variables == std::vector<std::string>{"state", "mem"});
    for (StateId s = 0; s < mc.num_states(); ++s) {
        REQUIRE(mc.choice_count(s) == 1);
        double sum = 0;
        for (const auto& t : mc.successors(mc.first_choice(s))) sum += t.probability;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("simulation of a sure win and of a walled-off goal") {
    Scenario win = scenarios::empty_room(3, 1);
    win.goal_cells = {{1, 0}};
    const Solved w = solve(win);
    const SimulationResult a = simulate(w.pomdp, w.strategy, {.runs = 2000, .seed = 3});
    CHECK(a.successes == 2000);
    CHECK(a.estimate == 1.0);

    Scenario walled = scenarios::empty_room(5, 1);
    walled.obstacles = {{2, 0}};
    walled.opponent_starts = {{3, 0}};
    walled.goal_cells = {{4, 0}};
    const Solved l = solve(walled);
    CHECK(l.values.initial_value(l.game) == 0.0);
    const SimulationResult b = simulate(l.pomdp, l.strategy, {.runs = 500, .horizon = 20, .seed = 3});
    CHECK(b.successes == 0);
    CHECK(b.truncated == 500);
    CHECK(b.estimate == 0.0);
}

TEST_CASE("simulation is independent of the thread count and reproducible") {
    const Solved r = solve(scenarios::sc1(4));
    const SimulationResult one = simulate(r.pomdp, r.strategy, {.runs = 20000, .seed = 11, .threads = 1});
    const SimulationResult four = simulate(r.pomdp, r.strategy, {.runs = 20000, .seed = 11, .threads = 4});
    const SimulationResult again = simulate(r.pomdp, r.strategy, {.runs = 20000, .seed = 11, .threads = 4});
    CHECK(one.successes == four.successes);
    CHECK(four.successes == again.successes);
    const double cert = certify(r.pomdp, r.strategy);
    const double sigma = std::sqrt(cert * (1 - cert) / 20000.0);
    CHECK(std::abs(one.estimate - cert) <= 4 * sigma);
    CHECK(one.low <= one.estimate);
    CHECK(one.high >= one.estimate);
}

TEST_CASE("Wilson interval") {
    auto [lo, hi] = wilson_interval(50, 100);
    CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
    auto [lo0, hi0] = wilson_interval(0, 100);
    CHECK(lo0 == 0.0);
    CHECK(hi0 == doctest::Approx(0.0370).epsilon(1e-2));
    auto [lo1, hi1] = wilson_interval(100, 100);
    CHECK(hi1 == doctest::Approx(1.0));
    CHECK(lo1 < 1.0);
}

TEST_CASE("MDP upper bounds") {
    CHECK(upper_bound(build_world_mdp(World(scenarios::sc1(3)))) == doctest::Approx(0.83226).epsilon(1e-4));
    CHECK(upper_bound(build_world_mdp(World(scenarios::sc1(6)))) == doctest::Approx(0.9970).epsilon(1e-3));
}

TEST_CASE("reports") {
    EvaluationReport r;
    r.scenario = "room-3x3";
    r.states = 10;
    r.choices = 12;
    r.transitions = 20;
    r.pg_value = 0.5;
    r.mdp_bound = 0.75;
    CHECK(report_csv_header() ==
          "scenario,states,choices,transitions,pg_value,certified_value,mdp_bound,mc_estimate,build_s,solve_s");
    CHECK(report_csv_row(r) == "room-3x3,10,12,20,0.500000,,0.750000,,0.000,0.000");
    CHECK(report_text(r).find("pg value        0.500000") != std::string::npos);
}

TEST_CASE("certification errors") {
    const Solved r = solve(scenarios::sc1(3));
    CHECK_THROWS_WITH_AS(certify(build_world_mdp(World(scenarios::sc1(3))), r.strategy),
                         doctest::Contains("observations"), Error);
    ObservationStrategy broken = r.strategy;
    for (auto& row : broken.update) row.clear();
    CHECK_THROWS_WITH_AS(certify(r.pomdp, broken), doctest::Contains("memory update undefined"), Error);
    ObservationStrategy wrong = r.strategy;
    wrong.action[wrong.initial] = "fly";
    CHECK_THROWS_AS(certify(r.pomdp, wrong), Error);
    CHECK_THROWS_AS(certify(r.pomdp, ObservationStrategy{}), Error);
}

}
