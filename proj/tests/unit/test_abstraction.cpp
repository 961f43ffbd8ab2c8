#include "gbar/abstraction.hpp"
#include "gbar/error.hpp"
#include "gbar/evaluation.hpp"
#include "gbar/scenarios.hpp"
#include "gbar/world.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace gbar;

namespace {

double value_of(const ExplicitModel& g) { return solve_pg(g, {}, {.tolerance = 1e-9}).initial_value(g); }

double pg_value(const Scenario& s, Refinement r, const RegionPartition* p = nullptr) {
    return value_of(build_world_pg(World(s), r, p));
}

/// Room with a wall across the middle pierced by a single gap: the opponent
/// must pass the gap to meet the robot.
Scenario bottleneck() {
    Scenario s = scenarios::empty_room(5, 5);
    s.name = "bottleneck";
    for (int x = 0; x < 5; ++x)
        if (x != 2) s.obstacles.push_back({x, 2});
    s.view_range = 1;
    return s;
}

std::vector<Scenario> corpus() {
    Scenario hidden = scenarios::empty_room(5, 4);
    hidden.obstacles = {{2, 1}, {2, 2}};
    hidden.view_range = 2;
    return {scenarios::sc1(3), scenarios::sc1(4), scenarios::sc1(5), hidden, scenarios::sc2(7), bottleneck()};
}

} // namespace

TEST_SUITE("abstraction") {

TEST_CASE("3x3 room game value") {
    CHECK(pg_value(scenarios::sc1(3), Refinement::OneStep) == doctest::Approx(0.8323).epsilon(0.0005));
    CHECK(pg_value(scenarios::sc1(3), Refinement::None) == doctest::Approx(0.8323).epsilon(0.0005));
}

TEST_CASE("generic abstraction of the full product matches the direct unrefined game") {
    for (const Scenario& s : {scenarios::sc1(3), scenarios::sc1(4), corpus()[3]}) {
        CAPTURE(s.name);
        const World w(s);
        const ExplicitModel direct = build_world_pg(w, Refinement::None);
        const ExplicitModel generic = build_abstract_pg(build_world_pomdp(w, {.reachable_only = false}));
        CHECK(direct.num_states() == generic.num_states());
        CHECK(std::abs(value_of(direct) - value_of(generic)) <= 1e-9);
    }
}

TEST_CASE("generic abstraction of the reachable POMDP is at least as good as the direct game") {
    for (const Scenario& s : corpus()) {
        CAPTURE(s.name);
        const World w(s);
        const double generic = value_of(build_abstract_pg(build_world_pomdp(w)));
        CHECK(generic >= value_of(build_world_pg(w, Refinement::None)) - 1e-9);
        CHECK(generic <= upper_bound(build_world_mdp(w)) + 1e-9);
    }
}

TEST_CASE("selector shapes") {
    const World w(corpus()[3]);
    const ExplicitModel g = build_world_pg(w, Refinement::OneStep);
    REQUIRE(g.variables[5] == "mem");
    for (StateId s = 0; s < g.num_states(); ++s) {
        if (g.player[s] != Player::Two) continue;
        const auto v = g.valuation(s);
        const bool known = v[3] >= 0;
        if (known) {
            CHECK(g.choice_count(s) == 1);
            continue;
        }
        // Far selectors offer exactly the cells hidden from the robot.
        const Cell robot{v[0], v[1]};
        std::set<std::string> expected, offered;
        for (Cell c : w.grid.free_cells())
            if (!w.visibility.visible(robot, c)) expected.insert("o_" + std::to_string(c.x) + "_" + std::to_string(c.y));
        for (ChoiceId c = g.first_choice(s); c < g.end_choice(s); ++c) offered.insert(g.action_name(c));
        CHECK(offered == expected);
    }
}

TEST_CASE("one-step refinement remembers the last seen position after moving away") {
    // Corridor; the robot walks West towards the goal and loses sight of the
    // opponent standing behind it.
    Scenario s = scenarios::empty_room(5, 1);
    s.robot_start = {2, 0};
    s.robot_start_orientation = Direction::West;
    s.opponent_starts = {{3, 0}};
    s.goal_cells = {{0, 0}};
    s.view_range = 1;
    const ExplicitModel g = build_world_pg(World(s), Refinement::OneStep);
    int last_seen = 0;
    for (StateId st = 0; st < g.num_states(); ++st) {
        const auto v = g.valuation(st);
        if (g.player[st] != Player::Two || v[5] != 1) continue;
        ++last_seen;
        CHECK(v[6] == 1);
        CHECK(g.choice_count(st) == 1);
    }
    CHECK(last_seen > 0);
    const ExplicitModel none = build_world_pg(World(s), Refinement::None);
    for (StateId st = 0; st < none.num_states(); ++st) CHECK(none.valuation(st)[5] == 0);
}

TEST_CASE("refinement never lowers the value") {
    for (const Scenario& s : corpus()) {
        CAPTURE(s.name);
        const RegionPartition bands = row_band_partition(s, 1);
        const double none = pg_value(s, Refinement::None);
        const double one = pg_value(s, Refinement::OneStep);
        const double regions = pg_value(s, Refinement::Regions, &bands);
        CHECK(one >= none - 1e-9);
        CHECK(regions >= one - 1e-9);
        CHECK(regions <= upper_bound(build_world_mdp(World(s))) + 1e-9);
    }
}

TEST_CASE("a single region block carries no information beyond one-step memory") {
    for (const Scenario& s : corpus()) {
        CAPTURE(s.name);
        const RegionPartition one = single_block_partition(s);
        CHECK(std::abs(pg_value(s, Refinement::Regions, &one) - pg_value(s, Refinement::OneStep)) <= 1e-9);
    }
}

TEST_CASE("singleton regions rule out impossible opponent cells") {
    // 3x1 strip, blind robot in the middle, opponent starting on the right.
    Scenario s = scenarios::empty_room(3, 1);
    s.robot_start = {1, 0};
    s.opponent_starts = {{2, 0}};
    s.goal_cells = {{0, 0}};
    s.view_range = 0;
    s.robot_start_orientation = Direction::North;
    const RegionPartition p = singleton_partition(s);
    CHECK(p.size() == 3);
    const ExplicitModel g = build_world_pg(World(s), Refinement::Regions, &p);
    bool seen = false;
    for (StateId st = 0; st < g.num_states(); ++st) {
        const auto v = g.valuation(st);
        if (g.player[st] != Player::Two || v[3] >= 0 || v[0] != 1 || v[6] != 0) continue;
        if (g.choice_count(st) == 1 && g.action_name(g.first_choice(st)) == "o_2_0") seen = true;
    }
    CHECK(seen);
    // Without region memory the opponent may be anywhere hidden, including the goal side.
    const ExplicitModel none = build_world_pg(World(s), Refinement::None);
    CHECK(value_of(g) >= value_of(none));
}

TEST_CASE("lifted strategy follows the game") {
    const World w(scenarios::sc1(4));
    for (Refinement r : {Refinement::None, Refinement::OneStep}) {
        const ExplicitModel g = build_world_pg(w, r);
        const ValueResult v = solve_pg(g);
        const ObservationStrategy st = lift_strategy(g, v.strategy);
        std::size_t p1 = 0;
        for (StateId s = 0; s < g.num_states(); ++s) p1 += g.player[s] == Player::One;
        CHECK(st.memory_size() == p1);
        CHECK(st.observation[st.initial] == g.observations[g.initial]);
        for (std::size_t m = 0; m < st.memory_size(); ++m) {
            CHECK(std::is_sorted(st.update[m].begin(), st.update[m].end()));
            for (const auto& [obs, next] : st.update[m]) {
                CHECK(st.observation[next] == obs);
                CHECK(st.next(static_cast<std::uint32_t>(m), obs) == next);
            }
        }
    }
}

TEST_CASE("region memory distinguishes states with equal observations") {
    const Scenario s = scenarios::sc5(12);
    const RegionPartition p = row_band_partition(s, 4);
    const ExplicitModel g = build_world_pg(World(s), Refinement::Regions, &p);
    const ObservationStrategy st = lift_strategy(g, solve_pg(g).strategy);
    std::set<std::uint64_t> distinct(st.observation.begin(), st.observation.end());
    CHECK(distinct.size() < st.memory_size());
}

TEST_CASE("lifting rejects games that are not observation based") {
    ModelBuilder b(ModelKind::PG);
    b.add_state(Player::One, 0, {}, 0);
    b.add_choice("go");
    b.add_transition(1, 1.0);
    b.add_state(Player::Two);
    b.add_choice("a");
    b.add_transition(2, 1.0);
    b.add_choice("b");
    b.add_transition(3, 1.0);
    b.add_state(Player::One, label::goal, {}, 5);
    b.add_choice("loop");
    b.add_transition(2, 1.0);
    b.add_state(Player::One, label::goal, {}, 5);
    b.add_choice("loop");
    b.add_transition(3, 1.0);
    const ExplicitModel g = b.finish();
    CHECK_THROWS_WITH_AS(lift_strategy(g, solve_pg(g).strategy), doctest::Contains("not observation-based"), Error);

    const ExplicitModel room = build_world_pg(World(scenarios::sc1(3)), Refinement::OneStep);
    Strategy empty;
    CHECK_THROWS_WITH_AS(lift_strategy(room, empty), doctest::Contains("strategy undefined"), Error);
}

TEST_CASE("collision hotspots") {
    SUBCASE("certain success has no hotspots") {
        Scenario s = scenarios::empty_room(3, 1);
        s.goal_cells = {{1, 0}};
        const ExplicitModel g = build_world_pg(World(s), Refinement::OneStep);
        const ValueResult v = solve_pg(g);
        CHECK(v.initial_value(g) == 1.0);
        CHECK(collision_hotspots(g, v).empty());
    }
    SUBCASE("masses agree with a dense solve of the induced chain") {
        const ExplicitModel g = build_world_pg(World(bottleneck()), Refinement::OneStep);
        const ValueResult v = solve_pg(g, {}, {.tolerance = 1e-10});
        const auto hot = collision_hotspots(g, v);
        REQUIRE(!hot.empty());
        for (std::size_t i = 1; i < hot.size(); ++i) CHECK(hot[i - 1].second >= hot[i].second);
        const oracle::Chain base = oracle::chain_of(induced_mc(g, v.strategy));
        double total = 0.0;
        for (const auto& [cell, mass] : hot) {
            oracle::Chain c = base;
            for (StateId s = 0; s < g.num_states(); ++s) {
                const auto row = g.valuation(s);
                const bool here = base.bad[s] && row[0] == cell.x && row[1] == cell.y;
                c.goal[s] = here;
                c.bad[s] = !here && (base.bad[s] || base.goal[s]);
            }
            CHECK(std::abs(oracle::reach_avoid(c)[g.initial] - mass) <= 1e-6);
            total += mass;
        }
        oracle::Chain all = base;
        all.goal = base.bad;
        all.bad = base.goal;
        CHECK(std::abs(oracle::reach_avoid(all)[g.initial] - total) <= 1e-6);
    }
    SUBCASE("the tunnel dominates the two-room layout") {
        const ExplicitModel g = build_world_pg(World(scenarios::sc4(0)), Refinement::OneStep);
        const auto hot = collision_hotspots(g, solve_pg(g));
        REQUIRE(!hot.empty());
        CHECK(hot.front().first.y == 4);
        CHECK(hot.front().first.x >= 7);
        CHECK(hot.front().first.x <= 12);
    }
}

TEST_CASE("partitions") {
    const Scenario s = bottleneck();
    const RegionPartition bands = row_band_partition(s, 2);
    CHECK(bands.size() == 3);
    CHECK(bands.adjacency[0] == std::vector<int>{1});
    CHECK(bands.adjacency[1] == std::vector<int>{0, 2});
    CHECK(singleton_partition(s).size() == 21);
    CHECK(single_block_partition(s).adjacency[0].empty());
    CHECK_THROWS_WITH_AS(make_partition(s, {{{0, 0}}}), doctest::Contains("invalid region partition"), Error);
    CHECK_THROWS_WITH_AS(make_partition(s, {}), doctest::Contains("invalid region partition"), Error);
    CHECK_THROWS_AS(row_band_partition(s, 0), Error);
    CHECK_THROWS_WITH_AS(build_world_pg(World(s), Refinement::Regions), doctest::Contains("needs a partition"), Error);
}

TEST_CASE("refinement names") {
    for (Refinement r : {Refinement::None, Refinement::OneStep, Refinement::Regions})
        CHECK(parse_refinement(to_string(r)) == r);
    CHECK_THROWS_AS(parse_refinement("two-step"), Error);
}

TEST_CASE("more than one opponent is rejected") {
    Scenario s = scenarios::sc1(3);
    s.opponent_starts.push_back({0, 2});
    const World w(s);
    CHECK_THROWS_WITH_AS(build_world_pg(w, Refinement::OneStep), doctest::Contains("exactly one opponent"), Error);
    CHECK_THROWS_WITH_AS(build_abstract_pg(build_world_pomdp(w)), doctest::Contains("exactly one opponent"), Error);
}

}
