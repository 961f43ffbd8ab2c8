#include "gbar/error.hpp"
#include "gbar/scenarios.hpp"
#include "gbar/world.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace gbar;

namespace {

StateId find_state(const ExplicitModel& m, std::vector<std::int32_t> row) {
    for (StateId s = 0; s < m.num_states(); ++s) {
        const auto v = m.valuation(s);
        if (std::equal(v.begin(), v.end(), row.begin(), row.end())) return s;
    }
    FAIL("state not found");
    return 0;
}

std::vector<Scenario> corpus() {
    Scenario hidden = scenarios::empty_room(5, 4);
    hidden.obstacles = {{2, 1}, {2, 2}};
    hidden.view_range = 2;
    return {scenarios::sc1(2), scenarios::sc1(3), scenarios::sc1(4), hidden, scenarios::sc2(7), scenarios::sc5(8)};
}

} // namespace

TEST_SUITE("worldmodel") {

TEST_CASE("robot turn offers three Dirac actions") {
    // Robot facing the opponent one cell away; the goal lies beyond it.
    Scenario s = scenarios::empty_room(3, 1);
    s.opponent_starts = {{1, 0}};
    s.goal_cells = {{2, 0}};
    const ExplicitModel m = build_world_mdp(World(s));
    REQUIRE(m.choice_count(m.initial) == 3);
    for (ChoiceId c = m.first_choice(m.initial); c < m.end_choice(m.initial); ++c) {
        REQUIRE(m.successors(c).size() == 1);
        CHECK(m.successors(c)[0].probability == 1.0);
    }
    CHECK(m.action_name(m.first_choice(m.initial)) == "forward");
}

TEST_CASE("corner opponent moves to its two neighbours with probability one half") {
    const Scenario s = scenarios::sc1(3);
    const ExplicitModel m = build_world_mdp(World(s));
    // Robot turned right at the start: opponent still in the corner at (2,2), its turn.
    const StateId st = find_state(m, {0, 0, static_cast<int>(Direction::South), 2, 2, 1});
    REQUIRE(m.choice_count(st) == 1);
    const auto succ = m.successors(m.first_choice(st));
    REQUIRE(succ.size() == 2);
    for (const auto& t : succ) CHECK(t.probability == 0.5);
    std::vector<std::pair<int, int>> cells;
    for (const auto& t : succ) cells.emplace_back(m.valuation(t.target)[3], m.valuation(t.target)[4]);
    std::sort(cells.begin(), cells.end());
    CHECK(cells == std::vector<std::pair<int, int>>{{1, 2}, {2, 1}});
}

TEST_CASE("reachable state counts match the breadth-first oracle") {
    for (const Scenario& s : corpus()) {
        CAPTURE(s.name);
        CHECK(build_world_mdp(World(s)).num_states() == oracle::world_state_count(s));
    }
}

TEST_CASE("structural invariants of world models") {
    for (const Scenario& s : corpus()) {
        CAPTURE(s.name);
        const World w(s);
        const ExplicitModel m = build_world_pomdp(w);
        CHECK_NOTHROW(validate(m));
        const auto reach = reachable_states(m);
        CHECK(std::all_of(reach.begin(), reach.end(), [](bool b) { return b; }));
        const std::size_t turn = m.variables.size() - 1;
        std::map<std::uint64_t, std::vector<std::int32_t>> seen;
        for (StateId st = 0; st < m.num_states(); ++st) {
            const auto row = m.valuation(st);
            for (ChoiceId c = m.first_choice(st); c < m.end_choice(st); ++c) {
                double sum = 0;
                for (const auto& t : m.successors(c)) {
                    sum += t.probability;
                    if (!m.labels[st]) CHECK(m.valuation(t.target)[turn] == (row[turn] + 1) % 2);
                }
                CHECK(std::abs(sum - 1.0) <= 1e-12);
            }
            // Equal observations agree on robot, turn, and the opponent whenever it is visible.
            const bool visible = w.visibility.visible(Cell{row[0], row[1]}, Cell{row[3], row[4]});
            std::vector<std::int32_t> key{row[0], row[1], row[2], row[5], visible ? row[3] : -1, visible ? row[4] : -1};
            auto [it, inserted] = seen.try_emplace(m.observations[st], key);
            if (!inserted) CHECK(it->second == key);
        }
    }
}

TEST_CASE("observations") {
    Scenario s = scenarios::empty_room(6, 3);
    s.obstacles = {{2, 1}};
    const World w(s);
    const ObservationCodec codec(w);
    const PositionId robot = w.robot_position({1, 1}, Direction::East);
    // In range with clear sight.
    CHECK(w.sees(robot, 1, w.opponent_position({0, 2})));
    CHECK(w.sees(robot, 1, w.opponent_position({4, 2})) == oracle::line_of_sight(s, {1, 1}, {4, 2}));
    // Directly behind the obstacle.
    CHECK_FALSE(w.sees(robot, 1, w.opponent_position({3, 1})));
    // Chebyshev distance 4 with range 3.
    CHECK_FALSE(w.sees(robot, 1, w.opponent_position({5, 0})));

    const Observation o{robot, {-1}, 1};
    CHECK(codec.decode(codec.encode(o)) == o);
    const Observation v{robot, {w.opponent_position({3, 0})}, 0};
    CHECK(codec.decode(codec.encode(v)) == v);
    CHECK(codec.encode(robot, -1, 1) == codec.encode(o));
}

TEST_CASE("labels: collision is bad, goal wins ties") {
    const Scenario s = scenarios::sc1(3);
    ModelBuilder b(ModelKind::MDP, {"rx", "ry", "rdir", "o1x", "o1y", "turn"});
    const std::vector<std::vector<std::int32_t>> rows = {{1, 1, 0, 1, 1, 0}, {2, 2, 0, 0, 0, 1}, {2, 2, 0, 2, 2, 0}, {0, 0, 0, 1, 0, 1}};
    for (const auto& r : rows) {
        b.add_state(Player::One, 0, r);
        b.add_choice("loop");
        b.add_transition(static_cast<StateId>(b.num_states() - 1), 1.0);
    }
    const ExplicitModel m = label_states(b.finish(), s);
    CHECK(m.labels == std::vector<std::uint8_t>{label::bad, label::goal, label::goal, 0});
}

TEST_CASE("policies must stay on enabled movements") {
    const Scenario s = scenarios::sc1(3);
    World w(s);
    w.policies[0] = [](PositionId, PositionId) { return MovementDistribution{{0, 1.0}}; }; // always north
    try {
        build_world_mdp(w);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.module() == "worldmodel");
        CHECK(std::string(e.what()).find("disabled movement") != std::string::npos);
    }
}

TEST_CASE("two opponents build a world model with three turns") {
    Scenario s = scenarios::sc1(3);
    s.opponent_starts = {{2, 2}, {2, 0}};
    const ExplicitModel m = build_world_pomdp(World(s));
    CHECK(m.variables.size() == 8);
    CHECK_NOTHROW(validate(m));
}

TEST_CASE("full product materialises every tuple") {
    const Scenario s = scenarios::sc1(2);
    const ExplicitModel full = build_world_mdp(World(s), {.reachable_only = false});
    CHECK(full.num_states() == 16 * 4 * 2);
    CHECK(full.valuation(full.initial)[0] == 0);
    CHECK(full.valuation(full.initial)[3] == 1);
    CHECK_NOTHROW(validate(full));
}

}
