#include "gbar/abstraction.hpp"
#include "gbar/error.hpp"
#include "gbar/export.hpp"
#include "gbar/scenarios.hpp"
#include "gbar/world.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <regex>
#include <sstream>

using namespace gbar;

namespace {

std::size_t count_lines(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
    return n;
}

std::size_t count_matches(const std::string& text, const std::regex& re) {
    return static_cast<std::size_t>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

std::vector<ExplicitModel> models() {
    const World w3(scenarios::sc1(3)), w7(scenarios::sc2(7));
    std::vector<ExplicitModel> out{build_world_mdp(w3),
                                   build_world_pomdp(w3),
                                   build_world_pg(w3, Refinement::OneStep),
                                   build_world_pg(w7, Refinement::None),
                                   build_abstract_pg(build_world_pomdp(w3)),
                                   oracle::to_model(oracle::random_chain(40, 5))};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) out.push_back(oracle::random_game(seed));
    const Scenario s5 = scenarios::sc5(8);
    const RegionPartition p = row_band_partition(s5, 4);
    out.push_back(build_world_pg(World(s5), Refinement::Regions, &p));
    return out;
}

ExplicitModel one_state_mc() {
    ModelBuilder b(ModelKind::MC);
    b.add_state(Player::None, label::goal);
    b.add_choice("loop");
    b.add_transition(0, 1.0);
    return b.finish();
}

} // namespace

TEST_SUITE("export") {

TEST_CASE("explicit format round trip") {
    for (const ExplicitModel& m : models()) {
        const std::string text = emit_explicit(m);
        const ExplicitModel back = parse_explicit(text);
        CHECK(back == m);
        CHECK(emit_explicit(back) == text);
    }
}

TEST_CASE("explicit format of a one-state chain") {
    const std::string text = emit_explicit(one_state_mc());
    CHECK(count_lines(text, "s ") == 1);
    CHECK(count_lines(text, "c ") == 1);
    CHECK(count_lines(text, "t ") == 1);
    CHECK(text.rfind("gbar-explicit 1\nkind mc\n", 0) == 0);
}

TEST_CASE("a reparsed game solves to the same value") {
    const ExplicitModel g = build_world_pg(World(scenarios::sc1(3)), Refinement::OneStep);
    const std::string path = (std::filesystem::temp_directory_path() / "gbar-roundtrip.explicit").string();
    write_explicit(g, path);
    const ExplicitModel back = read_explicit(path);
    std::filesystem::remove(path);
    CHECK(solve_pg(back).initial_value(back) == doctest::Approx(0.8323).epsilon(0.0005));
    CHECK(solve_pg(back).values == solve_pg(g).values);
}

TEST_CASE("explicit format errors") {
    CHECK_THROWS_WITH_AS(parse_explicit("gbar-explicit 2\n"), doctest::Contains("line 1"), Error);
    CHECK_THROWS_AS(parse_explicit("gbar-explicit 1\nkind zz\n"), Error);
    std::string text = emit_explicit(one_state_mc());
    text.replace(text.find("t 0 1"), 5, "t 0 0.5");
    CHECK_THROWS_AS(parse_explicit(text), Error);
    CHECK_THROWS_WITH_AS(read_explicit("/nonexistent/dir/x.explicit"), doctest::Contains("cannot open"), Error);
    try {
        read_file("/nonexistent/dir/x");
    } catch (const Error& e) {
        CHECK(e.module() == "io");
    }
}

TEST_CASE("DOT output") {
    const ExplicitModel g = build_world_pg(World(scenarios::sc1(3)), Refinement::OneStep);
    const std::string dot = emit_dot(g);
    CHECK(count_matches(dot, std::regex(R"(\n  s\d+ \[label=)")) == g.num_states());
    std::size_t goals = 0, p2 = 0;
    for (StateId s = 0; s < g.num_states(); ++s) {
        goals += g.is_goal(s);
        p2 += g.player[s] == Player::Two;
    }
    CHECK(count_matches(dot, std::regex("goal=true")) == goals);
    CHECK(count_matches(dot, std::regex("shape=diamond")) == p2);
    CHECK(count_matches(emit_dot(one_state_mc()), std::regex(R"(\n  s\d+ \[label=)")) == 1);
    CHECK_THROWS_WITH_AS(emit_dot(g, 10), doctest::Contains("DOT limit"), Error);
}

TEST_CASE("external checker text") {
    const World w(scenarios::sc1(3));
    const ExplicitModel g = build_world_pg(w, Refinement::OneStep);
    const std::string a = emit_prism_pg(g);
    CHECK(a == emit_prism_pg(g));
    CHECK(a.find("smg") != std::string::npos);
    CHECK(a.find("label \"goal\"") != std::string::npos);
    const ExplicitModel pomdp = build_world_pomdp(w);
    const std::string b = emit_prism_pomdp(pomdp);
    CHECK(b.find("observables") != std::string::npos);
    CHECK(b == emit_prism_pomdp(pomdp));
    CHECK_THROWS_AS(emit_prism_pg(pomdp), Error);
    CHECK_THROWS_AS(emit_prism_pomdp(g), Error);
}

TEST_CASE("strategy JSON round trip") {
    const ExplicitModel g = build_world_pg(World(scenarios::sc1(4)), Refinement::OneStep);
    const ObservationStrategy s = lift_strategy(g, solve_pg(g).strategy);
    const ObservationStrategy back = parse_strategy(emit_strategy(s));
    CHECK(back.initial == s.initial);
    CHECK(back.observation == s.observation);
    CHECK(back.action == s.action);
    CHECK(back.update == s.update);
    CHECK(emit_strategy(back) == emit_strategy(s));
    CHECK_THROWS_WITH_AS(parse_strategy("{"), doctest::Contains("malformed"), Error);
    CHECK_THROWS_WITH_AS(parse_strategy(R"({"initial": 3, "memory": []})"), doctest::Contains("out of range"), Error);
}

}
