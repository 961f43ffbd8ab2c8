#include "gbar/world.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("worldmodel", message); }

std::vector<std::string> world_variables(int n) {
    std::vector<std::string> vars{"rx", "ry", "rdir"};
    for (int i = 1; i <= n; ++i) {
        vars.push_back("o" + std::to_string(i) + "x");
        vars.push_back("o" + std::to_string(i) + "y");
    }
    vars.push_back("turn");
    return vars;
}

} // namespace

OpponentPolicy uniform_policy(const WorldGraph& opponent) {
    std::vector<MovementDistribution> table(opponent.size());
    for (PositionId v = 0; v < static_cast<PositionId>(opponent.size()); ++v) {
        const auto moves = opponent.enabled(v);
        for (MovementId m : moves) table[v].emplace_back(m, 1.0 / static_cast<double>(moves.size()));
    }
    return [table = std::move(table)](PositionId, PositionId self) { return table[self]; };
}

World::World(Scenario s)
    : scenario((validate(s), std::move(s))), grid(scenario), robot(build_robot_graph(scenario)),
      visibility(scenario) {
    for (int i = 1; i <= static_cast<int>(scenario.opponent_starts.size()); ++i) {
        opponents.push_back(build_opponent_graph(scenario, i));
        policies.push_back(uniform_policy(opponents.back()));
    }
}

ObservationCodec::ObservationCodec(const World& world) : turns_(world.num_opponents() + 1) {
    for (const auto& g : world.opponents) far_.push_back(g.size());
}

std::uint64_t ObservationCodec::encode(const Observation& o) const {
    std::uint64_t key = static_cast<std::uint64_t>(o.robot);
    for (std::size_t i = 0; i < far_.size(); ++i) {
        const std::uint64_t view = o.opponents[i] < 0 ? far_[i] : static_cast<std::uint64_t>(o.opponents[i]);
        key = key * (far_[i] + 1) + view;
    }
    return key * turns_ + static_cast<std::uint64_t>(o.turn);
}

Observation ObservationCodec::decode(std::uint64_t key) const {
    Observation o;
    o.turn = static_cast<int>(key % turns_);
    key /= turns_;
    o.opponents.assign(far_.size(), -1);
    for (std::size_t i = far_.size(); i-- > 0;) {
        const std::uint64_t view = key % (far_[i] + 1);
        key /= far_[i] + 1;
        o.opponents[i] = view == far_[i] ? -1 : static_cast<PositionId>(view);
    }
    o.robot = static_cast<PositionId>(key);
    return o;
}

ExplicitModel build_world_mdp(const World& world, const WorldBuildOptions& options) {
    const int n = world.num_opponents();
    if (n < 1) fail("world needs at least one opponent");
    const std::uint64_t turns = static_cast<std::uint64_t>(n) + 1;

    std::vector<std::uint64_t> radix;
    double capacity = static_cast<double>(world.robot.size()) * static_cast<double>(turns);
    for (const auto& g : world.opponents) {
        radix.push_back(g.size());
        capacity *= static_cast<double>(g.size());
    }
    if (capacity > 9.0e18) fail("world state space too large to index");

    struct Tuple {
        std::vector<PositionId> pos; // robot, then opponents
        int turn;
    };
    auto pack = [&](const Tuple& t) {
        std::uint64_t key = static_cast<std::uint64_t>(t.pos[0]);
        for (int i = 0; i < n; ++i) key = key * radix[i] + static_cast<std::uint64_t>(t.pos[i + 1]);
        return key * turns + static_cast<std::uint64_t>(t.turn);
    };
    auto unpack = [&](std::uint64_t key) {
        Tuple t;
        t.pos.assign(n + 1, 0);
        t.turn = static_cast<int>(key % turns);
        key /= turns;
        for (int i = n; i >= 1; --i) {
            t.pos[i] = static_cast<PositionId>(key % radix[i - 1]);
            key /= radix[i - 1];
        }
        t.pos[0] = static_cast<PositionId>(key);
        return t;
    };

    std::unordered_map<std::uint64_t, StateId> index;
    std::vector<std::uint64_t> order;
    auto intern = [&](const Tuple& t) {
        const std::uint64_t key = pack(t);
        auto [it, inserted] = index.try_emplace(key, static_cast<StateId>(order.size()));
        if (inserted) order.push_back(key);
        return it->second;
    };
    auto labels_of = [&](const Tuple& t) -> std::uint8_t {
        const Cell rc = world.robot.location_of(t.pos[0]);
        if (world.grid.goal(rc)) return label::goal;
        for (int i = 1; i <= n; ++i)
            if (world.opponents[i - 1].location_of(t.pos[i]) == rc) return label::bad;
        return 0;
    };

    ModelBuilder builder(ModelKind::MDP, world_variables(n));
    Tuple init;
    init.pos.push_back(world.robot.initial);
    for (const auto& g : world.opponents) init.pos.push_back(g.initial);
    init.turn = 0;
    if (!options.reachable_only) {
        if (capacity > 5.0e7) fail("full world product too large to materialise");
        const auto total = static_cast<std::uint64_t>(capacity);
        order.reserve(total);
        for (std::uint64_t key = 0; key < total; ++key) {
            index.emplace(key, static_cast<StateId>(key));
            order.push_back(key);
        }
    }
    const StateId initial = intern(init);

    std::vector<std::int32_t> row;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Tuple t = unpack(order[i]);
        row.clear();
        const Position& rp = world.robot.positions[t.pos[0]];
        row.push_back(rp.cell.x);
        row.push_back(rp.cell.y);
        row.push_back(static_cast<int>(*rp.orientation));
        for (int k = 1; k <= n; ++k) {
            const Cell c = world.opponents[k - 1].location_of(t.pos[k]);
            row.push_back(c.x);
            row.push_back(c.y);
        }
        row.push_back(t.turn);
        const std::uint8_t labels = options.stop_at_targets ? labels_of(t) : 0;
        builder.add_state(Player::One, labels, row);

        if (labels != 0) {
            builder.add_choice("loop");
            builder.add_transition(static_cast<StateId>(i), 1.0);
            continue;
        }
        if (t.turn == 0) {
            for (MovementId m = 0; m < static_cast<MovementId>(world.robot.movements.size()); ++m) {
                const auto next = world.robot.effect(t.pos[0], m);
                if (!next) continue;
                Tuple succ = t;
                succ.pos[0] = *next;
                succ.turn = 1;
                builder.add_choice(world.robot.movements[m]);
                builder.add_transition(intern(succ), 1.0);
            }
            continue;
        }
        const int who = t.turn;
        const WorldGraph& g = world.opponents[who - 1];
        const MovementDistribution dist = world.policies[who - 1](t.pos[0], t.pos[who]);
        std::vector<std::pair<PositionId, double>> targets;
        double total = 0.0;
        for (const auto& [m, p] : dist) {
            if (p <= 0.0) continue;
            const auto next = (m >= 0 && m < static_cast<MovementId>(g.movements.size())) ? g.effect(t.pos[who], m)
                                                                                           : std::nullopt;
            if (!next)
                fail("policy of opponent " + std::to_string(who) + " puts mass on a disabled movement at " +
                     to_string(g.location_of(t.pos[who])));
            total += p;
            auto it = std::find_if(targets.begin(), targets.end(), [&](const auto& e) { return e.first == *next; });
            if (it == targets.end())
                targets.emplace_back(*next, p);
            else
                it->second += p;
        }
        if (std::abs(total - 1.0) > 1e-12) fail("policy of opponent " + std::to_string(who) + " does not sum to 1");
        builder.add_choice(kOpponentAction);
        for (const auto& [pos, p] : targets) {
            Tuple succ = t;
            succ.pos[who] = pos;
            succ.turn = static_cast<int>((who + 1) % turns);
            builder.add_transition(intern(succ), p);
        }
    }
    builder.set_initial(initial);
    return builder.finish();
}

WorldState world_state(const ExplicitModel& model, const World& world, StateId s) {
    const auto row = model.valuation(s);
    const int n = world.num_opponents();
    if (row.size() != static_cast<std::size_t>(3 + 2 * n + 1)) fail("model is not a world model");
    WorldState ws;
    ws.robot = world.robot_position({row[0], row[1]}, static_cast<Direction>(row[2]));
    for (int i = 0; i < n; ++i) ws.opponents.push_back(world.opponent_position({row[3 + 2 * i], row[4 + 2 * i]}));
    ws.turn = row[3 + 2 * n];
    return ws;
}

ExplicitModel label_states(const ExplicitModel& model, const Scenario& scenario) {
    const GridMap grid(scenario);
    ExplicitModel out = model;
    const std::size_t arity = model.variables.size();
    if (arity < 6 || (arity - 4) % 2 != 0) fail("model is not a world model");
    const std::size_t n = (arity - 4) / 2;
    for (StateId s = 0; s < model.num_states(); ++s) {
        const auto row = model.valuation(s);
        const Cell rc{row[0], row[1]};
        std::uint8_t l = 0;
        if (grid.goal(rc)) {
            l = label::goal;
        } else {
            for (std::size_t i = 0; i < n; ++i)
                if (Cell{row[3 + 2 * i], row[4 + 2 * i]} == rc) l = label::bad;
        }
        out.labels[s] = l;
    }
    return out;
}

ExplicitModel attach_observations(const ExplicitModel& mdp, const World& world) {
    const ObservationCodec codec(world);
    ExplicitModel out = mdp;
    out.observations.resize(mdp.num_states());
    Observation o;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const WorldState ws = world_state(mdp, world, s);
        o.robot = ws.robot;
        o.turn = ws.turn;
        o.opponents.resize(ws.opponents.size());
        for (std::size_t i = 0; i < ws.opponents.size(); ++i)
            o.opponents[i] = world.sees(ws.robot, static_cast<int>(i) + 1, ws.opponents[i]) ? ws.opponents[i] : -1;
        out.observations[s] = codec.encode(o);
    }
    try {
        validate(out);
    } catch (const Error& e) {
        fail(std::string("observation function breaks the equal-action requirement: ") + e.what());
    }
    return out;
}

ExplicitModel build_world_pomdp(const World& world, const WorldBuildOptions& options) {
    WorldBuildOptions o = options;
    o.stop_at_targets = true;
    return attach_observations(build_world_mdp(world, o), world);
}

} // namespace gbar
