#include "gbar/abstraction.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("abstraction", message); }

constexpr std::string_view kLoop = "loop";

std::string opponent_choice_name(Cell c) { return "o_" + std::to_string(c.x) + "_" + std::to_string(c.y); }

// ---------------------------------------------------------------------------
// Region flag sets, interned as bitsets over block ids.

class FlagSets {
public:
    explicit FlagSets(std::size_t blocks) : words_((blocks + 63) / 64) {}

    using Bits = std::vector<std::uint64_t>;

    Bits empty() const { return Bits(words_, 0); }
    static void set(Bits& b, int block) { b[block >> 6] |= std::uint64_t{1} << (block & 63); }
    static bool test(const Bits& b, int block) { return (b[block >> 6] >> (block & 63)) & 1u; }

    std::uint32_t intern(const Bits& bits) {
        auto [it, inserted] = ids_.try_emplace(bits, static_cast<std::uint32_t>(sets_.size()));
        if (inserted) sets_.push_back(bits);
        return it->second;
    }
    const Bits& get(std::uint32_t id) const { return sets_[id]; }

    template <typename F>
    static void for_each(const Bits& b, F&& f) {
        for (std::size_t w = 0; w < b.size(); ++w)
            for (std::uint64_t word = b[w]; word; word &= word - 1)
                f(static_cast<int>(w * 64 + static_cast<std::size_t>(__builtin_ctzll(word))));
    }

private:
    struct Hash {
        std::size_t operator()(const Bits& b) const {
            std::uint64_t h = 1469598103934665603ull;
            for (auto w : b) h = (h ^ w) * 1099511628211ull;
            return static_cast<std::size_t>(h);
        }
    };
    std::size_t words_;
    std::vector<Bits> sets_;
    std::unordered_map<Bits, std::uint32_t, Hash> ids_;
};

// ---------------------------------------------------------------------------
// Direct construction of the abstract world game.

enum class Kind : std::uint8_t { Full = 0, Far = 1, LastSeen = 2 };

struct AbstractState {
    Kind kind;
    PositionId robot;
    /// Opponent position for Full/LastSeen, flag set id for Far under region refinement.
    std::uint32_t memory;
    int turn;

    std::uint64_t key() const {
        return (static_cast<std::uint64_t>(memory) << 32) | (static_cast<std::uint64_t>(robot) << 8) |
               (static_cast<std::uint64_t>(turn) << 2) | static_cast<std::uint64_t>(kind);
    }
};

struct Node {
    bool selector;
    AbstractState state; // for selectors: the owning abstract state
    MovementId action;   // for selectors: robot movement, or -1 for the opponent move
};

class WorldGameBuilder {
public:
    WorldGameBuilder(const World& world, Refinement refinement, const RegionPartition* partition)
        : world_(world), refinement_(refinement), partition_(partition), codec_(world),
          flags_(partition ? partition->size() : 1) {
        if (world.num_opponents() != 1)
            fail("the abstraction supports exactly one opponent (scenario has " +
                 std::to_string(world.num_opponents()) + ")");
        if (refinement == Refinement::Regions && !partition) fail("region refinement needs a partition");
        opponent_ = &world.opponents[0];
        const int cells = world.grid.width() * world.grid.height();
        invisible_.resize(cells);
        cached_.assign(cells, false);
        if (partition_) {
            block_invisible_.assign(static_cast<std::size_t>(cells) * partition_->size(), 0);
            for (Cell from : world.grid.free_cells()) {
                const int fi = world.grid.index(from);
                for (std::size_t b = 0; b < partition_->size(); ++b)
                    for (Cell c : partition_->blocks[b])
                        if (!world.visibility.visible(from, c)) {
                            block_invisible_[fi * partition_->size() + b] = 1;
                            break;
                        }
            }
        }
    }

    ExplicitModel build() {
        ModelBuilder out(ModelKind::PG, {"rx", "ry", "rdir", "ox", "oy", "mem", "turn", "sel"});
        intern(initial_state());
        std::vector<std::int32_t> row(8);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node node = nodes_[i];
            fill_valuation(node, row);
            if (!node.selector) {
                const AbstractState& b = node.state;
                const std::uint8_t labels = labels_of(b);
                out.add_state(Player::One, labels, row, observation_of(b));
                if (labels) {
                    out.add_choice(kLoop);
                    out.add_transition(static_cast<StateId>(i), 1.0);
                    continue;
                }
                if (b.turn == 0) {
                    for (MovementId m = 0; m < static_cast<MovementId>(world_.robot.movements.size()); ++m) {
                        if (!world_.robot.effect(b.robot, m)) continue;
                        out.add_choice(world_.robot.movements[m]);
                        out.add_transition(add_node({true, b, m}), 1.0);
                    }
                } else {
                    out.add_choice(kOpponentAction);
                    out.add_transition(add_node({true, b, -1}), 1.0);
                }
                continue;
            }
            out.add_state(Player::Two, 0, row);
            for (PositionId v1 : members(node.state)) {
                out.add_choice(opponent_choice_name(opponent_->location_of(v1)));
                successors(node.state, node.action, v1, dist_);
                for (const auto& [target, p] : dist_) out.add_transition(target, p);
            }
        }
        out.set_initial(0);
        return out.finish();
    }

private:
    AbstractState initial_state() {
        const PositionId v0 = world_.robot.initial;
        const PositionId v1 = opponent_->initial;
        if (world_.sees(v0, 1, v1)) return {Kind::Full, v0, static_cast<std::uint32_t>(v1), 0};
        if (refinement_ == Refinement::Regions) {
            auto bits = flags_.empty();
            FlagSets::set(bits, partition_->block_of[world_.grid.index(opponent_->location_of(v1))]);
            return {Kind::Far, v0, flags_.intern(bits), 0};
        }
        return {Kind::Far, v0, 0, 0};
    }

    StateId add_node(const Node& n) {
        nodes_.push_back(n);
        return static_cast<StateId>(nodes_.size() - 1);
    }

    StateId intern(const AbstractState& s) {
        auto [it, inserted] = index_.try_emplace(s.key(), static_cast<StateId>(nodes_.size()));
        if (inserted) nodes_.push_back({false, s, -1});
        return it->second;
    }

    std::uint8_t labels_of(const AbstractState& b) const {
        if (world_.is_goal(b.robot)) return label::goal;
        if (b.kind == Kind::Full && opponent_->location_of(static_cast<PositionId>(b.memory)) ==
                                        world_.robot.location_of(b.robot))
            return label::bad;
        return 0;
    }

    std::uint64_t observation_of(const AbstractState& b) const {
        return codec_.encode(b.robot, b.kind == Kind::Full ? static_cast<PositionId>(b.memory) : -1, b.turn);
    }

    void fill_valuation(const Node& node, std::vector<std::int32_t>& row) const {
        const AbstractState& b = node.state;
        const Position& rp = world_.robot.positions[b.robot];
        row[0] = rp.cell.x;
        row[1] = rp.cell.y;
        row[2] = static_cast<int>(*rp.orientation);
        if (b.kind == Kind::Far) {
            row[3] = row[4] = -1;
        } else {
            const Cell oc = opponent_->location_of(static_cast<PositionId>(b.memory));
            row[3] = oc.x;
            row[4] = oc.y;
        }
        row[5] = b.kind == Kind::LastSeen ? 1 : (b.kind == Kind::Far && partition_ ? 2 + static_cast<int>(b.memory) : 0);
        row[6] = b.turn;
        row[7] = node.selector ? (node.action < 0 ? 0 : local_index(b.robot, node.action)) : -1;
    }

    int local_index(PositionId v0, MovementId m) const {
        int k = 0;
        for (MovementId i = 0; i < m; ++i)
            if (world_.robot.effect(v0, i)) ++k;
        return k;
    }

    const std::vector<PositionId>& invisible_from(PositionId v0) {
        const int ci = world_.grid.index(world_.robot.location_of(v0));
        if (!cached_[ci]) {
            for (PositionId v1 = 0; v1 < static_cast<PositionId>(opponent_->size()); ++v1)
                if (!world_.sees(v0, 1, v1)) invisible_[ci].push_back(v1);
            cached_[ci] = true;
        }
        return invisible_[ci];
    }

    std::vector<PositionId> members(const AbstractState& b) {
        if (b.kind != Kind::Far) return {static_cast<PositionId>(b.memory)};
        if (refinement_ != Refinement::Regions) return invisible_from(b.robot);
        std::vector<PositionId> out;
        const Cell rc = world_.robot.location_of(b.robot);
        FlagSets::for_each(flags_.get(b.memory), [&](int block) {
            for (Cell c : partition_->blocks[block])
                if (!world_.visibility.visible(rc, c)) out.push_back(world_.opponent_position(c));
        });
        std::sort(out.begin(), out.end());
        if (out.empty()) fail("region flags admit no opponent position");
        return out;
    }

    bool block_has_invisible(PositionId v0, int block) const {
        const int ci = world_.grid.index(world_.robot.location_of(v0));
        return block_invisible_[static_cast<std::size_t>(ci) * partition_->size() + block] != 0;
    }

    /// Flags kept when looking from v0: blocks that still hide some cell.
    std::uint32_t prune(const FlagSets::Bits& flags, PositionId v0) {
        auto out = flags_.empty();
        FlagSets::for_each(flags, [&](int block) {
            if (block_has_invisible(v0, block)) FlagSets::set(out, block);
        });
        return flags_.intern(out);
    }

    std::uint32_t expand_and_prune(std::uint32_t id, PositionId v0) {
        auto grown = flags_.get(id);
        FlagSets::for_each(flags_.get(id), [&](int block) {
            for (int nb : partition_->adjacency[block]) FlagSets::set(grown, nb);
        });
        return prune(grown, v0);
    }

    /// Flags after losing sight of an opponent last seen at v1: blocks of its
    /// possible successors that are hidden from v0.
    std::uint32_t flags_after_loss(PositionId v0, PositionId v1) {
        auto out = flags_.empty();
        const Cell rc = world_.robot.location_of(v0);
        for (const auto& [m, p] : world_.policies[0](v0, v1)) {
            if (p <= 0.0) continue;
            const auto t = opponent_->effect(v1, m);
            if (!t) continue;
            const Cell c = opponent_->location_of(*t);
            if (!world_.visibility.visible(rc, c)) FlagSets::set(out, partition_->block_of[world_.grid.index(c)]);
        }
        return flags_.intern(out);
    }

    void successors(const AbstractState& b, MovementId action, PositionId v1,
                    std::vector<std::pair<StateId, double>>& dist) {
        dist.clear();
        auto add = [&](const AbstractState& s, double p) {
            const StateId id = intern(s);
            for (auto& e : dist)
                if (e.first == id) {
                    e.second += p;
                    return;
                }
            dist.emplace_back(id, p);
        };
        if (b.turn == 0) {
            const PositionId v0n = *world_.robot.effect(b.robot, action);
            if (world_.sees(v0n, 1, v1)) {
                add({Kind::Full, v0n, static_cast<std::uint32_t>(v1), 1}, 1.0);
            } else if (b.kind == Kind::Full && refinement_ != Refinement::None) {
                add({Kind::LastSeen, v0n, static_cast<std::uint32_t>(v1), 1}, 1.0);
            } else if (refinement_ == Refinement::Regions) {
                // Only Far states reach here: a Full state would have gone to LastSeen.
                add({Kind::Far, v0n, prune(flags_.get(b.memory), v0n), 1}, 1.0);
            } else {
                add({Kind::Far, v0n, 0, 1}, 1.0);
            }
            return;
        }
        const PositionId v0 = b.robot;
        std::uint32_t hidden_memory = 0;
        bool hidden_ready = false;
        for (const auto& [m, p] : world_.policies[0](v0, v1)) {
            if (p <= 0.0) continue;
            const auto t = opponent_->effect(v1, m);
            if (!t) fail("opponent policy puts mass on a disabled movement");
            if (world_.sees(v0, 1, *t)) {
                add({Kind::Full, v0, static_cast<std::uint32_t>(*t), 0}, p);
                continue;
            }
            if (!hidden_ready) {
                if (refinement_ == Refinement::Regions)
                    hidden_memory = b.kind == Kind::Far ? expand_and_prune(b.memory, v0) : flags_after_loss(v0, v1);
                hidden_ready = true;
            }
            add({Kind::Far, v0, hidden_memory, 0}, p);
        }
    }

    const World& world_;
    Refinement refinement_;
    const RegionPartition* partition_;
    const WorldGraph* opponent_ = nullptr;
    ObservationCodec codec_;
    FlagSets flags_;
    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, StateId> index_;
    std::vector<std::vector<PositionId>> invisible_;
    std::vector<bool> cached_;
    std::vector<std::uint8_t> block_invisible_;
    std::vector<std::pair<StateId, double>> dist_;
};

} // namespace

// ---------------------------------------------------------------------------

RegionPartition make_partition(const Scenario& scenario, const std::vector<std::vector<Cell>>& blocks) {
    Scenario check = scenario;
    check.regions = blocks;
    try {
        validate(check);
    } catch (const Error& e) {
        fail(std::string("invalid region partition: ") + e.what());
    }
    if (blocks.empty()) fail("invalid region partition: no blocks");
    const GridMap grid(scenario);
    RegionPartition p;
    p.blocks = blocks;
    p.block_of.assign(static_cast<std::size_t>(scenario.cell_count()), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (Cell c : blocks[b]) p.block_of[grid.index(c)] = static_cast<int>(b);
    p.adjacency.resize(blocks.size());
    for (Cell c : grid.free_cells())
        for (int d = 0; d < 4; ++d) {
            const Cell t = step(c, static_cast<Direction>(d));
            if (!grid.free(t)) continue;
            const int a = p.block_of[grid.index(c)], b = p.block_of[grid.index(t)];
            if (a != b) p.adjacency[a].push_back(b);
        }
    for (auto& adj : p.adjacency) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return p;
}

RegionPartition single_block_partition(const Scenario& scenario) {
    return make_partition(scenario, {GridMap(scenario).free_cells()});
}

RegionPartition singleton_partition(const Scenario& scenario) {
    const GridMap grid(scenario);
    std::vector<std::vector<Cell>> blocks;
    for (Cell c : grid.free_cells()) blocks.push_back({c});
    return make_partition(scenario, blocks);
}

RegionPartition row_band_partition(const Scenario& scenario, int rows) {
    if (rows < 1) fail("band height must be positive");
    const GridMap grid(scenario);
    std::map<int, std::vector<Cell>> bands;
    for (Cell c : grid.free_cells()) bands[c.y / rows].push_back(c);
    std::vector<std::vector<Cell>> blocks;
    for (auto& [band, cells] : bands) blocks.push_back(std::move(cells));
    return make_partition(scenario, blocks);
}

std::string_view to_string(Refinement r) {
    switch (r) {
    case Refinement::None: return "none";
    case Refinement::OneStep: return "one-step";
    case Refinement::Regions: return "regions";
    }
    return "?";
}

Refinement parse_refinement(std::string_view text) {
    if (text == "none") return Refinement::None;
    if (text == "one-step") return Refinement::OneStep;
    if (text == "regions") return Refinement::Regions;
    fail("unknown refinement '" + std::string(text) + "' (expected none, one-step or regions)");
}

ExplicitModel build_world_pg(const World& world, Refinement refinement, const RegionPartition* partition) {
    return WorldGameBuilder(world, refinement, partition).build();
}

ExplicitModel build_abstract_pg(const ExplicitModel& pomdp) {
    if (!pomdp.has_observations()) fail("abstract game needs a POMDP (no observations attached)");
    if (pomdp.has_valuations() && pomdp.variables.size() > 6 && pomdp.variables[0] == "rx")
        fail("the abstraction supports exactly one opponent");

    std::unordered_map<std::uint64_t, std::vector<StateId>> classes;
    for (StateId s = 0; s < pomdp.num_states(); ++s) classes[pomdp.observations[s]].push_back(s);

    auto action_list = [&](StateId s) {
        std::vector<std::uint32_t> a;
        for (ChoiceId c = pomdp.first_choice(s); c < pomdp.end_choice(s); ++c) a.push_back(pomdp.choice_action[c]);
        return a;
    };

    struct GameNode {
        bool selector;
        std::uint64_t obs;
        std::uint32_t action; // action id in the POMDP (selectors only)
        int local;
    };
    std::vector<GameNode> nodes;
    std::unordered_map<std::uint64_t, StateId> class_node;
    std::unordered_map<std::uint64_t, int> class_ordinal;
    auto intern = [&](std::uint64_t obs) {
        auto [it, inserted] = class_node.try_emplace(obs, static_cast<StateId>(nodes.size()));
        if (inserted) {
            nodes.push_back({false, obs, 0, -1});
            class_ordinal.emplace(obs, static_cast<int>(class_ordinal.size()));
        }
        return it->second;
    };

    ModelBuilder out(ModelKind::PG, {"class", "sel"});
    intern(pomdp.observations[pomdp.initial]);
    std::vector<std::pair<StateId, double>> dist;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const GameNode node = nodes[i];
        const auto& members = classes.at(node.obs);
        const std::int32_t row[2] = {class_ordinal.at(node.obs), node.selector ? node.local : -1};
        if (!node.selector) {
            bool all_goal = true, any_bad = false;
            for (StateId s : members) {
                all_goal = all_goal && pomdp.is_goal(s);
                any_bad = any_bad || pomdp.is_bad(s);
            }
            const std::uint8_t labels = all_goal ? label::goal : (any_bad ? label::bad : 0);
            out.add_state(Player::One, labels, row, node.obs);
            if (labels) {
                out.add_choice(kLoop);
                out.add_transition(static_cast<StateId>(i), 1.0);
                continue;
            }
            const auto actions = action_list(members.front());
            for (StateId s : members)
                if (action_list(s) != actions)
                    fail("observation class of " + pomdp.describe(s) + " has unequal action sets");
            int local = 0;
            for (std::uint32_t a : actions) {
                out.add_choice(pomdp.action_names[a]);
                nodes.push_back({true, node.obs, a, local++});
                out.add_transition(static_cast<StateId>(nodes.size() - 1), 1.0);
            }
            continue;
        }
        out.add_state(Player::Two, 0, row);
        for (StateId s : members) {
            ChoiceId chosen = pomdp.end_choice(s);
            for (ChoiceId c = pomdp.first_choice(s); c < pomdp.end_choice(s); ++c)
                if (pomdp.choice_action[c] == node.action) chosen = c;
            out.add_choice("s" + std::to_string(s));
            dist.clear();
            for (const auto& t : pomdp.successors(chosen)) {
                const StateId target = intern(pomdp.observations[t.target]);
                auto it = std::find_if(dist.begin(), dist.end(), [&](const auto& e) { return e.first == target; });
                if (it == dist.end())
                    dist.emplace_back(target, t.probability);
                else
                    it->second += t.probability;
            }
            for (const auto& [target, p] : dist) out.add_transition(target, p);
        }
    }
    out.set_initial(0);
    return out.finish();
}

std::optional<std::uint32_t> ObservationStrategy::next(std::uint32_t memory, std::uint64_t obs) const {
    const auto& row = update[memory];
    auto it = std::lower_bound(row.begin(), row.end(), obs, [](const auto& e, std::uint64_t o) { return e.first < o; });
    if (it == row.end() || it->first != obs) return std::nullopt;
    return it->second;
}

ObservationStrategy lift_strategy(const ExplicitModel& pg, const Strategy& strategy) {
    if (pg.kind != ModelKind::PG) fail("lift_strategy expects an abstract game");
    if (!pg.has_observations()) fail("abstract game carries no observations");
    const std::size_t n = pg.num_states();
    std::vector<std::uint32_t> memory_of(n, std::numeric_limits<std::uint32_t>::max());
    ObservationStrategy out;
    for (StateId s = 0; s < n; ++s)
        if (pg.player[s] == Player::One) {
            memory_of[s] = static_cast<std::uint32_t>(out.observation.size());
            out.observation.push_back(pg.observations[s]);
        }
    if (pg.player[pg.initial] != Player::One) fail("initial state of the game is not a player-1 state");
    out.initial = memory_of[pg.initial];

    // Player-1 states reachable when player 1 follows the strategy.
    auto chosen = [&](StateId s) -> std::int32_t {
        if (pg.choice_count(s) == 1) return 0;
        return s < strategy.choice.size() ? strategy.choice[s] : -1;
    };
    std::vector<bool> reach(n, false);
    std::vector<StateId> stack{pg.initial};
    reach[pg.initial] = true;
    while (!stack.empty()) {
        const StateId s = stack.back();
        stack.pop_back();
        auto visit = [&](ChoiceId c) {
            for (const auto& t : pg.successors(c))
                if (!reach[t.target]) {
                    reach[t.target] = true;
                    stack.push_back(t.target);
                }
        };
        if (pg.player[s] == Player::Two) {
            for (ChoiceId c = pg.first_choice(s); c < pg.end_choice(s); ++c) visit(c);
            continue;
        }
        const std::int32_t local = chosen(s);
        if (local < 0 || static_cast<std::size_t>(local) >= pg.choice_count(s))
            fail("strategy undefined on reachable player-1 state " + pg.describe(s));
        visit(pg.first_choice(s) + local);
    }

    out.action.resize(out.observation.size());
    out.update.resize(out.observation.size());
    for (StateId s = 0; s < n; ++s) {
        if (pg.player[s] != Player::One) continue;
        std::int32_t local = chosen(s);
        if (local < 0 || static_cast<std::size_t>(local) >= pg.choice_count(s)) local = 0;
        const ChoiceId c = pg.first_choice(s) + local;
        const std::uint32_t mem = memory_of[s];
        out.action[mem] = pg.action_name(c);
        std::map<std::uint64_t, std::uint32_t> next;
        auto record = [&](StateId target) {
            auto [it, inserted] = next.try_emplace(pg.observations[target], memory_of[target]);
            if (!inserted && it->second != memory_of[target])
                fail("abstract successors of " + pg.describe(s) +
                     " are not determined by the observation; the game is not observation-based");
        };
        for (const auto& t : pg.successors(c)) {
            if (pg.player[t.target] == Player::One) {
                record(t.target);
                continue;
            }
            for (ChoiceId sc = pg.first_choice(t.target); sc < pg.end_choice(t.target); ++sc)
                for (const auto& u : pg.successors(sc)) {
                    if (pg.player[u.target] != Player::One) fail("selector leads to another selector");
                    record(u.target);
                }
        }
        out.update[mem].assign(next.begin(), next.end());
    }
    return out;
}

std::vector<std::pair<Cell, double>> collision_hotspots(const ExplicitModel& pg, const ValueResult& values) {
    if (pg.variables.size() < 2 || pg.variables[0] != "rx" || pg.variables[1] != "ry")
        fail("collision hotspots need world valuations (rx, ry)");
    const ExplicitModel mc = induced_mc(pg, values.strategy);
    const std::size_t n = mc.num_states();

    // Only states that can still be absorbed carry finite expected visits.
    std::vector<std::vector<StateId>> pred(n);
    for (StateId s = 0; s < n; ++s)
        for (const auto& t : mc.successors(mc.first_choice(s))) pred[t.target].push_back(s);
    std::vector<bool> live(n, false);
    std::vector<StateId> stack;
    for (StateId s = 0; s < n; ++s)
        if (mc.labels[s]) {
            live[s] = true;
            stack.push_back(s);
        }
    while (!stack.empty()) {
        const StateId t = stack.back();
        stack.pop_back();
        for (StateId u : pred[t])
            if (!live[u]) {
                live[u] = true;
                stack.push_back(u);
            }
    }

    // Expected visits x = e_init + P^T x over transient live states.
    std::vector<double> visits(n, 0.0), next(n, 0.0);
    std::vector<double> absorbed(n, 0.0);
    if (live[mc.initial] && !mc.labels[mc.initial]) {
        for (int iter = 0; iter < 1'000'000; ++iter) {
            std::fill(next.begin(), next.end(), 0.0);
            next[mc.initial] = 1.0;
            for (StateId s = 0; s < n; ++s) {
                if (visits[s] == 0.0 || mc.labels[s]) continue;
                for (const auto& t : mc.successors(mc.first_choice(s)))
                    if (live[t.target] && !mc.labels[t.target]) next[t.target] += visits[s] * t.probability;
            }
            double delta = 0.0;
            for (StateId s = 0; s < n; ++s) delta = std::max(delta, std::abs(next[s] - visits[s]));
            visits.swap(next);
            if (delta < 1e-13) break;
        }
        for (StateId s = 0; s < n; ++s) {
            if (visits[s] == 0.0) continue;
            for (const auto& t : mc.successors(mc.first_choice(s)))
                if (mc.labels[t.target]) absorbed[t.target] += visits[s] * t.probability;
        }
    } else if (mc.labels[mc.initial]) {
        absorbed[mc.initial] = 1.0;
    }

    std::map<Cell, double> mass;
    for (StateId s = 0; s < n; ++s)
        if (mc.is_bad(s) && !mc.is_goal(s) && absorbed[s] > 1e-12) {
            const auto row = mc.valuation(s);
            mass[Cell{row[0], row[1]}] += absorbed[s];
        }
    std::vector<std::pair<Cell, double>> ranked(mass.begin(), mass.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

} // namespace gbar
