#pragma once

#include "gbar/grid.hpp"
#include "gbar/model.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace gbar {

/// Distribution over an opponent's movements.
using MovementDistribution = std::vector<std::pair<MovementId, double>>;

/// Randomised opponent strategy: (robot position, own position) -> movement distribution.
using OpponentPolicy = std::function<MovementDistribution(PositionId robot, PositionId self)>;

/// Moves to every enabled successor with equal probability.
OpponentPolicy uniform_policy(const WorldGraph& opponent);

/// Everything derived from a scenario that the model builders need.
struct World {
    explicit World(Scenario scenario);

    Scenario scenario;
    GridMap grid;
    WorldGraph robot;
    std::vector<WorldGraph> opponents;
    std::vector<OpponentPolicy> policies;
    VisibilityTable visibility;

    int num_opponents() const { return static_cast<int>(opponents.size()); }
    int cell_index(Cell c) const { return grid.index(c); }
    /// Whether opponent `i` (1-based) standing at `vi` is seen from robot position v0.
    bool sees(PositionId v0, int i, PositionId vi) const {
        return visibility.visible(robot.location_of(v0), opponents[i - 1].location_of(vi));
    }
    bool is_goal(PositionId v0) const { return grid.goal(robot.location_of(v0)); }
    PositionId robot_position(Cell c, Direction d) const { return grid.free_index(c) * 4 + static_cast<int>(d); }
    PositionId opponent_position(Cell c) const { return grid.free_index(c); }
};

/// Observation of a world state: robot position, for each opponent either its
/// position or "far away", and whose turn it is.
struct Observation {
    PositionId robot = 0;
    /// -1 encodes "far away".
    std::vector<PositionId> opponents;
    int turn = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Bijective packing of observations into 64-bit keys.
class ObservationCodec {
public:
    explicit ObservationCodec(const World& world);

    std::uint64_t encode(const Observation& o) const;
    Observation decode(std::uint64_t key) const;
    /// Single-opponent shortcut; `opponent` < 0 means far away.
    std::uint64_t encode(PositionId robot, PositionId opponent, int turn) const {
        const std::uint64_t view = opponent < 0 ? far_[0] : static_cast<std::uint64_t>(opponent);
        return (static_cast<std::uint64_t>(robot) * (far_[0] + 1) + view) * turns_ + turn;
    }

private:
    std::vector<std::uint64_t> far_;
    std::uint64_t turns_;
};

struct WorldBuildOptions {
    /// Label goal/bad states while exploring and make them absorbing, so that
    /// nothing behind a target is materialised.
    bool stop_at_targets = true;
    /// When false, every tuple of the product is materialised in packed order,
    /// reachable or not.
    bool reachable_only = true;
};

/// World MDP over (robot, opponent_1..n, turn); reachable states only, breadth-first order.
/// Valuation variables: rx ry rdir o<i>x o<i>y ... turn.
ExplicitModel build_world_mdp(const World& world, const WorldBuildOptions& options = {});

/// Labels collision states bad and goal-cell states goal (goal wins ties).
ExplicitModel label_states(const ExplicitModel& model, const Scenario& scenario);

/// Turns a world MDP into the world POMDP by attaching observation keys.
ExplicitModel attach_observations(const ExplicitModel& mdp, const World& world);

/// build_world_mdp with targets absorbing, followed by attach_observations.
ExplicitModel build_world_pomdp(const World& world, const WorldBuildOptions& options = {});

/// Decodes the world-state tuple of a world-model state from its valuation.
struct WorldState {
    PositionId robot;
    std::vector<PositionId> opponents;
    int turn;
};
WorldState world_state(const ExplicitModel& model, const World& world, StateId s);

inline constexpr std::string_view kOpponentAction = "opponent";

} // namespace gbar
