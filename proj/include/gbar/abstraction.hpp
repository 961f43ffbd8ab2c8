#pragma once

#include "gbar/grid.hpp"
#include "gbar/model.hpp"
#include "gbar/solver.hpp"
#include "gbar/world.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gbar {

/// Partition of the free cells into blocks for region-based history refinement.
struct RegionPartition {
    std::vector<std::vector<Cell>> blocks;
    /// Sorted neighbour blocks (self excluded) reachable by one opponent move.
    std::vector<std::vector<int>> adjacency;
    /// Block id per grid cell index; -1 for obstacles.
    std::vector<int> block_of;

    std::size_t size() const { return blocks.size(); }
};

/// Validates that `blocks` partitions the free cells and computes adjacency.
RegionPartition make_partition(const Scenario& scenario, const std::vector<std::vector<Cell>>& blocks);
/// One block holding every free cell.
RegionPartition single_block_partition(const Scenario& scenario);
/// One block per free cell.
RegionPartition singleton_partition(const Scenario& scenario);
/// Horizontal bands of `rows` grid rows each.
RegionPartition row_band_partition(const Scenario& scenario, int rows = 1);

enum class Refinement { None, OneStep, Regions };

std::string_view to_string(Refinement r);
Refinement parse_refinement(std::string_view text);

/// Abstract game of an arbitrary POMDP: one player-1 state per observation
/// class, one player-2 selector state per (class, action) in which the
/// adversary picks the concrete member the action is executed in.
/// Valuation variables: class sel.
ExplicitModel build_abstract_pg(const ExplicitModel& pomdp);

/// Abstract world game built straight from the world description, optionally
/// with one-step or region-based history refinement. Requires one opponent.
/// Valuation variables: rx ry rdir ox oy mem turn sel, where ox/oy are -1 when
/// the opponent position is unknown, mem is 0 (none), 1 (last seen position)
/// or 2+k (region flag set k), and sel is -1 on player-1 states.
ExplicitModel build_world_pg(const World& world, Refinement refinement, const RegionPartition* partition = nullptr);

inline ExplicitModel refine_one_step(const World& world) { return build_world_pg(world, Refinement::OneStep); }
inline ExplicitModel refine_regions(const World& world, const RegionPartition& partition) {
    return build_world_pg(world, Refinement::Regions, &partition);
}

/// Finite-memory observation-based strategy for the POMDP. Memory states are
/// the player-1 states of the abstract game.
struct ObservationStrategy {
    std::uint32_t initial = 0;
    std::vector<std::uint64_t> observation;
    std::vector<std::string> action;
    /// Per memory state, (observation, next memory) sorted by observation.
    std::vector<std::vector<std::pair<std::uint64_t, std::uint32_t>>> update;

    std::size_t memory_size() const { return action.size(); }
    std::optional<std::uint32_t> next(std::uint32_t memory, std::uint64_t obs) const;
};

/// Turns a memoryless player-1 strategy of an abstract game into an
/// observation automaton: the action of a memory state is the strategy's
/// choice and the memory follows the abstract successor matching each observation.
ObservationStrategy lift_strategy(const ExplicitModel& pg, const Strategy& strategy);

/// Robot cells ranked by the probability of colliding there under the
/// optimal strategy pair. Requires world valuations (rx, ry).
std::vector<std::pair<Cell, double>> collision_hotspots(const ExplicitModel& pg, const ValueResult& values);

} // namespace gbar
