#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gbar {

struct Cell {
    int x = 0;
    int y = 0;

    friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

std::string to_string(Cell c);

/// Compass heading; y grows downward, so North is (0,-1).
enum class Direction : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

Direction turn_left(Direction d);
Direction turn_right(Direction d);
Cell step(Cell c, Direction d);
char direction_letter(Direction d);
Direction parse_direction(std::string_view text);

/// Declarative grid-world description.
struct Scenario {
    std::string name;
    int width = 0;
    int height = 0;
    std::vector<Cell> obstacles;
    /// Cells observed by fixed cameras: visible from every robot position.
    std::vector<Cell> cameras;
    int view_range = 3;
    Cell robot_start;
    Direction robot_start_orientation = Direction::East;
    std::vector<Cell> opponent_starts;
    std::vector<Cell> goal_cells;
    /// Optional partition of the free cells used by region refinement.
    std::vector<std::vector<Cell>> regions;

    bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    int index(Cell c) const { return c.y * width + c.x; }
    Cell cell_at(int index) const { return {index % width, index / width}; }
    int cell_count() const { return width * height; }
};

/// Dense obstacle/goal lookup over a scenario's grid.
class GridMap {
public:
    explicit GridMap(const Scenario& scenario);

    int width() const { return width_; }
    int height() const { return height_; }
    bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
    bool free(Cell c) const { return inside(c) && !blocked(c); }
    bool goal(Cell c) const { return goal_[index(c)] != 0; }
    int index(Cell c) const { return c.y * width_ + c.x; }
    Cell cell_at(int index) const { return {index % width_, index / width_}; }

    /// Free cells in row-major order.
    const std::vector<Cell>& free_cells() const { return free_cells_; }
    /// Index of a free cell in free_cells(), or -1.
    int free_index(Cell c) const { return inside(c) ? free_index_[index(c)] : -1; }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> blocked_;
    std::vector<std::uint8_t> goal_;
    std::vector<Cell> free_cells_;
    std::vector<int> free_index_;
};

/// Validates all scenario invariants; throws gbar::Error("gridworld", ...) naming the offending cell.
void validate(const Scenario& scenario);

/// Parses the JSON scenario document and validates it.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

/// Parses a region partition document: either {"regions": [[cells...], ...]} or a bare array of blocks.
std::vector<std::vector<Cell>> parse_regions(std::string_view text);

/// True iff the open segment between the centres of a and b meets the
/// interior of no obstacle cell. Grazing a corner or running along an edge
/// does not block. Exact integer arithmetic.
bool line_of_sight(const Scenario& scenario, Cell a, Cell b);
bool line_of_sight(const GridMap& grid, Cell a, Cell b);

/// Cells visible from a robot standing on `from`: the L-infinity ball of
/// radius view_range filtered by line of sight, plus cameras and `from`.
std::vector<Cell> visible_cells(const Scenario& scenario, Cell from);

/// Precomputed visibility relation, indexed by robot cell.
class VisibilityTable {
public:
    VisibilityTable() = default;
    explicit VisibilityTable(const Scenario& scenario);

    bool visible(Cell from, Cell target) const {
        return visible(from_index(from), width_ * target.y + target.x);
    }
    bool visible(int from_cell_index, int target_cell_index) const {
        const std::size_t bit = static_cast<std::size_t>(from_cell_index) * cells_ + target_cell_index;
        return (bits_[bit >> 6] >> (bit & 63)) & 1u;
    }
    std::vector<Cell> visible_from(Cell from) const;
    int width() const { return width_; }

private:
    int from_index(Cell c) const { return c.y * width_ + c.x; }

    int width_ = 0;
    std::size_t cells_ = 0;
    std::vector<std::uint64_t> bits_;
};

using PositionId = std::int32_t;
using MovementId = std::int32_t;

struct Position {
    int agent_index = 0;
    Cell cell;
    std::optional<Direction> orientation;
};

/// Movement graph of one agent: positions, movements and their effects.
struct WorldGraph {
    int agent_index = 0;
    std::vector<Position> positions;
    PositionId initial = 0;
    std::vector<std::string> movements;
    /// positions.size() * movements.size() entries, -1 where disabled.
    std::vector<PositionId> effects;

    std::size_t size() const { return positions.size(); }
    std::optional<PositionId> effect(PositionId v, MovementId m) const {
        const PositionId t = effects[static_cast<std::size_t>(v) * movements.size() + m];
        if (t < 0) return std::nullopt;
        return t;
    }
    std::vector<MovementId> enabled(PositionId v) const;
    Cell location_of(PositionId v) const { return positions[v].cell; }
    std::optional<PositionId> find(Cell c, std::optional<Direction> d = std::nullopt) const;
};

/// Robot: free cells times four headings; forward, turn_left, turn_right.
WorldGraph build_robot_graph(const Scenario& scenario);

/// Opponent `agent_index` (1-based): free cells, moves N/E/S/W into free cells.
/// Throws if a free cell has no enabled move.
WorldGraph build_opponent_graph(const Scenario& scenario, int agent_index);

namespace robot_moves {
inline constexpr MovementId forward = 0;
inline constexpr MovementId turn_left = 1;
inline constexpr MovementId turn_right = 2;
} // namespace robot_moves

} // namespace gbar
