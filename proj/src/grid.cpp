#include "gbar/grid.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gbar {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw Error("gridworld", message); }

constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

Cell read_cell(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        fail(std::string("field '") + field + "': cells must be written as [x, y]");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<Cell> read_cells(const json& doc, const char* field, bool required) {
    std::vector<Cell> out;
    if (!doc.contains(field)) {
        if (required) fail(std::string("missing field '") + field + "'");
        return out;
    }
    const json& arr = doc.at(field);
    if (!arr.is_array()) fail(std::string("field '") + field + "' must be an array of cells");
    for (const auto& c : arr) out.push_back(read_cell(c, field));
    return out;
}

int read_int(const json& doc, const char* field) {
    if (!doc.contains(field)) fail(std::string("missing field '") + field + "'");
    const json& v = doc.at(field);
    if (!v.is_number_integer()) fail(std::string("field '") + field + "' must be an integer");
    return v.get<int>();
}

json write_cells(const std::vector<Cell>& cells) {
    json arr = json::array();
    for (Cell c : cells) arr.push_back({c.x, c.y});
    return arr;
}

std::vector<std::vector<Cell>> read_blocks(const json& arr) {
    if (!arr.is_array()) fail("regions must be an array of cell arrays");
    std::vector<std::vector<Cell>> blocks;
    for (const auto& block : arr) {
        if (!block.is_array()) fail("each region must be an array of cells");
        std::vector<Cell> cells;
        for (const auto& c : block) cells.push_back(read_cell(c, "regions"));
        blocks.push_back(std::move(cells));
    }
    return blocks;
}

// Exact rational t-interval clipping of the open segment against an open box.
struct Fraction {
    std::int64_t num;
    std::int64_t den; // > 0
};

bool less(Fraction a, Fraction b) { return a.num * b.den < b.num * a.den; }

bool segment_hits_interior(std::int64_t ax, std::int64_t ay, std::int64_t bx, std::int64_t by, Cell cell) {
    Fraction lo{0, 1};
    Fraction hi{1, 1};
    const std::int64_t a[2] = {ax, ay};
    const std::int64_t d[2] = {bx - ax, by - ay};
    const std::int64_t box_lo[2] = {2 * static_cast<std::int64_t>(cell.x), 2 * static_cast<std::int64_t>(cell.y)};
    for (int axis = 0; axis < 2; ++axis) {
        const std::int64_t low = box_lo[axis];
        const std::int64_t high = low + 2;
        if (d[axis] == 0) {
            if (!(low < a[axis] && a[axis] < high)) return false;
            continue;
        }
        Fraction t1{low - a[axis], d[axis]};
        Fraction t2{high - a[axis], d[axis]};
        if (d[axis] < 0) {
            t1 = {-t1.num, -t1.den};
            t2 = {-t2.num, -t2.den};
            std::swap(t1, t2);
        }
        if (less(lo, t1)) lo = t1;
        if (less(t2, hi)) hi = t2;
    }
    return less(lo, hi);
}

} // namespace

std::string to_string(Cell c) { return "[" + std::to_string(c.x) + ", " + std::to_string(c.y) + "]"; }

Direction turn_left(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 3) % 4); }
Direction turn_right(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 1) % 4); }

Cell step(Cell c, Direction d) {
    const int i = static_cast<int>(d);
    return {c.x + kDx[i], c.y + kDy[i]};
}

char direction_letter(Direction d) { return "NESW"[static_cast<int>(d)]; }

Direction parse_direction(std::string_view text) {
    if (text == "N" || text == "north") return Direction::North;
    if (text == "E" || text == "east") return Direction::East;
    if (text == "S" || text == "south") return Direction::South;
    if (text == "W" || text == "west") return Direction::West;
    fail("unknown orientation '" + std::string(text) + "' (expected N, E, S or W)");
}

GridMap::GridMap(const Scenario& scenario)
    : width_(scenario.width), height_(scenario.height),
      blocked_(static_cast<std::size_t>(scenario.width) * scenario.height, 0),
      goal_(blocked_.size(), 0), free_index_(blocked_.size(), -1) {
    for (Cell c : scenario.obstacles)
        if (inside(c)) blocked_[index(c)] = 1;
    for (Cell c : scenario.goal_cells)
        if (inside(c)) goal_[index(c)] = 1;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (!blocked_[index({x, y})]) {
                free_index_[index({x, y})] = static_cast<int>(free_cells_.size());
                free_cells_.push_back({x, y});
            }
}

void validate(const Scenario& s) {
    if (s.width <= 0 || s.height <= 0) fail("grid dimensions must be positive");
    if (s.view_range < 0) fail("view_range must be non-negative");
    auto check_inside = [&](Cell c, const char* what) {
        if (!s.inside(c)) fail(std::string("out-of-bounds cell ") + to_string(c) + " in " + what);
    };
    for (Cell c : s.obstacles) check_inside(c, "obstacles");
    const GridMap grid(s);
    auto check_free = [&](Cell c, const char* what) {
        check_inside(c, what);
        if (grid.blocked(c)) fail(std::string(what) + " on obstacle at " + to_string(c));
    };
    for (Cell c : s.cameras) check_free(c, "camera");
    check_free(s.robot_start, "start-on-obstacle: robot_start");
    if (s.opponent_starts.empty()) fail("schema error: opponent must have a start cell");
    for (Cell c : s.opponent_starts) check_free(c, "start-on-obstacle: opponent start");
    if (s.goal_cells.empty()) fail("schema error: goal_cells must not be empty");
    for (Cell c : s.goal_cells) check_free(c, "goal cell");

    if (!s.regions.empty()) {
        std::vector<int> owner(static_cast<std::size_t>(s.cell_count()), -1);
        for (std::size_t b = 0; b < s.regions.size(); ++b) {
            if (s.regions[b].empty()) fail("region " + std::to_string(b) + " is empty");
            for (Cell c : s.regions[b]) {
                check_free(c, "region cell");
                int& o = owner[s.index(c)];
                if (o >= 0) fail("regions overlap at " + to_string(c));
                o = static_cast<int>(b);
            }
        }
        for (Cell c : grid.free_cells())
            if (owner[s.index(c)] < 0) fail("regions do not cover free cell " + to_string(c));
    }
}

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("schema error: ") + e.what());
    }
    if (!doc.is_object()) fail("schema error: scenario must be an object");
    Scenario s;
    if (doc.contains("name")) s.name = doc.at("name").get<std::string>();
    s.width = read_int(doc, "width");
    s.height = read_int(doc, "height");
    s.obstacles = read_cells(doc, "obstacles", false);
    s.cameras = read_cells(doc, "cameras", false);
    if (doc.contains("view_range")) s.view_range = read_int(doc, "view_range");
    if (!doc.contains("robot_start")) fail("missing field 'robot_start'");
    s.robot_start = read_cell(doc.at("robot_start"), "robot_start");
    if (doc.contains("robot_start_orientation")) {
        const json& o = doc.at("robot_start_orientation");
        if (!o.is_string()) fail("field 'robot_start_orientation' must be a string");
        s.robot_start_orientation = parse_direction(o.get<std::string>());
    }
    s.opponent_starts = read_cells(doc, "opponent_starts", true);
    s.goal_cells = read_cells(doc, "goal_cells", true);
    if (doc.contains("regions")) s.regions = read_blocks(doc.at("regions"));
    validate(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open scenario file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::string serialize_scenario(const Scenario& s) {
    json doc;
    if (!s.name.empty()) doc["name"] = s.name;
    doc["width"] = s.width;
    doc["height"] = s.height;
    doc["obstacles"] = write_cells(s.obstacles);
    doc["cameras"] = write_cells(s.cameras);
    doc["view_range"] = s.view_range;
    doc["robot_start"] = {s.robot_start.x, s.robot_start.y};
    doc["robot_start_orientation"] = std::string(1, direction_letter(s.robot_start_orientation));
    doc["opponent_starts"] = write_cells(s.opponent_starts);
    doc["goal_cells"] = write_cells(s.goal_cells);
    if (!s.regions.empty()) {
        json blocks = json::array();
        for (const auto& b : s.regions) blocks.push_back(write_cells(b));
        doc["regions"] = blocks;
    }
    return doc.dump(1);
}

std::vector<std::vector<Cell>> parse_regions(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("region file: ") + e.what());
    }
    if (doc.is_object()) {
        if (!doc.contains("regions")) fail("region file: missing field 'regions'");
        return read_blocks(doc.at("regions"));
    }
    return read_blocks(doc);
}

bool line_of_sight(const GridMap& grid, Cell a, Cell b) {
    if (a == b) return true;
    const std::int64_t ax = 2 * a.x + 1, ay = 2 * a.y + 1;
    const std::int64_t bx = 2 * b.x + 1, by = 2 * b.y + 1;
    const int x0 = std::min(a.x, b.x), x1 = std::max(a.x, b.x);
    const int y0 = std::min(a.y, b.y), y1 = std::max(a.y, b.y);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const Cell c{x, y};
            if (grid.blocked(c) && segment_hits_interior(ax, ay, bx, by, c)) return false;
        }
    return true;
}

bool line_of_sight(const Scenario& scenario, Cell a, Cell b) { return line_of_sight(GridMap(scenario), a, b); }

namespace {

std::vector<Cell> visible_cells(const Scenario& s, const GridMap& grid, Cell from) {
    std::vector<std::uint8_t> mark(static_cast<std::size_t>(s.cell_count()), 0);
    const int r = s.view_range;
    for (int y = std::max(0, from.y - r); y <= std::min(s.height - 1, from.y + r); ++y)
        for (int x = std::max(0, from.x - r); x <= std::min(s.width - 1, from.x + r); ++x)
            if (line_of_sight(grid, from, {x, y})) mark[s.index({x, y})] = 1;
    for (Cell c : s.cameras) mark[s.index(c)] = 1;
    mark[s.index(from)] = 1;
    std::vector<Cell> out;
    for (int i = 0; i < s.cell_count(); ++i)
        if (mark[i]) out.push_back(s.cell_at(i));
    return out;
}

} // namespace

std::vector<Cell> visible_cells(const Scenario& scenario, Cell from) {
    return visible_cells(scenario, GridMap(scenario), from);
}

VisibilityTable::VisibilityTable(const Scenario& s)
    : width_(s.width), cells_(static_cast<std::size_t>(s.cell_count())),
      bits_((cells_ * cells_ + 63) / 64, 0) {
    const GridMap grid(s);
    for (Cell from : grid.free_cells()) {
        const std::size_t row = static_cast<std::size_t>(s.index(from)) * cells_;
        for (Cell c : visible_cells(s, grid, from)) {
            const std::size_t bit = row + s.index(c);
            bits_[bit >> 6] |= std::uint64_t{1} << (bit & 63);
        }
    }
}

std::vector<Cell> VisibilityTable::visible_from(Cell from) const {
    std::vector<Cell> out;
    const int n = static_cast<int>(cells_);
    for (int i = 0; i < n; ++i)
        if (visible(from_index(from), i)) out.push_back({i % width_, i / width_});
    return out;
}

std::vector<MovementId> WorldGraph::enabled(PositionId v) const {
    std::vector<MovementId> out;
    for (MovementId m = 0; m < static_cast<MovementId>(movements.size()); ++m)
        if (effect(v, m)) out.push_back(m);
    return out;
}

std::optional<PositionId> WorldGraph::find(Cell c, std::optional<Direction> d) const {
    for (PositionId v = 0; v < static_cast<PositionId>(positions.size()); ++v)
        if (positions[v].cell == c && positions[v].orientation == d) return v;
    return std::nullopt;
}

WorldGraph build_robot_graph(const Scenario& scenario) {
    const GridMap grid(scenario);
    WorldGraph g;
    g.agent_index = 0;
    g.movements = {"forward", "turn_left", "turn_right"};
    const auto& cells = grid.free_cells();
    g.positions.reserve(cells.size() * 4);
    for (Cell c : cells)
        for (int d = 0; d < 4; ++d) g.positions.push_back({0, c, static_cast<Direction>(d)});
    g.effects.assign(g.positions.size() * 3, -1);
    auto id_of = [&](Cell c, Direction d) { return grid.free_index(c) * 4 + static_cast<int>(d); };
    for (std::size_t v = 0; v < g.positions.size(); ++v) {
        const Cell c = g.positions[v].cell;
        const Direction d = *g.positions[v].orientation;
        const Cell ahead = step(c, d);
        if (grid.free(ahead)) g.effects[v * 3 + robot_moves::forward] = id_of(ahead, d);
        g.effects[v * 3 + robot_moves::turn_left] = id_of(c, turn_left(d));
        g.effects[v * 3 + robot_moves::turn_right] = id_of(c, turn_right(d));
    }
    g.initial = id_of(scenario.robot_start, scenario.robot_start_orientation);
    return g;
}

WorldGraph build_opponent_graph(const Scenario& scenario, int agent_index) {
    if (agent_index < 1 || agent_index > static_cast<int>(scenario.opponent_starts.size()))
        fail("opponent index " + std::to_string(agent_index) + " out of range");
    const GridMap grid(scenario);
    WorldGraph g;
    g.agent_index = agent_index;
    g.movements = {"north", "east", "south", "west"};
    const auto& cells = grid.free_cells();
    for (Cell c : cells) g.positions.push_back({agent_index, c, std::nullopt});
    g.effects.assign(g.positions.size() * 4, -1);
    for (std::size_t v = 0; v < cells.size(); ++v) {
        bool any = false;
        for (int d = 0; d < 4; ++d) {
            const Cell t = step(cells[v], static_cast<Direction>(d));
            if (grid.free(t)) {
                g.effects[v * 4 + d] = grid.free_index(t);
                any = true;
            }
        }
        if (!any) fail("isolated cell " + to_string(cells[v]) + ": opponent has no enabled movement");
    }
    g.initial = grid.free_index(scenario.opponent_starts[agent_index - 1]);
    return g;
}

} // namespace gbar
