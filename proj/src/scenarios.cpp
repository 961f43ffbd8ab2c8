#include "gbar/scenarios.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <random>

namespace gbar::scenarios {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("gridworld", message); }

std::vector<Cell> rect(int x0, int y0, int x1, int y1) {
    std::vector<Cell> out;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) out.push_back({x, y});
    return out;
}

} // namespace

Scenario empty_room(int width, int height) {
    if (width < 1 || height < 1) fail("room size must be positive");
    if (width * height < 2) fail("room needs at least two cells");
    Scenario s;
    s.name = "room-" + std::to_string(width) + "x" + std::to_string(height);
    s.width = width;
    s.height = height;
    s.robot_start = {0, 0};
    s.robot_start_orientation = Direction::East;
    s.opponent_starts = {{width - 1, height - 1}};
    s.goal_cells = {{width - 1, height - 1}};
    return s;
}

std::vector<Cell> cross_cells(int n) {
    std::vector<Cell> out;
    const int mid = n / 2;
    for (int i = 1; i < n - 1; ++i) {
        out.push_back({mid, i});
        if (i != mid) out.push_back({i, mid});
    }
    std::sort(out.begin(), out.end());
    return out;
}

Scenario sc2(int n) {
    if (n < 5) fail("cross scenario needs a grid of at least 5 x 5");
    Scenario s = empty_room(n, n);
    s.name = "sc2-" + std::to_string(n);
    s.obstacles = cross_cells(n);
    return s;
}

bool free_cells_connected(const Scenario& scenario) {
    const GridMap grid(scenario);
    const auto& cells = grid.free_cells();
    if (cells.empty()) return false;
    std::vector<bool> seen(cells.size(), false);
    std::vector<Cell> stack{cells.front()};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const Cell c = stack.back();
        stack.pop_back();
        for (int d = 0; d < 4; ++d) {
            const Cell t = step(c, static_cast<Direction>(d));
            const int i = grid.free_index(t);
            if (i < 0 || seen[i]) continue;
            seen[i] = true;
            ++count;
            stack.push_back(t);
        }
    }
    return count == cells.size();
}

Scenario sc3(int obstacles, std::uint64_t seed, int size) {
    Scenario base = empty_room(size, size);
    base.name = "sc3-" + std::to_string(obstacles) + "-s" + std::to_string(seed);
    std::vector<Cell> candidates;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const Cell c{x, y};
            if (c == base.robot_start || c == base.goal_cells[0]) continue;
            candidates.push_back(c);
        }
    if (obstacles < 0 || obstacles > static_cast<int>(candidates.size()))
        fail("obstacle count out of range for a " + std::to_string(size) + "x" + std::to_string(size) + " room");

    // Partial Fisher-Yates with explicit modulo keeps layouts identical across standard libraries.
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 10'000; ++attempt) {
        auto pool = candidates;
        Scenario s = base;
        for (int k = 0; k < obstacles; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng() % (pool.size() - k));
            std::swap(pool[k], pool[j]);
            s.obstacles.push_back(pool[k]);
        }
        std::sort(s.obstacles.begin(), s.obstacles.end());
        if (free_cells_connected(s)) return s;
    }
    fail("could not draw a connected layout with " + std::to_string(obstacles) + " obstacles");
}

Scenario sc4(int cameras) {
    if (cameras != 0 && cameras != 2) fail("two-room scenario supports 0 or 2 cameras");
    Scenario s;
    s.name = "sc4-c" + std::to_string(cameras);
    s.width = 20;
    s.height = 10;
    // A wall four cells thick (columns 8..11) pierced by a one-cell tunnel in row 4.
    for (int x = 8; x <= 11; ++x)
        for (int y = 0; y < s.height; ++y)
            if (y != 4) s.obstacles.push_back({x, y});
    s.robot_start = {0, 0};
    s.robot_start_orientation = Direction::East;
    s.opponent_starts = {{19, 9}};
    s.goal_cells = {{19, 9}};
    if (cameras == 2) {
        // The two cameras watch the tunnel and the area in front of either mouth.
        for (Cell c : rect(4, 0, 7, 8)) s.cameras.push_back(c);
        for (Cell c : rect(8, 4, 11, 4)) s.cameras.push_back(c);
        for (Cell c : rect(12, 0, 15, 8)) s.cameras.push_back(c);
        std::sort(s.cameras.begin(), s.cameras.end());
    }
    return s;
}

Scenario sc5(int length) {
    if (length < 4) fail("corridor must be at least 4 long");
    Scenario s = empty_room(4, length);
    s.name = "sc5-" + std::to_string(length);
    s.robot_start_orientation = Direction::South;
    for (int y0 = 0; y0 < length; y0 += 4) s.regions.push_back(rect(0, y0, 3, std::min(length - 1, y0 + 3)));
    return s;
}

} // namespace gbar::scenarios
