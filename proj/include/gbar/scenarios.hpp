#pragma once

#include "gbar/grid.hpp"

#include <cstdint>
#include <vector>

namespace gbar::scenarios {

/// Empty n x m room; robot at the top-left corner facing East, opponent
/// starting on the goal in the bottom-right corner.
Scenario empty_room(int width, int height);
inline Scenario sc1(int n) { return empty_room(n, n); }

/// n x n room with a cross in the middle row and column; each arm stops one
/// cell short of the border so the perimeter stays open.
Scenario sc2(int n);
std::vector<Cell> cross_cells(int n);

/// 25 x 25 room with `obstacles` random obstacle cells. Layouts whose free
/// cells are not all connected are rejected and redrawn.
Scenario sc3(int obstacles, std::uint64_t seed, int size = 25);

/// Two rooms side by side in a 20 x 10 grid, separated by a thick wall and
/// joined by a narrow tunnel. `cameras` is 0 or 2; the cameras cover the
/// tunnel and the area in front of each mouth.
Scenario sc4(int cameras);

/// Corridor 4 wide and `length` long, traversed top to bottom. The regions
/// are bands of four rows.
Scenario sc5(int length);

/// True iff all free cells form one 4-connected component.
bool free_cells_connected(const Scenario& scenario);

} // namespace gbar::scenarios
