#pragma once

#include "gbar/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gbar {

/// Maximise the probability of reaching `goal` without visiting `bad` first.
struct Query {
    std::uint8_t goal_label = label::goal;
    std::uint8_t bad_label = label::bad;
    std::optional<double> threshold;
};

struct SolverOptions {
    double tolerance = 1e-6;
    std::uint64_t max_iterations = 1'000'000;
};

/// Memoryless deterministic strategies as local choice indices (-1 where the
/// state is not owned by that player).
struct Strategy {
    std::vector<std::int32_t> choice;
    std::vector<std::int32_t> adversary_choice;
};

struct ValueResult {
    std::vector<double> values;
    Strategy strategy;
    std::uint64_t iterations = 0;
    double residual = 0.0;

    double initial_value(const ExplicitModel& model) const { return values[model.initial]; }
};

/// Max (player 1) / min (player 2) reach-avoid values by Gauss-Seidel value
/// iteration from below. Goal and bad states must be absorbing.
ValueResult solve_pg(const ExplicitModel& pg, const Query& query = {}, const SolverOptions& options = {});

/// Same iteration on a model without player-2 states.
ValueResult solve_mdp(const ExplicitModel& mdp, const Query& query = {}, const SolverOptions& options = {});

/// Reach-avoid probabilities of a Markov chain (exactly one choice per state).
ValueResult evaluate_mc(const ExplicitModel& mc, const Query& query = {}, const SolverOptions& options = {});

/// Markov chain obtained by fixing both players' choices.
ExplicitModel induced_mc(const ExplicitModel& model, const Strategy& strategy);

/// Test oracle: enumerates every memoryless deterministic strategy pair,
/// evaluates each induced chain by exact linear solve, and returns
/// max over player 1 of min over player 2 at the initial state.
/// Throws if the number of strategy combinations exceeds `limit`.
double enumerate_optimal(const ExplicitModel& pg, const Query& query = {}, std::uint64_t limit = 1'000'000);

/// Exact reach-avoid probability of the initial state of a one-choice-per-state
/// model, by Gaussian elimination. Intended for small models.
double solve_mc_exactly(const ExplicitModel& mc, const Query& query = {});

} // namespace gbar
