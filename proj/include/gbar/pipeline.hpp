#pragma once

#include "gbar/abstraction.hpp"
#include "gbar/evaluation.hpp"
#include "gbar/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gbar {

struct PipelineOptions {
    Refinement refinement = Refinement::OneStep;
    /// Region blocks for region refinement; falls back to the scenario's own
    /// regions, then to bands of four grid rows.
    std::vector<std::vector<Cell>> regions;
    double tolerance = 1e-6;
    std::optional<double> threshold;
    bool certify = true;
    /// Skip the MDP bound when the world MDP would exceed this many states (estimate).
    std::uint64_t mdp_state_limit = 5'000'000;
    bool mdp_bound = true;
    std::uint64_t mc_runs = 0;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct PipelineResult {
    EvaluationReport report;
    ExplicitModel game;
    ValueResult values;
    ObservationStrategy strategy;
    /// Filled when certification or simulation ran.
    std::optional<ExplicitModel> pomdp;
    SimulationResult simulation;

    /// Whether the certified (or, without certification, the game) value meets the threshold.
    bool meets(double threshold) const;
};

/// FNV-1a digest of the canonical scenario text, as 16 hex digits.
std::string scenario_digest(const Scenario& scenario);

RegionPartition partition_for(const Scenario& scenario, const PipelineOptions& options);

/// scenario -> abstract game -> solve -> lift -> certify / bound / simulate.
PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& options = {});

} // namespace gbar
