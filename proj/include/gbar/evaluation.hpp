#pragma once

#include "gbar/abstraction.hpp"
#include "gbar/model.hpp"
#include "gbar/solver.hpp"

#include <cstdint>
#include <string>

namespace gbar {

/// Value of the lifted strategy on the POMDP: the product chain of POMDP
/// states and automaton memory, evaluated for reach-avoid.
double certify(const ExplicitModel& pomdp, const ObservationStrategy& strategy, double tolerance = 1e-12);

/// The product chain itself (valuation variables: state mem).
ExplicitModel certification_chain(const ExplicitModel& pomdp, const ObservationStrategy& strategy);

struct SimulationOptions {
    std::uint64_t runs = 10'000;
    /// Steps before a run is counted as a failure; 0 picks 100 x (width + height) for world models.
    std::uint64_t horizon = 0;
    std::uint64_t seed = 1;
    /// 0 uses the hardware concurrency.
    unsigned threads = 0;
};

struct SimulationResult {
    std::uint64_t runs = 0;
    std::uint64_t successes = 0;
    std::uint64_t truncated = 0;
    double estimate = 0.0;
    /// Wilson 95% score interval.
    double low = 0.0;
    double high = 0.0;

    double half_width() const { return (high - low) / 2.0; }
};

/// Samples runs of the POMDP under the strategy. The outcome is independent of
/// the thread count: run k draws from its own generator seeded from (seed, k).
SimulationResult simulate(const ExplicitModel& pomdp, const ObservationStrategy& strategy,
                          const SimulationOptions& options = {});

/// Optimal reach-avoid value of the fully observable world MDP.
double upper_bound(const ExplicitModel& world_mdp, double tolerance = 1e-9);

/// Wilson score interval for k successes in n trials at the given z.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t runs, double z = 1.959963984540054);

struct EvaluationReport {
    std::string scenario;
    std::string refinement;
    std::string digest;
    std::size_t states = 0;
    std::uint64_t choices = 0;
    std::uint64_t transitions = 0;
    double pg_value = 0.0;
    double certified_value = -1.0;
    double mdp_bound = -1.0;
    double mc_estimate = -1.0;
    double mc_half_width = 0.0;
    double build_s = 0.0;
    double solve_s = 0.0;
    std::size_t memory_states = 0;
};

/// Column header matching report_csv_row.
std::string report_csv_header();
std::string report_csv_row(const EvaluationReport& r);
/// Human-readable multi-line summary.
std::string report_text(const EvaluationReport& r);

} // namespace gbar
