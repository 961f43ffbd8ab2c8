#include "gbar/evaluation.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>
#include <unordered_map>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("evaluation", message); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Per memory state, the POMDP action id the strategy plays (or -1 if the
/// POMDP never uses that name).
std::vector<std::int64_t> action_ids(const ExplicitModel& pomdp, const ObservationStrategy& strategy) {
    std::unordered_map<std::string, std::int64_t> by_name;
    for (std::size_t a = 0; a < pomdp.action_names.size(); ++a) by_name.emplace(pomdp.action_names[a], a);
    std::vector<std::int64_t> ids(strategy.memory_size(), -1);
    for (std::size_t m = 0; m < ids.size(); ++m)
        if (auto it = by_name.find(strategy.action[m]); it != by_name.end()) ids[m] = it->second;
    return ids;
}

ChoiceId choice_for(const ExplicitModel& pomdp, StateId s, std::int64_t action, const ObservationStrategy& strategy,
                    std::uint32_t memory) {
    if (pomdp.labels[s]) return pomdp.first_choice(s);
    for (ChoiceId c = pomdp.first_choice(s); c < pomdp.end_choice(s); ++c)
        if (pomdp.choice_action[c] == action) return c;
    fail("strategy plays '" + strategy.action[memory] + "' in memory state " + std::to_string(memory) +
         ", which is not available at " + pomdp.describe(s));
}

void check_inputs(const ExplicitModel& pomdp, const ObservationStrategy& strategy) {
    if (!pomdp.has_observations()) fail("certification needs a POMDP with observations");
    if (strategy.memory_size() == 0) fail("empty strategy");
    if (strategy.observation[strategy.initial] != pomdp.observations[pomdp.initial])
        fail("initial memory state does not match the initial observation");
}

std::uint32_t next_memory(const ObservationStrategy& strategy, std::uint32_t memory, std::uint64_t obs) {
    const auto next = strategy.next(memory, obs);
    if (!next)
        fail("memory update undefined for memory state " + std::to_string(memory) + " and observation " +
             std::to_string(obs));
    return *next;
}

} // namespace

ExplicitModel certification_chain(const ExplicitModel& pomdp, const ObservationStrategy& strategy) {
    check_inputs(pomdp, strategy);
    const auto actions = action_ids(pomdp, strategy);
    const std::uint64_t mem = strategy.memory_size();

    std::unordered_map<std::uint64_t, StateId> index;
    std::vector<std::uint64_t> order;
    auto intern = [&](StateId s, std::uint32_t m) {
        const std::uint64_t key = static_cast<std::uint64_t>(s) * mem + m;
        auto [it, inserted] = index.try_emplace(key, static_cast<StateId>(order.size()));
        if (inserted) order.push_back(key);
        return it->second;
    };

    ModelBuilder out(ModelKind::MC, {"state", "mem"});
    intern(pomdp.initial, strategy.initial);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto s = static_cast<StateId>(order[i] / mem);
        const auto m = static_cast<std::uint32_t>(order[i] % mem);
        const std::int32_t row[2] = {static_cast<std::int32_t>(s), static_cast<std::int32_t>(m)};
        out.add_state(Player::None, pomdp.labels[s], row);
        if (pomdp.labels[s]) {
            out.add_choice("loop");
            out.add_transition(static_cast<StateId>(i), 1.0);
            continue;
        }
        const ChoiceId c = choice_for(pomdp, s, actions[m], strategy, m);
        out.add_choice(pomdp.action_name(c));
        for (const auto& t : pomdp.successors(c))
            out.add_transition(intern(t.target, next_memory(strategy, m, pomdp.observations[t.target])), t.probability);
    }
    out.set_initial(0);
    return out.finish();
}

double certify(const ExplicitModel& pomdp, const ObservationStrategy& strategy, double tolerance) {
    const ExplicitModel mc = certification_chain(pomdp, strategy);
    return evaluate_mc(mc, {}, {.tolerance = tolerance}).initial_value(mc);
}

double upper_bound(const ExplicitModel& world_mdp, double tolerance) {
    return solve_mdp(world_mdp, {}, {.tolerance = tolerance}).initial_value(world_mdp);
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t runs, double z) {
    if (runs == 0) return {0.0, 1.0};
    const double n = static_cast<double>(runs);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    // The bounds are exact at the extremes; rounding would leave them a hair off.
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == runs ? 1.0 : std::min(1.0, centre + half)};
}

SimulationResult simulate(const ExplicitModel& pomdp, const ObservationStrategy& strategy,
                          const SimulationOptions& options) {
    check_inputs(pomdp, strategy);
    const auto actions = action_ids(pomdp, strategy);

    std::uint64_t horizon = options.horizon;
    if (horizon == 0) {
        horizon = 100'000;
        if (pomdp.variables.size() >= 2 && pomdp.variables[0] == "rx" && pomdp.variables[1] == "ry") {
            std::int64_t w = 0, h = 0;
            for (StateId s = 0; s < pomdp.num_states(); ++s) {
                const auto row = pomdp.valuation(s);
                w = std::max<std::int64_t>(w, row[0] + 1);
                h = std::max<std::int64_t>(h, row[1] + 1);
            }
            // A round of the game is one move per agent; count rounds, not half-steps.
            horizon = static_cast<std::uint64_t>(100 * (w + h));
        }
    }

    enum Outcome : std::uint8_t { Fail, Success, Truncated };
    auto run_once = [&](std::uint64_t k) {
        std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(k)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        StateId s = pomdp.initial;
        std::uint32_t m = strategy.initial;
        for (std::uint64_t step = 0;; ++step) {
            if (pomdp.is_goal(s)) return Success;
            if (pomdp.is_bad(s)) return Fail;
            if (step >= horizon * 2) return Truncated;
            const ChoiceId c = choice_for(pomdp, s, actions[m], strategy, m);
            const auto succ = pomdp.successors(c);
            double u = unit(rng);
            StateId t = succ.back().target;
            for (const auto& e : succ) {
                if (u < e.probability) {
                    t = e.target;
                    break;
                }
                u -= e.probability;
            }
            m = next_memory(strategy, m, pomdp.observations[t]);
            s = t;
        }
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, options.runs)));
    std::vector<std::uint64_t> successes(threads, 0), truncated(threads, 0);
    std::vector<std::exception_ptr> errors(threads);
    auto worker = [&](unsigned t) {
        try {
            for (std::uint64_t k = t; k < options.runs; k += threads) {
                const Outcome o = run_once(k);
                successes[t] += o == Success;
                truncated[t] += o == Truncated;
            }
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SimulationResult r;
    r.runs = options.runs;
    for (unsigned t = 0; t < threads; ++t) {
        r.successes += successes[t];
        r.truncated += truncated[t];
    }
    r.estimate = r.runs ? static_cast<double>(r.successes) / static_cast<double>(r.runs) : 0.0;
    std::tie(r.low, r.high) = wilson_interval(r.successes, r.runs);
    return r;
}

std::string report_csv_header() {
    return "scenario,states,choices,transitions,pg_value,certified_value,mdp_bound,mc_estimate,build_s,solve_s";
}

namespace {
std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}
std::string optional_value(double v) { return v < 0 ? "" : fmt("%.6f", v); }
} // namespace

std::string report_csv_row(const EvaluationReport& r) {
    return r.scenario + "," + std::to_string(r.states) + "," + std::to_string(r.choices) + "," +
           std::to_string(r.transitions) + "," + fmt("%.6f", r.pg_value) + "," + optional_value(r.certified_value) +
           "," + optional_value(r.mdp_bound) + "," + optional_value(r.mc_estimate) + "," + fmt("%.3f", r.build_s) +
           "," + fmt("%.3f", r.solve_s);
}

std::string report_text(const EvaluationReport& r) {
    std::string out;
    out += "scenario        " + r.scenario + " (digest " + r.digest + ")\n";
    out += "refinement      " + r.refinement + "\n";
    out += "game            " + std::to_string(r.states) + " states, " + std::to_string(r.choices) + " choices, " +
           std::to_string(r.transitions) + " transitions\n";
    out += "pg value        " + fmt("%.6f", r.pg_value) + "\n";
    if (r.certified_value >= 0)
        out += "certified       " + fmt("%.6f", r.certified_value) + " (strategy memory " +
               std::to_string(r.memory_states) + ")\n";
    if (r.mdp_bound >= 0) out += "mdp bound       " + fmt("%.6f", r.mdp_bound) + "\n";
    if (r.mc_estimate >= 0)
        out += "monte carlo     " + fmt("%.6f", r.mc_estimate) + " +/- " + fmt("%.6f", r.mc_half_width) + "\n";
    out += "time            build " + fmt("%.3f", r.build_s) + " s, solve " + fmt("%.3f", r.solve_s) + " s\n";
    return out;
}

} // namespace gbar
