#include "gbar/solver.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("solver", message); }

enum class Mode { Game, Mdp, Chain };

bool in(std::uint8_t labels, std::uint8_t mask) { return (labels & mask) != 0; }

void check_targets_absorbing(const ExplicitModel& m, const Query& q) {
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!in(m.labels[s], q.goal_label | q.bad_label)) continue;
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            const auto succ = m.successors(c);
            if (succ.size() != 1 || succ[0].target != s)
                fail("non-absorbing target state " + m.describe(s) + "; make goal and bad states absorbing first");
        }
    }
}

/// Predecessor lists over choices: for each state, the choices with an edge into it.
struct Predecessors {
    std::vector<std::uint64_t> offsets;
    std::vector<ChoiceId> choices;
};

Predecessors predecessors(const ExplicitModel& m, const std::vector<bool>* relevant = nullptr) {
    Predecessors p;
    p.offsets.assign(m.num_states() + 1, 0);
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        if (relevant && !(*relevant)[c]) continue;
        for (const auto& t : m.successors(c)) ++p.offsets[t.target + 1];
    }
    for (std::size_t i = 0; i < m.num_states(); ++i) p.offsets[i + 1] += p.offsets[i];
    p.choices.resize(p.offsets.back());
    std::vector<std::uint64_t> fill(p.offsets.begin(), p.offsets.end() - 1);
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        if (relevant && !(*relevant)[c]) continue;
        for (const auto& t : m.successors(c)) p.choices[fill[t.target]++] = c;
    }
    return p;
}

std::vector<StateId> choice_owner(const ExplicitModel& m) {
    std::vector<StateId> owner(m.num_choices());
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) owner[c] = s;
    return owner;
}

/// States that can reach a goal state through non-bad states along some path.
std::vector<bool> can_reach_goal(const ExplicitModel& m, const Query& q, const Predecessors& pred,
                                 const std::vector<StateId>& owner) {
    std::vector<bool> mark(m.num_states(), false);
    std::vector<StateId> stack;
    for (StateId s = 0; s < m.num_states(); ++s)
        if (in(m.labels[s], q.goal_label)) {
            mark[s] = true;
            stack.push_back(s);
        }
    while (!stack.empty()) {
        const StateId t = stack.back();
        stack.pop_back();
        for (auto i = pred.offsets[t]; i < pred.offsets[t + 1]; ++i) {
            const StateId u = owner[pred.choices[i]];
            if (mark[u] || in(m.labels[u], q.bad_label)) continue;
            mark[u] = true;
            stack.push_back(u);
        }
    }
    return mark;
}

double choice_value(const ExplicitModel& m, ChoiceId c, const std::vector<double>& v) {
    double sum = 0.0;
    for (const auto& t : m.successors(c)) sum += t.probability * v[t.target];
    return sum;
}

bool maximizes(const ExplicitModel& m, StateId s) { return m.player[s] != Player::Two; }

Strategy extract_strategy(const ExplicitModel& m, const Query& q, const std::vector<double>& v,
                          const std::vector<bool>& fixed, double eps, const std::vector<StateId>& owner) {
    const std::size_t n = m.num_states();
    Strategy st;
    st.choice.assign(n, -1);
    st.adversary_choice.assign(n, -1);
    std::vector<double> qv(m.num_choices());
    for (ChoiceId c = 0; c < m.num_choices(); ++c) qv[c] = choice_value(m, c, v);

    // Minimiser: any locally optimal choice is optimal; lowest index wins ties.
    std::vector<double> best(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        const ChoiceId first = m.first_choice(s);
        ChoiceId arg = first;
        for (ChoiceId c = first + 1; c < m.end_choice(s); ++c) {
            if (maximizes(m, s) ? qv[c] > qv[arg] : qv[c] < qv[arg]) arg = c;
        }
        best[s] = qv[arg];
        if (!maximizes(m, s)) st.adversary_choice[s] = static_cast<std::int32_t>(arg - first);
    }

    // Maximiser: among eps-optimal choices pick one that makes progress towards
    // the goal in the attractor of optimal moves, so cycling is never chosen.
    std::vector<bool> relevant(m.num_choices(), false);
    std::vector<std::uint32_t> pending(n, 0);
    for (StateId s = 0; s < n; ++s)
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            const bool optimal = maximizes(m, s) ? qv[c] >= best[s] - eps : qv[c] <= best[s] + eps;
            relevant[c] = optimal;
            if (optimal && !maximizes(m, s)) ++pending[s];
        }
    const Predecessors pred = predecessors(m, &relevant);
    std::vector<bool> ranked(n, false);
    std::vector<bool> active(m.num_choices(), false);
    std::vector<StateId> layer;
    for (StateId s = 0; s < n; ++s)
        if (in(m.labels[s], q.goal_label)) {
            ranked[s] = true;
            layer.push_back(s);
        }
    std::vector<StateId> touched;
    std::vector<bool> is_touched(n, false);
    while (!layer.empty()) {
        touched.clear();
        for (StateId t : layer)
            for (auto i = pred.offsets[t]; i < pred.offsets[t + 1]; ++i) {
                const ChoiceId c = pred.choices[i];
                if (active[c]) continue;
                active[c] = true;
                const StateId u = owner[c];
                if (ranked[u] || fixed[u]) continue;
                if (!maximizes(m, u)) --pending[u];
                if (!is_touched[u]) {
                    is_touched[u] = true;
                    touched.push_back(u);
                }
            }
        std::vector<StateId> next;
        for (StateId u : touched) {
            is_touched[u] = false;
            if (maximizes(m, u)) {
                const ChoiceId first = m.first_choice(u);
                ChoiceId arg = std::numeric_limits<ChoiceId>::max();
                for (ChoiceId c = first; c < m.end_choice(u); ++c)
                    if (active[c] && (arg == std::numeric_limits<ChoiceId>::max() || qv[c] > qv[arg])) arg = c;
                st.choice[u] = static_cast<std::int32_t>(arg - first);
                ranked[u] = true;
                next.push_back(u);
            } else if (pending[u] == 0) {
                ranked[u] = true;
                next.push_back(u);
            }
        }
        std::sort(next.begin(), next.end());
        layer = std::move(next);
    }
    for (StateId s = 0; s < n; ++s) {
        if (!maximizes(m, s) || st.choice[s] >= 0) continue;
        const ChoiceId first = m.first_choice(s);
        ChoiceId arg = first;
        for (ChoiceId c = first + 1; c < m.end_choice(s); ++c)
            if (qv[c] > qv[arg]) arg = c;
        st.choice[s] = static_cast<std::int32_t>(arg - first);
    }
    return st;
}

ValueResult solve(const ExplicitModel& m, const Query& q, const SolverOptions& opt, Mode mode) {
    if (!(opt.tolerance > 0.0)) fail("tolerance must be positive");
    if (q.threshold && (*q.threshold < 0.0 || *q.threshold > 1.0)) fail("threshold must lie in [0,1]");
    const std::size_t n = m.num_states();
    if (n == 0) fail("empty model");
    for (StateId s = 0; s < n; ++s) {
        if (m.choice_count(s) == 0) fail("deadlock state " + m.describe(s));
        switch (mode) {
        case Mode::Game:
            if (m.player[s] == Player::None) fail("game state " + m.describe(s) + " has no player assigned");
            break;
        case Mode::Mdp:
            if (m.player[s] == Player::Two) fail("MDP state " + m.describe(s) + " is owned by player 2");
            break;
        case Mode::Chain:
            if (m.choice_count(s) != 1) fail("Markov chain state " + m.describe(s) + " has multiple actions");
            break;
        }
    }
    check_targets_absorbing(m, q);

    const auto owner = choice_owner(m);
    const Predecessors pred = predecessors(m);
    const auto reach = can_reach_goal(m, q, pred, owner);

    ValueResult result;
    result.values.assign(n, 0.0);
    std::vector<bool> fixed(n, false);
    for (StateId s = 0; s < n; ++s) {
        if (in(m.labels[s], q.goal_label)) {
            result.values[s] = 1.0;
            fixed[s] = true;
        } else if (in(m.labels[s], q.bad_label) || !reach[s]) {
            fixed[s] = true;
        }
    }
    if (mode == Mode::Chain) {
        // Probability-one states: those that cannot reach a zero state while avoiding the goal.
        std::vector<bool> may_fail(n, false);
        std::vector<StateId> stack;
        for (StateId s = 0; s < n; ++s)
            if (fixed[s] && result.values[s] == 0.0) {
                may_fail[s] = true;
                stack.push_back(s);
            }
        while (!stack.empty()) {
            const StateId t = stack.back();
            stack.pop_back();
            for (auto i = pred.offsets[t]; i < pred.offsets[t + 1]; ++i) {
                const StateId u = owner[pred.choices[i]];
                if (may_fail[u] || in(m.labels[u], q.goal_label)) continue;
                may_fail[u] = true;
                stack.push_back(u);
            }
        }
        for (StateId s = 0; s < n; ++s)
            if (!may_fail[s] && !fixed[s]) {
                result.values[s] = 1.0;
                fixed[s] = true;
            }
    }

    std::vector<StateId> sweep;
    for (StateId s = static_cast<StateId>(n); s-- > 0;)
        if (!fixed[s]) sweep.push_back(s);

    auto& v = result.values;
    double residual = 0.0, previous = 0.0;
    std::uint64_t iterations = 0;
    if (!sweep.empty()) {
        do {
            if (iterations >= opt.max_iterations)
                fail("value iteration did not converge within " + std::to_string(opt.max_iterations) +
                     " sweeps (residual " + std::to_string(residual) + "); loosen the tolerance or raise the cap");
            residual = 0.0;
            for (StateId s : sweep) {
                const ChoiceId first = m.first_choice(s);
                double value = choice_value(m, first, v);
                const bool maxi = maximizes(m, s);
                for (ChoiceId c = first + 1; c < m.end_choice(s); ++c) {
                    const double qc = choice_value(m, c, v);
                    value = maxi ? std::max(value, qc) : std::min(value, qc);
                }
                residual = std::max(residual, std::abs(value - v[s]));
                v[s] = value;
            }
            ++iterations;
            // A small residual alone does not bound the distance to the fixed
            // point when convergence is slow; extrapolate with the observed
            // contraction rate and keep sweeping until that tail is below tol/2.
            const double rate = previous > 0.0 ? residual / previous : 1.0;
            previous = residual;
            if (residual < opt.tolerance && rate < 1.0 && residual * rate / (1.0 - rate) < opt.tolerance / 2) break;
        } while (residual > 0.0);
    }
    result.iterations = iterations;
    result.residual = residual;
    result.strategy = extract_strategy(m, q, v, fixed, opt.tolerance, owner);
    return result;
}

/// Reach-avoid value of every state of an induced chain, by Gaussian elimination.
std::vector<double> exact_chain_values(std::size_t n, StateId initial_unused,
                                       const std::vector<std::vector<Transition>>& rows,
                                       const std::vector<std::uint8_t>& labels, const Query& q) {
    (void)initial_unused;
    // Zero states: cannot reach the goal avoiding bad.
    std::vector<bool> reach(n, false);
    bool changed = true;
    for (std::size_t s = 0; s < n; ++s) reach[s] = in(labels[s], q.goal_label);
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (reach[s] || in(labels[s], q.bad_label)) continue;
            for (const auto& t : rows[s])
                if (reach[t.target]) {
                    reach[s] = true;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<int> col(n, -1);
    std::vector<std::size_t> unknown;
    for (std::size_t s = 0; s < n; ++s)
        if (reach[s] && !in(labels[s], q.goal_label)) {
            col[s] = static_cast<int>(unknown.size());
            unknown.push_back(s);
        }
    const std::size_t k = unknown.size();
    std::vector<double> a(k * (k + 1), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double* row = &a[i * (k + 1)];
        row[i] += 1.0;
        for (const auto& t : rows[unknown[i]]) {
            if (in(labels[t.target], q.goal_label))
                row[k] += t.probability;
            else if (col[t.target] >= 0)
                row[col[t.target]] -= t.probability;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t piv = i;
        for (std::size_t r = i + 1; r < k; ++r)
            if (std::abs(a[r * (k + 1) + i]) > std::abs(a[piv * (k + 1) + i])) piv = r;
        if (piv != i)
            for (std::size_t c = 0; c <= k; ++c) std::swap(a[i * (k + 1) + c], a[piv * (k + 1) + c]);
        const double d = a[i * (k + 1) + i];
        for (std::size_t r = 0; r < k; ++r) {
            if (r == i) continue;
            const double f = a[r * (k + 1) + i] / d;
            if (f == 0.0) continue;
            for (std::size_t c = i; c <= k; ++c) a[r * (k + 1) + c] -= f * a[i * (k + 1) + c];
        }
    }
    std::vector<double> values(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        if (in(labels[s], q.goal_label)) values[s] = 1.0;
    for (std::size_t i = 0; i < k; ++i) values[unknown[i]] = a[i * (k + 1) + k] / a[i * (k + 1) + i];
    return values;
}

} // namespace

ValueResult solve_pg(const ExplicitModel& pg, const Query& query, const SolverOptions& options) {
    return solve(pg, query, options, Mode::Game);
}

ValueResult solve_mdp(const ExplicitModel& mdp, const Query& query, const SolverOptions& options) {
    return solve(mdp, query, options, Mode::Mdp);
}

ValueResult evaluate_mc(const ExplicitModel& mc, const Query& query, const SolverOptions& options) {
    return solve(mc, query, options, Mode::Chain);
}

ExplicitModel induced_mc(const ExplicitModel& m, const Strategy& strategy) {
    ModelBuilder b(ModelKind::MC, m.variables);
    for (StateId s = 0; s < m.num_states(); ++s) {
        b.add_state(Player::None, m.labels[s], m.has_valuations() ? m.valuation(s) : std::span<const std::int32_t>{},
                    m.has_observations() ? m.observations[s] : kNoObservation);
        std::int32_t local = 0;
        if (m.choice_count(s) > 1) {
            local = m.player[s] == Player::Two ? strategy.adversary_choice.at(s) : strategy.choice.at(s);
            if (local < 0 || static_cast<std::size_t>(local) >= m.choice_count(s))
                fail("strategy undefined at state " + m.describe(s));
        }
        const ChoiceId c = m.first_choice(s) + static_cast<ChoiceId>(local);
        b.add_choice(m.action_name(c));
        for (const auto& t : m.successors(c)) b.add_transition(t.target, t.probability);
    }
    b.set_initial(m.initial);
    return b.finish();
}

double solve_mc_exactly(const ExplicitModel& mc, const Query& query) {
    std::vector<std::vector<Transition>> rows(mc.num_states());
    for (StateId s = 0; s < mc.num_states(); ++s) {
        if (mc.choice_count(s) != 1) fail("Markov chain state " + mc.describe(s) + " has multiple actions");
        const auto succ = mc.successors(mc.first_choice(s));
        rows[s].assign(succ.begin(), succ.end());
    }
    return exact_chain_values(mc.num_states(), mc.initial, rows, mc.labels, query)[mc.initial];
}

double enumerate_optimal(const ExplicitModel& pg, const Query& query, std::uint64_t limit) {
    const std::size_t n = pg.num_states();
    for (StateId s = 0; s < n; ++s)
        if (pg.choice_count(s) == 0) fail("deadlock state " + pg.describe(s));

    // Choices only matter where the play can actually arrive, so strategies
    // are enumerated lazily: branch on the first reachable undecided state of
    // the player being enumerated. States never reached keep choice 0.
    constexpr std::size_t kOpen = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> pick(n, kOpen);
    std::vector<std::vector<Transition>> rows(n);
    std::uint64_t pairs = 0;

    auto first_open = [&](Player who) -> std::optional<StateId> {
        std::vector<bool> seen(n, false);
        std::vector<StateId> stack{pg.initial};
        seen[pg.initial] = true;
        std::optional<StateId> found;
        while (!stack.empty()) {
            const StateId s = stack.back();
            stack.pop_back();
            ChoiceId lo = pg.first_choice(s), hi = pg.end_choice(s);
            if (pg.choice_count(s) > 1) {
                if (pick[s] != kOpen) {
                    lo += static_cast<ChoiceId>(pick[s]);
                    hi = lo + 1;
                } else if (pg.player[s] == who) {
                    if (!found || s < *found) found = s;
                    continue;
                }
            }
            for (ChoiceId c = lo; c < hi; ++c)
                for (const auto& t : pg.successors(c))
                    if (!seen[t.target]) {
                        seen[t.target] = true;
                        stack.push_back(t.target);
                    }
        }
        return found;
    };

    auto evaluate = [&]() {
        if (++pairs > limit)
            fail("instance too large for exhaustive enumeration (more than " + std::to_string(limit) +
                 " strategy pairs)");
        for (StateId s = 0; s < n; ++s) {
            const std::size_t k = pg.choice_count(s) > 1 && pick[s] != kOpen ? pick[s] : 0;
            const auto succ = pg.successors(pg.first_choice(s) + static_cast<ChoiceId>(k));
            rows[s].assign(succ.begin(), succ.end());
        }
        return exact_chain_values(n, pg.initial, rows, pg.labels, query)[pg.initial];
    };

    // Player 2 minimises once player 1 is fully decided on the reachable part.
    std::function<double()> min_over_p2 = [&]() -> double {
        const auto s = first_open(Player::Two);
        if (!s) return evaluate();
        double worst = 2.0;
        for (std::size_t k = 0; k < pg.choice_count(*s); ++k) {
            pick[*s] = k;
            worst = std::min(worst, min_over_p2());
        }
        pick[*s] = kOpen;
        return worst;
    };
    std::function<double()> max_over_p1 = [&]() -> double {
        const auto s = first_open(Player::One);
        if (!s) return min_over_p2();
        double best = -1.0;
        for (std::size_t k = 0; k < pg.choice_count(*s); ++k) {
            pick[*s] = k;
            best = std::max(best, max_over_p1());
        }
        pick[*s] = kOpen;
        return best;
    };
    return max_over_p1();
}

} // namespace gbar
