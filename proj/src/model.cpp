#include "gbar/model.hpp"

#include "gbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("model", message); }

} // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::MC: return "mc";
    case ModelKind::MDP: return "mdp";
    case ModelKind::PG: return "pg";
    }
    return "?";
}

std::string ExplicitModel::describe(StateId s) const {
    if (!has_valuations()) return "s" + std::to_string(s);
    std::string out = "(";
    const auto row = valuation(s);
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (i) out += ',';
        out += variables[i];
        out += '=';
        out += std::to_string(row[i]);
    }
    out += ')';
    return out;
}

ModelBuilder::ModelBuilder(ModelKind kind, std::vector<std::string> variables) {
    model_.kind = kind;
    model_.variables = std::move(variables);
}

StateId ModelBuilder::add_state(Player player, std::uint8_t labels, std::span<const std::int32_t> valuation,
                                std::uint64_t observation) {
    if (model_.player.size() >= std::numeric_limits<StateId>::max()) fail("too many states");
    const auto id = static_cast<StateId>(model_.player.size());
    if (id > 0) model_.choice_offsets.push_back(model_.choice_action.size());
    model_.player.push_back(player);
    model_.labels.push_back(labels);
    model_.observations.push_back(observation);
    if (observation != kNoObservation) any_observation_ = true;
    if (valuation.size() != model_.variables.size()) fail("valuation arity mismatch");
    model_.valuations.insert(model_.valuations.end(), valuation.begin(), valuation.end());
    return id;
}

std::uint32_t ModelBuilder::intern(std::string_view action) {
    auto [it, inserted] = action_ids_.try_emplace(std::string(action), static_cast<std::uint32_t>(model_.action_names.size()));
    if (inserted) model_.action_names.emplace_back(action);
    return it->second;
}

void ModelBuilder::add_choice(std::string_view action) {
    if (model_.player.empty()) fail("choice added before any state");
    if (!model_.choice_action.empty()) model_.transition_offsets.push_back(model_.transitions.size());
    model_.choice_action.push_back(intern(action));
}

void ModelBuilder::add_transition(StateId target, double probability) {
    if (model_.choice_action.empty()) fail("transition added before any choice");
    model_.transitions.push_back({target, probability});
}

ExplicitModel ModelBuilder::finish() {
    if (!model_.player.empty()) model_.choice_offsets.push_back(model_.choice_action.size());
    if (!model_.choice_action.empty()) model_.transition_offsets.push_back(model_.transitions.size());
    if (!any_observation_) model_.observations.clear();
    ExplicitModel out = std::move(model_);
    model_ = ExplicitModel{};
    action_ids_.clear();
    return out;
}

void validate(const ExplicitModel& m, const ValidationOptions& options) {
    const std::size_t n = m.num_states();
    if (n == 0) fail("model has no states");
    if (m.initial >= n) fail("initial state out of range");
    if (m.labels.size() != n) fail("label vector size mismatch");
    if (m.choice_offsets.size() != n + 1) fail("choice offset vector size mismatch");
    if (m.transition_offsets.size() != m.num_choices() + 1) fail("transition offset vector size mismatch");
    if (!m.observations.empty() && m.observations.size() != n) fail("observation vector size mismatch");
    if (m.valuations.size() != n * m.variables.size()) fail("valuation vector size mismatch");
    for (StateId s = 0; s < n; ++s) {
        if (m.choice_count(s) == 0) fail("deadlock state " + m.describe(s));
        switch (m.kind) {
        case ModelKind::MC:
            if (m.choice_count(s) != 1) fail("Markov chain state " + m.describe(s) + " has several actions");
            [[fallthrough]];
        case ModelKind::MDP:
            if (m.player[s] != Player::One && m.player[s] != Player::None)
                fail("state " + m.describe(s) + " of a non-game model is owned by player 2");
            break;
        case ModelKind::PG:
            if (m.player[s] != Player::One && m.player[s] != Player::Two)
                fail("game state " + m.describe(s) + " has no player assigned");
            break;
        }
        std::set<std::uint32_t> names;
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            if (!names.insert(m.choice_action[c]).second)
                fail("duplicate action '" + m.action_name(c) + "' at state " + m.describe(s));
            const auto succ = m.successors(c);
            if (succ.empty()) fail("empty distribution at state " + m.describe(s));
            double sum = 0.0;
            for (const auto& t : succ) {
                if (t.target >= n) fail("transition target out of range at state " + m.describe(s));
                if (!(t.probability > 0.0)) fail("non-positive probability at state " + m.describe(s));
                sum += t.probability;
            }
            if (std::abs(sum - 1.0) > options.row_tolerance)
                fail("transition row of state " + m.describe(s) + " action '" + m.action_name(c) + "' sums to " +
                     std::to_string(sum));
        }
    }
    if (m.has_observations()) {
        std::unordered_map<std::uint64_t, StateId> representative;
        auto actions_of = [&](StateId s) {
            std::vector<std::uint32_t> a;
            for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) a.push_back(m.choice_action[c]);
            std::sort(a.begin(), a.end());
            return a;
        };
        for (StateId s = 0; s < n; ++s) {
            if (m.observations[s] == kNoObservation) continue;
            auto [it, inserted] = representative.try_emplace(m.observations[s], s);
            if (!inserted && actions_of(it->second) != actions_of(s))
                fail("states " + m.describe(it->second) + " and " + m.describe(s) +
                     " share an observation but have different actions");
        }
    }
}

std::vector<bool> reachable_states(const ExplicitModel& m) {
    std::vector<bool> seen(m.num_states(), false);
    std::vector<StateId> stack{m.initial};
    seen[m.initial] = true;
    while (!stack.empty()) {
        const StateId s = stack.back();
        stack.pop_back();
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c)
            for (const auto& t : m.successors(c))
                if (!seen[t.target]) {
                    seen[t.target] = true;
                    stack.push_back(t.target);
                }
    }
    return seen;
}

ExplicitModel make_absorbing(const ExplicitModel& m) {
    ModelBuilder b(m.kind, m.variables);
    for (StateId s = 0; s < m.num_states(); ++s) {
        b.add_state(m.player[s], m.labels[s], m.has_valuations() ? m.valuation(s) : std::span<const std::int32_t>{},
                    m.has_observations() ? m.observations[s] : kNoObservation);
        if (m.labels[s] & (label::goal | label::bad)) {
            b.add_choice("loop");
            b.add_transition(s, 1.0);
            continue;
        }
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            b.add_choice(m.action_name(c));
            for (const auto& t : m.successors(c)) b.add_transition(t.target, t.probability);
        }
    }
    b.set_initial(m.initial);
    return b.finish();
}

ExplicitModel restrict_to_reachable(const ExplicitModel& m) {
    constexpr StateId unset = std::numeric_limits<StateId>::max();
    std::vector<StateId> rename(m.num_states(), unset);
    std::vector<StateId> order{m.initial};
    rename[m.initial] = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const StateId s = order[i];
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c)
            for (const auto& t : m.successors(c))
                if (rename[t.target] == unset) {
                    rename[t.target] = static_cast<StateId>(order.size());
                    order.push_back(t.target);
                }
    }
    ModelBuilder b(m.kind, m.variables);
    for (StateId s : order) {
        b.add_state(m.player[s], m.labels[s], m.has_valuations() ? m.valuation(s) : std::span<const std::int32_t>{},
                    m.has_observations() ? m.observations[s] : kNoObservation);
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            b.add_choice(m.action_name(c));
            for (const auto& t : m.successors(c)) b.add_transition(rename[t.target], t.probability);
        }
    }
    b.set_initial(0);
    return b.finish();
}

} // namespace gbar
