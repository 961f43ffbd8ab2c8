#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gbar {

using StateId = std::uint32_t;
using ChoiceId = std::uint64_t;

inline constexpr std::uint64_t kNoObservation = std::numeric_limits<std::uint64_t>::max();

enum class Player : std::uint8_t { None = 0, One = 1, Two = 2 };

enum class ModelKind : std::uint8_t { MC, MDP, PG };

std::string_view to_string(ModelKind kind);

namespace label {
inline constexpr std::uint8_t goal = 1;
inline constexpr std::uint8_t bad = 2;
} // namespace label

struct Transition {
    StateId target;
    double probability;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// One explicit representation for MCs, MDPs, PGs and POMDPs.
///
/// Choices of state s are [choice_offsets[s], choice_offsets[s+1]); the
/// transitions of choice c are [transition_offsets[c], transition_offsets[c+1]).
/// A POMDP is an MDP with a non-empty observation vector. States may carry
/// an integer valuation over `variables` (row-major, one row per state).
struct ExplicitModel {
    ModelKind kind = ModelKind::MDP;
    StateId initial = 0;
    std::vector<Player> player;
    std::vector<ChoiceId> choice_offsets{0};
    std::vector<std::uint32_t> choice_action;
    std::vector<std::uint64_t> transition_offsets{0};
    std::vector<Transition> transitions;
    std::vector<std::string> action_names;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint64_t> observations;
    std::vector<std::string> variables;
    std::vector<std::int32_t> valuations;

    std::size_t num_states() const { return player.size(); }
    std::size_t num_choices() const { return choice_action.size(); }
    std::size_t num_transitions() const { return transitions.size(); }

    ChoiceId first_choice(StateId s) const { return choice_offsets[s]; }
    ChoiceId end_choice(StateId s) const { return choice_offsets[s + 1]; }
    std::size_t choice_count(StateId s) const { return end_choice(s) - first_choice(s); }
    std::span<const Transition> successors(ChoiceId c) const {
        return {transitions.data() + transition_offsets[c], transitions.data() + transition_offsets[c + 1]};
    }
    const std::string& action_name(ChoiceId c) const { return action_names[choice_action[c]]; }

    bool is_goal(StateId s) const { return labels[s] & label::goal; }
    bool is_bad(StateId s) const { return labels[s] & label::bad; }
    bool has_observations() const { return !observations.empty(); }
    bool has_valuations() const { return !variables.empty(); }
    std::span<const std::int32_t> valuation(StateId s) const {
        return {valuations.data() + s * variables.size(), variables.size()};
    }
    /// "(a=1,b=2)" style decoration, or "s<id>" without valuations.
    std::string describe(StateId s) const;

    friend bool operator==(const ExplicitModel&, const ExplicitModel&) = default;
};

/// Appends states and choices in state order.
class ModelBuilder {
public:
    explicit ModelBuilder(ModelKind kind, std::vector<std::string> variables = {});

    /// Starts the next state; states must be started in id order.
    StateId add_state(Player player, std::uint8_t labels = 0, std::span<const std::int32_t> valuation = {},
                      std::uint64_t observation = kNoObservation);
    /// Opens a new choice of the most recently added state.
    void add_choice(std::string_view action);
    void add_transition(StateId target, double probability);

    void set_initial(StateId s) { model_.initial = s; }
    void set_labels(StateId s, std::uint8_t labels) { model_.labels[s] = labels; }
    std::size_t num_states() const { return model_.player.size(); }

    ExplicitModel finish();

private:
    std::uint32_t intern(std::string_view action);

    ExplicitModel model_;
    std::unordered_map<std::string, std::uint32_t> action_ids_;
    bool any_observation_ = false;
};

struct ValidationOptions {
    double row_tolerance = 1e-12;
};

/// Structural checks: offsets, probabilities, row sums, deadlocks, player
/// assignment for the kind, unique action names per state and equal action
/// sets for equal observations. Throws gbar::Error("model", ...).
void validate(const ExplicitModel& model, const ValidationOptions& options = {});

/// States reachable from the initial state via positive-probability transitions.
std::vector<bool> reachable_states(const ExplicitModel& model);

/// Replaces all choices of goal and bad states by a single "loop" self-loop.
ExplicitModel make_absorbing(const ExplicitModel& model);

/// Keeps only reachable states, renumbered in breadth-first order.
ExplicitModel restrict_to_reachable(const ExplicitModel& model);

} // namespace gbar
