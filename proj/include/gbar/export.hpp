#pragma once

#include "gbar/abstraction.hpp"
#include "gbar/model.hpp"

#include <iosfwd>
#include <string>

namespace gbar {

/// Line-based explicit format; parse_explicit(emit_explicit(m)) == m.
///
///   gbar-explicit 1
///   kind pg
///   variables <k> <name>...
///   actions <k> <name>...
///   states <n> initial <id> observations <yes|no>
///   s <player> <labels> [<obs>] <value>... <choices>
///   c <action id> <transitions>
///   t <target> <probability>
std::string emit_explicit(const ExplicitModel& model);
ExplicitModel parse_explicit(std::string_view text);
void write_explicit(const ExplicitModel& model, const std::string& path);
ExplicitModel read_explicit(const std::string& path);

/// Two-module game text for an external stochastic-game checker. Best effort:
/// one global state variable, one command per choice.
std::string emit_prism_pg(const ExplicitModel& pg);
/// POMDP text with an observable class index.
std::string emit_prism_pomdp(const ExplicitModel& pomdp);

/// Graphviz rendering: boxes for player 1, diamonds for player 2, ellipses otherwise.
std::string emit_dot(const ExplicitModel& model, std::size_t max_states = 5000);

/// JSON dump of an observation automaton, and its inverse.
std::string emit_strategy(const ObservationStrategy& strategy);
ObservationStrategy parse_strategy(std::string_view text);

/// Writes `text` to `path`, throwing Error("io", ...) on failure.
void write_file(const std::string& path, std::string_view text);
std::string read_file(const std::string& path);

} // namespace gbar
