#include "gbar/export.hpp"

#include "gbar/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace gbar {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("export", message); }

std::string number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

/// Whitespace tokenizer over the explicit format with line tracking for errors.
class Tokens {
public:
    explicit Tokens(std::string_view text) : text_(text) {}

    std::string_view next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ == text_.size()) error("unexpected end of input");
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }
    void expect(std::string_view word) {
        if (next() != word) error("expected '" + std::string(word) + "'");
    }
    template <typename T>
    T integer() {
        const auto tok = next();
        T v{};
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) error("bad integer '" + std::string(tok) + "'");
        return v;
    }
    double real() {
        const auto tok = next();
        double v{};
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) error("bad number '" + std::string(tok) + "'");
        return v;
    }
    bool done() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return pos_ == text_.size();
    }
    [[noreturn]] void error(const std::string& what) const {
        fail("explicit format, line " + std::to_string(line_) + ": " + what);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

void check_name(const std::string& name) {
    if (name.empty()) fail("empty name cannot be written");
    for (char c : name)
        if (std::isspace(static_cast<unsigned char>(c))) fail("name '" + name + "' contains whitespace");
}

} // namespace

std::string emit_explicit(const ExplicitModel& m) {
    std::ostringstream out;
    out << "gbar-explicit 1\n";
    out << "kind " << to_string(m.kind) << "\n";
    out << "variables " << m.variables.size();
    for (const auto& v : m.variables) {
        check_name(v);
        out << ' ' << v;
    }
    out << "\nactions " << m.action_names.size();
    for (const auto& a : m.action_names) {
        check_name(a);
        out << ' ' << a;
    }
    out << "\nstates " << m.num_states() << " initial " << m.initial << " observations "
        << (m.has_observations() ? "yes" : "no") << "\n";
    for (StateId s = 0; s < m.num_states(); ++s) {
        out << "s " << static_cast<int>(m.player[s]) << ' ' << static_cast<int>(m.labels[s]);
        if (m.has_observations()) out << ' ' << m.observations[s];
        for (auto v : m.valuation(s)) out << ' ' << v;
        out << ' ' << m.choice_count(s) << '\n';
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
            const auto succ = m.successors(c);
            out << "c " << m.choice_action[c] << ' ' << succ.size() << '\n';
            for (const auto& t : succ) out << "t " << t.target << ' ' << number(t.probability) << '\n';
        }
    }
    return out.str();
}

ExplicitModel parse_explicit(std::string_view text) {
    Tokens in(text);
    in.expect("gbar-explicit");
    if (in.integer<int>() != 1) in.error("unsupported format version");
    ExplicitModel m;
    in.expect("kind");
    const auto kind = in.next();
    if (kind == "mc")
        m.kind = ModelKind::MC;
    else if (kind == "mdp")
        m.kind = ModelKind::MDP;
    else if (kind == "pg")
        m.kind = ModelKind::PG;
    else
        in.error("unknown model kind '" + std::string(kind) + "'");
    in.expect("variables");
    for (auto k = in.integer<std::size_t>(); k > 0; --k) m.variables.emplace_back(in.next());
    in.expect("actions");
    for (auto k = in.integer<std::size_t>(); k > 0; --k) m.action_names.emplace_back(in.next());
    in.expect("states");
    const auto n = in.integer<std::size_t>();
    in.expect("initial");
    m.initial = in.integer<StateId>();
    in.expect("observations");
    const auto obs = in.next();
    if (obs != "yes" && obs != "no") in.error("observations must be yes or no");
    const bool has_obs = obs == "yes";

    m.player.reserve(n);
    m.labels.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        in.expect("s");
        const int player = in.integer<int>();
        if (player < 0 || player > 2) in.error("bad player");
        m.player.push_back(static_cast<Player>(player));
        m.labels.push_back(in.integer<std::uint8_t>());
        if (has_obs) m.observations.push_back(in.integer<std::uint64_t>());
        for (std::size_t v = 0; v < m.variables.size(); ++v) m.valuations.push_back(in.integer<std::int32_t>());
        for (auto c = in.integer<std::size_t>(); c > 0; --c) {
            in.expect("c");
            const auto action = in.integer<std::uint32_t>();
            if (action >= m.action_names.size()) in.error("action id out of range");
            m.choice_action.push_back(action);
            for (auto t = in.integer<std::size_t>(); t > 0; --t) {
                in.expect("t");
                const auto target = in.integer<StateId>();
                m.transitions.push_back({target, in.real()});
            }
            m.transition_offsets.push_back(m.transitions.size());
        }
        m.choice_offsets.push_back(m.choice_action.size());
    }
    if (!in.done()) in.error("trailing content");
    validate(m);
    return m;
}

void write_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("io", "write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_explicit(const ExplicitModel& model, const std::string& path) { write_file(path, emit_explicit(model)); }
ExplicitModel read_explicit(const std::string& path) { return parse_explicit(read_file(path)); }

namespace {

std::string state_set(const ExplicitModel& m, std::uint8_t mask) {
    std::string out;
    for (StateId s = 0; s < m.num_states(); ++s)
        if (m.labels[s] & mask) out += (out.empty() ? "" : " | ") + ("s=" + std::to_string(s));
    return out.empty() ? "false" : out;
}

std::string update(StateId target, const std::string& extra) {
    return "(s'=" + std::to_string(target) + ")" + extra;
}

void emit_commands(std::ostringstream& out, const ExplicitModel& m, StateId s,
                   const std::vector<std::string>* observation_updates) {
    for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c) {
        out << "  [" << (m.kind == ModelKind::PG ? "" : m.action_name(c)) << "] s=" << s << " -> ";
        bool first = true;
        for (const auto& t : m.successors(c)) {
            if (!first) out << " + ";
            first = false;
            const std::string extra = observation_updates ? (*observation_updates)[t.target] : "";
            out << number(t.probability) << ":" << update(t.target, extra);
        }
        out << ";";
        if (m.kind == ModelKind::PG) out << " // " << m.action_name(c);
        out << "\n";
    }
}

} // namespace

std::string emit_prism_pg(const ExplicitModel& pg) {
    if (pg.kind != ModelKind::PG) fail("game emission needs a game model with player assignment");
    std::ostringstream out;
    out << "// explicit two-player game, " << pg.num_states() << " states\n";
    out << "// property: <<robot>> Pmax=? [ !\"bad\" U \"goal\" ]\n";
    out << "smg\n\n";
    out << "player robot\n  robot\nendplayer\n";
    out << "player adversary\n  adversary\nendplayer\n\n";
    out << "global s : [0.." << (pg.num_states() ? pg.num_states() - 1 : 0) << "] init " << pg.initial << ";\n\n";
    for (Player p : {Player::One, Player::Two}) {
        out << "module " << (p == Player::One ? "robot" : "adversary") << "\n";
        for (StateId s = 0; s < pg.num_states(); ++s)
            if (pg.player[s] == p) emit_commands(out, pg, s, nullptr);
        out << "endmodule\n\n";
    }
    out << "label \"goal\" = " << state_set(pg, label::goal) << ";\n";
    out << "label \"bad\" = " << state_set(pg, label::bad) << ";\n";
    return out.str();
}

std::string emit_prism_pomdp(const ExplicitModel& pomdp) {
    if (pomdp.kind != ModelKind::MDP || !pomdp.has_observations())
        fail("POMDP emission needs an MDP with observations");
    // Observation keys are renumbered densely in order of first appearance.
    std::map<std::uint64_t, int> dense;
    for (StateId s = 0; s < pomdp.num_states(); ++s)
        dense.try_emplace(pomdp.observations[s], static_cast<int>(dense.size()));
    std::vector<std::string> obs_update(pomdp.num_states());
    for (StateId s = 0; s < pomdp.num_states(); ++s)
        obs_update[s] = "&(o'=" + std::to_string(dense[pomdp.observations[s]]) + ")";

    std::ostringstream out;
    out << "// explicit POMDP, " << pomdp.num_states() << " states, " << dense.size() << " observations\n";
    out << "// property: Pmax=? [ !\"bad\" U \"goal\" ]\n";
    out << "pomdp\n\nobservables\n  o\nendobservables\n\n";
    out << "module world\n";
    out << "  s : [0.." << pomdp.num_states() - 1 << "] init " << pomdp.initial << ";\n";
    out << "  o : [0.." << dense.size() - 1 << "] init " << dense[pomdp.observations[pomdp.initial]] << ";\n";
    for (StateId s = 0; s < pomdp.num_states(); ++s) emit_commands(out, pomdp, s, &obs_update);
    out << "endmodule\n\n";
    out << "label \"goal\" = " << state_set(pomdp, label::goal) << ";\n";
    out << "label \"bad\" = " << state_set(pomdp, label::bad) << ";\n";
    return out.str();
}

std::string emit_dot(const ExplicitModel& m, std::size_t max_states) {
    if (m.num_states() > max_states)
        fail("model has " + std::to_string(m.num_states()) + " states, above the DOT limit of " +
             std::to_string(max_states));
    std::ostringstream out;
    out << "digraph model {\n  rankdir=LR;\n";
    for (StateId s = 0; s < m.num_states(); ++s) {
        const char* shape = m.player[s] == Player::Two ? "diamond" : (m.player[s] == Player::One && m.kind == ModelKind::PG ? "box" : "ellipse");
        out << "  s" << s << " [label=\"" << s;
        if (m.has_valuations()) out << "\\n" << m.describe(s);
        out << "\", shape=" << shape;
        if (m.is_goal(s)) out << ", goal=true, style=filled, fillcolor=palegreen";
        else if (m.is_bad(s)) out << ", bad=true, style=filled, fillcolor=salmon";
        if (s == m.initial) out << ", penwidth=2";
        out << "];\n";
    }
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ChoiceId c = m.first_choice(s); c < m.end_choice(s); ++c)
            for (const auto& t : m.successors(c)) {
                out << "  s" << s << " -> s" << t.target << " [label=\"" << m.action_name(c);
                if (t.probability != 1.0) out << " " << number(t.probability);
                out << "\"];\n";
            }
    out << "}\n";
    return out.str();
}

std::string emit_strategy(const ObservationStrategy& strategy) {
    nlohmann::json doc;
    doc["initial"] = strategy.initial;
    auto& memory = doc["memory"] = nlohmann::json::array();
    for (std::size_t m = 0; m < strategy.memory_size(); ++m) {
        nlohmann::json row;
        row["observation"] = strategy.observation[m];
        row["action"] = strategy.action[m];
        auto& upd = row["update"] = nlohmann::json::array();
        for (const auto& [obs, next] : strategy.update[m]) upd.push_back({obs, next});
        memory.push_back(std::move(row));
    }
    return doc.dump(1) + "\n";
}

ObservationStrategy parse_strategy(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        ObservationStrategy s;
        s.initial = doc.at("initial").get<std::uint32_t>();
        for (const auto& row : doc.at("memory")) {
            s.observation.push_back(row.at("observation").get<std::uint64_t>());
            s.action.push_back(row.at("action").get<std::string>());
            auto& upd = s.update.emplace_back();
            for (const auto& e : row.at("update"))
                upd.emplace_back(e.at(0).get<std::uint64_t>(), e.at(1).get<std::uint32_t>());
            if (!std::is_sorted(upd.begin(), upd.end())) fail("strategy update rows must be sorted by observation");
        }
        if (s.initial >= s.memory_size()) fail("initial memory state out of range");
        for (const auto& row : s.update)
            for (const auto& [obs, next] : row)
                if (next >= s.memory_size()) fail("memory update target out of range");
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed strategy file: ") + e.what());
    }
}

} // namespace gbar
