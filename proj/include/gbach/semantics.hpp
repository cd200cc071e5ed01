#ifndef GBACH_SEMANTICS_HPP
#define GBACH_SEMANTICS_HPP

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gbach/program.hpp"

namespace gbach {

// Which transition rule produced a step. Guarded lists report one GL
// step covering the guard and the whole tail.
enum class RuleKind : uint8_t { T, A, G, N, Gr, GL };

const char* rule_kind_name(RuleKind k);

struct FiredPrim {
    PrimKind kind;
    TermId term;  // final form actually matched against the store
    friend bool operator==(const FiredPrim& a, const FiredPrim& b) {
        return a.kind == b.kind && a.term == b.term;
    }
};

struct TransitionLabel {
    RuleKind rule;
    std::vector<FiredPrim> fired;  // GL: guard first, then tail in order
    friend bool operator==(const TransitionLabel& a, const TransitionLabel& b) {
        return a.rule == b.rule && a.fired == b.fired;
    }
    std::string to_text(const TermArena& arena) const;
};

// "tell(a)", "get(free(2,3))", "gr(move(red,3,5))".
std::string fired_prim_text(const FiredPrim& fp, const TermArena& arena);

struct Config {
    AgentPtr agent;
    Store store;
};

// Canonical bytes identifying a configuration up to structural agent
// equality and store multiset equality.
std::string state_key(const Config& c);
// Appends the key to out, reusing its capacity.
void state_key_into(const Config& c, std::string& out);

struct Successor {
    Config config;
    TransitionLabel label;
};

// One primitive against one store: the resulting store and the fired
// record, or nothing when the primitive blocks. Rewrites the payload
// first, so all the term-level faults can surface here.
std::optional<std::pair<Store, FiredPrim>> step_primitive(const Prim& p, const Store& store,
                                                          const Program& prog);

// Condition evaluation. Conditions never consult the store.
bool eval_condition(const Condition& c, const Program& prog);

// All one-step successors, in a fixed deterministic order: choice and
// parallel alternatives left to right. Already simplified.
std::vector<Successor> successors(const Config& c, const Program& prog);

// Removes terminated units: E;A, E||A and A||E collapse to A, bottom-up.
AgentPtr simplify(const AgentPtr& a);

// Replaces formal parameters by bound terms everywhere in an agent.
AgentPtr substitute_agent(const AgentPtr& a,
                          const std::unordered_map<std::string, TermId>& binding,
                          const Program& prog);

// Rewrites a finite agent built from primitives, guarded lists, ; || +
// into the sum-of-guarded-sequences form: N ::= p | p;A | N+N. The
// result steps exactly like the input. Procedure calls and conditionals
// are rejected with UnsupportedConstruct.
AgentPtr normal_form(const AgentPtr& a);

bool is_normal_form(const AgentPtr& a);

}  // namespace gbach

#endif  // GBACH_SEMANTICS_HPP
