#ifndef GBACH_AST_HPP
#define GBACH_AST_HPP

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "gbach/term.hpp"

namespace gbach {

enum class PrimKind : uint8_t { Tell, Ask, Nask, Get, Graphical };

const char* prim_kind_name(PrimKind k);  // "tell", "ask", "nask", "get", "gr"

// A store primitive or a graphical action. For graphical primitives the
// payload is the whole call (token or compound headed by the declared
// name); for the others it is the argument term.
struct Prim {
    PrimKind kind;
    TermId payload;
    SourceLoc loc;
};

inline bool prim_equal(const Prim& a, const Prim& b) {
    return a.kind == b.kind && a.payload == b.payload;
}

enum class CmpOp : uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

const char* cmp_op_text(CmpOp op);

// Conditions guard conditional agents. They only look at their operand
// terms, never at the store.
struct Condition;
using CondPtr = std::shared_ptr<const Condition>;

struct Condition {
    enum class Kind : uint8_t { Cmp, Not, And, Or };
    Kind kind;
    CmpOp op = CmpOp::Eq;  // Cmp
    TermId lhs{}, rhs{};   // Cmp
    CondPtr a, b;          // Not: a; And/Or: a and b

    static CondPtr cmp(CmpOp op, TermId l, TermId r);
    static CondPtr negate(CondPtr c);
    static CondPtr conj(CondPtr x, CondPtr y);
    static CondPtr disj(CondPtr x, CondPtr y);
};

bool cond_equal(const CondPtr& a, const CondPtr& b);

struct Agent;
using AgentPtr = std::shared_ptr<const Agent>;

// Agent syntax tree. One tagged node type keeps the stepping code to a
// single switch. Source locations are carried for messages and reports
// but never take part in structural equality or state identity.
struct Agent {
    enum class Kind : uint8_t {
        End,          // E, terminated
        Prim,         // prim
        GuardedList,  // [guard -> tail...]
        Seq,          // a ; b
        Par,          // a || b
        Choice,       // a + b
        Cond,         // cond -> a <> b   (b may be null)
        Call,         // name(args)
    };

    Kind kind = Kind::End;
    Prim prim{};              // Prim, GuardedList guard
    std::vector<Prim> tail;   // GuardedList
    AgentPtr a, b;            // Seq/Par/Choice/Cond
    CondPtr cond;             // Cond
    std::string call_name;    // Call
    std::vector<TermId> call_args;
    SourceLoc loc;

    static AgentPtr end();
    static AgentPtr make_prim(Prim p);
    static AgentPtr guarded(Prim guard, std::vector<Prim> tail, SourceLoc loc = {});
    static AgentPtr seq(AgentPtr x, AgentPtr y, SourceLoc loc = {});
    static AgentPtr par(AgentPtr x, AgentPtr y, SourceLoc loc = {});
    static AgentPtr choice(AgentPtr x, AgentPtr y, SourceLoc loc = {});
    static AgentPtr cond_agent(CondPtr c, AgentPtr then_a, AgentPtr else_a, SourceLoc loc = {});
    static AgentPtr call(std::string name, std::vector<TermId> args, SourceLoc loc = {});
};

bool agent_equal(const AgentPtr& x, const AgentPtr& y);

// Canonical bytes for state identity. Ignores source locations.
void encode_agent(const AgentPtr& a, std::string& out);

struct ProcFormal {
    std::string name;
    std::string set_name;
};

struct ProcDef {
    std::string name;
    std::vector<ProcFormal> formals;
    AgentPtr body;
    SourceLoc loc;
};

}  // namespace gbach

#endif  // GBACH_AST_HPP
