#include "gbach/ast.hpp"

#include <cstring>

namespace gbach {

const char* prim_kind_name(PrimKind k) {
    switch (k) {
        case PrimKind::Tell: return "tell";
        case PrimKind::Ask: return "ask";
        case PrimKind::Nask: return "nask";
        case PrimKind::Get: return "get";
        case PrimKind::Graphical: return "gr";
    }
    return "?";
}

const char* cmp_op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

CondPtr Condition::cmp(CmpOp op, TermId l, TermId r) {
    auto c = std::make_shared<Condition>();
    c->kind = Kind::Cmp;
    c->op = op;
    c->lhs = l;
    c->rhs = r;
    return c;
}

CondPtr Condition::negate(CondPtr x) {
    auto c = std::make_shared<Condition>();
    c->kind = Kind::Not;
    c->a = std::move(x);
    return c;
}

CondPtr Condition::conj(CondPtr x, CondPtr y) {
    auto c = std::make_shared<Condition>();
    c->kind = Kind::And;
    c->a = std::move(x);
    c->b = std::move(y);
    return c;
}

CondPtr Condition::disj(CondPtr x, CondPtr y) {
    auto c = std::make_shared<Condition>();
    c->kind = Kind::Or;
    c->a = std::move(x);
    c->b = std::move(y);
    return c;
}

bool cond_equal(const CondPtr& a, const CondPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Condition::Kind::Cmp:
            return a->op == b->op && a->lhs == b->lhs && a->rhs == b->rhs;
        case Condition::Kind::Not:
            return cond_equal(a->a, b->a);
        case Condition::Kind::And:
        case Condition::Kind::Or:
            return cond_equal(a->a, b->a) && cond_equal(a->b, b->b);
    }
    return false;
}

AgentPtr Agent::end() {
    static const AgentPtr e = std::make_shared<Agent>();
    return e;
}

AgentPtr Agent::make_prim(Prim p) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Prim;
    a->loc = p.loc;
    a->prim = std::move(p);
    return a;
}

AgentPtr Agent::guarded(Prim guard, std::vector<Prim> tail, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::GuardedList;
    a->prim = std::move(guard);
    a->tail = std::move(tail);
    a->loc = loc.valid() ? loc : a->prim.loc;
    return a;
}

AgentPtr Agent::seq(AgentPtr x, AgentPtr y, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Seq;
    a->a = std::move(x);
    a->b = std::move(y);
    a->loc = loc;
    return a;
}

AgentPtr Agent::par(AgentPtr x, AgentPtr y, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Par;
    a->a = std::move(x);
    a->b = std::move(y);
    a->loc = loc;
    return a;
}

AgentPtr Agent::choice(AgentPtr x, AgentPtr y, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Choice;
    a->a = std::move(x);
    a->b = std::move(y);
    a->loc = loc;
    return a;
}

AgentPtr Agent::cond_agent(CondPtr c, AgentPtr then_a, AgentPtr else_a, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Cond;
    a->cond = std::move(c);
    a->a = std::move(then_a);
    a->b = std::move(else_a);
    a->loc = loc;
    return a;
}

AgentPtr Agent::call(std::string name, std::vector<TermId> args, SourceLoc loc) {
    auto a = std::make_shared<Agent>();
    a->kind = Kind::Call;
    a->call_name = std::move(name);
    a->call_args = std::move(args);
    a->loc = loc;
    return a;
}

bool agent_equal(const AgentPtr& x, const AgentPtr& y) {
    if (x == y) return true;
    if (!x || !y) return false;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case Agent::Kind::End:
            return true;
        case Agent::Kind::Prim:
            return prim_equal(x->prim, y->prim);
        case Agent::Kind::GuardedList: {
            if (!prim_equal(x->prim, y->prim)) return false;
            if (x->tail.size() != y->tail.size()) return false;
            for (size_t i = 0; i < x->tail.size(); ++i)
                if (!prim_equal(x->tail[i], y->tail[i])) return false;
            return true;
        }
        case Agent::Kind::Seq:
        case Agent::Kind::Par:
        case Agent::Kind::Choice:
            return agent_equal(x->a, y->a) && agent_equal(x->b, y->b);
        case Agent::Kind::Cond:
            return cond_equal(x->cond, y->cond) && agent_equal(x->a, y->a) &&
                   agent_equal(x->b, y->b);
        case Agent::Kind::Call: {
            if (x->call_name != y->call_name) return false;
            return x->call_args == y->call_args;
        }
    }
    return false;
}

namespace {

void append_u32(std::string& s, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    s.append(buf, 4);
}

void encode_prim(const Prim& p, std::string& out) {
    out.push_back(static_cast<char>(p.kind));
    append_u32(out, p.payload.v);
}

void encode_cond(const CondPtr& c, std::string& out) {
    out.push_back(static_cast<char>(0x40 + static_cast<int>(c->kind)));
    switch (c->kind) {
        case Condition::Kind::Cmp:
            out.push_back(static_cast<char>(c->op));
            append_u32(out, c->lhs.v);
            append_u32(out, c->rhs.v);
            break;
        case Condition::Kind::Not:
            encode_cond(c->a, out);
            break;
        case Condition::Kind::And:
        case Condition::Kind::Or:
            encode_cond(c->a, out);
            encode_cond(c->b, out);
            break;
    }
}

}  // namespace

void encode_agent(const AgentPtr& a, std::string& out) {
    out.push_back(static_cast<char>(0x10 + static_cast<int>(a->kind)));
    switch (a->kind) {
        case Agent::Kind::End:
            break;
        case Agent::Kind::Prim:
            encode_prim(a->prim, out);
            break;
        case Agent::Kind::GuardedList:
            encode_prim(a->prim, out);
            append_u32(out, static_cast<uint32_t>(a->tail.size()));
            for (const Prim& p : a->tail) encode_prim(p, out);
            break;
        case Agent::Kind::Seq:
        case Agent::Kind::Par:
        case Agent::Kind::Choice:
            encode_agent(a->a, out);
            encode_agent(a->b, out);
            break;
        case Agent::Kind::Cond:
            encode_cond(a->cond, out);
            encode_agent(a->a, out);
            if (a->b) {
                out.push_back(1);
                encode_agent(a->b, out);
            } else {
                out.push_back(0);
            }
            break;
        case Agent::Kind::Call:
            append_u32(out, static_cast<uint32_t>(a->call_name.size()));
            out += a->call_name;
            append_u32(out, static_cast<uint32_t>(a->call_args.size()));
            for (TermId t : a->call_args) append_u32(out, t.v);
            break;
    }
}

}  // namespace gbach
