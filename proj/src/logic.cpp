#include "gbach/logic.hpp"

#include <algorithm>

namespace gbach {

ArithPtr ArithExpr::lit(int64_t v) {
    auto e = std::make_shared<ArithExpr>();
    e->kind = Kind::Int;
    e->value = v;
    return e;
}

ArithPtr ArithExpr::count(TermId t) {
    auto e = std::make_shared<ArithExpr>();
    e->kind = Kind::Count;
    e->term = t;
    return e;
}

static ArithPtr binop(ArithExpr::Kind k, ArithPtr x, ArithPtr y) {
    auto e = std::make_shared<ArithExpr>();
    e->kind = k;
    e->a = std::move(x);
    e->b = std::move(y);
    return e;
}

ArithPtr ArithExpr::add(ArithPtr x, ArithPtr y) { return binop(Kind::Add, std::move(x), std::move(y)); }
ArithPtr ArithExpr::sub(ArithPtr x, ArithPtr y) { return binop(Kind::Sub, std::move(x), std::move(y)); }
ArithPtr ArithExpr::mul(ArithPtr x, ArithPtr y) { return binop(Kind::Mul, std::move(x), std::move(y)); }

PropPtr PropFormula::truth(bool v) {
    auto p = std::make_shared<PropFormula>();
    p->kind = v ? Kind::True : Kind::False;
    return p;
}

PropPtr PropFormula::cmp(CmpOp op, ArithPtr l, ArithPtr r) {
    auto p = std::make_shared<PropFormula>();
    p->kind = Kind::Cmp;
    p->op = op;
    p->lhs = std::move(l);
    p->rhs = std::move(r);
    return p;
}

PropPtr PropFormula::negate(PropPtr x) {
    auto p = std::make_shared<PropFormula>();
    p->kind = Kind::Not;
    p->a = std::move(x);
    return p;
}

PropPtr PropFormula::conj(PropPtr x, PropPtr y) {
    auto p = std::make_shared<PropFormula>();
    p->kind = Kind::And;
    p->a = std::move(x);
    p->b = std::move(y);
    return p;
}

PropPtr PropFormula::disj(PropPtr x, PropPtr y) {
    auto p = std::make_shared<PropFormula>();
    p->kind = Kind::Or;
    p->a = std::move(x);
    p->b = std::move(y);
    return p;
}

TemporalPtr TemporalFormula::lift(PropPtr p) {
    auto f = std::make_shared<TemporalFormula>();
    f->kind = Kind::Prop;
    f->prop = std::move(p);
    return f;
}

TemporalPtr TemporalFormula::next(TemporalPtr t) {
    auto f = std::make_shared<TemporalFormula>();
    f->kind = Kind::Next;
    f->inner = std::move(t);
    return f;
}

TemporalPtr TemporalFormula::until(PropPtr restrict_p, TemporalPtr target) {
    auto f = std::make_shared<TemporalFormula>();
    f->kind = Kind::Until;
    f->prop = std::move(restrict_p);
    f->inner = std::move(target);
    return f;
}

int64_t eval_arith(const ArithExpr& e, const Store& store) {
    switch (e.kind) {
        case ArithExpr::Kind::Int: return e.value;
        case ArithExpr::Kind::Count: return static_cast<int64_t>(store.count(e.term));
        case ArithExpr::Kind::Add: return eval_arith(*e.a, store) + eval_arith(*e.b, store);
        case ArithExpr::Kind::Sub: return eval_arith(*e.a, store) - eval_arith(*e.b, store);
        case ArithExpr::Kind::Mul: return eval_arith(*e.a, store) * eval_arith(*e.b, store);
    }
    return 0;
}

bool eval_prop(const PropFormula& p, const Store& store) {
    switch (p.kind) {
        case PropFormula::Kind::True: return true;
        case PropFormula::Kind::False: return false;
        case PropFormula::Kind::Cmp: {
            int64_t l = eval_arith(*p.lhs, store);
            int64_t r = eval_arith(*p.rhs, store);
            switch (p.op) {
                case CmpOp::Eq: return l == r;
                case CmpOp::Ne: return l != r;
                case CmpOp::Lt: return l < r;
                case CmpOp::Le: return l <= r;
                case CmpOp::Gt: return l > r;
                case CmpOp::Ge: return l >= r;
            }
            return false;
        }
        case PropFormula::Kind::Not: return !eval_prop(*p.a, store);
        case PropFormula::Kind::And: return eval_prop(*p.a, store) && eval_prop(*p.b, store);
        case PropFormula::Kind::Or: return eval_prop(*p.a, store) || eval_prop(*p.b, store);
    }
    return false;
}

namespace {

void collect_arith(const ArithPtr& e, std::vector<TermId>& out) {
    if (!e) return;
    if (e->kind == ArithExpr::Kind::Count) out.push_back(e->term);
    collect_arith(e->a, out);
    collect_arith(e->b, out);
}

void collect_prop(const PropPtr& p, std::vector<TermId>& out) {
    if (!p) return;
    collect_arith(p->lhs, out);
    collect_arith(p->rhs, out);
    collect_prop(p->a, out);
    collect_prop(p->b, out);
}

}  // namespace

std::vector<TermId> count_terms(const TemporalPtr& f) {
    std::vector<TermId> out;
    for (TemporalPtr cur = f; cur;) {
        collect_prop(cur->prop, out);
        cur = cur->inner;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<TermId> count_terms(const PropPtr& p) {
    std::vector<TermId> out;
    collect_prop(p, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// Arithmetic precedence: additive 0, multiplicative 1, atom 2.
std::string arith_text(const ArithPtr& e, const TermArena& arena, int need) {
    switch (e->kind) {
        case ArithExpr::Kind::Int:
            return std::to_string(e->value);
        case ArithExpr::Kind::Count:
            return "#" + arena.to_text(e->term);
        case ArithExpr::Kind::Add:
        case ArithExpr::Kind::Sub: {
            const char* op = e->kind == ArithExpr::Kind::Add ? "+" : "-";
            std::string s = arith_text(e->a, arena, 0) + op + arith_text(e->b, arena, 1);
            return need > 0 ? "(" + s + ")" : s;
        }
        case ArithExpr::Kind::Mul: {
            std::string s = arith_text(e->a, arena, 1) + "*" + arith_text(e->b, arena, 2);
            return need > 1 ? "(" + s + ")" : s;
        }
    }
    return "?";
}

// Propositional precedence: or 0, and 1, atom 2.
std::string prop_text(const PropPtr& p, const TermArena& arena, int need) {
    switch (p->kind) {
        case PropFormula::Kind::True: return "true";
        case PropFormula::Kind::False: return "false";
        case PropFormula::Kind::Cmp:
            return arith_text(p->lhs, arena, 0) + cmp_op_text(p->op) +
                   arith_text(p->rhs, arena, 0);
        case PropFormula::Kind::Not:
            return "!" + prop_text(p->a, arena, 2);
        case PropFormula::Kind::And: {
            std::string s = prop_text(p->a, arena, 1) + " & " + prop_text(p->b, arena, 2);
            return need > 1 ? "(" + s + ")" : s;
        }
        case PropFormula::Kind::Or: {
            std::string s = prop_text(p->a, arena, 0) + " | " + prop_text(p->b, arena, 1);
            return need > 0 ? "(" + s + ")" : s;
        }
    }
    return "?";
}

}  // namespace

std::string arith_to_text(const ArithPtr& e, const TermArena& arena) {
    return arith_text(e, arena, 0);
}

std::string prop_to_text(const PropPtr& p, const TermArena& arena) {
    return prop_text(p, arena, 0);
}

std::string temporal_to_text(const TemporalPtr& f, const TermArena& arena) {
    switch (f->kind) {
        case TemporalFormula::Kind::Prop:
            return prop_to_text(f->prop, arena);
        case TemporalFormula::Kind::Next:
            return "Next " + temporal_to_text(f->inner, arena);
        case TemporalFormula::Kind::Until:
            return prop_to_text(f->prop, arena) + " Until " +
                   temporal_to_text(f->inner, arena);
    }
    return "?";
}

static bool arith_equal(const ArithPtr& a, const ArithPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ArithExpr::Kind::Int: return a->value == b->value;
        case ArithExpr::Kind::Count: return a->term == b->term;
        default: return arith_equal(a->a, b->a) && arith_equal(a->b, b->b);
    }
}

bool prop_equal(const PropPtr& a, const PropPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case PropFormula::Kind::True:
        case PropFormula::Kind::False:
            return true;
        case PropFormula::Kind::Cmp:
            return a->op == b->op && arith_equal(a->lhs, b->lhs) && arith_equal(a->rhs, b->rhs);
        case PropFormula::Kind::Not:
            return prop_equal(a->a, b->a);
        case PropFormula::Kind::And:
        case PropFormula::Kind::Or:
            return prop_equal(a->a, b->a) && prop_equal(a->b, b->b);
    }
    return false;
}

bool temporal_equal(const TemporalPtr& a, const TemporalPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    return prop_equal(a->prop, b->prop) && temporal_equal(a->inner, b->inner);
}

}  // namespace gbach
