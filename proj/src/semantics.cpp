#include "gbach/semantics.hpp"

#include <cstring>
#include <mutex>
#include <unordered_map>

namespace gbach {

const char* rule_kind_name(RuleKind k) {
    switch (k) {
        case RuleKind::T: return "T";
        case RuleKind::A: return "A";
        case RuleKind::G: return "G";
        case RuleKind::N: return "N";
        case RuleKind::Gr: return "Gr";
        case RuleKind::GL: return "GL";
    }
    return "?";
}

std::string fired_prim_text(const FiredPrim& fp, const TermArena& arena) {
    return std::string(prim_kind_name(fp.kind)) + "(" + arena.to_text(fp.term) + ")";
}

std::string TransitionLabel::to_text(const TermArena& arena) const {
    std::string s = rule_kind_name(rule);
    for (const auto& fp : fired) {
        s += " ";
        s += fired_prim_text(fp, arena);
    }
    return s;
}

std::string state_key(const Config& c) {
    std::string key;
    state_key_into(c, key);
    return key;
}

void state_key_into(const Config& c, std::string& out) {
    uint32_t n = static_cast<uint32_t>(c.store.items().size());
    char buf[4];
    std::memcpy(buf, &n, 4);
    out.append(buf, 4);
    c.store.encode_into(out);
    encode_agent(c.agent, out);
}

namespace {

// Rewriting is pure while the equations stay fixed, so results are
// memoized per program. Failures are not cached; they re-raise.
TermId cached_rewrite(const Program& prog, TermId t) {
    if (prog.arena().is_final(t)) return t;
    EvalCache& c = *prog.cache;
    {
        std::lock_guard<std::mutex> lk(c.mu);
        auto it = c.rewrites.find(t.v);
        if (it != c.rewrites.end()) return it->second;
    }
    TermId r = rewrite(prog.arena(), t, prog.defs);
    std::lock_guard<std::mutex> lk(c.mu);
    c.rewrites.emplace(t.v, r);
    return r;
}

}  // namespace

std::optional<std::pair<Store, FiredPrim>> step_primitive(const Prim& p, const Store& store,
                                                          const Program& prog) {
    TermId t = cached_rewrite(prog, p.payload);
    switch (p.kind) {
        case PrimKind::Tell:
            return std::make_pair(store.with_added(t), FiredPrim{PrimKind::Tell, t});
        case PrimKind::Ask:
            if (!store.contains(t)) return std::nullopt;
            return std::make_pair(store, FiredPrim{PrimKind::Ask, t});
        case PrimKind::Nask:
            if (store.contains(t)) return std::nullopt;
            return std::make_pair(store, FiredPrim{PrimKind::Nask, t});
        case PrimKind::Get: {
            auto removed = store.with_removed(t);
            if (!removed) return std::nullopt;
            return std::make_pair(std::move(*removed), FiredPrim{PrimKind::Get, t});
        }
        case PrimKind::Graphical:
            return std::make_pair(store, FiredPrim{PrimKind::Graphical, t});
    }
    return std::nullopt;
}

bool eval_condition(const Condition& c, const Program& prog) {
    switch (c.kind) {
        case Condition::Kind::Not:
            return !eval_condition(*c.a, prog);
        case Condition::Kind::And:
            return eval_condition(*c.a, prog) && eval_condition(*c.b, prog);
        case Condition::Kind::Or:
            return eval_condition(*c.a, prog) || eval_condition(*c.b, prog);
        case Condition::Kind::Cmp:
            break;
    }
    const TermArena& arena = prog.arena();
    TermId l = cached_rewrite(prog, c.lhs);
    TermId r = cached_rewrite(prog, c.rhs);
    if (c.op == CmpOp::Eq) return l == r;
    if (c.op == CmpOp::Ne) return l != r;
    const TermNode& ln = arena.node(l);
    const TermNode& rn = arena.node(r);
    if (ln.kind != TermKind::Int || rn.kind != TermKind::Int)
        throw TypeMismatch("ordering comparison needs integers, got " + arena.to_text(l) +
                           " and " + arena.to_text(r));
    switch (c.op) {
        case CmpOp::Lt: return ln.num < rn.num;
        case CmpOp::Le: return ln.num <= rn.num;
        case CmpOp::Gt: return ln.num > rn.num;
        case CmpOp::Ge: return ln.num >= rn.num;
        default: return false;
    }
}

AgentPtr simplify(const AgentPtr& a) {
    switch (a->kind) {
        case Agent::Kind::End:
        case Agent::Kind::Prim:
        case Agent::Kind::GuardedList:
        case Agent::Kind::Call:
            return a;
        case Agent::Kind::Seq: {
            AgentPtr sa = simplify(a->a);
            AgentPtr sb = simplify(a->b);
            if (sa->kind == Agent::Kind::End) return sb;
            if (sa == a->a && sb == a->b) return a;
            return Agent::seq(sa, sb, a->loc);
        }
        case Agent::Kind::Par: {
            AgentPtr sa = simplify(a->a);
            AgentPtr sb = simplify(a->b);
            if (sa->kind == Agent::Kind::End) return sb;
            if (sb->kind == Agent::Kind::End) return sa;
            if (sa == a->a && sb == a->b) return a;
            return Agent::par(sa, sb, a->loc);
        }
        case Agent::Kind::Choice: {
            AgentPtr sa = simplify(a->a);
            AgentPtr sb = simplify(a->b);
            if (sa == a->a && sb == a->b) return a;
            return Agent::choice(sa, sb, a->loc);
        }
        case Agent::Kind::Cond: {
            AgentPtr sa = simplify(a->a);
            AgentPtr sb = a->b ? simplify(a->b) : nullptr;
            if (sa == a->a && sb == a->b) return a;
            return Agent::cond_agent(a->cond, sa, sb, a->loc);
        }
    }
    return a;
}

namespace {

CondPtr substitute_cond(const CondPtr& c,
                        const std::unordered_map<std::string, TermId>& binding,
                        const TermArena& arena) {
    switch (c->kind) {
        case Condition::Kind::Cmp: {
            TermId l = arena.substitute(c->lhs, binding);
            TermId r = arena.substitute(c->rhs, binding);
            if (l == c->lhs && r == c->rhs) return c;
            return Condition::cmp(c->op, l, r);
        }
        case Condition::Kind::Not: {
            CondPtr x = substitute_cond(c->a, binding, arena);
            return x == c->a ? c : Condition::negate(x);
        }
        case Condition::Kind::And:
        case Condition::Kind::Or: {
            CondPtr x = substitute_cond(c->a, binding, arena);
            CondPtr y = substitute_cond(c->b, binding, arena);
            if (x == c->a && y == c->b) return c;
            return c->kind == Condition::Kind::And ? Condition::conj(x, y)
                                                   : Condition::disj(x, y);
        }
    }
    return c;
}

Prim substitute_prim(const Prim& p, const std::unordered_map<std::string, TermId>& binding,
                     const TermArena& arena) {
    return Prim{p.kind, arena.substitute(p.payload, binding), p.loc};
}

}  // namespace

AgentPtr substitute_agent(const AgentPtr& a,
                          const std::unordered_map<std::string, TermId>& binding,
                          const Program& prog) {
    const TermArena& arena = prog.arena();
    switch (a->kind) {
        case Agent::Kind::End:
            return a;
        case Agent::Kind::Prim: {
            Prim p = substitute_prim(a->prim, binding, arena);
            if (p.payload == a->prim.payload) return a;
            return Agent::make_prim(p);
        }
        case Agent::Kind::GuardedList: {
            Prim g = substitute_prim(a->prim, binding, arena);
            std::vector<Prim> tail;
            tail.reserve(a->tail.size());
            bool changed = g.payload != a->prim.payload;
            for (const Prim& p : a->tail) {
                Prim q = substitute_prim(p, binding, arena);
                changed = changed || q.payload != p.payload;
                tail.push_back(q);
            }
            if (!changed) return a;
            return Agent::guarded(g, std::move(tail), a->loc);
        }
        case Agent::Kind::Seq:
        case Agent::Kind::Par:
        case Agent::Kind::Choice: {
            AgentPtr x = substitute_agent(a->a, binding, prog);
            AgentPtr y = substitute_agent(a->b, binding, prog);
            if (x == a->a && y == a->b) return a;
            if (a->kind == Agent::Kind::Seq) return Agent::seq(x, y, a->loc);
            if (a->kind == Agent::Kind::Par) return Agent::par(x, y, a->loc);
            return Agent::choice(x, y, a->loc);
        }
        case Agent::Kind::Cond: {
            CondPtr c = substitute_cond(a->cond, binding, arena);
            AgentPtr x = substitute_agent(a->a, binding, prog);
            AgentPtr y = a->b ? substitute_agent(a->b, binding, prog) : nullptr;
            if (c == a->cond && x == a->a && y == a->b) return a;
            return Agent::cond_agent(c, x, y, a->loc);
        }
        case Agent::Kind::Call: {
            std::vector<TermId> args;
            args.reserve(a->call_args.size());
            bool changed = false;
            for (TermId t : a->call_args) {
                TermId u = arena.substitute(t, binding);
                changed = changed || u != t;
                args.push_back(u);
            }
            if (!changed) return a;
            return Agent::call(a->call_name, std::move(args), a->loc);
        }
    }
    return a;
}

namespace {

constexpr int kMaxUnfoldDepth = 512;

RuleKind rule_for(PrimKind k) {
    switch (k) {
        case PrimKind::Tell: return RuleKind::T;
        case PrimKind::Ask: return RuleKind::A;
        case PrimKind::Get: return RuleKind::G;
        case PrimKind::Nask: return RuleKind::N;
        case PrimKind::Graphical: return RuleKind::Gr;
    }
    return RuleKind::T;
}

// Payloads and comparison operands in cached procedure bodies are
// rewritten up front so execution hits the final-term fast path. A term
// whose rewrite faults is kept as written; the fault still fires if the
// primitive actually runs.
TermId try_rewrite(const Program& prog, TermId t) {
    if (prog.arena().is_final(t)) return t;
    try {
        return cached_rewrite(prog, t);
    } catch (const EvalError&) {
        return t;
    }
}

CondPtr rewrite_cond_terms(const CondPtr& c, const Program& prog) {
    switch (c->kind) {
        case Condition::Kind::Cmp: {
            TermId l = try_rewrite(prog, c->lhs);
            TermId r = try_rewrite(prog, c->rhs);
            if (l == c->lhs && r == c->rhs) return c;
            return Condition::cmp(c->op, l, r);
        }
        case Condition::Kind::Not: {
            CondPtr x = rewrite_cond_terms(c->a, prog);
            return x == c->a ? c : Condition::negate(x);
        }
        case Condition::Kind::And:
        case Condition::Kind::Or: {
            CondPtr x = rewrite_cond_terms(c->a, prog);
            CondPtr y = rewrite_cond_terms(c->b, prog);
            if (x == c->a && y == c->b) return c;
            return c->kind == Condition::Kind::And ? Condition::conj(x, y)
                                                   : Condition::disj(x, y);
        }
    }
    return c;
}

AgentPtr rewrite_payloads(const AgentPtr& a, const Program& prog) {
    switch (a->kind) {
        case Agent::Kind::End:
            return a;
        case Agent::Kind::Call: {
            std::vector<TermId> args;
            args.reserve(a->call_args.size());
            bool changed = false;
            for (TermId t : a->call_args) {
                TermId u = try_rewrite(prog, t);
                changed = changed || u != t;
                args.push_back(u);
            }
            if (!changed) return a;
            return Agent::call(a->call_name, std::move(args), a->loc);
        }
        case Agent::Kind::Prim: {
            TermId t = try_rewrite(prog, a->prim.payload);
            if (t == a->prim.payload) return a;
            return Agent::make_prim({a->prim.kind, t, a->prim.loc});
        }
        case Agent::Kind::GuardedList: {
            TermId g = try_rewrite(prog, a->prim.payload);
            bool changed = g != a->prim.payload;
            std::vector<Prim> tail;
            tail.reserve(a->tail.size());
            for (const Prim& p : a->tail) {
                TermId t = try_rewrite(prog, p.payload);
                changed = changed || t != p.payload;
                tail.push_back({p.kind, t, p.loc});
            }
            if (!changed) return a;
            return Agent::guarded({a->prim.kind, g, a->prim.loc}, std::move(tail), a->loc);
        }
        case Agent::Kind::Seq:
        case Agent::Kind::Par:
        case Agent::Kind::Choice: {
            AgentPtr x = rewrite_payloads(a->a, prog);
            AgentPtr y = rewrite_payloads(a->b, prog);
            if (x == a->a && y == a->b) return a;
            if (a->kind == Agent::Kind::Seq) return Agent::seq(x, y, a->loc);
            if (a->kind == Agent::Kind::Par) return Agent::par(x, y, a->loc);
            return Agent::choice(x, y, a->loc);
        }
        case Agent::Kind::Cond: {
            CondPtr c = rewrite_cond_terms(a->cond, prog);
            AgentPtr x = rewrite_payloads(a->a, prog);
            AgentPtr y = a->b ? rewrite_payloads(a->b, prog) : nullptr;
            if (c == a->cond && x == a->a && y == a->b) return a;
            return Agent::cond_agent(c, x, y, a->loc);
        }
    }
    return a;
}

struct RawSuccessor {
    AgentPtr agent;
    Store store;
    TransitionLabel label;
};

void collect(const AgentPtr& A, const Store& sigma, const Program& prog, int depth,
             std::vector<RawSuccessor>& out) {
    switch (A->kind) {
        case Agent::Kind::End:
            return;
        case Agent::Kind::Prim: {
            auto r = step_primitive(A->prim, sigma, prog);
            if (!r) return;
            out.push_back({Agent::end(), std::move(r->first),
                           {rule_for(A->prim.kind), {r->second}}});
            return;
        }
        case Agent::Kind::GuardedList: {
            TermId gt = cached_rewrite(prog, A->prim.payload);
            switch (A->prim.kind) {
                case PrimKind::Ask:
                case PrimKind::Get:
                    if (!sigma.contains(gt)) return;
                    break;
                case PrimKind::Nask:
                    if (sigma.contains(gt)) return;
                    break;
                default:
                    break;
            }
            Store cur = sigma;
            if (A->prim.kind == PrimKind::Tell) cur.add(gt);
            else if (A->prim.kind == PrimKind::Get) cur.remove(gt);
            std::vector<FiredPrim> fired;
            fired.reserve(1 + A->tail.size());
            fired.push_back({A->prim.kind, gt});
            for (size_t i = 0; i < A->tail.size(); ++i) {
                const Prim& p = A->tail[i];
                TermId t = cached_rewrite(prog, p.payload);
                bool ok = true;
                switch (p.kind) {
                    case PrimKind::Tell: cur.add(t); break;
                    case PrimKind::Ask: ok = cur.contains(t); break;
                    case PrimKind::Nask: ok = !cur.contains(t); break;
                    case PrimKind::Get: ok = cur.remove(t); break;
                    case PrimKind::Graphical: break;
                }
                if (!ok) {
                    throw GuardedTailFailure(
                        "primitive " + std::to_string(i + 1) + " of guarded list " +
                            "blocked after the guard fired: " +
                            std::string(prim_kind_name(p.kind)) + "(" +
                            prog.arena().to_text(p.payload) + ") on store " +
                            cur.to_text(prog.arena()),
                        static_cast<int>(i));
                }
                fired.push_back({p.kind, t});
            }
            out.push_back({Agent::end(), std::move(cur), {RuleKind::GL, std::move(fired)}});
            return;
        }
        case Agent::Kind::Seq: {
            size_t base = out.size();
            collect(A->a, sigma, prog, depth, out);
            for (size_t i = base; i < out.size(); ++i) {
                AgentPtr& rest = out[i].agent;
                rest = rest->kind == Agent::Kind::End ? A->b
                                                      : Agent::seq(std::move(rest), A->b);
            }
            return;
        }
        case Agent::Kind::Par: {
            size_t base = out.size();
            collect(A->a, sigma, prog, depth, out);
            size_t mid = out.size();
            collect(A->b, sigma, prog, depth, out);
            for (size_t i = base; i < mid; ++i) {
                AgentPtr& rest = out[i].agent;
                rest = rest->kind == Agent::Kind::End ? A->b
                                                      : Agent::par(std::move(rest), A->b);
            }
            for (size_t i = mid; i < out.size(); ++i) {
                AgentPtr& rest = out[i].agent;
                rest = rest->kind == Agent::Kind::End ? A->a
                                                      : Agent::par(A->a, std::move(rest));
            }
            return;
        }
        case Agent::Kind::Choice: {
            collect(A->a, sigma, prog, depth, out);
            collect(A->b, sigma, prog, depth, out);
            return;
        }
        case Agent::Kind::Cond: {
            bool v = eval_condition(*A->cond, prog);
            if (v) {
                collect(A->a, sigma, prog, depth, out);
            } else if (A->b) {
                collect(A->b, sigma, prog, depth, out);
            }
            return;
        }
        case Agent::Kind::Call: {
            if (depth >= kMaxUnfoldDepth)
                throw EvalError("CallUnfoldLimit",
                                "procedure unfolding exceeded depth " +
                                    std::to_string(kMaxUnfoldDepth) + " at '" +
                                    A->call_name + "'");
            const ProcDef* pd = prog.find_proc(A->call_name);
            if (!pd)
                throw EvalError("UnresolvedIdentifier",
                                "call to undefined procedure '" + A->call_name + "'");
            if (pd->formals.size() != A->call_args.size())
                throw EvalError("ArityMismatch",
                                "procedure '" + A->call_name + "' called with " +
                                    std::to_string(A->call_args.size()) + " argument(s)");
            std::vector<TermId> actuals(A->call_args.size());
            std::string key = A->call_name;
            key.push_back('\0');
            for (size_t i = 0; i < A->call_args.size(); ++i) {
                actuals[i] = cached_rewrite(prog, A->call_args[i]);
                char buf[4];
                std::memcpy(buf, &actuals[i].v, 4);
                key.append(buf, 4);
            }
            AgentPtr body;
            {
                std::lock_guard<std::mutex> lk(prog.cache->mu);
                auto it = prog.cache->unfolds.find(key);
                if (it != prog.cache->unfolds.end()) body = it->second;
            }
            if (!body) {
                std::unordered_map<std::string, TermId> binding;
                for (size_t i = 0; i < pd->formals.size(); ++i) {
                    TermId v = actuals[i];
                    const SetDef* s = prog.defs.find_set(pd->formals[i].set_name);
                    if (s && !prog.defs.set_contains(*s, v))
                        throw EvalError("ArgumentOutsideSet",
                                        "argument " + std::to_string(i + 1) + " of '" +
                                            A->call_name + "' evaluates to " +
                                            prog.arena().to_text(v) + ", outside set '" +
                                            pd->formals[i].set_name + "'");
                    binding.emplace(pd->formals[i].name, v);
                }
                body = simplify(rewrite_payloads(substitute_agent(pd->body, binding, prog), prog));
                std::lock_guard<std::mutex> lk(prog.cache->mu);
                prog.cache->unfolds.emplace(std::move(key), body);
            }
            collect(body, sigma, prog, depth + 1, out);
            return;
        }
    }
}

}  // namespace

// Successor agents drop spent subterms as they are built, so they stay
// canonical when the input agent is canonical. Entry points run
// simplify on the root once instead of per successor.
std::vector<Successor> successors(const Config& c, const Program& prog) {
    std::vector<RawSuccessor> raw;
    collect(c.agent, c.store, prog, 0, raw);
    std::vector<Successor> out;
    out.reserve(raw.size());
    for (auto& r : raw)
        out.push_back({{std::move(r.agent), std::move(r.store)}, std::move(r.label)});
    return out;
}

namespace {

bool is_unit(const AgentPtr& a) {
    return a->kind == Agent::Kind::Prim || a->kind == Agent::Kind::GuardedList;
}

// N;Y in normal form: distribute over choice, reassociate nested
// sequences so the head stays a single primitive.
AgentPtr seq_nf(const AgentPtr& n, const AgentPtr& y) {
    if (is_unit(n)) return Agent::seq(n, y);
    if (n->kind == Agent::Kind::Seq)
        return Agent::seq(n->a, Agent::seq(n->b, y));
    if (n->kind == Agent::Kind::Choice)
        return Agent::choice(seq_nf(n->a, y), seq_nf(n->b, y));
    throw UnsupportedConstruct("sequence head is not in normal form");
}

// Left merge: the first step comes from n, the rest runs in parallel.
AgentPtr left_merge(const AgentPtr& n, const AgentPtr& y) {
    if (is_unit(n)) return Agent::seq(n, y);
    if (n->kind == Agent::Kind::Seq)
        return Agent::seq(n->a, Agent::par(n->b, y));
    if (n->kind == Agent::Kind::Choice)
        return Agent::choice(left_merge(n->a, y), left_merge(n->b, y));
    throw UnsupportedConstruct("left merge operand is not in normal form");
}

AgentPtr nf(const AgentPtr& a) {
    switch (a->kind) {
        case Agent::Kind::Prim:
        case Agent::Kind::GuardedList:
            return a;
        case Agent::Kind::Seq:
            return seq_nf(nf(a->a), a->b);
        case Agent::Kind::Par:
            return Agent::choice(left_merge(nf(a->a), a->b), left_merge(nf(a->b), a->a));
        case Agent::Kind::Choice:
            return Agent::choice(nf(a->a), nf(a->b));
        case Agent::Kind::End:
            throw UnsupportedConstruct("terminated agent has no normal form");
        case Agent::Kind::Cond:
            throw UnsupportedConstruct("conditional agents have no normal form");
        case Agent::Kind::Call:
            throw UnsupportedConstruct("procedure calls have no normal form");
    }
    return a;
}

}  // namespace

AgentPtr normal_form(const AgentPtr& a) {
    AgentPtr s = simplify(a);
    return nf(s);
}

bool is_normal_form(const AgentPtr& a) {
    if (is_unit(a)) return true;
    if (a->kind == Agent::Kind::Seq) return is_unit(a->a);
    if (a->kind == Agent::Kind::Choice)
        return is_normal_form(a->a) && is_normal_form(a->b);
    return false;
}

}  // namespace gbach
