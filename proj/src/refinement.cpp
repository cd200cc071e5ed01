#include "gbach/refinement.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace gbach {

const char* terminal_mark_name(TerminalMark m) {
    switch (m) {
        case TerminalMark::Success: return "success";
        case TerminalMark::Failure: return "failure";
        case TerminalMark::Ongoing: return "ongoing";
    }
    return "?";
}

std::string History::key() const {
    std::string s;
    s.push_back(static_cast<char>(mark));
    for (const Store& st : stores) {
        uint32_t n = static_cast<uint32_t>(st.items().size());
        char buf[4];
        std::memcpy(buf, &n, 4);
        s.append(buf, 4);
        s += st.encode();
    }
    return s;
}

std::vector<History> histories(const AgentPtr& agent, const Store& initial,
                               const Program& prog, const HistoryLimits& lim) {
    struct Item {
        Config cfg;
        std::vector<Store> stores;
    };
    std::vector<History> out;
    std::set<std::string> seen;
    std::vector<Item> stack;
    stack.push_back({{simplify(agent), initial}, {initial}});
    auto record = [&](std::vector<Store> stores, TerminalMark mark) {
        History h{std::move(stores), mark};
        if (!seen.insert(h.key()).second) return;
        if (out.size() >= lim.max_histories)
            throw BudgetExceeded("history enumeration exceeded " +
                                 std::to_string(lim.max_histories));
        out.push_back(std::move(h));
    };
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        if (it.cfg.agent->kind == Agent::Kind::End) {
            record(std::move(it.stores), TerminalMark::Success);
            continue;
        }
        std::vector<Successor> succs = successors(it.cfg, prog);
        if (succs.empty()) {
            record(std::move(it.stores), TerminalMark::Failure);
            continue;
        }
        if (it.stores.size() > lim.max_depth) {
            record(std::move(it.stores), TerminalMark::Ongoing);
            continue;
        }
        // Reverse push keeps exploration in successor order.
        for (auto rit = succs.rbegin(); rit != succs.rend(); ++rit) {
            std::vector<Store> stores = it.stores;
            stores.push_back(rit->config.store);
            stack.push_back({std::move(rit->config), std::move(stores)});
        }
    }
    return out;
}

std::optional<ContractionWitness> is_contraction(const History& hc, const History& h) {
    if (hc.mark != h.mark) return std::nullopt;
    ContractionWitness w;
    size_t j = 0;
    for (size_t i = 0; i < hc.stores.size(); ++i) {
        std::vector<Store> removed;
        while (j < h.stores.size() && !(h.stores[j] == hc.stores[i])) {
            removed.push_back(h.stores[j]);
            ++j;
        }
        if (j == h.stores.size()) return std::nullopt;
        w.injection.push_back(j);
        w.removed_before.push_back(std::move(removed));
        ++j;
    }
    while (j < h.stores.size()) {
        w.trailing_removed.push_back(h.stores[j]);
        ++j;
    }
    return w;
}

bool witness_preserves(const ContractionWitness& w, const History& hc,
                       const PropFormula& F) {
    if (!w.trailing_removed.empty()) return false;
    for (size_t i = 0; i < w.removed_before.size(); ++i) {
        bool kept = eval_prop(F, hc.stores[i]);
        for (const Store& t : w.removed_before[i])
            if (eval_prop(F, t) != kept) return false;
    }
    return true;
}

bool exists_preserving_contraction(const History& hc, const History& h,
                                   const PropFormula& F) {
    if (hc.mark != h.mark) return false;
    size_t nc = hc.stores.size(), nh = h.stores.size();
    if (nc > nh) return false;
    std::vector<char> satc(nc), sath(nh);
    for (size_t i = 0; i < nc; ++i) satc[i] = eval_prop(F, hc.stores[i]);
    for (size_t j = 0; j < nh; ++j) sath[j] = eval_prop(F, h.stores[j]);
    bool anchored_end = hc.mark != TerminalMark::Ongoing;
    // memo[i*(nh+1)+j]: matching hc[i..] into h[j..] already failed
    std::vector<char> failed((nc + 1) * (nh + 1), 0);
    std::function<bool(size_t, size_t)> go = [&](size_t i, size_t j) -> bool {
        if (i == nc) return anchored_end ? j == nh : true;
        if (failed[i * (nh + 1) + j]) return false;
        bool ok = false;
        for (size_t k = j; k < nh && !ok; ++k) {
            if (!(h.stores[k] == hc.stores[i])) continue;
            bool agree = true;
            for (size_t l = j; l < k; ++l)
                if (sath[l] != satc[i]) { agree = false; break; }
            if (!agree) continue;
            ok = go(i + 1, k + 1);
        }
        if (!ok) failed[i * (nh + 1) + j] = 1;
        return ok;
    };
    return go(0, 0);
}

namespace {

RefinementResult refinement_core(const AgentPtr& refined, const AgentPtr& reference,
                                 const std::vector<Store>& initials, const Program& prog,
                                 const PropFormula* F, const HistoryLimits& lim) {
    for (const Store& init : initials) {
        std::vector<History> ha = histories(refined, init, prog, lim);
        std::vector<History> hb = histories(reference, init, prog, lim);
        for (const History& a : ha) {
            bool covered = false;
            for (const History& b : hb) {
                if (F ? exists_preserving_contraction(a, b, *F)
                      : is_contraction(a, b).has_value()) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                RefinementResult r;
                r.refines = false;
                r.counterexample = a;
                r.counterexample_store = init;
                return r;
            }
        }
    }
    RefinementResult r;
    r.refines = true;
    return r;
}

}  // namespace

RefinementResult check_refinement(const AgentPtr& refined, const AgentPtr& reference,
                                  const std::vector<Store>& initials, const Program& prog,
                                  const HistoryLimits& lim) {
    return refinement_core(refined, reference, initials, prog, nullptr, lim);
}

RefinementResult check_refinement_preserving(const AgentPtr& refined,
                                             const AgentPtr& reference,
                                             const std::vector<Store>& initials,
                                             const Program& prog, const PropFormula& F,
                                             const HistoryLimits& lim) {
    return refinement_core(refined, reference, initials, prog, &F, lim);
}

std::set<std::pair<std::string, bool>> final_observables(const AgentPtr& agent,
                                                         const Store& initial,
                                                         const Program& prog,
                                                         uint64_t max_states) {
    std::set<std::pair<std::string, bool>> out;
    std::deque<Config> queue;
    std::set<std::string> visited;
    Config root{simplify(agent), initial};
    visited.insert(state_key(root));
    queue.push_back(std::move(root));
    while (!queue.empty()) {
        Config cfg = std::move(queue.front());
        queue.pop_front();
        if (cfg.agent->kind == Agent::Kind::End) {
            out.emplace(cfg.store.encode(), true);
            continue;
        }
        std::vector<Successor> succs = successors(cfg, prog);
        if (succs.empty()) {
            out.emplace(cfg.store.encode(), false);
            continue;
        }
        for (auto& s : succs) {
            std::string key = state_key(s.config);
            if (!visited.insert(std::move(key)).second) continue;
            if (visited.size() > max_states)
                throw BudgetExceeded("final observable enumeration exceeded " +
                                     std::to_string(max_states) + " states");
            queue.push_back(std::move(s.config));
        }
    }
    return out;
}

bool chain_collapsible(const std::vector<Prim>& tail) {
    for (const Prim& p : tail)
        if (p.kind != PrimKind::Tell && p.kind != PrimKind::Graphical) return false;
    return true;
}

namespace {

// Shape of a term for the disjointness test: exact value for atoms,
// functor/arity for compounds, unknown otherwise.
struct Shape {
    enum class Kind { Int, Token, Compound, Unknown } kind;
    int64_t num = 0;
    std::string name;
    size_t arity = 0;

    bool operator==(const Shape& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Kind::Int: return num == o.num;
            case Kind::Token: return name == o.name;
            case Kind::Compound: return name == o.name && arity == o.arity;
            case Kind::Unknown: return true;
        }
        return false;
    }
};

Shape shape_of(TermId t, const TermArena& arena) {
    const TermNode& n = arena.node(t);
    switch (n.kind) {
        case TermKind::Int: return {Shape::Kind::Int, n.num, "", 0};
        case TermKind::Token: return {Shape::Kind::Token, 0, n.name, 0};
        case TermKind::Compound: return {Shape::Kind::Compound, 0, n.name, n.args.size()};
        default: return {Shape::Kind::Unknown, 0, "", 0};
    }
}

}  // namespace

bool tail_distinct_from(const std::vector<Prim>& tail, const PropFormula& F,
                        const TermArena& arena) {
    auto fp = std::make_shared<PropFormula>(F);
    std::vector<TermId> counted = count_terms(PropPtr(fp));
    std::vector<Shape> fshapes;
    fshapes.reserve(counted.size());
    for (TermId t : counted) fshapes.push_back(shape_of(t, arena));
    for (const Prim& p : tail) {
        if (p.kind != PrimKind::Tell) continue;  // only tells touch the store
        Shape s = shape_of(p.payload, arena);
        if (s.kind == Shape::Kind::Unknown) return false;
        for (const Shape& f : fshapes)
            if (s == f) return false;
    }
    return true;
}

namespace {

struct TransformCtx {
    const Program& prog;
    const PropFormula& F;
    bool force;
    TransformReport& report;
    std::string context;
};

bool is_plain_prim(const AgentPtr& a) { return a->kind == Agent::Kind::Prim; }

bool tell_or_graphical(const AgentPtr& a) {
    return a->kind == Agent::Kind::Prim &&
           (a->prim.kind == PrimKind::Tell || a->prim.kind == PrimKind::Graphical);
}

AgentPtr walk(TransformCtx& ctx, const AgentPtr& a);

AgentPtr rebuild_seq(const std::vector<AgentPtr>& elems) {
    AgentPtr acc = elems.back();
    for (size_t i = elems.size() - 1; i-- > 0;) acc = Agent::seq(elems[i], acc);
    return acc;
}

AgentPtr walk_seq(TransformCtx& ctx, const AgentPtr& a) {
    std::vector<AgentPtr> elems;
    AgentPtr cur = a;
    while (cur->kind == Agent::Kind::Seq) {
        elems.push_back(cur->a);
        cur = cur->b;
    }
    elems.push_back(cur);

    std::vector<AgentPtr> out;
    out.reserve(elems.size());
    bool changed = false;
    size_t i = 0;
    while (i < elems.size()) {
        if (!is_plain_prim(elems[i])) {
            AgentPtr w = walk(ctx, elems[i]);
            changed = changed || w != elems[i];
            out.push_back(w);
            ++i;
            continue;
        }
        size_t j = i + 1;
        std::vector<Prim> tail;
        while (j < elems.size() && tell_or_graphical(elems[j])) {
            tail.push_back(elems[j]->prim);
            ++j;
        }
        if (tail.empty()) {
            out.push_back(elems[i]);
            ++i;
            continue;
        }
        bool distinct = tail_distinct_from(tail, ctx.F, ctx.prog.arena());
        SourceLoc loc = elems[i]->prim.loc;
        std::string chain_desc = "chain of " + std::to_string(tail.size() + 1) +
                                 " primitives";
        if (distinct || ctx.force) {
            out.push_back(Agent::guarded(elems[i]->prim, std::move(tail), loc));
            ctx.report.sites.push_back(
                {loc, ctx.context, distinct ? "transformed" : "forced",
                 chain_desc + (distinct ? "" : ", tail may touch checked terms")});
            changed = true;
            i = j;
        } else {
            ctx.report.sites.push_back(
                {loc, ctx.context, "skipped",
                 chain_desc + ", tail tells overlap the checked terms"});
            for (size_t k = i; k < j; ++k) out.push_back(elems[k]);
            i = j;
        }
    }
    if (!changed) return a;
    return rebuild_seq(out);
}

AgentPtr walk(TransformCtx& ctx, const AgentPtr& a) {
    switch (a->kind) {
        case Agent::Kind::End:
        case Agent::Kind::Prim:
        case Agent::Kind::GuardedList:
        case Agent::Kind::Call:
            return a;
        case Agent::Kind::Seq:
            return walk_seq(ctx, a);
        case Agent::Kind::Par:
        case Agent::Kind::Choice: {
            AgentPtr x = walk(ctx, a->a);
            AgentPtr y = walk(ctx, a->b);
            if (x == a->a && y == a->b) return a;
            return a->kind == Agent::Kind::Par ? Agent::par(x, y, a->loc)
                                               : Agent::choice(x, y, a->loc);
        }
        case Agent::Kind::Cond: {
            AgentPtr x = walk(ctx, a->a);
            AgentPtr y = a->b ? walk(ctx, a->b) : nullptr;
            if (x == a->a && y == a->b) return a;
            return Agent::cond_agent(a->cond, x, y, a->loc);
        }
    }
    return a;
}

}  // namespace

std::string TransformReport::to_text() const {
    std::ostringstream os;
    size_t transformed = 0, skipped = 0, forced = 0;
    for (const auto& s : sites) {
        if (s.action == "transformed") ++transformed;
        else if (s.action == "skipped") ++skipped;
        else ++forced;
    }
    os << "sites: " << sites.size() << " transformed: " << transformed
       << " forced: " << forced << " skipped: " << skipped << "\n";
    for (const auto& s : sites) {
        os << s.loc.line << ":" << s.loc.col << " " << s.context << " " << s.action
           << " (" << s.detail << ")\n";
    }
    return os.str();
}

TransformResult transform_to_guarded(const Program& prog, const PropFormula& F,
                                     bool force) {
    TransformResult res;
    res.program = prog;  // shares the arena; agents rebuilt below as needed
    res.program.cache = std::make_shared<EvalCache>();
    TransformCtx ctx{prog, F, force, res.report, ""};
    for (auto& p : res.program.procs) {
        ctx.context = p.name;
        p.body = walk(ctx, p.body);
    }
    if (res.program.main) {
        ctx.context = "main";
        res.program.main = walk(ctx, res.program.main);
    }
    return res;
}

}  // namespace gbach
