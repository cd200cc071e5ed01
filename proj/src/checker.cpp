#include "gbach/checker.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>
#include <thread>
#include <unordered_map>

namespace gbach {

const char* verdict_kind_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::Holds: return "holds";
        case VerdictKind::RefutedExhaustive: return "refuted_exhaustive";
        case VerdictKind::Unknown: return "unknown";
    }
    return "?";
}

uint64_t default_max_states() {
    if (const char* env = std::getenv("GBACH_MAX_STATES")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<uint64_t>(v);
    }
    return Limits{}.max_states;
}

namespace {

RuleKind rule_of_prim(PrimKind k) {
    switch (k) {
        case PrimKind::Tell: return RuleKind::T;
        case PrimKind::Ask: return RuleKind::A;
        case PrimKind::Get: return RuleKind::G;
        case PrimKind::Nask: return RuleKind::N;
        case PrimKind::Graphical: return RuleKind::Gr;
    }
    return RuleKind::T;
}

void label_deltas(const TransitionLabel& l, std::vector<TermId>& added,
                  std::vector<TermId>& removed) {
    for (const auto& fp : l.fired) {
        if (fp.kind == PrimKind::Tell) added.push_back(fp.term);
        else if (fp.kind == PrimKind::Get) removed.push_back(fp.term);
    }
}

TraceStep make_step(const TransitionLabel& l) {
    TraceStep s;
    s.label = l;
    label_deltas(l, s.added, s.removed);
    return s;
}

struct CheckAbort {
    std::string reason;
    Trace prefix;
};

// Lets the dedup map be probed with a reused byte buffer, copying the
// key only when the state is actually new.
struct KeyHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
    size_t operator()(const std::string& s) const noexcept {
        return std::hash<std::string_view>{}(std::string_view(s));
    }
};
using KeyMap = std::unordered_map<std::string, uint32_t, KeyHash, std::equal_to<>>;

struct Ctx {
    const Program& prog;
    Limits lim;
    SearchStats stats;
    int bound_events = 0;
    std::string bound_reason;
    std::unordered_map<std::string, char> false_memo;
};

void mark_bound(Ctx& ctx, const char* why) {
    if (ctx.bound_events == 0) ctx.bound_reason = why;
    ++ctx.bound_events;
}

void maybe_shuffle(Ctx& ctx, const Config& from, std::vector<Successor>& succs) {
    if (ctx.lim.shuffle_seed == 0 || succs.size() < 2) return;
    std::string key = state_key(from);
    uint64_t h = ctx.lim.shuffle_seed;
    for (unsigned char c : key) h = h * 1099511628211ull + c;
    std::mt19937_64 rng(h);
    std::shuffle(succs.begin(), succs.end(), rng);
}

// Successor batches for a frontier slice, optionally on worker threads.
// Results land in slot order, so the merge below is independent of the
// number of workers.
void compute_batches(Ctx& ctx, const std::vector<const Config*>& cfgs,
                     std::vector<std::vector<Successor>>& outs,
                     std::vector<std::exception_ptr>& errs) {
    size_t n = cfgs.size();
    outs.assign(n, {});
    errs.assign(n, nullptr);
    auto work = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i) {
            try {
                outs[i] = successors(*cfgs[i], ctx.prog);
                maybe_shuffle(ctx, *cfgs[i], outs[i]);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    int w = std::max(1, ctx.lim.workers);
    if (w == 1 || n < 2) {
        work(0, n);
        return;
    }
    size_t chunks = std::min<size_t>(static_cast<size_t>(w), n);
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    size_t per = (n + chunks - 1) / chunks;
    for (size_t c = 0; c < chunks; ++c) {
        size_t lo = c * per, hi = std::min(n, lo + per);
        if (lo >= hi) break;
        threads.emplace_back(work, lo, hi);
    }
    for (auto& t : threads) t.join();
}

using Steps = std::vector<TraceStep>;
using PrefixFn = std::function<Trace()>;

std::optional<Steps> sat(Ctx& ctx, const Config& cfg, const TemporalPtr& f,
                         const PrefixFn& mk_prefix);

std::optional<Steps> sat_next(Ctx& ctx, const Config& cfg, const TemporalPtr& f,
                              const PrefixFn& mk_prefix) {
    std::vector<Successor> succs;
    try {
        succs = successors(cfg, ctx.prog);
    } catch (const EvalError& e) {
        throw CheckAbort{std::string(e.code()) + ": " + e.what(), mk_prefix()};
    }
    maybe_shuffle(ctx, cfg, succs);
    ctx.stats.states_expanded += 1;
    ctx.stats.states_discovered += succs.size();
    for (const auto& s : succs) {
        TraceStep step = make_step(s.label);
        auto sub_prefix = [&mk_prefix, &step]() {
            Trace t = mk_prefix();
            t.steps.push_back(step);
            return t;
        };
        auto r = sat(ctx, s.config, f->inner, sub_prefix);
        if (r) {
            Steps out;
            out.reserve(r->size() + 1);
            out.push_back(std::move(step));
            out.insert(out.end(), r->begin(), r->end());
            return out;
        }
    }
    return std::nullopt;
}

std::optional<Steps> sat_until(Ctx& ctx, const Config& cfg, const TemporalPtr& f,
                               const PrefixFn& mk_prefix) {
    struct Node {
        Config cfg;
        uint32_t parent;
        TransitionLabel label;
        uint32_t depth;
    };
    std::deque<Node> nodes;
    KeyMap visited;
    visited.reserve(1024);
    std::string keybuf;

    auto path_steps = [&](uint32_t i) {
        Steps steps;
        for (uint32_t k = i; k != UINT32_MAX && nodes[k].parent != UINT32_MAX;
             k = nodes[k].parent)
            steps.push_back(make_step(nodes[k].label));
        std::reverse(steps.begin(), steps.end());
        return steps;
    };
    auto prefix_at = [&](uint32_t i) {
        return [&, i]() {
            Trace t = mk_prefix();
            Steps ps = path_steps(i);
            t.steps.insert(t.steps.end(), ps.begin(), ps.end());
            return t;
        };
    };

    if (ctx.stats.states_discovered >= ctx.lim.max_states) {
        mark_bound(ctx, "max_states");
        return std::nullopt;
    }
    ctx.stats.states_discovered += 1;
    visited.emplace(state_key(cfg), 0);
    nodes.push_back({cfg, UINT32_MAX, {}, 0});

    std::vector<uint32_t> level{0};
    while (!level.empty()) {
        ctx.stats.max_frontier = std::max<uint64_t>(ctx.stats.max_frontier, level.size());
        // Test the target at every state of this depth, in discovery order.
        for (uint32_t i : level) {
            auto r = sat(ctx, nodes[i].cfg, f->inner, prefix_at(i));
            if (r) {
                Steps out = path_steps(i);
                out.insert(out.end(), r->begin(), r->end());
                return out;
            }
        }
        // Expansion set: states whose store satisfies the restriction.
        std::vector<uint32_t> expand;
        expand.reserve(level.size());
        for (uint32_t i : level) {
            if (!eval_prop(*f->prop, nodes[i].cfg.store)) continue;
            if (static_cast<uint64_t>(nodes[i].depth) >= ctx.lim.max_depth) {
                mark_bound(ctx, "max_depth");
                continue;
            }
            expand.push_back(i);
        }
        std::vector<const Config*> cfgs;
        cfgs.reserve(expand.size());
        for (uint32_t i : expand) cfgs.push_back(&nodes[i].cfg);
        std::vector<std::vector<Successor>> outs;
        std::vector<std::exception_ptr> errs;
        compute_batches(ctx, cfgs, outs, errs);

        std::vector<uint32_t> next_level;
        for (size_t k = 0; k < expand.size(); ++k) {
            uint32_t i = expand[k];
            if (errs[k]) {
                try {
                    std::rethrow_exception(errs[k]);
                } catch (const EvalError& e) {
                    throw CheckAbort{std::string(e.code()) + ": " + e.what(),
                                     prefix_at(i)()};
                }
            }
            ctx.stats.states_expanded += 1;
            for (auto& s : outs[k]) {
                keybuf.clear();
                state_key_into(s.config, keybuf);
                if (visited.find(std::string_view(keybuf)) != visited.end()) continue;
                if (ctx.stats.states_discovered >= ctx.lim.max_states) {
                    mark_bound(ctx, "max_states");
                    return std::nullopt;
                }
                uint32_t id = static_cast<uint32_t>(nodes.size());
                visited.emplace(keybuf, id);
                nodes.push_back({std::move(s.config), i, std::move(s.label),
                                 nodes[i].depth + 1});
                ctx.stats.states_discovered += 1;
                next_level.push_back(id);
            }
        }
        level = std::move(next_level);
    }
    return std::nullopt;
}

std::optional<Steps> sat(Ctx& ctx, const Config& cfg, const TemporalPtr& f,
                         const PrefixFn& mk_prefix) {
    if (f->kind == TemporalFormula::Kind::Prop) {
        if (eval_prop(*f->prop, cfg.store)) return Steps{};
        return std::nullopt;
    }
    std::string memo_key;
    {
        uintptr_t p = reinterpret_cast<uintptr_t>(f.get());
        char buf[sizeof(p)];
        std::memcpy(buf, &p, sizeof(p));
        memo_key.assign(buf, sizeof(p));
        memo_key += state_key(cfg);
    }
    if (ctx.false_memo.count(memo_key)) return std::nullopt;
    int bounds_before = ctx.bound_events;
    std::optional<Steps> r;
    if (f->kind == TemporalFormula::Kind::Next) {
        r = sat_next(ctx, cfg, f, mk_prefix);
    } else {
        r = sat_until(ctx, cfg, f, mk_prefix);
    }
    // Only definitive failures are cached; a truncated search proves nothing.
    if (!r && ctx.bound_events == bounds_before) ctx.false_memo.emplace(memo_key, 1);
    return r;
}

}  // namespace

CheckResult check_from(const Program& prog, const TemporalPtr& f, const Store& initial,
                       const Limits& lim) {
    CheckResult res;
    auto t0 = std::chrono::steady_clock::now();
    Ctx ctx{prog, lim, {}, 0, {}, {}};
    if (!prog.main) {
        res.verdict.kind = VerdictKind::Unknown;
        res.verdict.reason = "no main agent";
        return res;
    }
    Config root{simplify(prog.main), initial};
    try {
        auto r = sat(ctx, root, f, [&initial]() { return Trace{initial, {}}; });
        if (r) {
            res.verdict.kind = VerdictKind::Holds;
            res.verdict.witness = Trace{initial, std::move(*r)};
        } else if (ctx.bound_events > 0) {
            res.verdict.kind = VerdictKind::Unknown;
            res.verdict.reason = ctx.bound_reason;
        } else {
            res.verdict.kind = VerdictKind::RefutedExhaustive;
        }
    } catch (CheckAbort& a) {
        res.verdict.kind = VerdictKind::Unknown;
        res.verdict.reason = "error: " + a.reason;
        res.verdict.partial = std::move(a.prefix);
    }
    res.stats = ctx.stats;
    res.stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
}

CheckResult check(const Program& prog, const TemporalPtr& f, const Limits& lim) {
    return check_from(prog, f, Store{}, lim);
}

ReplayResult replay(const Trace& trace, const Program& prog) {
    if (!prog.main) return {false, 0, "no main agent"};
    std::vector<Config> candidates{{simplify(prog.main), trace.initial}};
    Store cur = trace.initial;
    for (size_t k = 0; k < trace.steps.size(); ++k) {
        const TraceStep& step = trace.steps[k];
        Store next = cur;
        for (TermId t : step.removed) {
            auto r = next.with_removed(t);
            if (!r) return {false, k, "recorded delta removes an absent term"};
            next = std::move(*r);
        }
        for (TermId t : step.added) next = next.with_added(t);

        std::vector<Config> expanded;
        std::unordered_map<std::string, char> seen;
        for (const Config& cand : candidates) {
            std::vector<Successor> succs;
            try {
                succs = successors(cand, prog);
            } catch (const EvalError& e) {
                return {false, k, std::string("error: ") + e.what()};
            }
            for (auto& s : succs) {
                if (!(s.label == step.label)) continue;
                if (!(s.config.store == next)) continue;
                std::string key = state_key(s.config);
                if (seen.emplace(std::move(key), 1).second)
                    expanded.push_back(std::move(s.config));
            }
        }
        if (expanded.empty())
            return {false, k, "no transition reproduces the recorded step"};
        candidates = std::move(expanded);
        cur = std::move(next);
    }
    return {true, trace.steps.size(), ""};
}

Trace expand_guarded_steps(const Trace& trace) {
    Trace out;
    out.initial = trace.initial;
    for (const auto& step : trace.steps) {
        if (step.label.rule != RuleKind::GL) {
            out.steps.push_back(step);
            continue;
        }
        for (const auto& fp : step.label.fired) {
            TransitionLabel l{rule_of_prim(fp.kind), {fp}};
            out.steps.push_back(make_step(l));
        }
    }
    return out;
}

Store store_after(const Trace& trace) {
    Store s = trace.initial;
    for (const auto& step : trace.steps) {
        for (TermId t : step.removed) {
            auto r = s.with_removed(t);
            if (!r) throw EvalError("TraceDelta", "trace removes an absent term");
            s = std::move(*r);
        }
        for (TermId t : step.added) s = s.with_added(t);
    }
    return s;
}

SpaceStats enumerate_space(const Program& prog, const Store& initial, const Limits& lim,
                           std::ostream* graph_out) {
    SpaceStats out;
    auto t0 = std::chrono::steady_clock::now();
    if (!prog.main) return out;
    const TermArena& arena = prog.arena();

    struct Node {
        Config cfg;
        uint32_t depth;
    };
    std::deque<Node> nodes;
    KeyMap visited;
    visited.reserve(1024);
    std::string keybuf;
    nodes.push_back({{simplify(prog.main), initial}, 0});
    visited.emplace(state_key(nodes[0].cfg), 0);
    out.search.states_discovered = 1;
    if (graph_out)
        *graph_out << "STATE 0 " << initial.to_text(arena) << "\n";

    bool bounded = false;
    std::deque<uint32_t> queue{0};
    while (!queue.empty()) {
        uint32_t i = queue.front();
        queue.pop_front();
        if (static_cast<uint64_t>(nodes[i].depth) >= lim.max_depth) {
            bounded = true;
            continue;
        }
        std::vector<Successor> succs = successors(nodes[i].cfg, prog);
        out.search.states_expanded += 1;
        for (auto& s : succs) {
            keybuf.clear();
            state_key_into(s.config, keybuf);
            auto it = visited.find(std::string_view(keybuf));
            uint32_t id;
            if (it != visited.end()) {
                id = it->second;
            } else {
                if (out.search.states_discovered >= lim.max_states) {
                    bounded = true;
                    continue;
                }
                id = static_cast<uint32_t>(nodes.size());
                visited.emplace(keybuf, id);
                if (graph_out)
                    *graph_out << "STATE " << id << " "
                               << s.config.store.to_text(arena) << "\n";
                nodes.push_back({std::move(s.config), nodes[i].depth + 1});
                out.search.states_discovered += 1;
                queue.push_back(id);
            }
            if (graph_out) {
                *graph_out << "EDGE " << i << " " << id << " "
                           << rule_kind_name(s.label.rule) << " ";
                for (size_t k = 0; k < s.label.fired.size(); ++k) {
                    if (k) *graph_out << ",";
                    *graph_out << fired_prim_text(s.label.fired[k], arena);
                }
                *graph_out << "\n";
            }
        }
        out.search.max_frontier = std::max<uint64_t>(out.search.max_frontier, queue.size());
    }
    out.complete = !bounded;
    out.search.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

std::string render_report(const CheckResult& r) {
    std::ostringstream os;
    os << "verdict: " << verdict_kind_name(r.verdict.kind) << "\n";
    if (r.verdict.kind == VerdictKind::Unknown)
        os << "reason: " << r.verdict.reason << "\n";
    os << "states_expanded: " << r.stats.states_expanded << "\n";
    os << "states_discovered: " << r.stats.states_discovered << "\n";
    os << "max_frontier: " << r.stats.max_frontier << "\n";
    os.setf(std::ios::fixed);
    os.precision(3);
    os << "wall_ms: " << r.stats.wall_ms << "\n";
    if (r.verdict.kind == VerdictKind::Holds)
        os << "witness_len: " << r.verdict.witness.steps.size() << "\n";
    else
        os << "witness_len: -1\n";
    return os.str();
}

std::map<std::string, std::string> parse_report(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto pos = line.find(": ");
        if (pos == std::string::npos) continue;
        out[line.substr(0, pos)] = line.substr(pos + 2);
    }
    return out;
}

std::string trace_to_text(const Trace& t, const TermArena& arena) {
    std::ostringstream os;
    os << "trace 1\n";
    os << "init " << t.initial.to_text(arena) << "\n";
    for (const auto& step : t.steps) {
        os << "step " << rule_kind_name(step.label.rule) << " ;";
        for (const auto& fp : step.label.fired) os << " " << fired_prim_text(fp, arena);
        os << " ; add";
        for (TermId x : step.added) os << " " << arena.to_text(x);
        os << " ; del";
        for (TermId x : step.removed) os << " " << arena.to_text(x);
        os << "\n";
    }
    return os.str();
}

namespace {

[[noreturn]] void trace_fail(const std::string& why) {
    throw EvalError("TraceSyntax", why);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

}  // namespace

Store parse_store_text(const std::string& text, const TermArena& arena) {
    std::string s = text;
    if (s.size() < 2 || s.front() != '{' || s.back() != '}')
        trace_fail("store must be braced: " + text);
    s = s.substr(1, s.size() - 2);
    Store store;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t end = s.find(", ", pos);
        std::string item = s.substr(pos, end == std::string::npos ? end : end - pos);
        pos = end == std::string::npos ? s.size() : end + 2;
        if (item.empty()) continue;
        size_t colon = item.rfind(':');
        if (colon == std::string::npos) trace_fail("store item needs a count: " + item);
        TermId t = parse_final_term(arena, item.substr(0, colon));
        long count = 0;
        try {
            count = std::stol(item.substr(colon + 1));
        } catch (...) {
            trace_fail("bad store count: " + item);
        }
        if (count <= 0 || count > 1000000) trace_fail("store count out of range: " + item);
        for (long k = 0; k < count; ++k) store = store.with_added(t);
    }
    return store;
}

namespace {

FiredPrim parse_fired(const std::string& w, const TermArena& arena) {
    size_t open = w.find('(');
    if (open == std::string::npos || w.back() != ')')
        trace_fail("malformed fired primitive: " + w);
    std::string kind = w.substr(0, open);
    std::string inner = w.substr(open + 1, w.size() - open - 2);
    PrimKind pk;
    if (kind == "tell") pk = PrimKind::Tell;
    else if (kind == "ask") pk = PrimKind::Ask;
    else if (kind == "nask") pk = PrimKind::Nask;
    else if (kind == "get") pk = PrimKind::Get;
    else if (kind == "gr") pk = PrimKind::Graphical;
    else trace_fail("unknown primitive kind: " + kind);
    return FiredPrim{pk, parse_final_term(arena, inner)};
}

RuleKind parse_rule(const std::string& w) {
    if (w == "T") return RuleKind::T;
    if (w == "A") return RuleKind::A;
    if (w == "G") return RuleKind::G;
    if (w == "N") return RuleKind::N;
    if (w == "Gr") return RuleKind::Gr;
    if (w == "GL") return RuleKind::GL;
    trace_fail("unknown rule: " + w);
}

}  // namespace

Trace trace_from_text(const std::string& text, const TermArena& arena) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || split_ws(line) != std::vector<std::string>{"trace", "1"})
        trace_fail("missing trace header");
    if (!std::getline(is, line) || line.rfind("init ", 0) != 0)
        trace_fail("missing init line");
    Trace t;
    t.initial = parse_store_text(line.substr(5), arena);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("step ", 0) != 0) trace_fail("expected step line: " + line);
        std::string rest = line.substr(5);
        std::vector<std::string> segs;
        size_t pos = 0;
        while (true) {
            size_t sep = rest.find(" ; ", pos);
            if (sep == std::string::npos) {
                segs.push_back(rest.substr(pos));
                break;
            }
            segs.push_back(rest.substr(pos, sep - pos));
            pos = sep + 3;
        }
        if (segs.size() != 4) trace_fail("step line needs 4 sections: " + line);
        TraceStep step;
        auto rule_words = split_ws(segs[0]);
        if (rule_words.size() != 1) trace_fail("bad rule section: " + segs[0]);
        step.label.rule = parse_rule(rule_words[0]);
        for (const auto& w : split_ws(segs[1]))
            step.label.fired.push_back(parse_fired(w, arena));
        auto adds = split_ws(segs[2]);
        if (adds.empty() || adds[0] != "add") trace_fail("bad add section: " + segs[2]);
        for (size_t k = 1; k < adds.size(); ++k)
            step.added.push_back(parse_final_term(arena, adds[k]));
        auto dels = split_ws(segs[3]);
        if (dels.empty() || dels[0] != "del") trace_fail("bad del section: " + segs[3]);
        for (size_t k = 1; k < dels.size(); ++k)
            step.removed.push_back(parse_final_term(arena, dels[k]));
        t.steps.push_back(std::move(step));
    }
    return t;
}

}  // namespace gbach
