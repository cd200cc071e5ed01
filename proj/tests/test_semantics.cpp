#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include <gbach/parser.hpp>
#include <gbach/semantics.hpp>

using namespace gbach;

namespace {

std::shared_ptr<Program> load(const std::string& src) {
    ParseResult r = parse_program(src);
    REQUIRE_MESSAGE(r.ok(), "fixture program must parse");
    return r.program;
}

AgentPtr agent_of(Program& prog, const std::string& text) {
    std::vector<Diagnostic> diags;
    AgentPtr a = parse_agent_text(prog, text, diags);
    REQUIRE(a);
    REQUIRE(diags.empty());
    return a;
}

Store store_of(Program& prog, std::initializer_list<std::pair<const char*, int>> items) {
    Store s;
    for (const auto& [text, n] : items) {
        std::vector<Diagnostic> diags;
        AgentPtr a = parse_agent_text(prog, std::string("tell(") + text + ")", diags);
        REQUIRE(diags.empty());
        for (int i = 0; i < n; ++i) s = s.with_added(a->prim.payload);
    }
    return s;
}

const char* kBoardSrc =
    "eset RCInt = {1..6}. "
    "map pred: RCInt -> RCInt. "
    "eqn pred(2)=1. pred(3)=2. pred(4)=3. pred(5)=4. pred(6)=5. "
    "map succ: RCInt -> RCInt. "
    "eqn succ(1)=2. succ(2)=3. succ(3)=4. succ(4)=5. succ(5)=6. "
    "map down_truck: RCInt -> RCInt. "
    "eqn down_truck(1)=4. down_truck(2)=5. down_truck(3)=6. "
    "gprim move. "
    "main = tell(seed).";

}  // namespace

TEST_CASE("store primitives: add, check, absence, removal, graphics") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    TermId a = prog.terms->make_token("a");

    Prim tell{PrimKind::Tell, a, {}};
    auto res = step_primitive(tell, Store{}, prog);
    REQUIRE(res);
    CHECK(res->first.count(a) == 1);
    CHECK(res->second.kind == PrimKind::Tell);
    CHECK(res->second.term == a);

    Prim ask{PrimKind::Ask, a, {}};
    CHECK(!step_primitive(ask, Store{}, prog));
    res = step_primitive(ask, Store{}.with_added(a), prog);
    REQUIRE(res);
    CHECK(res->first.count(a) == 1);

    Prim nask{PrimKind::Nask, a, {}};
    res = step_primitive(nask, Store{}, prog);
    REQUIRE(res);
    CHECK(res->first.total_size() == 0);
    CHECK(!step_primitive(nask, Store{}.with_added(a), prog));

    Prim get{PrimKind::Get, a, {}};
    CHECK(!step_primitive(get, Store{}, prog));
    res = step_primitive(get, Store{}.with_added(a).with_added(a), prog);
    REQUIRE(res);
    CHECK(res->first.count(a) == 1);

    // Payloads reach their final form before touching the store.
    AgentPtr g = agent_of(prog, "get(free(pred(3),2))");
    Store sigma = store_of(prog, {{"free(2,2)", 1}});
    res = step_primitive(g->prim, sigma, prog);
    REQUIRE(res);
    CHECK(res->first.total_size() == 0);
    CHECK(prog.arena().to_text(res->second.term) == "free(2,2)");

    // Graphical actions always fire and never touch the store.
    AgentPtr mv = agent_of(prog, "move(red,1,2)");
    sigma = store_of(prog, {{"a", 2}, {"b", 1}});
    res = step_primitive(mv->prim, sigma, prog);
    REQUIRE(res);
    CHECK(res->first.encode() == sigma.encode());
    CHECK(res->second.kind == PrimKind::Graphical);
}

TEST_CASE("stepping an unbound variable is a fault, not a transition") {
    auto progp = load(kBoardSrc);
    Prim p{PrimKind::Tell, progp->terms->make_var("x"), {}};
    try {
        step_primitive(p, Store{}, *progp);
        FAIL("expected a fault");
    } catch (const EvalError& e) {
        CHECK(e.code() == std::string("UnboundVariable"));
    }
}

TEST_CASE("single primitives step to termination with the right rule label") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    struct Row {
        const char* text;
        const char* store_term;  // preloaded once when non-null
        RuleKind rule;
        size_t succ_count;
    };
    const Row rows[] = {
        {"tell(a)", nullptr, RuleKind::T, 1},
        {"ask(a)", "a", RuleKind::A, 1},
        {"get(a)", "a", RuleKind::G, 1},
        {"nask(a)", nullptr, RuleKind::N, 1},
        {"move(red,1,2)", nullptr, RuleKind::Gr, 1},
        {"ask(a)", nullptr, RuleKind::T, 0},
        {"get(a)", nullptr, RuleKind::T, 0},
    };
    for (const Row& row : rows) {
        CAPTURE(row.text);
        Store sigma;
        if (row.store_term)
            sigma = store_of(prog, {{row.store_term, 1}});
        auto succs = successors({agent_of(prog, row.text), sigma}, prog);
        REQUIRE(succs.size() == row.succ_count);
        if (row.succ_count) {
            CHECK(succs[0].config.agent->kind == Agent::Kind::End);
            CHECK(succs[0].label.rule == row.rule);
            REQUIRE(succs[0].label.fired.size() == 1);
        }
    }
    CHECK(successors({Agent::end(), Store{}}, prog).empty());
}

TEST_CASE("parallel composition interleaves, left alternative first") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    auto succs = successors({agent_of(prog, "tell(a) || tell(b)"), Store{}}, prog);
    REQUIRE(succs.size() == 2);
    CHECK(agent_to_text(succs[0].config.agent, prog.arena()) == "tell(b)");
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{a:1}");
    CHECK(agent_to_text(succs[1].config.agent, prog.arena()) == "tell(a)");
    CHECK(succs[1].config.store.to_text(prog.arena()) == "{b:1}");

    // A blocked side leaves only the other interleaving.
    succs = successors({agent_of(prog, "ask(q) || tell(b)"), Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(agent_to_text(succs[0].config.agent, prog.arena()) == "ask(q)");
}

TEST_CASE("sequencing runs the head to completion before the continuation") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    auto succs = successors({agent_of(prog, "ask(a); tell(b)"),
                             store_of(prog, {{"a", 1}})},
                            prog);
    REQUIRE(succs.size() == 1);
    CHECK(agent_to_text(succs[0].config.agent, prog.arena()) == "tell(b)");
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{a:1}");
    CHECK(succs[0].label.rule == RuleKind::A);

    // The continuation contributes no transitions of its own yet.
    succs = successors({agent_of(prog, "ask(a); tell(b)"), Store{}}, prog);
    CHECK(succs.empty());
}

TEST_CASE("choice offers each enabled branch and drops the other on firing") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    auto succs = successors({agent_of(prog, "ask(a); tell(b) + tell(c)"), Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.agent->kind == Agent::Kind::End);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{c:1}");

    succs = successors({agent_of(prog, "tell(a) + tell(b)"), Store{}}, prog);
    REQUIRE(succs.size() == 2);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{a:1}");
    CHECK(succs[1].config.store.to_text(prog.arena()) == "{b:1}");
}

TEST_CASE("conditionals pick a branch by value, never by store") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;

    auto succs = successors({agent_of(prog, "(1=1) -> tell(a) <> tell(b)"), Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{a:1}");
    CHECK(succs[0].label.rule == RuleKind::T);

    succs = successors({agent_of(prog, "(1=2) -> tell(a) <> tell(b)"), Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{b:1}");

    // False without an else blocks outright.
    succs = successors({agent_of(prog, "(1=2) -> tell(a)"), Store{}}, prog);
    CHECK(succs.empty());

    // Maps are unfolded when the guard is evaluated.
    succs = successors({agent_of(prog, "(down_truck(1)=4) -> tell(a)"), Store{}}, prog);
    CHECK(succs.size() == 1);
}

TEST_CASE("condition evaluation: arithmetic comparisons and connectives") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    auto cond_of = [&](const std::string& text) {
        std::vector<Diagnostic> diags;
        AgentPtr a = parse_agent_text(prog, "(" + text + ") -> tell(x)", diags);
        REQUIRE(a);
        for (const auto& d : diags) REQUIRE(d.severity != Severity::Error);
        REQUIRE(a->kind == Agent::Kind::Cond);
        return a->cond;
    };
    CHECK(eval_condition(*cond_of("3>1 & 3<5"), prog));
    CHECK(!eval_condition(*cond_of("!(1=1)"), prog));
    CHECK(eval_condition(*cond_of("down_truck(1)=4"), prog));
    CHECK(eval_condition(*cond_of("red=red"), prog));
    CHECK(!eval_condition(*cond_of("red=blue"), prog));
    CHECK(eval_condition(*cond_of("1=1 | 1=2"), prog));
    CHECK(eval_condition(*cond_of("2>=2 & 2<=2 & 1!=2"), prog));

    try {
        eval_condition(*cond_of("red > 1"), prog);
        FAIL("expected a fault");
    } catch (const EvalError& e) {
        CHECK(e.code() == std::string("TypeMismatch"));
    }
}

TEST_CASE("procedure calls unfold with arguments bound and reduced") {
    auto progp = load(
        "eset S = {1..9}. "
        "map succ: S -> S. "
        "eqn succ(1)=2. succ(2)=3. succ(3)=4. "
        "proc P(x: S) = tell(c(x)); P(succ(x)). "
        "main = P(1).");
    Program& prog = *progp;
    auto succs = successors({prog.main, Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{c(1):1}");
    REQUIRE(succs[0].config.agent->kind == Agent::Kind::Call);
    CHECK(prog.arena().to_text(succs[0].config.agent->call_args[0]) == "2");

    // A second hop keeps reducing.
    auto succs2 = successors(succs[0].config, prog);
    REQUIRE(succs2.size() == 1);
    CHECK(prog.arena().to_text(succs2[0].config.agent->call_args[0]) == "3");
}

TEST_CASE("calls that never reach a primitive run out of unfolding room") {
    Program prog;
    ProcDef pd;
    pd.name = "P";
    pd.body = Agent::call("P", {});
    prog.procs.push_back(pd);
    try {
        successors({Agent::call("P", {}), Store{}}, prog);
        FAIL("expected a fault");
    } catch (const EvalError& e) {
        CHECK(e.code() == std::string("CallUnfoldLimit"));
    }
}

TEST_CASE("a one-element guarded list behaves like its guard") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;

    auto plain = successors({agent_of(prog, "tell(a)"), Store{}}, prog);
    auto listed = successors({agent_of(prog, "[tell(a)]"), Store{}}, prog);
    REQUIRE(plain.size() == 1);
    REQUIRE(listed.size() == 1);
    CHECK(listed[0].config.agent->kind == Agent::Kind::End);
    CHECK(listed[0].config.store.encode() == plain[0].config.store.encode());
    CHECK(listed[0].label.rule == RuleKind::GL);
    REQUIRE(listed[0].label.fired.size() == 1);
    CHECK(listed[0].label.fired[0].kind == PrimKind::Tell);

    CHECK(successors({agent_of(prog, "[ask(b)]"), Store{}}, prog).empty());
}

TEST_CASE("a guarded list fires guard and tail as one transition") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;

    auto succs = successors({agent_of(prog, "[get(a) -> tell(b), tell(c)]"),
                             store_of(prog, {{"a", 1}})},
                            prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.agent->kind == Agent::Kind::End);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{b:1, c:1}");
    REQUIRE(succs[0].label.fired.size() == 3);
    CHECK(succs[0].label.fired[0].kind == PrimKind::Get);
    CHECK(succs[0].label.fired[1].kind == PrimKind::Tell);
    CHECK(succs[0].label.fired[2].kind == PrimKind::Tell);

    // Blocked guard: no transition at all, the tail stays untouched.
    succs = successors({agent_of(prog, "[get(a) -> tell(b), tell(c)]"), Store{}}, prog);
    CHECK(succs.empty());

    // Graphical actions may ride in the tail.
    succs = successors({agent_of(prog, "[get(a) -> move(red,1,2), tell(b)]"),
                        store_of(prog, {{"a", 1}})},
                       prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.store.to_text(prog.arena()) == "{b:1}");
    CHECK(succs[0].label.fired[1].kind == PrimKind::Graphical);
}

TEST_CASE("a blocked tail primitive is a fault: no rollback, no silent skip") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    try {
        successors({agent_of(prog, "[tell(a) -> get(b)]"), Store{}}, prog);
        FAIL("expected a fault");
    } catch (const GuardedTailFailure& e) {
        CHECK(e.tail_index() == 0);
        CHECK(std::string(e.what()).find("get(b)") != std::string::npos);
    }
    // Later positions report their own index.
    try {
        successors({agent_of(prog, "[tell(a) -> tell(b), ask(q)]"), Store{}}, prog);
        FAIL("expected a fault");
    } catch (const GuardedTailFailure& e) {
        CHECK(e.tail_index() == 1);
    }
    // The tail sees the guard's effect, so this one is fine.
    auto succs = successors({agent_of(prog, "[tell(a) -> get(a)]"), Store{}}, prog);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].config.store.total_size() == 0);
}

TEST_CASE("terminated units drop out of composite agents") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    AgentPtr p = agent_of(prog, "tell(a)");
    AgentPtr q = agent_of(prog, "get(b)");

    CHECK(agent_equal(simplify(Agent::seq(Agent::end(), p)), p));
    CHECK(simplify(Agent::par(Agent::end(), Agent::end()))->kind == Agent::Kind::End);
    CHECK(agent_equal(simplify(Agent::par(Agent::seq(Agent::end(), p), Agent::end())), p));
    CHECK(agent_equal(simplify(Agent::par(p, Agent::end())), p));
    // Choice branches keep their identity even when one is finished.
    AgentPtr ch = simplify(Agent::choice(Agent::end(), q));
    REQUIRE(ch->kind == Agent::Kind::Choice);
    CHECK(ch->a->kind == Agent::Kind::End);

    // Successor configurations come back already simplified.
    auto succs = successors({agent_of(prog, "(tell(a); tell(b)) || tell(c)"), Store{}}, prog);
    for (const auto& s : succs) {
        std::string t = agent_to_text(s.config.agent, prog.arena());
        CHECK(t.find("E") == std::string::npos);
    }
}

TEST_CASE("substitution binds formals everywhere, including guards and payloads") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    // Hand-built body over a free variable x.
    TermId x = prog.terms->make_var("x");
    TermId fx = prog.terms->make_compound("f", {x});
    AgentPtr body = Agent::cond_agent(
        Condition::cmp(CmpOp::Gt, x, prog.terms->make_int(1)),
        Agent::seq(Agent::make_prim({PrimKind::Tell, fx, {}}),
                   Agent::call("P", {x})),
        nullptr);
    std::unordered_map<std::string, TermId> binding{{"x", prog.terms->make_int(3)}};
    AgentPtr bound = substitute_agent(body, binding, prog);
    CHECK(prog.arena().to_text(bound->cond->lhs) == "3");
    CHECK(prog.arena().to_text(bound->a->a->prim.payload) == "f(3)");
    CHECK(prog.arena().to_text(bound->a->b->call_args[0]) == "3");
    // Unmentioned formals stay put.
    std::unordered_map<std::string, TermId> other{{"y", prog.terms->make_int(9)}};
    CHECK(agent_equal(substitute_agent(body, other, prog), body));
}

TEST_CASE("successor enumeration is deterministic") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    Config c{agent_of(prog, "(tell(a); get(a)) || (tell(b) + nask(c)) || move(red,1,1)"),
             store_of(prog, {{"c", 1}})};
    auto s1 = successors(c, prog);
    auto s2 = successors(c, prog);
    REQUIRE(s1.size() == s2.size());
    for (size_t i = 0; i < s1.size(); ++i) {
        CHECK(state_key(s1[i].config) == state_key(s2[i].config));
        CHECK(s1[i].label == s2[i].label);
    }
}

TEST_CASE("state keys identify configurations up to structure") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    Config c1{agent_of(prog, "tell(a) || get(b)"), store_of(prog, {{"a", 2}})};
    Config c2{agent_of(prog, "tell(a) || get(b)"), store_of(prog, {{"a", 2}})};
    Config c3{agent_of(prog, "get(b) || tell(a)"), store_of(prog, {{"a", 2}})};
    Config c4{agent_of(prog, "tell(a) || get(b)"), store_of(prog, {{"a", 1}})};
    CHECK(state_key(c1) == state_key(c2));
    CHECK(state_key(c1) != state_key(c3));
    CHECK(state_key(c1) != state_key(c4));

    std::string buf = "prefix";
    state_key_into(c1, buf);
    CHECK(buf.substr(0, 6) == "prefix");
    CHECK(buf.substr(6) == state_key(c1));
}

TEST_CASE("randomized guarded lists agree with running their primitives in order") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    std::mt19937 rng(42);
    const char* tokens[] = {"a", "b", "c"};
    auto random_prim = [&](bool allow_tell) {
        PrimKind kinds[] = {PrimKind::Tell, PrimKind::Ask, PrimKind::Nask, PrimKind::Get};
        PrimKind k = kinds[rng() % 4];
        if (!allow_tell && k == PrimKind::Tell) k = PrimKind::Ask;
        TermId t = prog.terms->make_token(tokens[rng() % 3]);
        return Prim{k, t, {}};
    };

    int fired_lists = 0, blocked_lists = 0, faulted_lists = 0;
    for (int it = 0; it < 500; ++it) {
        Prim guard = random_prim(true);
        std::vector<Prim> tail;
        size_t tn = rng() % 4;
        for (size_t i = 0; i < tn; ++i) tail.push_back(random_prim(true));
        Store sigma;
        for (const char* tok : tokens) {
            int n = static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i) sigma = sigma.with_added(prog.terms->make_token(tok));
        }

        // Reference: run the guard, then each tail primitive, on one store.
        auto apply = [&](const Prim& p, Store& s) -> bool {
            switch (p.kind) {
                case PrimKind::Tell: s = s.with_added(p.payload); return true;
                case PrimKind::Ask: return s.contains(p.payload);
                case PrimKind::Nask: return !s.contains(p.payload);
                case PrimKind::Get:
                    if (!s.contains(p.payload)) return false;
                    s = *s.with_removed(p.payload);
                    return true;
                case PrimKind::Graphical: return true;
            }
            return false;
        };
        Store ref = sigma;
        bool guard_fires = apply(guard, ref);
        int fault_at = -1;
        if (guard_fires) {
            for (size_t i = 0; i < tail.size(); ++i) {
                if (!apply(tail[i], ref)) {
                    fault_at = static_cast<int>(i);
                    break;
                }
            }
        }

        Config c{Agent::guarded(guard, tail), sigma};
        if (!guard_fires) {
            CHECK(successors(c, prog).empty());
            ++blocked_lists;
        } else if (fault_at >= 0) {
            try {
                successors(c, prog);
                FAIL("expected a fault");
            } catch (const GuardedTailFailure& e) {
                CHECK(e.tail_index() == fault_at);
            }
            ++faulted_lists;
        } else {
            auto succs = successors(c, prog);
            REQUIRE(succs.size() == 1);
            CHECK(succs[0].config.agent->kind == Agent::Kind::End);
            CHECK(succs[0].config.store.encode() == ref.encode());
            CHECK(succs[0].label.fired.size() == 1 + tail.size());
            ++fired_lists;
        }
    }
    // The generator should exercise all three outcomes.
    CHECK(fired_lists > 50);
    CHECK(blocked_lists > 50);
    CHECK(faulted_lists > 50);
}

TEST_CASE("graphical steps never change the store, anywhere in an agent") {
    auto progp = load(kBoardSrc);
    Program& prog = *progp;
    Config c{agent_of(prog, "move(red,1,1); move(red,1,2); move(red,1,3)"),
             store_of(prog, {{"a", 1}, {"b", 2}})};
    std::string before = c.store.encode();
    for (int hop = 0; hop < 3; ++hop) {
        auto succs = successors(c, prog);
        REQUIRE(succs.size() == 1);
        CHECK(succs[0].label.rule == RuleKind::Gr);
        CHECK(succs[0].config.store.encode() == before);
        c = succs[0].config;
    }
    CHECK(c.agent->kind == Agent::Kind::End);
}
