#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include <gbach/bench.hpp>
#include <gbach/parser.hpp>
#include <gbach/program.hpp>

using namespace gbach;

namespace {

ParseResult parse(const std::string& src) { return parse_program(src); }

const Diagnostic* find_diag(const ParseResult& r, const std::string& code) {
    for (const auto& d : r.diagnostics)
        if (d.code == code) return &d;
    return nullptr;
}

bool has_error(const ParseResult& r, const std::string& code) {
    const Diagnostic* d = find_diag(r, code);
    return d && d->severity == Severity::Error;
}

bool has_warning(const ParseResult& r, const std::string& code) {
    const Diagnostic* d = find_diag(r, code);
    return d && d->severity == Severity::Warning;
}

// Right-spine walk through left-associated sequencing.
AgentPtr seq_last(AgentPtr a) {
    while (a->kind == Agent::Kind::Seq) a = a->b;
    return a;
}

}  // namespace

TEST_CASE("vehicle-style procedure parses to a choice of guarded branches") {
    const char* src = R"(
eset RCInt = {1..6}.
map pred: RCInt -> RCInt.
eqn pred(2)=1. pred(3)=2. pred(4)=3. pred(5)=4. pred(6)=5.
map succ: RCInt -> RCInt.
eqn succ(1)=2. succ(2)=3. succ(3)=4. succ(4)=5. succ(5)=6.
proc V(r: RCInt, c: RCInt) =
    ( (r>1) -> get(free(pred(r),c)); tell(free(succ(succ(r)),c)); V(pred(r),c) )
  + ( (r<4) -> get(free(succ(succ(succ(r))),c)); tell(free(r,c)); V(succ(r),c) ).
main = V(2,1).
)";
    ParseResult r = parse(src);
    REQUIRE(r.ok());
    const Program& p = *r.program;
    REQUIRE(p.procs.size() == 1);
    const ProcDef& v = p.procs[0];
    CHECK(v.name == "V");
    REQUIRE(v.formals.size() == 2);
    CHECK(v.formals[0].name == "r");
    CHECK(v.formals[0].set_name == "RCInt");

    REQUIRE(v.body->kind == Agent::Kind::Choice);
    for (AgentPtr branch : {v.body->a, v.body->b}) {
        REQUIRE(branch->kind == Agent::Kind::Cond);
        CHECK(branch->cond->kind == Condition::Kind::Cmp);
        CHECK(branch->b == nullptr);
        REQUIRE(branch->a->kind == Agent::Kind::Seq);
        AgentPtr last = seq_last(branch->a);
        REQUIRE(last->kind == Agent::Kind::Call);
        CHECK(last->call_name == "V");
        CHECK(last->call_args.size() == 2);
    }
    // Guards compare the formal, which scopes to a variable.
    CHECK(p.arena().node(v.body->a->cond->lhs).kind == TermKind::Var);
    CHECK(v.body->a->cond->op == CmpOp::Gt);

    REQUIRE(p.main);
    REQUIRE(p.main->kind == Agent::Kind::Call);
    CHECK(p.arena().to_text(p.main->call_args[0]) == "2");
}

TEST_CASE("guarded lists: tails may be empty and graphical actions ride along") {
    ParseResult r = parse("gprim move. main = [get(a)].");
    REQUIRE(r.ok());
    REQUIRE(r.program->main->kind == Agent::Kind::GuardedList);
    CHECK(r.program->main->prim.kind == PrimKind::Get);
    CHECK(r.program->main->tail.empty());

    r = parse("gprim move. main = [get(a) -> move(red,1,2), tell(b), nask(c)].");
    REQUIRE(r.ok());
    const AgentPtr& gl = r.program->main;
    REQUIRE(gl->kind == Agent::Kind::GuardedList);
    REQUIRE(gl->tail.size() == 3);
    CHECK(gl->tail[0].kind == PrimKind::Graphical);
    CHECK(r.program->arena().to_text(gl->tail[0].payload) == "move(red,1,2)");
    CHECK(gl->tail[1].kind == PrimKind::Tell);
    CHECK(gl->tail[2].kind == PrimKind::Nask);
}

TEST_CASE("operator precedence: ';' over '||' over '+', conditionals loosest") {
    ParseResult r = parse("main = tell(a);tell(b) || get(c) + nask(d).");
    REQUIRE(r.ok());
    const AgentPtr& m = r.program->main;
    REQUIRE(m->kind == Agent::Kind::Choice);
    REQUIRE(m->a->kind == Agent::Kind::Par);
    CHECK(m->b->kind == Agent::Kind::Prim);
    CHECK(m->b->prim.kind == PrimKind::Nask);
    REQUIRE(m->a->a->kind == Agent::Kind::Seq);
    CHECK(m->a->b->prim.kind == PrimKind::Get);

    // Parentheses override.
    r = parse("main = tell(a);(tell(b) || get(c)) + nask(d).");
    REQUIRE(r.ok());
    REQUIRE(r.program->main->kind == Agent::Kind::Choice);
    REQUIRE(r.program->main->a->kind == Agent::Kind::Seq);
    CHECK(r.program->main->a->b->kind == Agent::Kind::Par);

    // Choice and parallel associate left; sequencing nests its continuation.
    r = parse("main = tell(a) + tell(b) + tell(c).");
    REQUIRE(r.ok());
    CHECK(r.program->main->a->kind == Agent::Kind::Choice);
    r = parse("main = tell(a); tell(b); tell(c).");
    REQUIRE(r.ok());
    CHECK(r.program->main->a->kind == Agent::Kind::Prim);
    CHECK(r.program->main->b->kind == Agent::Kind::Seq);
    r = parse("main = tell(a) || tell(b) || tell(c).");
    REQUIRE(r.ok());
    CHECK(r.program->main->a->kind == Agent::Kind::Par);

    // A conditional swallows everything to its right.
    r = parse("main = (1=1) -> tell(a) + tell(b).");
    REQUIRE(r.ok());
    REQUIRE(r.program->main->kind == Agent::Kind::Cond);
    CHECK(r.program->main->a->kind == Agent::Kind::Choice);
    CHECK(r.program->main->b == nullptr);

    // Else branch via '<>'.
    r = parse("main = (1<2) -> tell(a) <> get(b).");
    REQUIRE(r.ok());
    REQUIRE(r.program->main->kind == Agent::Kind::Cond);
    REQUIRE(r.program->main->b != nullptr);
    CHECK(r.program->main->b->prim.kind == PrimKind::Get);
}

TEST_CASE("condition grammar: comparisons, negation, conjunction, disjunction") {
    ParseResult r = parse("main = (!(1=2) & 3>=2 | red=red) -> tell(a).");
    REQUIRE(r.ok());
    const CondPtr& c = r.program->main->cond;
    REQUIRE(c->kind == Condition::Kind::Or);
    REQUIRE(c->a->kind == Condition::Kind::And);
    CHECK(c->a->a->kind == Condition::Kind::Not);
    CHECK(c->a->b->op == CmpOp::Ge);
    CHECK(c->b->op == CmpOp::Eq);
}

TEST_CASE("zero-argument procedures parse and print stably") {
    ParseResult r = parse("proc P() = tell(a); P(). main = P().");
    REQUIRE(r.ok());
    CHECK(r.program->procs[0].formals.empty());
    CHECK(r.program->main->kind == Agent::Kind::Call);
    CHECK(r.program->main->call_args.empty());

    std::string s1 = print_program(*r.program);
    ParseResult r2 = parse(s1);
    REQUIRE(r2.ok());
    CHECK(print_program(*r2.program) == s1);

    // Bare identifiers are zero-argument calls too.
    r = parse("proc P = tell(a); P. main = P.");
    REQUIRE(r.ok());
    CHECK(r.program->main->kind == Agent::Kind::Call);
}

TEST_CASE("recursion must pass a primitive on every path") {
    CHECK(has_error(parse("proc P() = P()."), "UnguardedProcedure"));
    CHECK(has_error(parse("proc P() = (1=1) -> tell(a); P() <> P(). main = P()."),
                    "UnguardedProcedure"));
    CHECK(has_error(parse("proc P() = tell(a); P() + P(). main = P()."),
                    "UnguardedProcedure"));
    // A bare call to another procedure is just as unguarded.
    CHECK(has_error(parse("proc Q() = tell(a); Q(). proc P() = Q(). main = P()."),
                    "UnguardedProcedure"));

    // Guarding each path separately is fine.
    ParseResult r = parse(
        "eset S = {1..3}. "
        "proc Q(x: S) = (x=1) -> tell(a); Q(x) <> get(b); Q(x). main = Q(1).");
    CHECK(r.ok());
    // So is recursion under a guarded prefix inside parallel or choice.
    r = parse("proc P() = get(go); (P() || tell(done)). main = P().");
    CHECK(r.ok());
}

TEST_CASE("syntax errors abort with a located diagnostic and no program") {
    ParseResult r = parse("main = tell(a)");
    CHECK(!r.ok());
    CHECK(r.program == nullptr);
    const Diagnostic* d = find_diag(r, "SyntaxError");
    REQUIRE(d);
    CHECK(d->loc.line == 1);

    r = parse("main = \n  tell(a) ;; tell(b).");
    CHECK(!r.ok());
    d = find_diag(r, "SyntaxError");
    REQUIRE(d);
    CHECK(d->loc.line == 2);

    CHECK(!parse(";").ok());
    CHECK(!parse("eset = {1}.").ok());
}

TEST_CASE("arity is checked for maps, equations, and procedure calls") {
    ParseResult r = parse(
        "eset S = {1..3}. map f: S -> S. eqn f(1)=2. main = tell(f(1,2)).");
    CHECK(has_error(r, "ArityMismatch"));
    CHECK(find_diag(r, "ArityMismatch")->message ==
          "map 'f' expects 1 argument(s), got 2");

    r = parse("eset S = {1..3}. map f: S -> S. eqn f(1,2)=3. main = tell(a).");
    CHECK(has_error(r, "ArityMismatch"));

    r = parse("eset S = {1..3}. proc P(x: S) = tell(c(x)); P(x). main = P(1,2).");
    CHECK(has_error(r, "ArityMismatch"));
    CHECK(find_diag(r, "ArityMismatch")->message ==
          "procedure 'P' expects 1 argument(s), got 2");
}

TEST_CASE("duplicate declarations are rejected wherever they appear") {
    CHECK(has_error(parse("eset S = {1}. eset S = {2}. main = tell(a)."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("eset S = {1}. map f: S -> S. map f: S -> S. "
                          "eqn f(1)=1. main = tell(a)."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("gprim m. gprim m. main = tell(a)."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("proc P() = tell(a); P(). proc P() = tell(b); P(). "
                          "main = P()."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("formula f = Reach(#a=1). formula f = Reach(#b=1). "
                          "main = tell(a)."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("main = tell(a). main = tell(b)."),
                    "DuplicateDefinition"));
    CHECK(has_error(parse("eset S = {1}. proc P(x: S, x: S) = tell(c(x)); P(x,x). "
                          "main = P(1,1)."),
                    "DuplicateDefinition"));
}

TEST_CASE("enumerated sets: ranges expand, reversed bounds are flagged") {
    ParseResult r = parse("eset S = {red, 2, 5..7}. main = tell(a).");
    REQUIRE(r.ok());
    const SetDef* s = r.program->defs.find_set("S");
    REQUIRE(s);
    REQUIRE(s->elements.size() == 5);
    CHECK(r.program->arena().to_text(s->elements[0]) == "red");
    CHECK(r.program->arena().to_text(s->elements[1]) == "2");
    CHECK(r.program->arena().to_text(s->elements[4]) == "7");
    CHECK(r.program->defs.set_contains(*s, r.program->terms->make_int(6)));
    CHECK(!r.program->defs.set_contains(*s, r.program->terms->make_int(4)));

    CHECK(has_error(parse("eset S = {5..2}. main = tell(a)."), "EmptyRange"));
    // An empty set is legal, if useless.
    CHECK(parse("eset S = {}. main = tell(a).").ok());
}

TEST_CASE("equation domain and codomain checks") {
    ParseResult r = parse(
        "eset S = {1..3}. map f: S -> S. eqn f(9)=2. main = tell(a).");
    CHECK(has_error(r, "EquationDomain"));
    CHECK(find_diag(r, "EquationDomain")->message ==
          "argument 1 of 'f' is outside set 'S'");

    // Codomain escapes only warn: the result may still rewrite further.
    r = parse("eset S = {1..3}. map f: S -> S. eqn f(1)=7. main = tell(a).");
    CHECK(r.ok());
    CHECK(has_warning(r, "EquationCodomain"));

    r = parse("eset S = {1..3}. map f: S -> S. eqn f(1)=2. f(1)=3. main = tell(a).");
    CHECK(has_error(r, "OverlappingEquations"));
}

TEST_CASE("unknown names are reported with their role") {
    CHECK(has_error(parse("map f: Nope -> Nope. eqn f(1)=1. main = tell(a)."),
                    "UnresolvedIdentifier"));
    CHECK(has_error(parse("proc P(x: Nope) = tell(c(x)); P(x). main = P(1)."),
                    "UnresolvedIdentifier"));
    CHECK(has_error(parse("eset S = {1}. eqn f(1)=1. main = tell(a)."),
                    "UnresolvedIdentifier"));
    ParseResult r = parse("main = P().");
    CHECK(has_error(r, "UnresolvedIdentifier"));
    CHECK(find_diag(r, "UnresolvedIdentifier")->message ==
          "call to undefined procedure 'P'");
}

TEST_CASE("ordering comparisons on symbolic terms warn but do not reject") {
    ParseResult r = parse("main = (red > 1) -> tell(a).");
    CHECK(r.ok());
    CHECK(has_warning(r, "TypeMismatch"));
}

TEST_CASE("diagnostics carry source positions") {
    ParseResult r = parse("eset S = {1}.\neset S = {2}.\nmain = tell(a).");
    const Diagnostic* d = find_diag(r, "DuplicateDefinition");
    REQUIRE(d);
    CHECK(d->loc.line == 2);
    CHECK(d->loc.col >= 1);
    CHECK(d->to_string().find("[DuplicateDefinition]") != std::string::npos);
}

TEST_CASE("comments are whitespace") {
    ParseResult r = parse(
        "// leading remark\n"
        "main = tell(a); // trailing remark\n"
        "  tell(b).\n"
        "// closing remark");
    REQUIRE(r.ok());
    ParseResult plain = parse("main = tell(a); tell(b).");
    CHECK(agent_equal(r.program->main, plain.program->main));
}

TEST_CASE("formula declarations parse into the expected temporal shapes") {
    ParseResult r = parse(
        "formula solved = Reach(#out=1).\n"
        "formula nxt = Next Next (#a=1 & #b=1).\n"
        "formula bound = #a=0 Until #b=1.\n"
        "main = tell(out).");
    REQUIRE(r.ok());
    const Program& p = *r.program;

    const NamedFormula* f = p.find_formula("solved");
    REQUIRE(f);
    TermId out_t = p.terms->make_token("out");
    TemporalPtr want = TemporalFormula::reach(
        PropFormula::cmp(CmpOp::Eq, ArithExpr::count(out_t), ArithExpr::lit(1)));
    CHECK(temporal_equal(f->formula, want));
    // Reach really is an unrestricted until.
    CHECK(f->formula->kind == TemporalFormula::Kind::Until);
    CHECK(f->formula->prop->kind == PropFormula::Kind::True);

    f = p.find_formula("nxt");
    REQUIRE(f);
    REQUIRE(f->formula->kind == TemporalFormula::Kind::Next);
    REQUIRE(f->formula->inner->kind == TemporalFormula::Kind::Next);
    CHECK(f->formula->inner->inner->prop->kind == PropFormula::Kind::And);

    f = p.find_formula("bound");
    REQUIRE(f);
    REQUIRE(f->formula->kind == TemporalFormula::Kind::Until);
    CHECK(f->formula->prop->kind == PropFormula::Kind::Cmp);
}

TEST_CASE("fragment parsers work against an existing program") {
    ParseResult base = parse(
        "eset S = {1..6}. map pred: S -> S. eqn pred(2)=1. "
        "proc P(x: S) = tell(c(x)); P(pred(x)). main = P(2).");
    REQUIRE(base.ok());
    Program& prog = *base.program;
    std::vector<Diagnostic> diags;

    AgentPtr a = parse_agent_text(prog, "P(2) || tell(free(1,1))", diags);
    REQUIRE(a);
    CHECK(diags.empty());
    CHECK(a->kind == Agent::Kind::Par);

    diags.clear();
    a = parse_agent_text(prog, "Q(1)", diags);
    CHECK(!diags.empty());

    diags.clear();
    TemporalPtr tf = parse_formula_text(prog, "Reach(#free(1,1)=1)", diags);
    REQUIRE(tf);
    CHECK(diags.empty());
    CHECK(tf->kind == TemporalFormula::Kind::Until);

    diags.clear();
    PropPtr pf = parse_prop_text(prog, "#a + 2*#b > 4 & !(#c=0)", diags);
    REQUIRE(pf);
    CHECK(diags.empty());
    REQUIRE(pf->kind == PropFormula::Kind::And);
    CHECK(pf->a->kind == PropFormula::Kind::Cmp);
    CHECK(pf->b->kind == PropFormula::Kind::Not);
    // '*' binds tighter than '+'.
    CHECK(pf->a->lhs->kind == ArithExpr::Kind::Add);
    CHECK(pf->a->lhs->b->kind == ArithExpr::Kind::Mul);
}

TEST_CASE("printing round-trips: parse(print(p)) prints identically") {
    std::vector<std::string> sources;
    for (int c = 1; c <= rush_hour_case_count(); ++c)
        for (RushVariant v : {RushVariant::NoGL, RushVariant::GL})
            sources.push_back(rush_hour_source(c, v));
    sources.push_back(
        "eset S = {1..4}. eset T = {red, blue}. map f: S -> S. "
        "eqn f(1)=2. f(2)=f(1). gprim show. "
        "proc P(x: S) = (x>1) -> get(b(x)); show(x); P(f(x)) <> tell(done). "
        "formula done = Reach(#done=1). "
        "main = [tell(b(2)) -> tell(b(3))]; (P(2) || P(3)) + nask(q).");

    for (const std::string& src : sources) {
        ParseResult r1 = parse(src);
        REQUIRE(r1.ok());
        std::string s1 = print_program(*r1.program);
        ParseResult r2 = parse(s1);
        REQUIRE(r2.ok());
        CHECK(print_program(*r2.program) == s1);
        std::vector<Diagnostic> diags;
        AgentPtr again = parse_agent_text(
            *r1.program, agent_to_text(r1.program->main, r1.program->arena()), diags);
        CHECK(diags.empty());
        CHECK(agent_equal(r1.program->main, again));
        REQUIRE(r2.program->procs.size() == r1.program->procs.size());
    }
}

TEST_CASE("malformed input never throws") {
    std::mt19937 rng(20260813);
    const std::string alphabet =
        "abcdefgXYZ0123456789 \t\n()[]{}.,;|&!<>=+-*#_'\"\\/:~";
    std::string valid =
        "eset S = {1..6}. map f: S -> S. eqn f(1)=2. "
        "proc P(x: S) = tell(a(x)); P(f(x)). main = P(1).";

    for (int i = 0; i < 300; ++i) {
        std::string s;
        size_t n = rng() % 80;
        for (size_t k = 0; k < n; ++k) s += alphabet[rng() % alphabet.size()];
        CHECK_NOTHROW((void)parse(s));
    }
    // Splicing junk into a valid program must degrade gracefully too.
    for (int i = 0; i < 200; ++i) {
        std::string s = valid;
        size_t pos = rng() % s.size();
        size_t len = rng() % 10;
        std::string ins;
        for (size_t k = 0; k < 1 + rng() % 6; ++k)
            ins += alphabet[rng() % alphabet.size()];
        s.replace(pos, std::min(len, s.size() - pos), ins);
        CHECK_NOTHROW((void)parse(s));
    }
}

TEST_CASE("a missing main is tolerated at parse time") {
    ParseResult r = parse("proc P() = tell(a); P().");
    CHECK(r.ok());
    CHECK(r.program->main == nullptr);
    // Even the empty program parses; running it is the checker's problem.
    r = parse("");
    CHECK(r.ok());
    CHECK(r.program->main == nullptr);
}
