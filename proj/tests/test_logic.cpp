#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include <gbach/logic.hpp>
#include <gbach/parser.hpp>
#include <gbach/program.hpp>

using namespace gbach;

namespace {

PropPtr prop_of(Program& prog, const std::string& text) {
    std::vector<Diagnostic> diags;
    PropPtr p = parse_prop_text(prog, text, diags);
    REQUIRE(p);
    REQUIRE(diags.empty());
    return p;
}

TemporalPtr formula_of(Program& prog, const std::string& text) {
    std::vector<Diagnostic> diags;
    TemporalPtr f = parse_formula_text(prog, text, diags);
    REQUIRE(f);
    REQUIRE(diags.empty());
    return f;
}

}  // namespace

TEST_CASE("count arithmetic evaluates against the store") {
    Program prog;
    TermId a = prog.terms->make_token("a");
    TermId b = prog.terms->make_token("b");
    Store s = Store{}.with_added(a).with_added(b).with_added(b);

    CHECK(eval_arith(*ArithExpr::lit(7), s) == 7);
    CHECK(eval_arith(*ArithExpr::lit(-7), s) == -7);
    CHECK(eval_arith(*ArithExpr::count(a), s) == 1);
    CHECK(eval_arith(*ArithExpr::count(b), s) == 2);
    CHECK(eval_arith(*ArithExpr::count(prog.terms->make_token("zz")), s) == 0);
    // 1 + 2*2 = 5; (1+2)*2 = 6; 1 - 2 = -1.
    ArithPtr ca = ArithExpr::count(a), cb = ArithExpr::count(b);
    CHECK(eval_arith(*ArithExpr::add(ca, ArithExpr::mul(ArithExpr::lit(2), cb)), s) == 5);
    CHECK(eval_arith(*ArithExpr::mul(ArithExpr::add(ca, cb), ArithExpr::lit(2)), s) == 6);
    CHECK(eval_arith(*ArithExpr::sub(ca, cb), s) == -1);
}

TEST_CASE("propositions: comparisons, connectives, constants") {
    Program prog;
    TermId out = prog.terms->make_token("out");
    TermId a = prog.terms->make_token("a");
    TermId b = prog.terms->make_token("b");

    PropPtr out1 = PropFormula::cmp(CmpOp::Eq, ArithExpr::count(out), ArithExpr::lit(1));
    CHECK(eval_prop(*out1, Store{}.with_added(out)));
    CHECK(!eval_prop(*out1, Store{}));
    CHECK(!eval_prop(*out1, Store{}.with_added(out).with_added(out)));

    PropPtr a0 = PropFormula::cmp(CmpOp::Eq, ArithExpr::count(a), ArithExpr::lit(0));
    CHECK(eval_prop(*a0, Store{}));

    // #a + 2*#b > 4 on {a:1, b:2}.
    Store s = Store{}.with_added(a).with_added(b).with_added(b);
    PropPtr big = PropFormula::cmp(
        CmpOp::Gt,
        ArithExpr::add(ArithExpr::count(a),
                       ArithExpr::mul(ArithExpr::lit(2), ArithExpr::count(b))),
        ArithExpr::lit(4));
    CHECK(eval_prop(*big, s));
    CHECK(!eval_prop(*big, Store{}.with_added(a).with_added(b)));

    CHECK(eval_prop(*PropFormula::truth(true), Store{}));
    CHECK(!eval_prop(*PropFormula::truth(false), Store{}));
    CHECK(eval_prop(*PropFormula::negate(PropFormula::truth(false)), Store{}));
    CHECK(eval_prop(*PropFormula::conj(out1, a0), Store{}.with_added(out)));
    CHECK(!eval_prop(*PropFormula::conj(out1, PropFormula::truth(false)),
                     Store{}.with_added(out)));
    CHECK(eval_prop(*PropFormula::disj(PropFormula::truth(false), out1),
                    Store{}.with_added(out)));
}

TEST_CASE("propositions ignore terms they do not count") {
    Program prog;
    TermId out = prog.terms->make_token("out");
    PropPtr out1 = PropFormula::cmp(CmpOp::Eq, ArithExpr::count(out), ArithExpr::lit(1));
    Store s = Store{}.with_added(out);
    CHECK(eval_prop(*out1, s));
    for (const char* junk : {"x", "y", "free(2,3)"}) {
        s = s.with_added(prog.terms->make_compound("noise", {prog.terms->make_token(junk)}));
        CHECK(eval_prop(*out1, s));
    }
}

TEST_CASE("reachability is unrestricted until") {
    Program prog;
    TermId out = prog.terms->make_token("out");
    PropPtr goal = PropFormula::cmp(CmpOp::Eq, ArithExpr::count(out), ArithExpr::lit(1));
    TemporalPtr r = TemporalFormula::reach(goal);
    TemporalPtr manual = TemporalFormula::until(PropFormula::truth(true),
                                                TemporalFormula::lift(goal));
    CHECK(temporal_equal(r, manual));
    REQUIRE(r->kind == TemporalFormula::Kind::Until);
    CHECK(r->prop->kind == PropFormula::Kind::True);
    CHECK(r->inner->kind == TemporalFormula::Kind::Prop);

    // And the parser agrees.
    CHECK(temporal_equal(formula_of(prog, "Reach(#out=1)"), manual));
}

TEST_CASE("printing and reparsing preserves formulas") {
    Program prog;
    const char* props[] = {
        "#out=1",
        "#a=0",
        "#a + 2*#b > 4",
        "(#a+1)*2 >= #b - 3",
        "!(#c=0) & (#a=1 | #b!=2)",
        "true",
        "false",
        "#free(2,3) < 6",
    };
    for (const char* text : props) {
        CAPTURE(text);
        PropPtr p = prop_of(prog, text);
        PropPtr again = prop_of(prog, prop_to_text(p, prog.arena()));
        CHECK(prop_equal(p, again));
    }
    const char* formulas[] = {
        "Reach(#out=1)",
        "Next Next (#a=1 & #b=1)",
        "#a=0 Until #b=1",
        "Next #a=1 Until #b=1",
        "#a + #b = 2 Until Next #c = 1",
    };
    for (const char* text : formulas) {
        CAPTURE(text);
        TemporalPtr f = formula_of(prog, text);
        TemporalPtr again = formula_of(prog, temporal_to_text(f, prog.arena()));
        CHECK(temporal_equal(f, again));
    }
}

TEST_CASE("structural equality notices real differences") {
    Program prog;
    CHECK(!prop_equal(prop_of(prog, "#a=1"), prop_of(prog, "#a=2")));
    CHECK(!prop_equal(prop_of(prog, "#a=1"), prop_of(prog, "#b=1")));
    CHECK(!prop_equal(prop_of(prog, "#a=1"), prop_of(prog, "#a<1")));
    CHECK(!prop_equal(prop_of(prog, "#a=1 & #b=1"), prop_of(prog, "#a=1 | #b=1")));
    CHECK(!temporal_equal(formula_of(prog, "Reach(#a=1)"),
                          formula_of(prog, "#a=0 Until #a=1")));
    CHECK(!temporal_equal(formula_of(prog, "Next #a=1"),
                          formula_of(prog, "Next Next #a=1")));
    CHECK(temporal_equal(formula_of(prog, "Reach(#a=1)"),
                         formula_of(prog, "true Until #a=1")));
}

TEST_CASE("count term collection is exact and deduplicated") {
    Program prog;
    TermId a = prog.terms->make_token("a");
    TermId b = prog.terms->make_token("b");
    TermId out = prog.terms->make_token("out");

    PropPtr p = prop_of(prog, "#a + #b > 0 & !(#a = 2)");
    std::vector<TermId> ts = count_terms(p);
    std::sort(ts.begin(), ts.end());
    CHECK(ts == std::vector<TermId>{std::min(a, b), std::max(a, b)});

    TemporalPtr f = formula_of(prog, "#a=0 Until Next #out=1");
    ts = count_terms(f);
    CHECK(ts.size() == 2);
    CHECK(std::count(ts.begin(), ts.end(), out) == 1);
    CHECK(std::count(ts.begin(), ts.end(), a) == 1);

    CHECK(count_terms(formula_of(prog, "Reach(true)")).empty());
}

TEST_CASE("count terms in source text are reduced before counting") {
    ParseResult r = parse_program(
        "eset S = {1..6}. map pred: S -> S. eqn pred(3)=2. "
        "formula f = Reach(#free(pred(3),1)=1). main = tell(free(2,1)).");
    REQUIRE(r.ok());
    const NamedFormula* f = r.program->find_formula("f");
    REQUIRE(f);
    std::vector<TermId> ts = count_terms(f->formula);
    REQUIRE(ts.size() == 1);
    CHECK(r.program->arena().to_text(ts[0]) == "free(2,1)");
    // So the formula holds on the store the program actually writes.
    Store s = Store{}.with_added(r.program->terms->make_compound(
        "free", {r.program->terms->make_int(2), r.program->terms->make_int(1)}));
    CHECK(eval_prop(*f->formula->inner->prop, s));
}
