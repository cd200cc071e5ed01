#include "gbach/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace gbach {

namespace {

enum class Tok : uint8_t {
    End, Ident, Int,
    KwEset, KwMap, KwEqn, KwGprim, KwProc, KwFormula, KwMain,
    KwTell, KwAsk, KwNask, KwGet, KwE,
    KwTrue, KwFalse, KwNext, KwUntil, KwReach,
    LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Dot, DotDot, Semi, Colon,
    Plus, Minus, Star, Hash,
    Amp, Bar, BarBar, Bang,
    Arrow, Diamond,
    Eq, Ne, Lt, Le, Gt, Ge,
    Bad,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int64_t num = 0;
    SourceLoc loc;
};

Tok keyword_kind(const std::string& s) {
    if (s == "eset") return Tok::KwEset;
    if (s == "map") return Tok::KwMap;
    if (s == "eqn") return Tok::KwEqn;
    if (s == "gprim") return Tok::KwGprim;
    if (s == "proc") return Tok::KwProc;
    if (s == "formula") return Tok::KwFormula;
    if (s == "main") return Tok::KwMain;
    if (s == "tell") return Tok::KwTell;
    if (s == "ask") return Tok::KwAsk;
    if (s == "nask") return Tok::KwNask;
    if (s == "get") return Tok::KwGet;
    if (s == "E") return Tok::KwE;
    if (s == "true") return Tok::KwTrue;
    if (s == "false") return Tok::KwFalse;
    if (s == "Next") return Tok::KwNext;
    if (s == "Until") return Tok::KwUntil;
    if (s == "Reach") return Tok::KwReach;
    return Tok::Ident;
}

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (i < src.size() && src[i] == '\n') { ++line; col = 1; } else { ++col; }
            ++i;
        }
    };
    auto push = [&](Tok k, size_t len, const std::string& text = "") {
        Token t;
        t.kind = k;
        t.text = text.empty() ? src.substr(i, len) : text;
        t.loc = {line, col};
        out.push_back(std::move(t));
        advance(len);
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(1); continue; }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            Token t;
            t.kind = Tok::Int;
            t.text = src.substr(i, j - i);
            t.loc = {line, col};
            try {
                t.num = std::stoll(t.text);
            } catch (...) {
                t.kind = Tok::Bad;
            }
            out.push_back(std::move(t));
            advance(j - i);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            std::string word = src.substr(i, j - i);
            Token t;
            t.kind = keyword_kind(word);
            t.text = std::move(word);
            t.loc = {line, col};
            out.push_back(std::move(t));
            advance(j - i);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < src.size() && src[i + 1] == b;
        };
        if (two('|', '|')) { push(Tok::BarBar, 2); continue; }
        if (two('-', '>')) { push(Tok::Arrow, 2); continue; }
        if (two('<', '>')) { push(Tok::Diamond, 2); continue; }
        if (two('<', '=')) { push(Tok::Le, 2); continue; }
        if (two('>', '=')) { push(Tok::Ge, 2); continue; }
        if (two('!', '=')) { push(Tok::Ne, 2); continue; }
        if (two('.', '.')) { push(Tok::DotDot, 2); continue; }
        switch (c) {
            case '(': push(Tok::LParen, 1); continue;
            case ')': push(Tok::RParen, 1); continue;
            case '{': push(Tok::LBrace, 1); continue;
            case '}': push(Tok::RBrace, 1); continue;
            case '[': push(Tok::LBracket, 1); continue;
            case ']': push(Tok::RBracket, 1); continue;
            case ',': push(Tok::Comma, 1); continue;
            case '.': push(Tok::Dot, 1); continue;
            case ';': push(Tok::Semi, 1); continue;
            case ':': push(Tok::Colon, 1); continue;
            case '+': push(Tok::Plus, 1); continue;
            case '-': push(Tok::Minus, 1); continue;
            case '*': push(Tok::Star, 1); continue;
            case '#': push(Tok::Hash, 1); continue;
            case '&': push(Tok::Amp, 1); continue;
            case '|': push(Tok::Bar, 1); continue;
            case '!': push(Tok::Bang, 1); continue;
            case '=': push(Tok::Eq, 1); continue;
            case '<': push(Tok::Lt, 1); continue;
            case '>': push(Tok::Gt, 1); continue;
            default: push(Tok::Bad, 1); continue;
        }
    }
    Token eof;
    eof.kind = Tok::End;
    eof.loc = {line, col};
    out.push_back(std::move(eof));
    return out;
}

// Unwinds the recursive descent on the first syntax error.
struct ParseAbort {};
// Unwinds a speculative parse without recording diagnostics.
struct TrialFail {};

constexpr int kMaxNesting = 512;

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;
    std::vector<Diagnostic>& diags;
    Program& prog;
    std::set<std::string> scope;  // formal parameters of the procedure being parsed
    bool trial = false;
    int depth = 0;

    Parser(std::vector<Token> t, std::vector<Diagnostic>& d, Program& p)
        : toks(std::move(t)), diags(d), prog(p) {}

    const Token& peek(size_t ahead = 0) const {
        size_t k = pos + ahead;
        return k < toks.size() ? toks[k] : toks.back();
    }
    const Token& cur() const { return peek(0); }
    Token take() { return toks[std::min(pos++, toks.size() - 1)]; }
    bool at(Tok k) const { return cur().kind == k; }
    bool eat(Tok k) {
        if (!at(k)) return false;
        ++pos;
        return true;
    }

    [[noreturn]] void fail(const std::string& msg) {
        if (trial) throw TrialFail{};
        diags.push_back({Severity::Error, "SyntaxError", msg, cur().loc});
        throw ParseAbort{};
    }

    void expect(Tok k, const std::string& what) {
        if (!eat(k)) fail("expected " + what);
    }

    void error_at(SourceLoc loc, const std::string& code, const std::string& msg) {
        if (!trial) diags.push_back({Severity::Error, code, msg, loc});
    }
    void warn_at(SourceLoc loc, const std::string& code, const std::string& msg) {
        if (!trial) diags.push_back({Severity::Warning, code, msg, loc});
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& pp) : p(pp) {
            if (++p.depth > kMaxNesting) p.fail("nesting too deep");
        }
        ~DepthGuard() { --p.depth; }
    };

    // ---- terms ----

    TermId parse_term() {
        DepthGuard g(*this);
        if (at(Tok::Minus)) {
            SourceLoc loc = cur().loc;
            take();
            if (!at(Tok::Int)) { pos--; fail("expected integer after '-'"); }
            (void)loc;
            Token t = take();
            return prog.terms->make_int(-t.num);
        }
        if (at(Tok::Int)) {
            Token t = take();
            return prog.terms->make_int(t.num);
        }
        if (!at(Tok::Ident)) fail("expected term");
        Token id = take();
        bool in_scope = scope.count(id.text) > 0;
        if (!at(Tok::LParen)) {
            if (in_scope) return prog.terms->make_var(id.text);
            return prog.terms->make_token(id.text);
        }
        if (in_scope) fail("parameter '" + id.text + "' cannot take arguments");
        take();  // (
        std::vector<TermId> args;
        args.push_back(parse_term());
        while (eat(Tok::Comma)) args.push_back(parse_term());
        expect(Tok::RParen, "')'");
        const MapDef* md = prog.defs.find_map(id.text);
        if (md) {
            if (md->domain.size() != args.size()) {
                error_at(id.loc, "ArityMismatch",
                         "map '" + id.text + "' expects " +
                             std::to_string(md->domain.size()) + " argument(s), got " +
                             std::to_string(args.size()));
            }
            return prog.terms->make_map_app(id.text, args);
        }
        return prog.terms->make_compound(id.text, args);
    }

    // ---- conditions ----

    CondPtr parse_condition() { return parse_cond_or(); }

    CondPtr parse_cond_or() {
        DepthGuard g(*this);
        CondPtr c = parse_cond_and();
        while (eat(Tok::Bar)) c = Condition::disj(c, parse_cond_and());
        return c;
    }

    CondPtr parse_cond_and() {
        DepthGuard g(*this);
        CondPtr c = parse_cond_not();
        while (eat(Tok::Amp)) c = Condition::conj(c, parse_cond_not());
        return c;
    }

    CondPtr parse_cond_not() {
        DepthGuard g(*this);
        if (eat(Tok::Bang)) return Condition::negate(parse_cond_not());
        if (at(Tok::LParen)) {
            take();
            CondPtr c = parse_condition();
            expect(Tok::RParen, "')'");
            return c;
        }
        return parse_cond_cmp();
    }

    CondPtr parse_cond_cmp() {
        SourceLoc loc = cur().loc;
        TermId l = parse_term();
        CmpOp op;
        if (eat(Tok::Eq)) op = CmpOp::Eq;
        else if (eat(Tok::Ne)) op = CmpOp::Ne;
        else if (eat(Tok::Lt)) op = CmpOp::Lt;
        else if (eat(Tok::Le)) op = CmpOp::Le;
        else if (eat(Tok::Gt)) op = CmpOp::Gt;
        else if (eat(Tok::Ge)) op = CmpOp::Ge;
        else fail("expected comparison operator");
        TermId r = parse_term();
        CondPtr c = Condition::cmp(op, l, r);
        check_cmp_sanity(c, loc);
        return c;
    }

    void check_cmp_sanity(const CondPtr& c, SourceLoc loc) {
        if (c->op == CmpOp::Eq || c->op == CmpOp::Ne) return;
        for (TermId t : {c->lhs, c->rhs}) {
            const TermNode& n = prog.terms->node(t);
            if (n.kind == TermKind::Token || n.kind == TermKind::Compound) {
                warn_at(loc, "TypeMismatch",
                        "ordering comparison on non-integer term '" +
                            prog.terms->to_text(t) + "' will fail at run time");
            }
        }
    }

    // ---- agents ----

    AgentPtr parse_agent() { return parse_cond_expr(); }

    AgentPtr parse_cond_expr() {
        DepthGuard g(*this);
        size_t save = pos;
        bool saved_trial = trial;
        bool is_cond = false;
        trial = true;
        try {
            (void)parse_condition();
            is_cond = at(Tok::Arrow);
        } catch (TrialFail&) {
            is_cond = false;
        }
        pos = save;
        trial = saved_trial;
        if (!is_cond) return parse_choice_expr();
        // Re-parse for real so diagnostics inside the condition land.
        SourceLoc loc = cur().loc;
        CondPtr c = parse_condition();
        expect(Tok::Arrow, "'->'");
        AgentPtr then_a = parse_cond_expr();
        AgentPtr else_a;
        if (eat(Tok::Diamond)) else_a = parse_cond_expr();
        return Agent::cond_agent(c, then_a, else_a, loc);
    }

    AgentPtr parse_choice_expr() {
        DepthGuard g(*this);
        AgentPtr a = parse_par_expr();
        while (at(Tok::Plus)) {
            SourceLoc loc = cur().loc;
            take();
            a = Agent::choice(a, parse_par_expr(), loc);
        }
        return a;
    }

    AgentPtr parse_par_expr() {
        DepthGuard g(*this);
        AgentPtr a = parse_seq_expr();
        while (at(Tok::BarBar)) {
            SourceLoc loc = cur().loc;
            take();
            a = Agent::par(a, parse_seq_expr(), loc);
        }
        return a;
    }

    AgentPtr parse_seq_expr() {
        DepthGuard g(*this);
        AgentPtr a = parse_primary();
        if (at(Tok::Semi)) {
            SourceLoc loc = cur().loc;
            take();
            return Agent::seq(a, parse_seq_expr(), loc);
        }
        return a;
    }

    Prim parse_prim_item() {
        SourceLoc loc = cur().loc;
        switch (cur().kind) {
            case Tok::KwTell:
            case Tok::KwAsk:
            case Tok::KwNask:
            case Tok::KwGet: {
                Tok k = take().kind;
                expect(Tok::LParen, "'('");
                TermId t = parse_term();
                expect(Tok::RParen, "')'");
                PrimKind pk = k == Tok::KwTell   ? PrimKind::Tell
                              : k == Tok::KwAsk  ? PrimKind::Ask
                              : k == Tok::KwNask ? PrimKind::Nask
                                                 : PrimKind::Get;
                return Prim{pk, t, loc};
            }
            case Tok::Ident: {
                if (prog.gprims.count(cur().text)) {
                    Token id = take();
                    TermId payload;
                    if (eat(Tok::LParen)) {
                        std::vector<TermId> args;
                        args.push_back(parse_term());
                        while (eat(Tok::Comma)) args.push_back(parse_term());
                        expect(Tok::RParen, "')'");
                        payload = prog.terms->make_compound(id.text, args);
                    } else {
                        payload = prog.terms->make_token(id.text);
                    }
                    return Prim{PrimKind::Graphical, payload, loc};
                }
                fail("expected primitive");
            }
            default:
                fail("expected primitive");
        }
    }

    bool at_prim_start() const {
        switch (cur().kind) {
            case Tok::KwTell:
            case Tok::KwAsk:
            case Tok::KwNask:
            case Tok::KwGet:
                return true;
            case Tok::Ident:
                return prog.gprims.count(cur().text) > 0;
            default:
                return false;
        }
    }

    AgentPtr parse_primary() {
        DepthGuard g(*this);
        SourceLoc loc = cur().loc;
        if (at(Tok::KwE)) {
            take();
            return Agent::end();
        }
        if (at(Tok::LParen)) {
            take();
            AgentPtr a = parse_agent();
            expect(Tok::RParen, "')'");
            return a;
        }
        if (at(Tok::LBracket)) {
            take();
            Prim guard = parse_prim_item();
            std::vector<Prim> tail;
            if (eat(Tok::Arrow)) {
                tail.push_back(parse_prim_item());
                while (eat(Tok::Comma)) tail.push_back(parse_prim_item());
            }
            expect(Tok::RBracket, "']'");
            return Agent::guarded(guard, std::move(tail), loc);
        }
        if (at_prim_start()) return Agent::make_prim(parse_prim_item());
        if (at(Tok::Ident)) {
            Token id = take();
            std::vector<TermId> args;
            if (eat(Tok::LParen)) {
                if (!at(Tok::RParen)) {
                    args.push_back(parse_term());
                    while (eat(Tok::Comma)) args.push_back(parse_term());
                }
                expect(Tok::RParen, "')'");
            }
            return Agent::call(id.text, std::move(args), loc);
        }
        fail("expected agent");
    }

    // ---- path formulas ----

    ArithPtr parse_arith() {
        DepthGuard g(*this);
        ArithPtr e = parse_arith_term();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            bool add = take().kind == Tok::Plus;
            ArithPtr r = parse_arith_term();
            e = add ? ArithExpr::add(e, r) : ArithExpr::sub(e, r);
        }
        return e;
    }

    ArithPtr parse_arith_term() {
        DepthGuard g(*this);
        ArithPtr e = parse_arith_factor();
        while (at(Tok::Star)) {
            take();
            e = ArithExpr::mul(e, parse_arith_factor());
        }
        return e;
    }

    ArithPtr parse_arith_factor() {
        DepthGuard g(*this);
        if (at(Tok::Int)) return ArithExpr::lit(take().num);
        if (at(Tok::Minus)) {
            take();
            if (!at(Tok::Int)) fail("expected integer after '-'");
            return ArithExpr::lit(-take().num);
        }
        if (at(Tok::Hash)) {
            SourceLoc loc = cur().loc;
            take();
            TermId t = parse_term();
            TermId fin = t;
            try {
                fin = rewrite(*prog.terms, t, prog.defs);
            } catch (const EvalError& e) {
                error_at(loc, e.code(), std::string("in count term: ") + e.what());
            }
            return ArithExpr::count(fin);
        }
        if (at(Tok::LParen)) {
            take();
            ArithPtr e = parse_arith();
            expect(Tok::RParen, "')'");
            return e;
        }
        fail("expected arithmetic expression");
    }

    PropPtr parse_prop() { return parse_prop_or(); }

    PropPtr parse_prop_or() {
        DepthGuard g(*this);
        PropPtr p = parse_prop_and();
        while (eat(Tok::Bar)) p = PropFormula::disj(p, parse_prop_and());
        return p;
    }

    PropPtr parse_prop_and() {
        DepthGuard g(*this);
        PropPtr p = parse_prop_not();
        while (eat(Tok::Amp)) p = PropFormula::conj(p, parse_prop_not());
        return p;
    }

    PropPtr parse_prop_not() {
        DepthGuard g(*this);
        if (eat(Tok::Bang)) return PropFormula::negate(parse_prop_not());
        if (at(Tok::KwTrue)) { take(); return PropFormula::truth(true); }
        if (at(Tok::KwFalse)) { take(); return PropFormula::truth(false); }
        if (at(Tok::LParen)) {
            // Either a parenthesized proposition or a parenthesized
            // arithmetic expression opening a comparison.
            size_t save = pos;
            bool saved_trial = trial;
            bool is_prop = false;
            trial = true;
            try {
                take();
                (void)parse_prop();
                if (!at(Tok::RParen)) throw TrialFail{};
                take();
                switch (cur().kind) {
                    case Tok::Eq: case Tok::Ne: case Tok::Lt:
                    case Tok::Le: case Tok::Gt: case Tok::Ge:
                    case Tok::Plus: case Tok::Minus: case Tok::Star:
                        break;  // it was an arithmetic grouping
                    default:
                        is_prop = true;
                }
            } catch (TrialFail&) {
                is_prop = false;
            }
            pos = save;
            trial = saved_trial;
            if (is_prop) {
                take();
                PropPtr p = parse_prop();
                expect(Tok::RParen, "')'");
                return p;
            }
        }
        return parse_prop_cmp();
    }

    PropPtr parse_prop_cmp() {
        ArithPtr l = parse_arith();
        CmpOp op;
        if (eat(Tok::Eq)) op = CmpOp::Eq;
        else if (eat(Tok::Ne)) op = CmpOp::Ne;
        else if (eat(Tok::Lt)) op = CmpOp::Lt;
        else if (eat(Tok::Le)) op = CmpOp::Le;
        else if (eat(Tok::Gt)) op = CmpOp::Gt;
        else if (eat(Tok::Ge)) op = CmpOp::Ge;
        else fail("expected comparison operator");
        return PropFormula::cmp(op, l, parse_arith());
    }

    TemporalPtr parse_temporal() {
        DepthGuard g(*this);
        if (at(Tok::KwNext)) {
            take();
            return TemporalFormula::next(parse_temporal());
        }
        if (at(Tok::KwReach)) {
            take();
            expect(Tok::LParen, "'('");
            PropPtr p = parse_prop();
            expect(Tok::RParen, "')'");
            return TemporalFormula::reach(p);
        }
        PropPtr p = parse_prop();
        if (at(Tok::KwUntil)) {
            take();
            return TemporalFormula::until(p, parse_temporal());
        }
        return TemporalFormula::lift(p);
    }

    // ---- declarations ----

    TermId parse_atom(const char* what) {
        if (at(Tok::Minus) || at(Tok::Int)) return parse_term();
        if (at(Tok::Ident)) {
            Token id = take();
            return prog.terms->make_token(id.text);
        }
        fail(std::string("expected ") + what);
    }

    void parse_eset() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwEset, "'eset'");
        if (!at(Tok::Ident)) fail("expected set name");
        Token name = take();
        expect(Tok::Eq, "'='");
        expect(Tok::LBrace, "'{'");
        SetDef def;
        def.name = name.text;
        def.loc = loc;
        if (!at(Tok::RBrace)) {
            while (true) {
                if (at(Tok::Int) && peek(1).kind == Tok::DotDot) {
                    int64_t lo = take().num;
                    take();  // ..
                    if (!at(Tok::Int)) fail("expected integer after '..'");
                    int64_t hi = take().num;
                    if (hi < lo) error_at(loc, "EmptyRange", "range bounds are reversed");
                    if (hi - lo > 1000000) fail("range too large");
                    for (int64_t v = lo; v <= hi; ++v)
                        def.elements.push_back(prog.terms->make_int(v));
                } else {
                    def.elements.push_back(parse_atom("set element"));
                }
                if (eat(Tok::Comma)) continue;
                break;
            }
        }
        expect(Tok::RBrace, "'}'");
        expect(Tok::Dot, "'.'");
        if (prog.defs.find_set(def.name))
            error_at(loc, "DuplicateDefinition", "set '" + def.name + "' already defined");
        else
            prog.defs.add_set(std::move(def));
    }

    void parse_map() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwMap, "'map'");
        if (!at(Tok::Ident)) fail("expected map name");
        Token name = take();
        expect(Tok::Colon, "':'");
        MapDef def;
        def.name = name.text;
        def.loc = loc;
        if (!at(Tok::Ident)) fail("expected domain set name");
        def.domain.push_back(take().text);
        while (eat(Tok::Comma)) {
            if (!at(Tok::Ident)) fail("expected domain set name");
            def.domain.push_back(take().text);
        }
        expect(Tok::Arrow, "'->'");
        if (!at(Tok::Ident)) fail("expected codomain set name");
        def.codomain = take().text;
        expect(Tok::Dot, "'.'");
        for (const auto& d : def.domain)
            if (!prog.defs.find_set(d))
                error_at(loc, "UnresolvedIdentifier", "unknown set '" + d + "'");
        if (!prog.defs.find_set(def.codomain))
            error_at(loc, "UnresolvedIdentifier", "unknown set '" + def.codomain + "'");
        if (prog.defs.find_map(def.name))
            error_at(loc, "DuplicateDefinition", "map '" + def.name + "' already defined");
        else
            prog.defs.add_map(std::move(def));
    }

    void parse_eqn_block() {
        expect(Tok::KwEqn, "'eqn'");
        bool first = true;
        while (at(Tok::Ident)) {
            SourceLoc loc = cur().loc;
            Token name = take();
            const MapDef* md = prog.defs.find_map(name.text);
            if (!md) {
                error_at(loc, "UnresolvedIdentifier",
                         "equation for undeclared map '" + name.text + "'");
            }
            expect(Tok::LParen, "'('");
            MapEquation eq;
            eq.loc = loc;
            eq.lhs.push_back(parse_atom("atom"));
            while (eat(Tok::Comma)) eq.lhs.push_back(parse_atom("atom"));
            expect(Tok::RParen, "')'");
            expect(Tok::Eq, "'='");
            eq.rhs = parse_term();
            expect(Tok::Dot, "'.'");
            if (md) {
                if (md->domain.size() != eq.lhs.size()) {
                    error_at(loc, "ArityMismatch",
                             "map '" + name.text + "' expects " +
                                 std::to_string(md->domain.size()) + " argument(s)");
                } else {
                    for (size_t k = 0; k < eq.lhs.size(); ++k) {
                        const SetDef* s = prog.defs.find_set(md->domain[k]);
                        if (s && !prog.defs.set_contains(*s, eq.lhs[k]))
                            error_at(loc, "EquationDomain",
                                     "argument " + std::to_string(k + 1) + " of '" +
                                         name.text + "' is outside set '" +
                                         md->domain[k] + "'");
                    }
                    const TermNode& rn = prog.terms->node(eq.rhs);
                    if (rn.is_final &&
                        (rn.kind == TermKind::Int || rn.kind == TermKind::Token)) {
                        const SetDef* cod = prog.defs.find_set(md->codomain);
                        if (cod && !prog.defs.set_contains(*cod, eq.rhs))
                            warn_at(loc, "EquationCodomain",
                                    "result of '" + name.text + "' is outside set '" +
                                        md->codomain + "'");
                    }
                    if (!prog.defs.add_equation(name.text, std::move(eq)))
                        error_at(loc, "OverlappingEquations",
                                 "duplicate equation for '" + name.text + "' on the same arguments");
                }
            }
            first = false;
        }
        if (first) fail("expected at least one equation after 'eqn'");
    }

    void parse_gprim() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwGprim, "'gprim'");
        if (!at(Tok::Ident)) fail("expected graphical primitive name");
        Token name = take();
        expect(Tok::Dot, "'.'");
        if (prog.gprims.count(name.text))
            error_at(loc, "DuplicateDefinition",
                     "graphical primitive '" + name.text + "' already declared");
        prog.gprims.insert(name.text);
    }

    void parse_proc() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwProc, "'proc'");
        if (!at(Tok::Ident)) fail("expected procedure name");
        Token name = take();
        ProcDef def;
        def.name = name.text;
        def.loc = loc;
        if (eat(Tok::LParen)) {
            while (!at(Tok::RParen)) {
                if (!at(Tok::Ident)) fail("expected parameter name");
                Token pn = take();
                expect(Tok::Colon, "':'");
                if (!at(Tok::Ident)) fail("expected set name");
                Token sn = take();
                def.formals.push_back({pn.text, sn.text});
                if (!prog.defs.find_set(sn.text))
                    error_at(pn.loc, "UnresolvedIdentifier", "unknown set '" + sn.text + "'");
                if (eat(Tok::Comma)) continue;
                break;
            }
            expect(Tok::RParen, "')'");
        }
        expect(Tok::Eq, "'='");
        scope.clear();
        for (const auto& f : def.formals) {
            if (!scope.insert(f.name).second)
                error_at(loc, "DuplicateDefinition",
                         "parameter '" + f.name + "' repeated in '" + def.name + "'");
        }
        def.body = parse_agent();
        scope.clear();
        expect(Tok::Dot, "'.'");
        if (prog.find_proc(def.name))
            error_at(loc, "DuplicateDefinition", "procedure '" + def.name + "' already defined");
        else
            prog.procs.push_back(std::move(def));
    }

    void parse_formula_decl() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwFormula, "'formula'");
        if (!at(Tok::Ident)) fail("expected formula name");
        Token name = take();
        expect(Tok::Eq, "'='");
        TemporalPtr f = parse_temporal();
        expect(Tok::Dot, "'.'");
        if (prog.find_formula(name.text))
            error_at(loc, "DuplicateDefinition", "formula '" + name.text + "' already defined");
        else
            prog.formulas.push_back({name.text, f, loc});
    }

    void parse_main() {
        SourceLoc loc = cur().loc;
        expect(Tok::KwMain, "'main'");
        expect(Tok::Eq, "'='");
        scope.clear();
        AgentPtr a = parse_agent();
        expect(Tok::Dot, "'.'");
        if (prog.main)
            error_at(loc, "DuplicateDefinition", "main agent already defined");
        else
            prog.main = a;
    }

    void parse_program_toplevel() {
        while (!at(Tok::End)) {
            switch (cur().kind) {
                case Tok::KwEset: parse_eset(); break;
                case Tok::KwMap: parse_map(); break;
                case Tok::KwEqn: parse_eqn_block(); break;
                case Tok::KwGprim: parse_gprim(); break;
                case Tok::KwProc: parse_proc(); break;
                case Tok::KwFormula: parse_formula_decl(); break;
                case Tok::KwMain: parse_main(); break;
                default: fail("expected declaration");
            }
        }
    }
};

// ---- static checks ----

bool agent_nullable(const AgentPtr& a) {
    switch (a->kind) {
        case Agent::Kind::End: return true;
        case Agent::Kind::Prim:
        case Agent::Kind::GuardedList:
        case Agent::Kind::Call: return false;
        case Agent::Kind::Seq:
        case Agent::Kind::Par: return agent_nullable(a->a) && agent_nullable(a->b);
        case Agent::Kind::Choice: return agent_nullable(a->a) || agent_nullable(a->b);
        case Agent::Kind::Cond:
            return agent_nullable(a->a) || (a->b && agent_nullable(a->b));
    }
    return false;
}

// True when a procedure call can be reached before any primitive runs.
bool calls_unguarded(const AgentPtr& a) {
    switch (a->kind) {
        case Agent::Kind::End:
        case Agent::Kind::Prim:
        case Agent::Kind::GuardedList: return false;
        case Agent::Kind::Call: return true;
        case Agent::Kind::Seq:
            return calls_unguarded(a->a) || (agent_nullable(a->a) && calls_unguarded(a->b));
        case Agent::Kind::Par:
        case Agent::Kind::Choice:
            return calls_unguarded(a->a) || calls_unguarded(a->b);
        case Agent::Kind::Cond:
            return calls_unguarded(a->a) || (a->b && calls_unguarded(a->b));
    }
    return false;
}

void check_calls(const Program& prog, const AgentPtr& a, std::vector<Diagnostic>& diags) {
    switch (a->kind) {
        case Agent::Kind::Call: {
            const ProcDef* pd = prog.find_proc(a->call_name);
            if (!pd) {
                diags.push_back({Severity::Error, "UnresolvedIdentifier",
                                 "call to undefined procedure '" + a->call_name + "'",
                                 a->loc});
                return;
            }
            if (pd->formals.size() != a->call_args.size())
                diags.push_back({Severity::Error, "ArityMismatch",
                                 "procedure '" + a->call_name + "' expects " +
                                     std::to_string(pd->formals.size()) +
                                     " argument(s), got " +
                                     std::to_string(a->call_args.size()),
                                 a->loc});
            return;
        }
        case Agent::Kind::Seq:
        case Agent::Kind::Par:
        case Agent::Kind::Choice:
            check_calls(prog, a->a, diags);
            check_calls(prog, a->b, diags);
            return;
        case Agent::Kind::Cond:
            check_calls(prog, a->a, diags);
            if (a->b) check_calls(prog, a->b, diags);
            return;
        default:
            return;
    }
}

void static_check(const Program& prog, std::vector<Diagnostic>& diags) {
    for (const auto& p : prog.procs) {
        check_calls(prog, p.body, diags);
        if (calls_unguarded(p.body))
            diags.push_back({Severity::Error, "UnguardedProcedure",
                             "procedure '" + p.name +
                                 "' may recurse before executing any primitive",
                             p.loc});
    }
    if (prog.main) check_calls(prog, prog.main, diags);
}

}  // namespace

ParseResult parse_program(const std::string& source) {
    ParseResult res;
    auto prog = std::make_shared<Program>();
    Parser p(lex(source), res.diagnostics, *prog);
    try {
        p.parse_program_toplevel();
    } catch (ParseAbort&) {
        return res;  // program stays null
    }
    static_check(*prog, res.diagnostics);
    res.program = std::move(prog);
    return res;
}

AgentPtr parse_agent_text(Program& prog, const std::string& text,
                          std::vector<Diagnostic>& diags) {
    Parser p(lex(text), diags, prog);
    try {
        AgentPtr a = p.parse_agent();
        if (!p.at(Tok::End)) p.fail("trailing input after agent");
        check_calls(prog, a, diags);
        return a;
    } catch (ParseAbort&) {
        return nullptr;
    }
}

TemporalPtr parse_formula_text(Program& prog, const std::string& text,
                               std::vector<Diagnostic>& diags) {
    Parser p(lex(text), diags, prog);
    try {
        TemporalPtr f = p.parse_temporal();
        if (!p.at(Tok::End)) p.fail("trailing input after formula");
        return f;
    } catch (ParseAbort&) {
        return nullptr;
    }
}

PropPtr parse_prop_text(Program& prog, const std::string& text,
                        std::vector<Diagnostic>& diags) {
    Parser p(lex(text), diags, prog);
    try {
        PropPtr f = p.parse_prop();
        if (!p.at(Tok::End)) p.fail("trailing input after formula");
        return f;
    } catch (ParseAbort&) {
        return nullptr;
    }
}

// ---- printing ----

std::string condition_to_text(const CondPtr& c, const TermArena& arena) {
    // Precedence: or 0, and 1, atom 2.
    struct P {
        const TermArena& arena;
        std::string go(const CondPtr& c, int need) {
            switch (c->kind) {
                case Condition::Kind::Cmp:
                    return arena.to_text(c->lhs) + cmp_op_text(c->op) + arena.to_text(c->rhs);
                case Condition::Kind::Not:
                    return "!" + go(c->a, 2);
                case Condition::Kind::And: {
                    std::string s = go(c->a, 1) + " & " + go(c->b, 2);
                    return need > 1 ? "(" + s + ")" : s;
                }
                case Condition::Kind::Or: {
                    std::string s = go(c->a, 0) + " | " + go(c->b, 1);
                    return need > 0 ? "(" + s + ")" : s;
                }
            }
            return "?";
        }
    };
    return P{arena}.go(c, 0);
}

namespace {

std::string prim_to_text(const Prim& p, const TermArena& arena) {
    if (p.kind == PrimKind::Graphical) return arena.to_text(p.payload);
    return std::string(prim_kind_name(p.kind)) + "(" + arena.to_text(p.payload) + ")";
}

// Precedence: cond 0, choice 1, par 2, seq 3, primary 4.
std::string agent_text(const AgentPtr& a, const TermArena& arena, int need) {
    switch (a->kind) {
        case Agent::Kind::End:
            return "E";
        case Agent::Kind::Prim:
            return prim_to_text(a->prim, arena);
        case Agent::Kind::GuardedList: {
            std::string s = "[" + prim_to_text(a->prim, arena);
            if (!a->tail.empty()) {
                s += " -> ";
                for (size_t i = 0; i < a->tail.size(); ++i) {
                    if (i) s += ", ";
                    s += prim_to_text(a->tail[i], arena);
                }
            }
            s += "]";
            return s;
        }
        case Agent::Kind::Seq: {
            std::string s = agent_text(a->a, arena, 4) + "; " + agent_text(a->b, arena, 3);
            return need > 3 ? "(" + s + ")" : s;
        }
        case Agent::Kind::Par: {
            std::string s = agent_text(a->a, arena, 2) + " || " + agent_text(a->b, arena, 3);
            return need > 2 ? "(" + s + ")" : s;
        }
        case Agent::Kind::Choice: {
            std::string s = agent_text(a->a, arena, 1) + " + " + agent_text(a->b, arena, 2);
            return need > 1 ? "(" + s + ")" : s;
        }
        case Agent::Kind::Cond: {
            auto branch = [&](const AgentPtr& x) {
                std::string s = agent_text(x, arena, 0);
                if (x->kind == Agent::Kind::Cond) s = "(" + s + ")";
                return s;
            };
            std::string s = condition_to_text(a->cond, arena) + " -> " + branch(a->a);
            if (a->b) s += " <> " + branch(a->b);
            return need > 0 ? "(" + s + ")" : s;
        }
        case Agent::Kind::Call: {
            std::string s = a->call_name;
            if (!a->call_args.empty()) {
                s += "(";
                for (size_t i = 0; i < a->call_args.size(); ++i) {
                    if (i) s += ",";
                    s += arena.to_text(a->call_args[i]);
                }
                s += ")";
            }
            return s;
        }
    }
    return "?";
}

// Choice alternatives printed one per line when a body is a choice
// spine; long vehicle processes stay readable that way.
std::string body_text(const AgentPtr& a, const TermArena& arena) {
    if (a->kind != Agent::Kind::Choice) return agent_text(a, arena, 0);
    std::vector<AgentPtr> alts;
    AgentPtr cur = a;
    while (cur->kind == Agent::Kind::Choice) {
        alts.push_back(cur->b);
        cur = cur->a;
    }
    alts.push_back(cur);
    std::reverse(alts.begin(), alts.end());
    std::string s;
    for (size_t i = 0; i < alts.size(); ++i) {
        if (i) s += "\n  + ";
        s += agent_text(alts[i], arena, 2);
    }
    return s;
}

}  // namespace

std::string agent_to_text(const AgentPtr& a, const TermArena& arena) {
    return agent_text(a, arena, 0);
}

std::string print_program(const Program& prog) {
    const TermArena& arena = prog.arena();
    std::string out;
    for (const auto& s : prog.defs.sets()) {
        out += "eset " + s.name + " = {";
        bool range = s.elements.size() >= 2;
        for (TermId t : s.elements)
            if (arena.node(t).kind != TermKind::Int) { range = false; break; }
        if (range) {
            for (size_t i = 1; i < s.elements.size(); ++i) {
                if (arena.node(s.elements[i]).num != arena.node(s.elements[i - 1]).num + 1) {
                    range = false;
                    break;
                }
            }
        }
        if (range) {
            out += std::to_string(arena.node(s.elements.front()).num) + ".." +
                   std::to_string(arena.node(s.elements.back()).num);
        } else {
            for (size_t i = 0; i < s.elements.size(); ++i) {
                if (i) out += ", ";
                out += arena.to_text(s.elements[i]);
            }
        }
        out += "}.\n";
    }
    if (!prog.defs.sets().empty()) out += "\n";
    for (const auto& m : prog.defs.maps()) {
        out += "map " + m.name + " : ";
        for (size_t i = 0; i < m.domain.size(); ++i) {
            if (i) out += ", ";
            out += m.domain[i];
        }
        out += " -> " + m.codomain + ".\n";
        for (const auto& eq : m.equations) {
            out += "eqn " + m.name + "(";
            for (size_t i = 0; i < eq.lhs.size(); ++i) {
                if (i) out += ",";
                out += arena.to_text(eq.lhs[i]);
            }
            out += ") = " + arena.to_text(eq.rhs) + ".\n";
        }
        out += "\n";
    }
    for (const auto& g : prog.gprims) out += "gprim " + g + ".\n";
    if (!prog.gprims.empty()) out += "\n";
    for (const auto& p : prog.procs) {
        out += "proc " + p.name;
        if (!p.formals.empty()) {
            out += "(";
            for (size_t i = 0; i < p.formals.size(); ++i) {
                if (i) out += ", ";
                out += p.formals[i].name + ": " + p.formals[i].set_name;
            }
            out += ")";
        }
        out += " =\n  " + body_text(p.body, arena) + ".\n\n";
    }
    for (const auto& f : prog.formulas)
        out += "formula " + f.name + " = " + temporal_to_text(f.formula, arena) + ".\n";
    if (!prog.formulas.empty()) out += "\n";
    if (prog.main) out += "main =\n  " + body_text(prog.main, arena) + ".\n";
    return out;
}

}  // namespace gbach
