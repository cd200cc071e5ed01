#ifndef GBACH_LOGIC_HPP
#define GBACH_LOGIC_HPP

#include <memory>
#include <string>
#include <vector>

#include "gbach/ast.hpp"
#include "gbach/term.hpp"

namespace gbach {

// Arithmetic over occurrence counts: #t yields how many copies of the
// final term t the store holds.
struct ArithExpr;
using ArithPtr = std::shared_ptr<const ArithExpr>;

struct ArithExpr {
    enum class Kind : uint8_t { Int, Count, Add, Sub, Mul };
    Kind kind;
    int64_t value = 0;  // Int
    TermId term{};      // Count
    ArithPtr a, b;

    static ArithPtr lit(int64_t v);
    static ArithPtr count(TermId t);
    static ArithPtr add(ArithPtr x, ArithPtr y);
    static ArithPtr sub(ArithPtr x, ArithPtr y);
    static ArithPtr mul(ArithPtr x, ArithPtr y);
};

struct PropFormula;
using PropPtr = std::shared_ptr<const PropFormula>;

struct PropFormula {
    enum class Kind : uint8_t { True, False, Cmp, Not, And, Or };
    Kind kind;
    CmpOp op = CmpOp::Eq;  // Cmp
    ArithPtr lhs, rhs;     // Cmp
    PropPtr a, b;

    static PropPtr truth(bool v);
    static PropPtr cmp(CmpOp op, ArithPtr l, ArithPtr r);
    static PropPtr negate(PropPtr p);
    static PropPtr conj(PropPtr x, PropPtr y);
    static PropPtr disj(PropPtr x, PropPtr y);
};

// Path formulas. Until nests only to the right: TF ::= PF | Next TF |
// PF Until TF. Reach(p) is parsed as true Until p.
struct TemporalFormula;
using TemporalPtr = std::shared_ptr<const TemporalFormula>;

struct TemporalFormula {
    enum class Kind : uint8_t { Prop, Next, Until };
    Kind kind;
    PropPtr prop;       // Prop; Until restriction
    TemporalPtr inner;  // Next body; Until target

    static TemporalPtr lift(PropPtr p);
    static TemporalPtr next(TemporalPtr t);
    static TemporalPtr until(PropPtr restrict_p, TemporalPtr target);
    static TemporalPtr reach(PropPtr p) { return until(PropFormula::truth(true), lift(p)); }
};

struct NamedFormula {
    std::string name;
    TemporalPtr formula;
    SourceLoc loc;
};

int64_t eval_arith(const ArithExpr& e, const Store& store);
bool eval_prop(const PropFormula& p, const Store& store);

// Distinct terms mentioned by #-counts anywhere in the formula.
std::vector<TermId> count_terms(const TemporalPtr& f);
std::vector<TermId> count_terms(const PropPtr& p);

std::string arith_to_text(const ArithPtr& e, const TermArena& arena);
std::string prop_to_text(const PropPtr& p, const TermArena& arena);
std::string temporal_to_text(const TemporalPtr& f, const TermArena& arena);

bool prop_equal(const PropPtr& a, const PropPtr& b);
bool temporal_equal(const TemporalPtr& a, const TemporalPtr& b);

}  // namespace gbach

#endif  // GBACH_LOGIC_HPP
