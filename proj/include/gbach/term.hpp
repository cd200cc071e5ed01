#ifndef GBACH_TERM_HPP
#define GBACH_TERM_HPP

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gbach/diag.hpp"

namespace gbach {

// Structured interchange terms. Interned: one id per distinct term, so
// equality and hashing are O(1) and stores can be encoded as id lists.
struct TermId {
    uint32_t v = 0;
    friend bool operator==(TermId a, TermId b) { return a.v == b.v; }
    friend bool operator!=(TermId a, TermId b) { return a.v != b.v; }
    friend bool operator<(TermId a, TermId b) { return a.v < b.v; }
};

enum class TermKind : uint8_t {
    Int,       // integer literal
    Token,     // bare identifier atom
    Var,       // procedure formal, only alive inside procedure bodies
    Compound,  // f(t1,...,tn), uninterpreted constructor
    MapApp,    // m(t1,...,tn), reducible via declared equations
};

struct TermNode {
    TermKind kind;
    bool is_final;        // no Var, no MapApp anywhere inside
    int64_t num = 0;      // Int
    std::string name;     // Token/Var/Compound/MapApp
    std::vector<TermId> args;
};

class TermArena {
public:
    TermArena() = default;
    TermArena(const TermArena&) = delete;
    TermArena& operator=(const TermArena&) = delete;

    TermId make_int(int64_t v) const;
    TermId make_token(const std::string& name) const;
    TermId make_var(const std::string& name) const;
    TermId make_compound(const std::string& functor, const std::vector<TermId>& args) const;
    TermId make_map_app(const std::string& map_name, const std::vector<TermId>& args) const;

    const TermNode& node(TermId id) const;
    bool is_final(TermId id) const { return node(id).is_final; }

    // Canonical text: no whitespace, f(a,b), -7, tokens verbatim.
    std::string to_text(TermId id) const;

    // Replaces Var leaves by their bindings; unbound vars are kept.
    TermId substitute(TermId id, const std::unordered_map<std::string, TermId>& binding) const;

    size_t size() const;

private:
    TermId intern(TermNode&& n) const;
    static std::string key_of(const TermNode& n);

    mutable std::mutex mu_;
    mutable std::deque<TermNode> nodes_;
    mutable std::unordered_map<std::string, uint32_t> index_;
};

struct SetDef {
    std::string name;
    std::vector<TermId> elements;  // int and token atoms, interned
    SourceLoc loc;
};

struct MapEquation {
    std::vector<TermId> lhs;  // atom tuple, fully ground
    TermId rhs;               // ground term, may itself contain map applications
    SourceLoc loc;
};

struct MapDef {
    std::string name;
    std::vector<std::string> domain;  // set names, one per argument
    std::string codomain;
    std::vector<MapEquation> equations;
    SourceLoc loc;
};

// Set and map declarations plus the lookup index the rewriter uses.
class Defs {
public:
    void add_set(SetDef s);
    void add_map(MapDef m);
    // Appends an equation to an already declared map. Returns false and
    // leaves the table unchanged when an equation for the same argument
    // tuple already exists.
    bool add_equation(const std::string& map_name, MapEquation eq);

    const SetDef* find_set(const std::string& name) const;
    const MapDef* find_map(const std::string& name) const;
    bool set_contains(const SetDef& s, TermId t) const;

    // Defined-case lookup: equation rhs for m(args), if any.
    std::optional<TermId> lookup(const std::string& map_name,
                                 const std::vector<TermId>& args) const;

    const std::vector<SetDef>& sets() const { return sets_; }
    const std::vector<MapDef>& maps() const { return maps_; }

private:
    static std::string eq_key(const std::string& map_name, const std::vector<TermId>& args);

    std::vector<SetDef> sets_;
    std::vector<MapDef> maps_;
    std::unordered_map<std::string, size_t> set_index_;
    std::unordered_map<std::string, size_t> map_index_;
    std::unordered_map<std::string, TermId> eq_index_;
};

inline constexpr int kDefaultRewriteBudget = 10000;

// Innermost-first, arguments left to right, equations in declaration
// order (the index preserves that: tuples are disjoint by construction).
// Throws UndefinedMapApplication on a map applied outside its defined
// cases, RewriteBudgetExceeded after `budget` replacement steps, and
// EvalError("UnboundVariable") if a Var survives to evaluation.
TermId rewrite(const TermArena& arena, TermId t, const Defs& defs,
               int budget = kDefaultRewriteBudget);

// Finite multiset of final terms. Value semantics; mutators return the
// changed copy so exploration can share unchanged stores.
class Store {
public:
    Store() = default;

    uint32_t count(TermId t) const;
    bool contains(TermId t) const { return count(t) > 0; }
    size_t distinct_size() const { return items_.size(); }
    uint64_t total_size() const;
    bool empty() const { return items_.empty(); }

    Store with_added(TermId t) const;
    // Empty optional when t is absent.
    std::optional<Store> with_removed(TermId t) const;

    // In-place variants for callers that batch several updates on one copy.
    void add(TermId t);
    // False when t is absent; the store is left untouched.
    bool remove(TermId t);

    const std::vector<std::pair<TermId, uint32_t>>& items() const { return items_; }

    // Canonical byte encoding: (id,count) pairs sorted by id. Equal
    // multisets encode identically regardless of insertion order.
    std::string encode() const;
    void encode_into(std::string& out) const;

    // Human form "{a:2, f(1,2):1}" sorted by term text so the output is
    // stable across runs even though ids are not.
    std::string to_text(const TermArena& arena) const;

    friend bool operator==(const Store& a, const Store& b) { return a.items_ == b.items_; }
    friend bool operator!=(const Store& a, const Store& b) { return !(a == b); }

private:
    std::vector<std::pair<TermId, uint32_t>> items_;  // sorted by TermId
};

// Parses the canonical text of a final term (as produced by to_text):
// integers, tokens, nested f(...) applications. Used when reading
// traces back in. Throws EvalError("TermSyntax") on malformed input.
TermId parse_final_term(const TermArena& arena, const std::string& text);

}  // namespace gbach

#endif  // GBACH_TERM_HPP
