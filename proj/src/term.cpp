#include "gbach/term.hpp"

#include <algorithm>
#include <cstring>

namespace gbach {

namespace {

void append_u32(std::string& s, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    s.append(buf, 4);
}

void append_u64(std::string& s, uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    s.append(buf, 8);
}

}  // namespace

TermId TermArena::intern(TermNode&& n) const {
    std::string key = key_of(n);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(key);
    if (it != index_.end()) return TermId{it->second};
    uint32_t id = static_cast<uint32_t>(nodes_.size());
    nodes_.push_back(std::move(n));
    index_.emplace(std::move(key), id);
    return TermId{id};
}

std::string TermArena::key_of(const TermNode& n) {
    std::string key;
    key.push_back(static_cast<char>(n.kind));
    if (n.kind == TermKind::Int) {
        append_u64(key, static_cast<uint64_t>(n.num));
    } else {
        append_u32(key, static_cast<uint32_t>(n.name.size()));
        key += n.name;
        for (TermId a : n.args) append_u32(key, a.v);
    }
    return key;
}

TermId TermArena::make_int(int64_t v) const {
    TermNode n;
    n.kind = TermKind::Int;
    n.is_final = true;
    n.num = v;
    return intern(std::move(n));
}

TermId TermArena::make_token(const std::string& name) const {
    TermNode n;
    n.kind = TermKind::Token;
    n.is_final = true;
    n.name = name;
    return intern(std::move(n));
}

TermId TermArena::make_var(const std::string& name) const {
    TermNode n;
    n.kind = TermKind::Var;
    n.is_final = false;
    n.name = name;
    return intern(std::move(n));
}

TermId TermArena::make_compound(const std::string& functor, const std::vector<TermId>& args) const {
    TermNode n;
    n.kind = TermKind::Compound;
    n.name = functor;
    n.args = args;
    n.is_final = true;
    for (TermId a : args) {
        if (!is_final(a)) { n.is_final = false; break; }
    }
    return intern(std::move(n));
}

TermId TermArena::make_map_app(const std::string& map_name, const std::vector<TermId>& args) const {
    TermNode n;
    n.kind = TermKind::MapApp;
    n.name = map_name;
    n.args = args;
    n.is_final = false;
    return intern(std::move(n));
}

const TermNode& TermArena::node(TermId id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return nodes_.at(id.v);
}

size_t TermArena::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return nodes_.size();
}

std::string TermArena::to_text(TermId id) const {
    const TermNode& n = node(id);
    switch (n.kind) {
        case TermKind::Int:
            return std::to_string(n.num);
        case TermKind::Token:
        case TermKind::Var:
            return n.name;
        case TermKind::Compound:
        case TermKind::MapApp: {
            std::string s = n.name;
            s.push_back('(');
            for (size_t i = 0; i < n.args.size(); ++i) {
                if (i) s.push_back(',');
                s += to_text(n.args[i]);
            }
            s.push_back(')');
            return s;
        }
    }
    return "?";
}

TermId TermArena::substitute(TermId id, const std::unordered_map<std::string, TermId>& binding) const {
    const TermNode& n = node(id);
    switch (n.kind) {
        case TermKind::Int:
        case TermKind::Token:
            return id;
        case TermKind::Var: {
            auto it = binding.find(n.name);
            return it == binding.end() ? id : it->second;
        }
        case TermKind::Compound:
        case TermKind::MapApp: {
            if (n.is_final) return id;
            std::vector<TermId> args;
            args.reserve(n.args.size());
            bool changed = false;
            for (TermId a : n.args) {
                TermId b = substitute(a, binding);
                changed = changed || b != a;
                args.push_back(b);
            }
            if (!changed) return id;
            std::string name = n.name;  // node ref may dangle after intern
            TermKind kind = n.kind;
            return kind == TermKind::Compound ? make_compound(name, args)
                                              : make_map_app(name, args);
        }
    }
    return id;
}

void Defs::add_set(SetDef s) {
    set_index_[s.name] = sets_.size();
    sets_.push_back(std::move(s));
}

void Defs::add_map(MapDef m) {
    map_index_[m.name] = maps_.size();
    maps_.push_back(std::move(m));
}

std::string Defs::eq_key(const std::string& map_name, const std::vector<TermId>& args) {
    std::string key = map_name;
    key.push_back('\0');
    for (TermId a : args) append_u32(key, a.v);
    return key;
}

bool Defs::add_equation(const std::string& map_name, MapEquation eq) {
    auto it = map_index_.find(map_name);
    if (it == map_index_.end()) return false;
    std::string key = eq_key(map_name, eq.lhs);
    if (eq_index_.count(key)) return false;
    eq_index_.emplace(std::move(key), eq.rhs);
    maps_[it->second].equations.push_back(std::move(eq));
    return true;
}

const SetDef* Defs::find_set(const std::string& name) const {
    auto it = set_index_.find(name);
    return it == set_index_.end() ? nullptr : &sets_[it->second];
}

const MapDef* Defs::find_map(const std::string& name) const {
    auto it = map_index_.find(name);
    return it == map_index_.end() ? nullptr : &maps_[it->second];
}

bool Defs::set_contains(const SetDef& s, TermId t) const {
    return std::find(s.elements.begin(), s.elements.end(), t) != s.elements.end();
}

std::optional<TermId> Defs::lookup(const std::string& map_name,
                                   const std::vector<TermId>& args) const {
    auto it = eq_index_.find(eq_key(map_name, args));
    if (it == eq_index_.end()) return std::nullopt;
    return it->second;
}

namespace {

TermId rewrite_rec(const TermArena& arena, TermId t, const Defs& defs, int& budget) {
    const TermNode& n = arena.node(t);
    if (n.is_final) return t;
    switch (n.kind) {
        case TermKind::Var:
            throw EvalError("UnboundVariable",
                            "variable '" + n.name + "' reached evaluation unbound");
        case TermKind::Compound:
        case TermKind::MapApp: {
            std::vector<TermId> args;
            args.reserve(n.args.size());
            for (TermId a : n.args) args.push_back(rewrite_rec(arena, a, defs, budget));
            std::string name = n.name;
            TermKind kind = n.kind;
            if (kind == TermKind::Compound) return arena.make_compound(name, args);
            auto rhs = defs.lookup(name, args);
            if (!rhs) {
                std::string call = name + "(";
                for (size_t i = 0; i < args.size(); ++i) {
                    if (i) call.push_back(',');
                    call += arena.to_text(args[i]);
                }
                call.push_back(')');
                throw UndefinedMapApplication("no equation matches " + call);
            }
            if (--budget < 0)
                throw RewriteBudgetExceeded("rewrite exceeded step budget at " +
                                            arena.to_text(t));
            return rewrite_rec(arena, *rhs, defs, budget);
        }
        default:
            return t;  // unreachable: Int/Token are final
    }
}

}  // namespace

TermId rewrite(const TermArena& arena, TermId t, const Defs& defs, int budget) {
    int b = budget;
    return rewrite_rec(arena, t, defs, b);
}

uint32_t Store::count(TermId t) const {
    auto it = std::lower_bound(items_.begin(), items_.end(), t,
                               [](const auto& p, TermId x) { return p.first < x; });
    if (it != items_.end() && it->first == t) return it->second;
    return 0;
}

uint64_t Store::total_size() const {
    uint64_t n = 0;
    for (const auto& [t, c] : items_) n += c;
    return n;
}

Store Store::with_added(TermId t) const {
    Store out = *this;
    auto it = std::lower_bound(out.items_.begin(), out.items_.end(), t,
                               [](const auto& p, TermId x) { return p.first < x; });
    if (it != out.items_.end() && it->first == t) {
        ++it->second;
    } else {
        out.items_.insert(it, {t, 1u});
    }
    return out;
}

void Store::add(TermId t) {
    auto it = std::lower_bound(items_.begin(), items_.end(), t,
                               [](const auto& p, TermId x) { return p.first < x; });
    if (it != items_.end() && it->first == t) {
        ++it->second;
    } else {
        items_.insert(it, {t, 1u});
    }
}

bool Store::remove(TermId t) {
    auto it = std::lower_bound(items_.begin(), items_.end(), t,
                               [](const auto& p, TermId x) { return p.first < x; });
    if (it == items_.end() || it->first != t) return false;
    if (it->second > 1) {
        --it->second;
    } else {
        items_.erase(it);
    }
    return true;
}

std::optional<Store> Store::with_removed(TermId t) const {
    auto it = std::lower_bound(items_.begin(), items_.end(), t,
                               [](const auto& p, TermId x) { return p.first < x; });
    if (it == items_.end() || it->first != t) return std::nullopt;
    Store out = *this;
    auto oit = out.items_.begin() + (it - items_.begin());
    if (oit->second > 1) {
        --oit->second;
    } else {
        out.items_.erase(oit);
    }
    return out;
}

std::string Store::encode() const {
    std::string s;
    s.reserve(items_.size() * 8);
    encode_into(s);
    return s;
}

void Store::encode_into(std::string& out) const {
    for (const auto& [t, c] : items_) {
        append_u32(out, t.v);
        append_u32(out, c);
    }
}

std::string Store::to_text(const TermArena& arena) const {
    std::vector<std::pair<std::string, uint32_t>> rows;
    rows.reserve(items_.size());
    for (const auto& [t, c] : items_) rows.emplace_back(arena.to_text(t), c);
    std::sort(rows.begin(), rows.end());
    std::string s = "{";
    for (size_t i = 0; i < rows.size(); ++i) {
        if (i) s += ", ";
        s += rows[i].first + ":" + std::to_string(rows[i].second);
    }
    s += "}";
    return s;
}

namespace {

struct TermTextParser {
    const TermArena& arena;
    const std::string& text;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw EvalError("TermSyntax", why + " in term '" + text + "' at offset " +
                                          std::to_string(pos));
    }

    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    static bool ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool ident_char(char c) {
        return ident_start(c) || (c >= '0' && c <= '9');
    }

    TermId parse() {
        char c = peek();
        if (c == '-' || (c >= '0' && c <= '9')) {
            size_t start = pos;
            if (c == '-') ++pos;
            if (!(peek() >= '0' && peek() <= '9')) fail("expected digit");
            while (peek() >= '0' && peek() <= '9') ++pos;
            try {
                return arena.make_int(std::stoll(text.substr(start, pos - start)));
            } catch (...) {
                fail("integer out of range");
            }
        }
        if (!ident_start(c)) fail("expected term");
        size_t start = pos;
        while (ident_char(peek())) ++pos;
        std::string name = text.substr(start, pos - start);
        if (peek() != '(') return arena.make_token(name);
        ++pos;
        std::vector<TermId> args;
        if (peek() == ')') fail("empty argument list");
        while (true) {
            args.push_back(parse());
            if (peek() == ',') { ++pos; continue; }
            if (peek() == ')') { ++pos; break; }
            fail("expected ',' or ')'");
        }
        return arena.make_compound(name, args);
    }
};

}  // namespace

TermId parse_final_term(const TermArena& arena, const std::string& text) {
    TermTextParser p{arena, text};
    TermId t = p.parse();
    if (p.pos != text.size()) p.fail("trailing input");
    return t;
}

}  // namespace gbach
