#ifndef GBACH_CHECKER_HPP
#define GBACH_CHECKER_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gbach/program.hpp"
#include "gbach/semantics.hpp"

namespace gbach {

struct Limits {
    uint64_t max_states = 10'000'000;       // total states discovered, all searches
    uint64_t max_depth = UINT64_MAX;        // reachability frontier depth
    int workers = 1;                        // successor computation threads
    uint64_t shuffle_seed = 0;              // 0 = keep natural successor order
};

// Returns max_states, with the GBACH_MAX_STATES environment variable
// taking precedence when set to a positive integer.
uint64_t default_max_states();

struct TraceStep {
    TransitionLabel label;
    std::vector<TermId> added;    // one entry per copy
    std::vector<TermId> removed;
};

// Replayable run: initial store plus per-step labels and store deltas.
struct Trace {
    Store initial;
    std::vector<TraceStep> steps;
};

enum class VerdictKind { Holds, RefutedExhaustive, Unknown };

const char* verdict_kind_name(VerdictKind k);

struct Verdict {
    VerdictKind kind = VerdictKind::Unknown;
    Trace witness;        // Holds: a shortest satisfying run
    std::string reason;   // Unknown: what stopped the search
    Trace partial;        // Unknown on a runtime fault: prefix reaching it
};

struct SearchStats {
    uint64_t states_expanded = 0;
    uint64_t states_discovered = 0;
    uint64_t max_frontier = 0;
    double wall_ms = 0;
};

struct CheckResult {
    Verdict verdict;
    SearchStats stats;
};

// Existential check of f over the runs of ⟨main, initial⟩. Holds comes
// with a shortest witness (ties broken towards the first-discovered
// state). RefutedExhaustive is only reported when every search ran to
// completion inside the limits.
CheckResult check_from(const Program& prog, const TemporalPtr& f, const Store& initial,
                       const Limits& lim = {});
CheckResult check(const Program& prog, const TemporalPtr& f, const Limits& lim = {});

struct ReplayResult {
    bool ok = false;
    size_t step_index = 0;  // first step that failed to replay
    std::string reason;
};

// Re-executes a trace against the program, requiring each recorded
// label and store to be reproducible.
ReplayResult replay(const Trace& trace, const Program& prog);

// Rewrites every guarded-list step into the equivalent sequence of
// single-primitive steps, so a run of a transformed program can be
// replayed against the original one.
Trace expand_guarded_steps(const Trace& trace);

Store store_after(const Trace& trace);  // final store reached by the trace

struct SpaceStats {
    SearchStats search;
    bool complete = false;
};

// Full reachable-state enumeration. When graph_out is given, writes
// "STATE <id> <store>" on discovery and "EDGE <from> <to> <rule> <prims>"
// for every transition, both in deterministic order.
SpaceStats enumerate_space(const Program& prog, const Store& initial, const Limits& lim,
                           std::ostream* graph_out = nullptr);

std::string render_report(const CheckResult& r);
std::map<std::string, std::string> parse_report(const std::string& text);

std::string trace_to_text(const Trace& t, const TermArena& arena);
// Inverse of trace_to_text; terms are interned into the given arena.
// Throws EvalError("TraceSyntax") on malformed input.
Trace trace_from_text(const std::string& text, const TermArena& arena);

// Parses a braced multiset like "{free(1,2):1, out:2}". The empty store
// is "{}". Throws EvalError("TraceSyntax") on malformed input.
Store parse_store_text(const std::string& text, const TermArena& arena);

}  // namespace gbach

#endif  // GBACH_CHECKER_HPP
