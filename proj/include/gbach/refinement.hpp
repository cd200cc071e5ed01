#ifndef GBACH_REFINEMENT_HPP
#define GBACH_REFINEMENT_HPP

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gbach/checker.hpp"
#include "gbach/program.hpp"

namespace gbach {

enum class TerminalMark : uint8_t { Success, Failure, Ongoing };

const char* terminal_mark_name(TerminalMark m);

// One run recorded as the sequence of stores it passed through. The
// mark tells how the recorded part ends: proper termination, a stuck
// non-terminated agent, or a run cut off by the depth bound.
struct History {
    std::vector<Store> stores;  // starts with the initial store
    TerminalMark mark = TerminalMark::Ongoing;

    std::string key() const;  // canonical bytes for dedup
};

struct HistoryLimits {
    uint64_t max_depth = 8;
    uint64_t max_histories = 1'000'000;
};

// All distinct histories of ⟨agent, initial⟩ up to the depth bound.
// Throws BudgetExceeded past max_histories.
std::vector<History> histories(const AgentPtr& agent, const Store& initial,
                               const Program& prog, const HistoryLimits& lim);

// hc is h with some intermediate stores dropped. The injection maps
// positions of hc to positions of h; removed_before[i] holds the stores
// of h dropped just before the image of hc[i], trailing_removed those
// dropped after the last kept store.
struct ContractionWitness {
    std::vector<size_t> injection;
    std::vector<std::vector<Store>> removed_before;
    std::vector<Store> trailing_removed;
};

// Subsequence test: same first store, same terminal mark, order kept.
// Ongoing histories only constrain the recorded prefix. Returns the
// leftmost witness when one exists.
std::optional<ContractionWitness> is_contraction(const History& hc, const History& h);

// A contraction preserves F when nothing is dropped after the last kept
// store and every dropped store agrees with its following kept store on
// F.
bool witness_preserves(const ContractionWitness& w, const History& hc,
                       const PropFormula& F);

// Searches all contraction decompositions for an F-preserving one.
bool exists_preserving_contraction(const History& hc, const History& h,
                                   const PropFormula& F);

struct RefinementResult {
    bool refines = false;
    // Set when refines is false: the offending history of the refining
    // agent and the store it started from.
    std::optional<History> counterexample;
    std::optional<Store> counterexample_store;
};

// Bounded refinement: every history of `refined` from each initial
// store must be a contraction of some history of `reference`.
RefinementResult check_refinement(const AgentPtr& refined, const AgentPtr& reference,
                                  const std::vector<Store>& initials, const Program& prog,
                                  const HistoryLimits& lim);

// Same, requiring F-preserving contractions.
RefinementResult check_refinement_preserving(const AgentPtr& refined,
                                             const AgentPtr& reference,
                                             const std::vector<Store>& initials,
                                             const Program& prog, const PropFormula& F,
                                             const HistoryLimits& lim);

// Final observables: (final store, success flag) over all terminating
// runs, exhaustively. Throws BudgetExceeded when the space outgrows
// max_states.
std::set<std::pair<std::string, bool>> final_observables(const AgentPtr& agent,
                                                         const Store& initial,
                                                         const Program& prog,
                                                         uint64_t max_states);

// A chain "p; t1; ...; tn" can be collapsed into [p -> t1,...,tn] when
// every chained primitive always succeeds on any store.
bool chain_collapsible(const std::vector<Prim>& tail);

// Shape-level test that none of the tail primitives can produce a term
// the formula counts. Unknown shapes (variables at the top) conflict.
bool tail_distinct_from(const std::vector<Prim>& tail, const PropFormula& F,
                        const TermArena& arena);

struct TransformSite {
    SourceLoc loc;
    std::string context;  // procedure name or "main"
    std::string action;   // "transformed", "skipped", "forced"
    std::string detail;
};

struct TransformReport {
    std::vector<TransformSite> sites;
    std::string to_text() const;
};

struct TransformResult {
    Program program;
    TransformReport report;
};

// Rewrites maximal eligible primitive chains into guarded lists. A
// chain is rewritten only when the tail always succeeds and, unless
// force is set, the tail cannot touch the terms counted by F.
TransformResult transform_to_guarded(const Program& prog, const PropFormula& F,
                                     bool force = false);

}  // namespace gbach

#endif  // GBACH_REFINEMENT_HPP
