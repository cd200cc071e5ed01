#ifndef GBACH_PROGRAM_HPP
#define GBACH_PROGRAM_HPP

#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gbach/ast.hpp"
#include "gbach/logic.hpp"
#include "gbach/term.hpp"

namespace gbach {

// Memoized evaluation results. Entries stay valid only while the
// program's equations are fixed, which holds for anything that stepping
// touches: parsing finishes before execution starts.
struct EvalCache {
    std::mutex mu;
    std::unordered_map<uint32_t, TermId> rewrites;
    std::unordered_map<std::string, AgentPtr> unfolds;
};

// A loaded program: declarations, procedures, the main agent, and any
// named formulas. The term arena is shared so derived programs (for
// example the output of the guarded-list transformation) can reuse the
// same ids.
struct Program {
    std::shared_ptr<TermArena> terms = std::make_shared<TermArena>();
    Defs defs;
    std::set<std::string> gprims;
    std::vector<ProcDef> procs;
    AgentPtr main;
    std::vector<NamedFormula> formulas;
    std::shared_ptr<EvalCache> cache = std::make_shared<EvalCache>();

    const TermArena& arena() const { return *terms; }

    const ProcDef* find_proc(const std::string& name) const {
        for (const auto& p : procs)
            if (p.name == name) return &p;
        return nullptr;
    }

    const NamedFormula* find_formula(const std::string& name) const {
        for (const auto& f : formulas)
            if (f.name == name) return &f;
        return nullptr;
    }
};

}  // namespace gbach

#endif  // GBACH_PROGRAM_HPP
