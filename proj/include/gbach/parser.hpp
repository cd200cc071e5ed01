#ifndef GBACH_PARSER_HPP
#define GBACH_PARSER_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbach/diag.hpp"
#include "gbach/program.hpp"

namespace gbach {

struct ParseResult {
    std::shared_ptr<Program> program;  // null when a syntax error aborted the parse
    std::vector<Diagnostic> diagnostics;

    bool ok() const {
        if (!program) return false;
        for (const auto& d : diagnostics)
            if (d.severity == Severity::Error) return false;
        return true;
    }
};

// Parses a whole source file. Declarations must precede their uses
// except procedure calls, which may refer forward. Never throws on
// malformed input; problems come back as diagnostics.
ParseResult parse_program(const std::string& source);

// Parses one agent in the context of an existing program (its sets,
// maps, graphical primitives and procedures are in scope). Intended for
// tests and small tools.
AgentPtr parse_agent_text(Program& prog, const std::string& text,
                          std::vector<Diagnostic>& diags);

// Same, for path formulas.
TemporalPtr parse_formula_text(Program& prog, const std::string& text,
                               std::vector<Diagnostic>& diags);

// Same, for the propositional fragment only.
PropPtr parse_prop_text(Program& prog, const std::string& text,
                        std::vector<Diagnostic>& diags);

// Canonical source form. Parsing the result yields a structurally equal
// program, and printing is stable under repetition.
std::string print_program(const Program& prog);

std::string agent_to_text(const AgentPtr& a, const TermArena& arena);
std::string condition_to_text(const CondPtr& c, const TermArena& arena);

}  // namespace gbach

#endif  // GBACH_PARSER_HPP
