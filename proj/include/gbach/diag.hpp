#ifndef GBACH_DIAG_HPP
#define GBACH_DIAG_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace gbach {

struct SourceLoc {
    int line = 0;   // 1-based; 0 = synthesized node
    int col = 0;
    bool valid() const { return line > 0; }
};

enum class Severity { Error, Warning };

// Static diagnostics (syntax and well-formedness). Runtime faults use
// EvalError below instead.
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;      // e.g. "SyntaxError", "UnguardedProcedure"
    std::string message;
    SourceLoc loc;

    std::string to_string() const {
        std::string s;
        if (loc.valid()) {
            s += std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": ";
        }
        s += (severity == Severity::Error ? "error" : "warning");
        s += " [" + code + "]: " + message;
        return s;
    }
};

// Faults raised while executing a program: misuse of partial maps,
// rewrite divergence, guarded-list tails that block, and friends.
// The checker catches these and reports Unknown verdicts; the CLI
// turns them into nonzero exits.
class EvalError : public std::runtime_error {
public:
    EvalError(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class UndefinedMapApplication : public EvalError {
public:
    explicit UndefinedMapApplication(const std::string& what)
        : EvalError("UndefinedMapApplication", what) {}
};

class RewriteBudgetExceeded : public EvalError {
public:
    explicit RewriteBudgetExceeded(const std::string& what)
        : EvalError("RewriteBudgetExceeded", what) {}
};

class TypeMismatch : public EvalError {
public:
    explicit TypeMismatch(const std::string& what)
        : EvalError("TypeMismatch", what) {}
};

// Guard succeeded but a later primitive of the guarded list blocked.
// Execution has no rollback, so the only safe response is to abort.
class GuardedTailFailure : public EvalError {
public:
    GuardedTailFailure(const std::string& what, int tail_index)
        : EvalError("GuardedTailFailure", what), tail_index_(tail_index) {}
    int tail_index() const { return tail_index_; }

private:
    int tail_index_;
};

class UnsupportedConstruct : public EvalError {
public:
    explicit UnsupportedConstruct(const std::string& what)
        : EvalError("UnsupportedConstruct", what) {}
};

// Enumeration caps (history sets, unfold depth, ...).
class BudgetExceeded : public EvalError {
public:
    explicit BudgetExceeded(const std::string& what)
        : EvalError("BudgetExceeded", what) {}
};

}  // namespace gbach

#endif  // GBACH_DIAG_HPP
