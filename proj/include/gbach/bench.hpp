#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gbach/checker.hpp"
#include "gbach/program.hpp"

namespace gbach {

// Rush hour board generator plus the benchmark harness comparing the
// plain programs against their guarded-list versions.

enum class RushVariant { NoGL, GL };

const char* rush_variant_name(RushVariant v);

struct VehicleSpec {
    char orient = 'H';  // 'H' or 'V'
    int length = 2;     // 2 for a car, 3 for a truck
    int row = 1;        // upper/left-most occupied cell, rows counted from top
    int col = 1;
    std::string color;

    // e.g. "VPurpleTruck(2,4)"
    std::string display() const;
};

inline constexpr int kBoardSize = 6;
inline constexpr int kExitRow = 3;

// The six bundled games, by increasing vehicle count (2..7).
// Case ids run from 1 to 6.
std::vector<VehicleSpec> rush_hour_case(int case_id);
int rush_hour_case_count();

// Program text for an arbitrary vehicle list. Throws EvalError
// ("InvalidPlacement") if a vehicle leaves the board, overlaps another
// one, or no red car sits on the exit row.
std::string rush_hour_source_for(const std::vector<VehicleSpec>& vehicles,
                                 RushVariant variant);

std::string rush_hour_source(int case_id, RushVariant variant);

// Parses the generated text. Parse diagnostics escalate to a logic_error
// since the generator is supposed to emit well-formed programs only.
Program generate_rush_hour(int case_id, RushVariant variant);

// ---- independent board oracle ----

struct MoveEvent {
    std::string color;
    int row = 0;
    int col = 0;
};

// Pulls the move(color,row,col) events out of a trace, in firing order.
// Guarded-list steps contribute their listed primitives in sequence.
std::vector<MoveEvent> extract_moves(const Program& prog, const Trace& trace);

// Replays move events against a plain 6x6 cell simulator that shares no
// code with the transition engine: each event must shift exactly one
// vehicle of the named color by one cell along its axis into free cells,
// and at the end the red car must sit at the exit columns of row 3.
bool validate_moves(const std::vector<VehicleSpec>& vehicles,
                    const std::vector<MoveEvent>& moves, std::string* why = nullptr);

bool validate_solution(const Program& prog, const Trace& trace, int case_id,
                       std::string* why = nullptr);

// ---- harness ----

struct BenchCell {
    int case_id = 0;
    RushVariant variant = RushVariant::NoGL;
    VerdictKind verdict = VerdictKind::Unknown;
    std::string reason;
    double wall_ms = 0.0;  // median over repeats
    SearchStats stats;     // from the first run (search is deterministic)
    int64_t witness_len = -1;
    bool has_witness = false;
    bool witness_valid = false;
    // Rendered while the checked program was alive; feed to trace_from_text
    // with any parse of the same source to replay it.
    std::string witness_text;
};

struct BenchReport {
    std::vector<BenchCell> cells;

    const BenchCell* find(int case_id, RushVariant v) const;
    // Aligned summary table, per-case ratio lines, then one key:value
    // block per cell using the checker report field names.
    std::string to_text() const;
};

BenchReport run_benchmark(const std::vector<int>& cases, const Limits& limits,
                          int repeats);

// Explicit cell list, for runs that pair cases with only one variant.
BenchReport run_benchmark_cells(const std::vector<std::pair<int, RushVariant>>& cells,
                                const Limits& limits, int repeats);

// The desk-scale default: guarded 1..5 plus plain 1..3.
std::vector<std::pair<int, RushVariant>> default_bench_cells();

}  // namespace gbach
