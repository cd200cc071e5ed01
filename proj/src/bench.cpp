#include "gbach/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "gbach/diag.hpp"
#include "gbach/parser.hpp"

namespace gbach {

const char* rush_variant_name(RushVariant v) {
    return v == RushVariant::NoGL ? "plain" : "guarded";
}

std::string VehicleSpec::display() const {
    std::string name = color;
    if (!name.empty()) name[0] = char(std::toupper((unsigned char)name[0]));
    std::ostringstream os;
    os << orient << name << (length == 3 ? "Truck" : "Car") << "(" << row << "," << col
       << ")";
    return os.str();
}

int rush_hour_case_count() { return 6; }

std::vector<VehicleSpec> rush_hour_case(int case_id) {
    const VehicleSpec purple14{'V', 3, 2, 4, "purple"};
    const VehicleSpec purple11{'V', 3, 2, 1, "purple"};
    const VehicleSpec red{'H', 2, 3, 2, "red"};
    const VehicleSpec green_car{'H', 2, 1, 1, "green"};
    const VehicleSpec orange{'V', 2, 5, 1, "orange"};
    const VehicleSpec blue{'V', 3, 2, 4, "blue"};
    const VehicleSpec green_truck{'H', 3, 6, 3, "green"};
    const VehicleSpec yellow{'V', 3, 1, 6, "yellow"};
    switch (case_id) {
        case 1: return {purple14, red};
        case 2: return {purple11, red, green_car};
        case 3: return {purple11, red, green_car, orange};
        case 4: return {purple11, red, green_car, orange, blue};
        case 5: return {purple11, red, green_car, orange, blue, green_truck};
        case 6: return {purple11, red, green_car, orange, blue, green_truck, yellow};
        default:
            throw std::out_of_range("rush hour case id must be in 1..6, got " +
                                    std::to_string(case_id));
    }
}

namespace {

struct Cells {
    // 1-based grid of vehicle indices, -1 when free.
    int at[kBoardSize + 1][kBoardSize + 1];

    Cells() {
        for (int r = 0; r <= kBoardSize; ++r)
            for (int c = 0; c <= kBoardSize; ++c) at[r][c] = -1;
    }
};

std::vector<std::pair<int, int>> cells_of(const VehicleSpec& v) {
    std::vector<std::pair<int, int>> out;
    for (int k = 0; k < v.length; ++k)
        out.emplace_back(v.orient == 'V' ? v.row + k : v.row,
                         v.orient == 'H' ? v.col + k : v.col);
    return out;
}

Cells place_all(const std::vector<VehicleSpec>& vehicles) {
    Cells grid;
    int reds = 0;
    for (size_t i = 0; i < vehicles.size(); ++i) {
        const VehicleSpec& v = vehicles[i];
        if ((v.orient != 'H' && v.orient != 'V') || (v.length != 2 && v.length != 3))
            throw EvalError("InvalidPlacement", "malformed vehicle " + v.display());
        for (auto [r, c] : cells_of(v)) {
            if (r < 1 || r > kBoardSize || c < 1 || c > kBoardSize)
                throw EvalError("InvalidPlacement",
                                v.display() + " does not fit on the board");
            if (grid.at[r][c] != -1)
                throw EvalError("InvalidPlacement",
                                v.display() + " overlaps " +
                                    vehicles[grid.at[r][c]].display());
            grid.at[r][c] = int(i);
        }
        if (v.color == "red") {
            ++reds;
            if (v.orient != 'H' || v.length != 2 || v.row != kExitRow)
                throw EvalError("InvalidPlacement",
                                "the red car must lie horizontally on row " +
                                    std::to_string(kExitRow));
        }
    }
    if (reds != 1)
        throw EvalError("InvalidPlacement", "expected exactly one red car, got " +
                                                std::to_string(reds));
    return grid;
}

std::string move_chain(const std::string& get_arg, const std::string& move_args,
                       const std::string& tell_arg, const std::string& rest,
                       RushVariant v) {
    std::string s;
    if (v == RushVariant::GL) {
        s = "[get(" + get_arg + ") -> move(" + move_args + "), tell(" + tell_arg + ")]";
    } else {
        s = "get(" + get_arg + "); move(" + move_args + "); tell(" + tell_arg + ")";
    }
    return s + "; " + rest;
}

std::string branch(const std::string& cond, const std::string& body) {
    return "( " + cond + " -> ( " + body + " ) )";
}

void emit_proc(std::ostringstream& os, const std::string& head,
               const std::vector<std::string>& branches) {
    os << "proc " << head << " =\n    " << branches[0];
    for (size_t i = 1; i < branches.size(); ++i) os << "\n  + " << branches[i];
    os << ".\n\n";
}

void emit_map(std::ostringstream& os, const std::string& name, int lo, int hi,
              int delta) {
    os << "map " << name << ": RCInt -> RCInt.\n";
    os << "eqn";
    for (int v = lo; v <= hi; ++v)
        os << " " << name << "(" << v << ")=" << (v + delta) << ".";
    os << "\n\n";
}

std::string vehicle_call(const VehicleSpec& v) {
    std::ostringstream os;
    if (v.color == "red") {
        os << "RedCar(" << v.col << ")";
        return os.str();
    }
    os << (v.orient == 'V' ? "V" : "H") << (v.length == 3 ? "Truck" : "Car") << "("
       << v.row << "," << v.col << "," << v.color << ")";
    return os.str();
}

}  // namespace

std::string rush_hour_source_for(const std::vector<VehicleSpec>& vehicles,
                                 RushVariant variant) {
    Cells grid = place_all(vehicles);

    std::ostringstream os;
    os << "// rush hour board:";
    for (const auto& v : vehicles) os << " " << v.display();
    os << "\n\n";
    os << "eset RCInt = {1..6}.\n";
    os << "eset Colors = {red, purple, green, orange, blue, yellow";
    std::vector<std::string> extra;
    for (const auto& v : vehicles) {
        static const char* std_colors[] = {"red", "purple", "green",
                                           "orange", "blue", "yellow"};
        bool known = false;
        for (const char* s : std_colors) known = known || v.color == s;
        if (!known && std::find(extra.begin(), extra.end(), v.color) == extra.end())
            extra.push_back(v.color);
    }
    std::sort(extra.begin(), extra.end());
    for (const auto& c : extra) os << ", " << c;
    os << "}.\n\n";

    emit_map(os, "pred", 2, 6, -1);
    emit_map(os, "succ", 1, 5, +1);
    emit_map(os, "down_truck", 1, 3, +3);
    emit_map(os, "down_car", 1, 4, +2);
    emit_map(os, "right_truck", 1, 3, +3);
    emit_map(os, "right_car", 1, 4, +2);

    os << "gprim move.\n\n";

    emit_proc(os, "VTruck(r: RCInt, c: RCInt, p: Colors)",
              {branch("(r>1 & r<5)",
                      move_chain("free(pred(r),c)", "p,pred(r),c",
                                 "free(succ(succ(r)),c)", "VTruck(pred(r),c,p)",
                                 variant)),
               branch("(r<4)",
                      move_chain("free(down_truck(r),c)", "p,succ(r),c", "free(r,c)",
                                 "VTruck(succ(r),c,p)", variant))});
    emit_proc(os, "VCar(r: RCInt, c: RCInt, p: Colors)",
              {branch("(r>1)",
                      move_chain("free(pred(r),c)", "p,pred(r),c", "free(succ(r),c)",
                                 "VCar(pred(r),c,p)", variant)),
               branch("(r<5)",
                      move_chain("free(down_car(r),c)", "p,succ(r),c", "free(r,c)",
                                 "VCar(succ(r),c,p)", variant))});
    emit_proc(os, "HTruck(r: RCInt, c: RCInt, p: Colors)",
              {branch("(c>1 & c<5)",
                      move_chain("free(r,pred(c))", "p,r,pred(c)",
                                 "free(r,succ(succ(c)))", "HTruck(r,pred(c),p)",
                                 variant)),
               branch("(c<4)",
                      move_chain("free(r,right_truck(c))", "p,r,succ(c)", "free(r,c)",
                                 "HTruck(r,succ(c),p)", variant))});
    emit_proc(os, "HCar(r: RCInt, c: RCInt, p: Colors)",
              {branch("(c>1)",
                      move_chain("free(r,pred(c))", "p,r,pred(c)", "free(r,succ(c))",
                                 "HCar(r,pred(c),p)", variant)),
               branch("(c<5)",
                      move_chain("free(r,right_car(c))", "p,r,succ(c)", "free(r,c)",
                                 "HCar(r,succ(c),p)", variant))});
    // The exit branch also tells out, which the reach formula counts, so
    // it stays a plain sequence in both variants.
    emit_proc(os, "RedCar(c: RCInt)",
              {branch("(c>1)",
                      move_chain("free(3,pred(c))", "red,3,pred(c)", "free(3,succ(c))",
                                 "RedCar(pred(c))", variant)),
               branch("(c<4)",
                      move_chain("free(3,right_car(c))", "red,3,succ(c)", "free(3,c)",
                                 "RedCar(succ(c))", variant)),
               branch("(c=4)",
                      "get(free(3,right_car(c))); move(red,3,succ(c)); "
                      "tell(free(3,c)); tell(out)")});

    os << "formula solved = Reach(#out=1).\n\n";

    std::vector<std::string> tells;
    for (int r = 1; r <= kBoardSize; ++r)
        for (int c = 1; c <= kBoardSize; ++c)
            if (grid.at[r][c] == -1)
                tells.push_back("tell(free(" + std::to_string(r) + "," +
                                std::to_string(c) + "))");

    os << "main =\n";
    if (variant == RushVariant::GL && tells.size() >= 2) {
        os << "    [ " << tells[0] << " ->\n";
        for (size_t i = 1; i < tells.size(); ++i) {
            if ((i - 1) % 4 == 0) os << "      ";
            os << tells[i];
            if (i + 1 < tells.size()) os << ", ";
            if (i % 4 == 0 || i + 1 == tells.size()) os << "\n";
        }
        os << "    ];\n";
    } else {
        for (size_t i = 0; i < tells.size(); ++i) {
            if (i % 4 == 0) os << "    ";
            os << tells[i] << ";";
            if (i % 4 == 3 || i + 1 == tells.size()) os << "\n";
            else os << " ";
        }
    }
    os << "    ( ";
    for (size_t i = 0; i < vehicles.size(); ++i) {
        if (i) os << " || ";
        os << vehicle_call(vehicles[i]);
    }
    os << " ).\n";
    return os.str();
}

std::string rush_hour_source(int case_id, RushVariant variant) {
    return rush_hour_source_for(rush_hour_case(case_id), variant);
}

Program generate_rush_hour(int case_id, RushVariant variant) {
    std::string src = rush_hour_source(case_id, variant);
    ParseResult pr = parse_program(src);
    if (!pr.ok()) {
        std::string msg = "generated rush hour program is ill-formed";
        for (const auto& d : pr.diagnostics)
            if (d.severity == Severity::Error) {
                msg += ": " + d.to_string();
                break;
            }
        throw std::logic_error(msg);
    }
    return std::move(*pr.program);
}

std::vector<MoveEvent> extract_moves(const Program& prog, const Trace& trace) {
    std::vector<MoveEvent> out;
    const TermArena& arena = prog.arena();
    for (const TraceStep& st : trace.steps) {
        for (const FiredPrim& fp : st.label.fired) {
            if (fp.kind != PrimKind::Graphical) continue;
            const TermNode& n = arena.node(fp.term);
            if (n.kind != TermKind::Compound || n.name != "move" ||
                n.args.size() != 3)
                continue;
            const TermNode& a0 = arena.node(n.args[0]);
            const TermNode& a1 = arena.node(n.args[1]);
            const TermNode& a2 = arena.node(n.args[2]);
            if (a0.kind != TermKind::Token || a1.kind != TermKind::Int ||
                a2.kind != TermKind::Int)
                continue;
            out.push_back({a0.name, int(a1.num), int(a2.num)});
        }
    }
    return out;
}

namespace {

bool fail_why(std::string* why, const std::string& msg) {
    if (why) *why = msg;
    return false;
}

}  // namespace

bool validate_moves(const std::vector<VehicleSpec>& vehicles,
                    const std::vector<MoveEvent>& moves, std::string* why) {
    std::vector<VehicleSpec> state = vehicles;
    Cells grid = place_all(state);

    for (size_t k = 0; k < moves.size(); ++k) {
        const MoveEvent& mv = moves[k];
        int chosen = -1;
        for (size_t i = 0; i < state.size(); ++i) {
            const VehicleSpec& v = state[i];
            if (v.color != mv.color) continue;
            bool axis_ok = v.orient == 'H' ? (mv.row == v.row &&
                                              std::abs(mv.col - v.col) == 1)
                                           : (mv.col == v.col &&
                                              std::abs(mv.row - v.row) == 1);
            if (!axis_ok) continue;
            int er, ec;  // the single newly entered cell
            if (v.orient == 'H')
                er = v.row, ec = mv.col > v.col ? v.col + v.length : mv.col;
            else
                ec = v.col, er = mv.row > v.row ? v.row + v.length : mv.row;
            if (er < 1 || er > kBoardSize || ec < 1 || ec > kBoardSize) continue;
            if (grid.at[er][ec] != -1) continue;
            if (chosen != -1)
                return fail_why(why, "move " + std::to_string(k + 1) +
                                         " is ambiguous between vehicles");
            chosen = int(i);
        }
        if (chosen == -1)
            return fail_why(why, "move " + std::to_string(k + 1) + " (" + mv.color +
                                     " to " + std::to_string(mv.row) + "," +
                                     std::to_string(mv.col) +
                                     ") matches no legal vehicle move");
        VehicleSpec& v = state[chosen];
        for (auto [r, c] : cells_of(v)) grid.at[r][c] = -1;
        v.row = mv.row;
        v.col = mv.col;
        for (auto [r, c] : cells_of(v)) grid.at[r][c] = chosen;
    }

    for (const auto& v : state)
        if (v.color == "red") {
            if (v.col + v.length - 1 != kBoardSize)
                return fail_why(why, "red car finishes at column " +
                                         std::to_string(v.col) +
                                         ", short of the exit");
            return true;
        }
    return fail_why(why, "no red car on the board");
}

bool validate_solution(const Program& prog, const Trace& trace, int case_id,
                       std::string* why) {
    return validate_moves(rush_hour_case(case_id), extract_moves(prog, trace), why);
}

const BenchCell* BenchReport::find(int case_id, RushVariant v) const {
    for (const auto& c : cells)
        if (c.case_id == case_id && c.variant == v) return &c;
    return nullptr;
}

namespace {

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n % 2) return xs[n / 2];
    return (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

}  // namespace

BenchReport run_benchmark_cells(const std::vector<std::pair<int, RushVariant>>& cells,
                                const Limits& limits, int repeats) {
    if (repeats < 1) repeats = 1;
    BenchReport rep;
    for (auto [cid, var] : cells) {
        Program prog = generate_rush_hour(cid, var);
        const NamedFormula* nf = prog.find_formula("solved");
        if (!nf) throw std::logic_error("generated program lacks its formula");

        BenchCell cell;
        cell.case_id = cid;
        cell.variant = var;
        std::vector<double> times;
        CheckResult first;
        for (int k = 0; k < repeats; ++k) {
            CheckResult r = check(prog, nf->formula, limits);
            times.push_back(r.stats.wall_ms);
            if (k == 0) first = std::move(r);
        }
        cell.verdict = first.verdict.kind;
        cell.reason = first.verdict.reason;
        cell.stats = first.stats;
        cell.wall_ms = median_of(times);
        if (first.verdict.kind == VerdictKind::Holds) {
            cell.has_witness = true;
            const Trace& w = first.verdict.witness;
            cell.witness_len = int64_t(w.steps.size());
            cell.witness_text = trace_to_text(w, prog.arena());
            ReplayResult rr = replay(w, prog);
            if (!rr.ok) {
                cell.witness_valid = false;
                cell.reason = "witness replay failed at step " +
                              std::to_string(rr.step_index) + ": " + rr.reason;
            } else {
                std::string oracle_why;
                cell.witness_valid = validate_solution(prog, w, cid, &oracle_why);
                if (!cell.witness_valid) cell.reason = oracle_why;
            }
        }
        rep.cells.push_back(std::move(cell));
    }
    return rep;
}

BenchReport run_benchmark(const std::vector<int>& cases, const Limits& limits,
                          int repeats) {
    std::vector<std::pair<int, RushVariant>> cells;
    for (int cid : cases) {
        cells.emplace_back(cid, RushVariant::NoGL);
        cells.emplace_back(cid, RushVariant::GL);
    }
    return run_benchmark_cells(cells, limits, repeats);
}

std::vector<std::pair<int, RushVariant>> default_bench_cells() {
    std::vector<std::pair<int, RushVariant>> cells;
    for (int cid = 1; cid <= 3; ++cid) {
        cells.emplace_back(cid, RushVariant::NoGL);
        cells.emplace_back(cid, RushVariant::GL);
    }
    cells.emplace_back(4, RushVariant::GL);
    cells.emplace_back(5, RushVariant::GL);
    return cells;
}

std::string BenchReport::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(5) << "case" << std::setw(9) << "variant"
       << std::setw(19) << "verdict" << std::right << std::setw(12) << "states"
       << std::setw(12) << "wall_ms" << std::setw(9) << "witness" << "\n";
    for (const auto& c : cells) {
        os << std::left << std::setw(5) << c.case_id << std::setw(9)
           << rush_variant_name(c.variant) << std::setw(19)
           << verdict_kind_name(c.verdict) << std::right << std::setw(12)
           << c.stats.states_expanded << std::setw(12) << fixed3(c.wall_ms)
           << std::setw(9) << c.witness_len << "\n";
    }

    std::vector<int> seen;
    for (const auto& c : cells)
        if (std::find(seen.begin(), seen.end(), c.case_id) == seen.end())
            seen.push_back(c.case_id);
    for (int cid : seen) {
        const BenchCell* plain = find(cid, RushVariant::NoGL);
        const BenchCell* guarded = find(cid, RushVariant::GL);
        if (!plain || !guarded) continue;
        size_t vehicles = rush_hour_case(cid).size();
        os << "case " << cid << ": expected gain " << (uint64_t(1) << vehicles)
           << " (" << vehicles << " vehicles)";
        if (plain->verdict != VerdictKind::Unknown &&
            guarded->verdict != VerdictKind::Unknown) {
            double t = guarded->wall_ms > 0.0 ? plain->wall_ms / guarded->wall_ms
                                              : 0.0;
            double s = guarded->stats.states_expanded
                           ? double(plain->stats.states_expanded) /
                                 double(guarded->stats.states_expanded)
                           : 0.0;
            os << ", speedup " << fixed2(t) << ", state ratio " << fixed2(s);
        } else {
            os << ", ratios unavailable (incomplete cell)";
        }
        os << "\n";
    }

    for (const auto& c : cells) {
        os << "\n";
        os << "case: " << c.case_id << "\n";
        os << "variant: " << rush_variant_name(c.variant) << "\n";
        os << "verdict: " << verdict_kind_name(c.verdict) << "\n";
        if (!c.reason.empty()) os << "reason: " << c.reason << "\n";
        os << "states_expanded: " << c.stats.states_expanded << "\n";
        os << "states_discovered: " << c.stats.states_discovered << "\n";
        os << "max_frontier: " << c.stats.max_frontier << "\n";
        os << "wall_ms: " << fixed3(c.wall_ms) << "\n";
        os << "witness_len: " << c.witness_len << "\n";
        if (c.has_witness)
            os << "witness_valid: " << (c.witness_valid ? "true" : "false") << "\n";
    }
    return os.str();
}

}  // namespace gbach
