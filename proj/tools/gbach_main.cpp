#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbach/bench.hpp"
#include "gbach/checker.hpp"
#include "gbach/diag.hpp"
#include "gbach/parser.hpp"
#include "gbach/refinement.hpp"
#include "gbach/semantics.hpp"

namespace fs = std::filesystem;
using namespace gbach;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnknown = 3;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return bool(out);
}

void print_diagnostics(const std::string& path, const std::vector<Diagnostic>& ds) {
    for (const auto& d : ds) std::cerr << path << ":" << d.to_string() << "\n";
}

int load_program(const std::string& path, Program& out) {
    std::optional<std::string> src = read_file(path);
    if (!src) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    ParseResult pr = parse_program(*src);
    print_diagnostics(path, pr.diagnostics);
    if (!pr.ok()) return kExitFailed;
    out = std::move(*pr.program);
    return kExitOk;
}

int cmd_parse(const std::string& path) {
    std::optional<std::string> src = read_file(path);
    if (!src) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    ParseResult pr = parse_program(*src);
    print_diagnostics(path, pr.diagnostics);
    size_t errors = 0;
    for (const auto& d : pr.diagnostics)
        if (d.severity == Severity::Error) ++errors;
    if (!pr.program && errors == 0) ++errors;
    std::cout << errors << " errors\n";
    return pr.ok() ? kExitOk : kExitFailed;
}

struct CheckArgs {
    std::string path;
    std::string formula;
    std::string init;
    std::string witness_path;
    std::string format = "text";
    uint64_t max_states = 0;
    uint64_t max_depth = 0;
    int workers = 1;
    uint64_t shuffle_seed = 0;
};

int resolve_formula(const Program& prog, const std::string& flag, TemporalPtr& out) {
    if (flag.empty()) {
        if (prog.formulas.size() == 1) {
            out = prog.formulas[0].formula;
            return kExitOk;
        }
        std::cerr << "error: program has " << prog.formulas.size()
                  << " formulas, pick one with -f\n";
        return kExitUsage;
    }
    if (const NamedFormula* nf = prog.find_formula(flag)) {
        out = nf->formula;
        return kExitOk;
    }
    // Not a declared name: accept inline formula text.
    Program& mut = const_cast<Program&>(prog);
    std::vector<Diagnostic> diags;
    TemporalPtr f = parse_formula_text(mut, flag, diags);
    if (!f) {
        std::cerr << "error: '" << flag << "' is neither a formula name nor a valid formula\n";
        print_diagnostics("<formula>", diags);
        return kExitUsage;
    }
    out = f;
    return kExitOk;
}

Limits make_limits(uint64_t max_states, uint64_t max_depth, int workers,
                   uint64_t shuffle_seed) {
    Limits lim;
    lim.max_states = max_states ? max_states : default_max_states();
    if (max_depth) lim.max_depth = max_depth;
    lim.workers = workers < 1 ? 1 : workers;
    lim.shuffle_seed = shuffle_seed;
    return lim;
}

int cmd_check(const CheckArgs& args) {
    Program prog;
    if (int rc = load_program(args.path, prog)) return rc;
    TemporalPtr f;
    if (int rc = resolve_formula(prog, args.formula, f)) return rc;

    Store initial;
    if (!args.init.empty()) {
        try {
            initial = parse_store_text(args.init, prog.arena());
        } catch (const EvalError& e) {
            std::cerr << "error: bad --init store: " << e.what() << "\n";
            return kExitUsage;
        }
    }

    Limits lim = make_limits(args.max_states, args.max_depth, args.workers,
                             args.shuffle_seed);
    CheckResult res;
    try {
        res = check_from(prog, f, initial, lim);
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return kExitUsage;
    }

    if (args.format == "structured") {
        std::cout << render_report(res);
    } else {
        std::cout << "verdict: " << verdict_kind_name(res.verdict.kind) << "\n";
        if (res.verdict.kind == VerdictKind::Unknown)
            std::cout << "reason: " << res.verdict.reason << "\n";
        std::cout << "states expanded " << res.stats.states_expanded << ", discovered "
                  << res.stats.states_discovered << ", max frontier "
                  << res.stats.max_frontier << ", wall " << res.stats.wall_ms
                  << " ms\n";
        if (res.verdict.kind == VerdictKind::Holds)
            std::cout << "witness: " << res.verdict.witness.steps.size() << " steps\n";
    }
    if (res.verdict.kind == VerdictKind::Holds && !args.witness_path.empty()) {
        if (!write_file(args.witness_path,
                        trace_to_text(res.verdict.witness, prog.arena()))) {
            std::cerr << "error: cannot write '" << args.witness_path << "'\n";
            return kExitUsage;
        }
    }
    switch (res.verdict.kind) {
        case VerdictKind::Holds: return kExitOk;
        case VerdictKind::RefutedExhaustive: return kExitFailed;
        case VerdictKind::Unknown: return kExitUnknown;
    }
    return kExitUsage;
}

struct RunArgs {
    std::string path;
    std::string init;
    uint64_t seed = 0;
    uint64_t max_steps = 1000;
};

int cmd_run(const RunArgs& args) {
    Program prog;
    if (int rc = load_program(args.path, prog)) return rc;
    Store store;
    if (!args.init.empty()) {
        try {
            store = parse_store_text(args.init, prog.arena());
        } catch (const EvalError& e) {
            std::cerr << "error: bad --init store: " << e.what() << "\n";
            return kExitUsage;
        }
    }

    std::mt19937_64 rng(args.seed);
    Trace trace;
    trace.initial = store;
    Config cfg{simplify(prog.main), store};
    std::string status = "stopped at step limit";
    try {
        for (uint64_t step = 0; step < args.max_steps; ++step) {
            if (cfg.agent->kind == Agent::Kind::End) {
                status = "terminated";
                break;
            }
            std::vector<Successor> succs = successors(cfg, prog);
            if (succs.empty()) {
                status = "stuck (no enabled primitive)";
                break;
            }
            size_t pick = succs.size() == 1
                              ? 0
                              : std::uniform_int_distribution<size_t>(
                                    0, succs.size() - 1)(rng);
            const Successor& s = succs[pick];
            TraceStep ts;
            ts.label = s.label;
            for (const auto& fp : s.label.fired) {
                if (fp.kind == PrimKind::Tell) ts.added.push_back(fp.term);
                if (fp.kind == PrimKind::Get) ts.removed.push_back(fp.term);
            }
            trace.steps.push_back(ts);
            cfg = s.config;
        }
    } catch (const EvalError& e) {
        std::cout << trace_to_text(trace, prog.arena());
        std::cerr << "runtime fault: " << e.code() << ": " << e.what() << "\n";
        return kExitFailed;
    }
    std::cout << trace_to_text(trace, prog.arena());
    std::cout << "final " << cfg.store.to_text(prog.arena()) << "\n";
    std::cout << status << "\n";
    return kExitOk;
}

struct TransformArgs {
    std::string path;
    std::string formula;
    std::string out_path;
    bool force = false;
    bool dry_run = false;
};

int cmd_transform(const TransformArgs& args) {
    Program prog;
    if (int rc = load_program(args.path, prog)) return rc;
    Program& mut = prog;
    std::vector<Diagnostic> diags;
    PropPtr F = parse_prop_text(mut, args.formula, diags);
    if (!F) {
        std::cerr << "error: -F formula does not parse\n";
        print_diagnostics("<formula>", diags);
        return kExitUsage;
    }
    TransformResult res = transform_to_guarded(prog, *F, args.force);
    std::cerr << res.report.to_text();
    if (!args.dry_run) {
        std::string text = print_program(res.program);
        if (args.out_path.empty()) {
            std::cout << text;
        } else if (!write_file(args.out_path, text)) {
            std::cerr << "error: cannot write '" << args.out_path << "'\n";
            return kExitUsage;
        }
    }
    return kExitOk;
}

struct BenchArgs {
    std::string cases;
    std::string export_dir;
    std::string out_path;
    int repeats = 3;
    uint64_t max_states = 0;
    uint64_t max_depth = 0;
};

int cmd_bench(const BenchArgs& args) {
    std::vector<std::pair<int, RushVariant>> cells;
    if (args.cases.empty()) {
        cells = default_bench_cells();
    } else {
        std::istringstream is(args.cases);
        std::string item;
        while (std::getline(is, item, ',')) {
            if (item.empty()) continue;
            int cid = 0;
            try {
                cid = std::stoi(item);
            } catch (...) {
                cid = 0;
            }
            if (cid < 1 || cid > rush_hour_case_count()) {
                std::cerr << "error: bad case id '" << item << "'\n";
                return kExitUsage;
            }
            cells.emplace_back(cid, RushVariant::NoGL);
            cells.emplace_back(cid, RushVariant::GL);
        }
        if (cells.empty()) {
            std::cerr << "error: --cases lists no cases\n";
            return kExitUsage;
        }
    }

    Limits lim = make_limits(args.max_states, args.max_depth, 1, 0);
    BenchReport rep = run_benchmark_cells(cells, lim, args.repeats);

    std::string text = rep.to_text();
    if (args.out_path.empty()) {
        std::cout << text;
    } else if (!write_file(args.out_path, text)) {
        std::cerr << "error: cannot write '" << args.out_path << "'\n";
        return kExitUsage;
    }

    if (!args.export_dir.empty()) {
        std::error_code ec;
        fs::create_directories(args.export_dir, ec);
        for (const auto& cell : rep.cells) {
            if (!cell.has_witness) continue;
            std::string name = "case" + std::to_string(cell.case_id) + "_" +
                               rush_variant_name(cell.variant) + ".trace";
            if (!write_file((fs::path(args.export_dir) / name).string(),
                            cell.witness_text)) {
                std::cerr << "error: cannot write trace for " << name << "\n";
                return kExitUsage;
            }
        }
    }

    bool all_ok = true;
    for (const auto& cell : rep.cells) {
        bool expected_unknown = cell.case_id == 6 && cell.variant == RushVariant::NoGL &&
                                cell.verdict == VerdictKind::Unknown;
        bool good = cell.verdict == VerdictKind::Holds && cell.witness_valid;
        if (!good && !expected_unknown) all_ok = false;
    }
    return all_ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coordination language interpreter, model checker and benchmark"};
    app.require_subcommand(1);

    std::string parse_path;
    CLI::App* parse_cmd = app.add_subcommand("parse", "parse a program and report diagnostics");
    parse_cmd->add_option("file", parse_path, "program file")->required();

    CheckArgs check_args;
    CLI::App* check_cmd = app.add_subcommand("check", "model-check a formula");
    check_cmd->add_option("file", check_args.path, "program file")->required();
    check_cmd->add_option("-f,--formula", check_args.formula,
                          "formula name from the file, or an inline formula");
    check_cmd->add_option("--init", check_args.init, "initial store, e.g. {a:1}");
    check_cmd->add_option("--witness", check_args.witness_path, "write the witness trace here");
    check_cmd->add_option("--max-states", check_args.max_states, "state budget");
    check_cmd->add_option("--max-depth", check_args.max_depth, "depth budget");
    check_cmd->add_option("--workers", check_args.workers, "successor worker threads");
    check_cmd->add_option("--shuffle-seed", check_args.shuffle_seed,
                          "shuffle successor order (0 keeps natural order)");
    check_cmd->add_option("--format", check_args.format, "text or structured")
        ->check(CLI::IsMember({"text", "structured"}));

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "one random execution with trace dump");
    run_cmd->add_option("file", run_args.path, "program file")->required();
    run_cmd->add_option("--seed", run_args.seed, "random choice seed");
    run_cmd->add_option("--max-steps", run_args.max_steps, "step budget");
    run_cmd->add_option("--init", run_args.init, "initial store");

    TransformArgs tr_args;
    CLI::App* tr_cmd = app.add_subcommand("transform", "introduce guarded lists");
    tr_cmd->add_option("file", tr_args.path, "program file")->required();
    tr_cmd->add_option("-F,--reach-formula", tr_args.formula,
                       "propositional formula whose reachability must survive")
        ->required();
    tr_cmd->add_flag("--force", tr_args.force, "wrap chains even when the distinctness test fails");
    tr_cmd->add_flag("--dry-run", tr_args.dry_run, "report sites only, write nothing");
    tr_cmd->add_option("-o,--out", tr_args.out_path, "output file (default stdout)");

    BenchArgs bench_args;
    CLI::App* bench_cmd = app.add_subcommand("bench", "rush hour benchmark");
    bench_cmd->add_option("--cases", bench_args.cases, "comma list, e.g. 1,2,3");
    bench_cmd->add_option("--repeats", bench_args.repeats, "timing repeats per cell");
    bench_cmd->add_option("--export-traces", bench_args.export_dir, "write witness traces here");
    bench_cmd->add_option("--max-states", bench_args.max_states, "state budget per cell");
    bench_cmd->add_option("--max-depth", bench_args.max_depth, "depth budget per cell");
    bench_cmd->add_option("-o,--out", bench_args.out_path, "report file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (parse_cmd->parsed()) return cmd_parse(parse_path);
        if (check_cmd->parsed()) return cmd_check(check_args);
        if (run_cmd->parsed()) return cmd_run(run_args);
        if (tr_cmd->parsed()) return cmd_transform(tr_args);
        if (bench_cmd->parsed()) return cmd_bench(bench_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
