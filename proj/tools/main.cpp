// Command-line front end: assemble reads into contigs, generate memory
// traces from a compaction run, replay them through the timing model,
// sweep PE counts and compare stats against a baseline.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mnasm/cli.hpp"

using namespace mnasm;

int main(int argc, char** argv) {
    RunConfig rc;

    // The config file loads before flag parsing so flags win.
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        std::string path;
        if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
        if (!path.empty()) {
            try {
                rc.apply_file(path);
            } catch (const std::exception& ex) {
                std::cerr << ex.what() << '\n';
                return 1;
            }
        }
    }

    CLI::App app{"MacroNode assembler and near-memory trace simulator"};
    app.require_subcommand(1);
    std::vector<std::string> extra_kv;
    std::string config_dummy;
    app.add_option("--config", config_dummy, "key=value config file (flags override it)");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--k", rc.k, "k-mer size (3..32)");
        cmd->add_option("--batch-fraction", rc.batch_fraction, "reads per batch as a fraction");
        cmd->add_option("--coverage", rc.coverage, "synthetic sequencing depth");
        cmd->add_option("--seed", rc.seed, "seed for all randomness");
        cmd->add_option("--read-len", rc.read_len, "synthetic read length");
        cmd->add_option("--reads", rc.reads_path, "input reads (FASTA/FASTQ)");
        cmd->add_option("--genome", rc.genome_path, "reference FASTA to sample reads from");
        cmd->add_option("--synthetic-len", rc.synthetic_len, "generate a random genome this long");
        cmd->add_option("--out", rc.out_dir, "output directory");
        cmd->add_option("--channels", rc.sim.channels, "memory channels");
        cmd->add_option("--pes-per-channel", rc.sim.pes_per_channel, "PEs per DIMM buffer chip");
        cmd->add_option("--cpu-threshold", rc.sim.cpu_threshold,
                        "bytes above which a node runs on the CPU side (0 disables)");
        cmd->add_option("--min-count", rc.min_count, "drop k-mers seen fewer times than this");
        cmd->add_option("--set", extra_kv,
                        "extra key=value assignment (any config key; wins over other flags)");
        cmd->add_option("--workers", rc.sim.workers, "worker threads for parsing/aggregation");
        cmd->add_option("--config", config_dummy, "key=value config file (flags override it)");
    };

    CLI::App* assemble = app.add_subcommand("assemble", "run the assembly pipeline");
    add_common(assemble);

    CLI::App* trace = app.add_subcommand("trace", "emit memory traces for all simulator modes");
    add_common(trace);

    std::string trace_path, mode = "nmp", baseline_stats;
    CLI::App* simulate = app.add_subcommand("simulate", "replay a trace through the timing model");
    add_common(simulate);
    simulate->add_option("--trace", trace_path, "trace file")->required();
    simulate->add_option("--mode", mode, "nmp | cpu_baseline | ideal_pe | ideal_forwarding");
    simulate->add_option("--baseline", baseline_stats, "baseline stats file for a comparison report");

    std::string pe_list = "1,2,4,8,16,32,64";
    CLI::App* sweep = app.add_subcommand("sweep", "simulate across PE counts");
    add_common(sweep);
    sweep->add_option("--trace", trace_path, "trace file")->required();
    sweep->add_option("--pe-counts", pe_list, "comma-separated PE counts, ascending");

    std::string stats_path;
    CLI::App* report = app.add_subcommand("report", "normalize one stats file against another");
    report->add_option("--stats", stats_path, "stats file")->required();
    report->add_option("--baseline", baseline_stats, "baseline stats file")->required();

    CLI11_PARSE(app, argc, argv);

    for (const std::string& kv : extra_kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "--set expects key=value, got: " << kv << '\n';
            return 1;
        }
        try {
            rc.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
        } catch (const std::exception& ex) {
            std::cerr << ex.what() << '\n';
            return 1;
        }
    }

    if (assemble->parsed()) return cmd_assemble(rc);
    if (trace->parsed()) return cmd_trace(rc);
    if (simulate->parsed()) return cmd_simulate(rc, trace_path, mode, baseline_stats);
    if (sweep->parsed()) {
        std::vector<unsigned> counts;
        std::string tok;
        for (char c : pe_list + ",") {
            if (c == ',') {
                if (!tok.empty()) counts.push_back(static_cast<unsigned>(std::stoul(tok)));
                tok.clear();
            } else {
                tok += c;
            }
        }
        return cmd_sweep(rc, trace_path, counts);
    }
    if (report->parsed()) return cmd_report(stats_path, baseline_stats);
    return 1;
}
