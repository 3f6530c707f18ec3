#include "mnasm/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mnasm/contig.hpp"
#include "mnasm/genome_io.hpp"

namespace mnasm {

namespace fs = std::filesystem;

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    if (key == "k") k = static_cast<unsigned>(std::stoul(value));
    else if (key == "batch_fraction") batch_fraction = std::stod(value);
    else if (key == "coverage") coverage = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "read_len") read_len = static_cast<unsigned>(std::stoul(value));
    else if (key == "min_count") min_count = std::stoull(value);
    else if (key == "reads") reads_path = value;
    else if (key == "genome") genome_path = value;
    else if (key == "synthetic_len") synthetic_len = std::stoull(value);
    else if (key == "out") out_dir = value;
    else sim.apply_kv(key, value);
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno) +
                                     " of " + path);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            auto b2 = s.find_first_not_of(" \t");
            auto e2 = s.find_last_not_of(" \t");
            s = (b2 == std::string::npos) ? "" : s.substr(b2, e2 - b2 + 1);
        };
        trim(key);
        trim(val);
        apply_kv(key, val);
    }
}

void RunConfig::validate() const {
    if (k < 3 || k > 32) throw std::invalid_argument("k must be in [3,32]");
    if (!(batch_fraction > 0.0) || batch_fraction > 1.0)
        throw std::invalid_argument("batch_fraction must be in (0,1]");
    if (read_len < k) throw std::invalid_argument("read_len must be >= k");
}

namespace {

struct Input {
    std::vector<Read> reads;
    std::string genome;  // empty when reads came from a file without a reference
};

Input load_input(const RunConfig& rc, const std::string& out_dir) {
    Input in;
    if (!rc.reads_path.empty()) {
        std::string ext = fs::path(rc.reads_path).extension().string();
        ReadSet rs = (ext == ".fq" || ext == ".fastq") ? read_fastq(rc.reads_path)
                                                       : read_fasta(rc.reads_path);
        in.reads = std::move(rs.reads);
        if (!rc.genome_path.empty()) {
            ReadSet g = read_fasta(rc.genome_path);
            if (g.reads.empty()) throw std::runtime_error("reference " + rc.genome_path + " is empty");
            in.genome = g.reads.front().bases;
        }
        return in;
    }
    if (!rc.genome_path.empty()) {
        ReadSet g = read_fasta(rc.genome_path);
        if (g.reads.empty()) throw std::runtime_error("reference " + rc.genome_path + " is empty");
        in.genome = g.reads.front().bases;
    } else if (rc.synthetic_len > 0) {
        in.genome = random_genome(rc.synthetic_len, rc.seed);
        write_fasta({Contig{"synthetic", in.genome}}, out_dir + "/genome.fasta");
    } else {
        throw std::runtime_error("no input: give --reads, --genome or --synthetic-len");
    }
    in.reads = simulate_reads(in.genome, rc.read_len, rc.coverage, rc.seed);
    return in;
}

void write_assembly_stats(const std::string& path, const AssemblyStats& st) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "contig_count=" << st.contig_count << '\n';
    f << "total_bases=" << st.total_bases << '\n';
    f << "n50=" << st.n50 << '\n';
    if (st.has_reference) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", st.genome_coverage);
        f << "genome_coverage=" << buf << '\n';
    }
}

void write_compaction_log(const std::string& path, const BatchReports& reports) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "# batch iteration candidates transfers nodes_remaining bytes_live\n";
    for (std::size_t b = 0; b < reports.per_batch.size(); ++b)
        for (const auto& r : reports.per_batch[b])
            f << b << ' ' << r.iteration << ' ' << r.candidates << ' ' << r.transfers_emitted
              << ' ' << r.nodes_remaining << ' ' << r.bytes_live << '\n';
    for (const auto& r : reports.merged)
        f << "merged " << r.iteration << ' ' << r.candidates << ' ' << r.transfers_emitted << ' '
          << r.nodes_remaining << ' ' << r.bytes_live << '\n';
}

}  // namespace

int cmd_assemble(const RunConfig& rc) {
    try {
        rc.validate();
        fs::create_directories(rc.out_dir);
        Input in = load_input(rc, rc.out_dir);
        AssemblyResult res = assemble_reads(in.reads, rc.k, rc.batch_fraction,
                                            rc.sim.cpu_threshold, rc.min_count);
        write_fasta(res.contigs, rc.out_dir + "/contigs.fasta");
        AssemblyStats st = compute_stats(
            res.contigs, in.genome.empty()
                             ? std::nullopt
                             : std::optional<std::string_view>(std::string_view(in.genome)));
        write_assembly_stats(rc.out_dir + "/assembly_stats.txt", st);
        write_compaction_log(rc.out_dir + "/compaction.log", res.reports);
        std::cout << "contigs=" << st.contig_count << " total_bases=" << st.total_bases
                  << " n50=" << st.n50;
        if (st.has_reference) std::cout << " coverage=" << st.genome_coverage;
        std::cout << '\n';
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "assemble: " << ex.what() << '\n';
        return 1;
    }
}

int cmd_trace(const RunConfig& rc) {
    try {
        rc.validate();
        fs::create_directories(rc.out_dir);
        Input in = load_input(rc, rc.out_dir);

        KmerExtraction ext = extract_kmers(in.reads, rc.k);
        std::vector<KmerCount> counts =
            filter_counts(count_kmers(std::move(ext.kmers)), rc.min_count);
        BoundaryCensus census = boundary_census(in.reads, rc.k);
        PakGraph graph = build_macronodes(counts, census, rc.k);

        Placement placement = build_placement(graph, rc.sim);
        CompactionLog log;
        run_to_fixpoint(graph, graph.nodes.size() + 1, rc.sim.cpu_threshold, &log);

        for (SimMode mode : {SimMode::nmp, SimMode::cpu_baseline, SimMode::ideal_pe,
                             SimMode::ideal_forwarding}) {
            std::vector<TraceRecord> trace = gen_trace(log, placement, mode);
            std::string path = rc.out_dir + "/" + mode_name(mode) + ".trace";
            write_trace(path, trace);
            write_placement(path + ".place", placement);
            std::cout << mode_name(mode) << ": " << trace.size() << " records\n";
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "trace: " << ex.what() << '\n';
        return 1;
    }
}

int cmd_simulate(const RunConfig& rc, const std::string& trace_path, const std::string& mode,
                 const std::string& baseline_stats_path) {
    try {
        fs::create_directories(rc.out_dir);
        SimConfig cfg = rc.sim;
        cfg.mode = mode_from_name(mode);
        std::vector<TraceRecord> trace = read_trace(trace_path, cfg.workers);
        Placement placement = read_placement(trace_path + ".place");
        SimStats st = simulate(trace, cfg, placement);
        std::string out = rc.out_dir + "/stats_" + mode + ".txt";
        write_stats(out, st);
        std::cout << "mode=" << mode << " total_cycles=" << st.total_cycles
                  << " read_bytes=" << st.read_bytes << " write_bytes=" << st.write_bytes
                  << " utilization=" << st.bandwidth_utilization << '\n';
        if (!baseline_stats_path.empty()) {
            SimStats base = read_stats(baseline_stats_path);
            ComparisonReport rep = report_stats(st, base);
            std::ofstream f(rc.out_dir + "/report_" + mode + ".txt");
            auto line = [&](const std::string& key, double v) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f", v);
                f << key << '=' << buf << '\n';
                std::cout << key << '=' << buf << '\n';
            };
            line("speedup", rep.speedup);
            line("norm_reads", rep.norm_reads);
            line("norm_writes", rep.norm_writes);
            line("utilization", rep.mode_utilization);
            line("baseline_utilization", rep.baseline_utilization);
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "simulate: " << ex.what() << '\n';
        return 1;
    }
}

int cmd_sweep(const RunConfig& rc, const std::string& trace_path,
              const std::vector<unsigned>& pe_counts) {
    try {
        fs::create_directories(rc.out_dir);
        std::vector<TraceRecord> trace = read_trace(trace_path, rc.sim.workers);
        Placement placement = read_placement(trace_path + ".place");
        auto sweep = sweep_pes(trace, rc.sim, placement, pe_counts);
        int sat = saturation_index(sweep);
        std::ofstream f(rc.out_dir + "/sweep.txt");
        f << "# pe_count total_cycles speedup_vs_first\n";
        std::cout << "pe_count total_cycles speedup\n";
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            double sp = sweep[i].second ? double(sweep.front().second) / sweep[i].second : 0.0;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", sp);
            f << sweep[i].first << ' ' << sweep[i].second << ' ' << buf;
            std::cout << sweep[i].first << ' ' << sweep[i].second << ' ' << buf;
            if (sat >= 0 && static_cast<std::size_t>(sat) == i) {
                f << " saturation";
                std::cout << " saturation";
            }
            f << '\n';
            std::cout << '\n';
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "sweep: " << ex.what() << '\n';
        return 1;
    }
}

int cmd_report(const std::string& stats_path, const std::string& baseline_stats_path) {
    try {
        SimStats st = read_stats(stats_path);
        SimStats base = read_stats(baseline_stats_path);
        ComparisonReport rep = report_stats(st, base);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", rep.speedup);
        std::cout << "speedup=" << buf << '\n';
        std::snprintf(buf, sizeof buf, "%.6f", rep.norm_reads);
        std::cout << "norm_reads=" << buf << '\n';
        std::snprintf(buf, sizeof buf, "%.6f", rep.norm_writes);
        std::cout << "norm_writes=" << buf << '\n';
        std::snprintf(buf, sizeof buf, "%.6f", rep.mode_utilization);
        std::cout << "utilization=" << buf << '\n';
        std::snprintf(buf, sizeof buf, "%.6f", rep.baseline_utilization);
        std::cout << "baseline_utilization=" << buf << '\n';
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "report: " << ex.what() << '\n';
        return 1;
    }
}

}  // namespace mnasm
