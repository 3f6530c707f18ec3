#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mnasm/compaction.hpp"
#include "mnasm/pak_graph.hpp"

namespace mnasm {

enum class SimMode { nmp, cpu_baseline, ideal_pe, ideal_forwarding };

const char* mode_name(SimMode m);
SimMode mode_from_name(const std::string& s);

// P1..P3 tag pipeline traffic; B1..B3 and BW tag the CPU baseline's
// stage-sequential passes (three read passes, then the write pass).
enum class Stage { P1, P2, P3, B1, B2, B3, BW };

struct TraceRecord {
    bool write = false;
    std::uint32_t mn_idx = 0;
    std::uint64_t addr = 0;
    std::uint32_t bytes = 0;  // always one burst (64) per record
    Stage stage = Stage::P1;
    std::uint32_t iter = 0;
};

struct SimConfig {
    unsigned channels = 8;
    unsigned dimms_per_channel = 2;
    unsigned pes_per_channel = 16;  // PE array size per DIMM buffer chip
    unsigned banks_per_dimm = 16;
    double pe_clock_ghz = 1.6;      // reference clock all latencies are expressed in
    unsigned row_buffer = 8192;
    unsigned burst_bytes = 64;
    unsigned trcd = 22, tcl = 22, trp = 22;
    unsigned burst_cycles = 4;
    unsigned xbar_base = 1;                    // +ceil(bytes/32) serialization
    double bridge_cycles_per_byte = 0.064;     // 25 GB/s at the 1.6 GHz reference
    unsigned cpu_threshold = 1024;             // bytes; larger nodes go to the CPU side
    unsigned cpu_outstanding = 64;             // max in-flight CPU memory lines
    unsigned stage_alpha = 1, stage_beta = 4;  // stage cost = alpha*ceil(bytes/8)+beta
    unsigned workers = 1;
    SimMode mode = SimMode::nmp;

    unsigned num_dimms() const { return channels * dimms_per_channel; }
    // key=value lines; unknown keys are an error. Later assignments win.
    void apply_file(const std::string& path);
    void apply_kv(const std::string& key, const std::string& value);
};

enum class PlacementMode { range, uniform };

// Static node layout: ascending-key ranges per DIMM (range mode) or a
// seeded uniform assignment (uniform mode); PEs round-robin within a DIMM
// and addresses pack sequentially, 64-byte aligned.
struct Placement {
    std::vector<std::uint64_t> keys;  // mn_idx -> node key
    std::vector<std::uint32_t> dimm;  // mn_idx -> dimm
    std::vector<std::uint32_t> pe;    // mn_idx -> pe within dimm
    std::vector<std::uint64_t> addr;  // mn_idx -> base byte address
    std::unordered_map<std::uint64_t, std::uint32_t> rank;  // key -> mn_idx
    unsigned num_dimms = 0;
    unsigned pes_per_dimm = 0;
};

Placement build_placement(const PakGraph& graph, const SimConfig& cfg,
                          PlacementMode mode = PlacementMode::range, std::uint64_t seed = 0);
// Reassigns PEs as rank-within-DIMM modulo pe_count (used by the PE sweep).
Placement with_pe_count(const Placement& p, unsigned pe_count);

enum class RouteClass { same_pe, intra_dimm, inter_dimm };
RouteClass route_class(std::uint32_t src_idx, std::uint32_t dst_idx, const Placement& p);

// Expands a compaction log into memory traces. Every node access becomes
// ceil(bytes/64) records sharing mn_idx. For each candidate the trace lists
// its P2 group and then its transfers' P3 groups, so a reader can bind each
// P3 group to the most recent P2 group.
std::vector<TraceRecord> gen_trace(const CompactionLog& log, const Placement& placement,
                                   SimMode mode);

struct SimStats {
    SimMode mode = SimMode::nmp;
    std::uint64_t total_cycles = 0;  // completion of the last memory operation
    std::uint64_t read_bytes = 0;
    std::uint64_t write_bytes = 0;
    std::vector<std::uint64_t> per_channel_busy_cycles;  // data-bus occupancy
    std::vector<std::uint64_t> pe_busy_cycles;           // dimm * pes_per_dimm + pe
    std::uint64_t cpu_busy_cycles = 0;
    std::uint64_t transfers_same_pe = 0;
    std::uint64_t transfers_intra_dimm = 0;
    std::uint64_t transfers_inter_dimm = 0;
    std::uint64_t completed_records = 0;
    std::uint64_t barrier_violations = 0;
    double bandwidth_utilization = 0.0;
};

// Deterministic single-timeline discrete-event model: per-bank open-row
// FCFS in trace order, shared channel data bus, per-PE three-stage
// pipelines, per-DIMM crossbars, a shared inter-DIMM bridge and a
// window-limited CPU agent for baseline passes and oversized nodes.
SimStats simulate(const std::vector<TraceRecord>& trace, const SimConfig& cfg,
                  const Placement& placement);

std::vector<std::pair<unsigned, std::uint64_t>> sweep_pes(const std::vector<TraceRecord>& trace,
                                                          const SimConfig& cfg,
                                                          const Placement& placement,
                                                          const std::vector<unsigned>& pe_counts);
// First sweep entry whose marginal gain over the previous count is < 5%;
// -1 when none qualifies.
int saturation_index(const std::vector<std::pair<unsigned, std::uint64_t>>& sweep);

struct ComparisonReport {
    double speedup = 0.0;           // baseline cycles / mode cycles
    double norm_reads = 0.0;        // mode reads / baseline reads
    double norm_writes = 0.0;       // mode writes / baseline reads
    double mode_utilization = 0.0;
    double baseline_utilization = 0.0;
};

ComparisonReport report_stats(const SimStats& stats, const SimStats& baseline);

// Trace file: one "op mn_idx addr bytes stage iter" line per record.
void write_trace(const std::string& path, const std::vector<TraceRecord>& trace);
// Throws with the line number on malformed input. `workers` shards the
// parse; the result is identical for any worker count.
std::vector<TraceRecord> read_trace(const std::string& path, unsigned workers = 1);

// Placement sidecar ("mn_idx key dimm pe addr" lines) written next to
// traces so a simulation run can reconstruct the node layout.
void write_placement(const std::string& path, const Placement& p);
Placement read_placement(const std::string& path);

void write_stats(const std::string& path, const SimStats& stats);
SimStats read_stats(const std::string& path);

}  // namespace mnasm
