#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mnasm/pak_graph.hpp"

namespace mnasm {

// Update message routed from an invalidated node to one of its neighbors.
// The payload is the opposite-side extension of a wired pair, and splices
// onto the destination's extension that points back through via_key.
struct TransferNode {
    std::uint64_t dest_key = 0;
    bool to_successor = false;  // false: to_predecessor
    std::uint64_t via_key = 0;  // the invalidated source node
    std::string payload_seq;
    std::uint32_t payload_count = 0;
    bool payload_terminal = false;
};

struct IterationReport {
    std::uint32_t iteration = 0;
    std::size_t candidates = 0;
    std::size_t transfers_emitted = 0;
    std::size_t nodes_remaining = 0;
    std::uint64_t bytes_live = 0;
};

// Size-threshold split of the live nodes; oversized ones go to the CPU
// side. The split steers scheduling (and the simulator) only: graph
// updates are identical for any partition.
struct SizePartition {
    std::vector<std::uint64_t> nmp_keys;
    std::vector<std::uint64_t> cpu_keys;
};

// Per-iteration memory-behavior record used by the trace generator.
struct TransferEvent {
    std::uint64_t src_key = 0;
    std::uint64_t dest_key = 0;
    std::uint32_t tn_bytes = 0;
    std::uint32_t dest_read_bytes = 0;
    std::uint32_t dest_write_bytes = 0;
};

// Per live node at iteration start: the slice the invalidation check reads
// (key + extensions) and the whole record (what a stage-sequential CPU
// pass pulls through the cache).
struct NodeReadEvent {
    std::uint64_t key = 0;
    std::uint32_t p1_bytes = 0;
    std::uint32_t full_bytes = 0;
};

struct IterationLog {
    std::vector<NodeReadEvent> p1_reads;                            // all live nodes
    std::vector<std::pair<std::uint64_t, std::uint32_t>> p2_reads;  // (key, wiring bytes) candidates
    std::vector<TransferEvent> transfers;
    IterationReport report;
};

using CompactionLog = std::vector<IterationLog>;

// Live nodes that are lexicographically larger than every neighbor, have at
// least one non-terminal neighbor and are not their own neighbor. Returned
// ascending; always an independent set of the neighbor graph.
std::vector<std::uint64_t> find_candidates(const PakGraph& graph);

// TransferNodes for one candidate, in wiring order: the prefix side of each
// wired pair is forwarded to the successor, the suffix side to the
// predecessor. A pair whose two sides are both terminal spells a finished
// contig, appended to `completed`.
std::vector<TransferNode> extract_transfers(const MacroNode& node, unsigned k,
                                            std::vector<std::string>& completed);

// Splices t's payload onto the destination extensions that point back at
// via_key, re-pointing wired flow onto the extended sequence until the
// payload count is exhausted. Throws if no flow routes back through
// via_key (graph corruption).
void apply_transfer(PakGraph& graph, const TransferNode& t);

// One compaction step: find candidates, extract all their transfers from
// the pre-iteration state, mark them invalid, then apply every transfer.
// Extraction reading only pre-iteration state is safe because candidates
// are never adjacent. `hybrid` and `log` are optional.
IterationReport run_iteration(PakGraph& graph, const SizePartition* hybrid = nullptr,
                              IterationLog* log = nullptr);

struct FixpointResult {
    std::vector<IterationReport> reports;
    bool fixpoint = false;  // false when max_iters ran out with candidates left
};

// Iterates until no candidates remain (or max_iters), then sweeps the
// deferred-deleted nodes out of the map. size_threshold > 0 recomputes the
// CPU/NMP partition every iteration.
FixpointResult run_to_fixpoint(PakGraph& graph, std::size_t max_iters,
                               std::uint32_t size_threshold = 0, CompactionLog* log = nullptr);

SizePartition partition_by_size(const PakGraph& graph, std::uint32_t threshold_bytes);

// Serialized size of a TransferNode: dest + via keys, payload extension and
// routing flags.
std::uint32_t transfer_bytes(const TransferNode& t);

}  // namespace mnasm
