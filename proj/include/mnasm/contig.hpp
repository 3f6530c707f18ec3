#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mnasm/compaction.hpp"
#include "mnasm/pak_graph.hpp"

namespace mnasm {

struct BatchPlan {
    double fraction = 1.0;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end) read indices
};

// ceil(1/fraction) contiguous ranges partitioning [0, num_reads); the last
// range absorbs the remainder. fraction must be in (0, 1].
BatchPlan plan_batches(std::size_t num_reads, double fraction);

// Merges graphs over the same k: nodes sharing a key get their extension
// lists combined (identical seq/terminal entries summed, canonical order)
// and are re-wired; single-owner nodes are copied untouched. Contig side
// channels concatenate. The result is valid input for further compaction.
PakGraph merge_graphs(const std::vector<PakGraph>& graphs);

// Deterministic flow-consuming walk. Every wired pair with a terminal
// prefix seeds walks until its flow is spent; each step follows the
// highest-remaining wired pair whose prefix spells the incoming edge.
// The completed-contig side channel is emitted verbatim ahead of the walk
// output; duplicate walk strings are collapsed; contigs shorter than k-1
// are dropped.
std::vector<Contig> walk_contigs(const PakGraph& graph);

// Smallest length such that contigs at least that long cover half the total
// assembly. Throws on an empty set.
std::size_t n50(const std::vector<std::size_t>& lengths);

struct AssemblyStats {
    std::size_t contig_count = 0;
    std::size_t total_bases = 0;
    std::size_t n50 = 0;
    double genome_coverage = 0.0;  // meaningful only when a reference was supplied
    bool has_reference = false;
};

// Coverage marks every occurrence of every contig in the reference.
AssemblyStats compute_stats(const std::vector<Contig>& contigs,
                            std::optional<std::string_view> genome);

struct BatchReports {
    std::vector<std::vector<IterationReport>> per_batch;
    std::vector<IterationReport> merged;  // re-compaction of the merged graph
};

struct AssemblyResult {
    PakGraph graph;
    std::vector<Contig> contigs;
    BatchReports reports;
};

// Full pipeline: split reads into batches, compact each, merge, re-compact,
// walk. size_threshold > 0 engages the per-iteration hybrid partition;
// min_count > 1 prunes rare k-mers before node construction.
AssemblyResult assemble_reads(const std::vector<Read>& reads, unsigned k, double batch_fraction,
                              std::uint32_t size_threshold = 0, std::uint64_t min_count = 1);

}  // namespace mnasm
