#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mnasm/kmer.hpp"

namespace mnasm {

// One prefix or suffix slot of a MacroNode. `seq` holds plain bases and
// grows as neighboring nodes are folded in during compaction. A freshly
// built terminal entry has an empty seq; a terminal entry that absorbed a
// path keeps the absorbed bases and simply stops extending the graph.
struct Extension {
    std::string seq;
    std::uint32_t count = 0;
    bool terminal = false;

    bool operator==(const Extension& o) const {
        return seq == o.seq && count == o.count && terminal == o.terminal;
    }
};

// Pairing of prefix flow to suffix flow inside one node. Indices address
// the node's prefix/suffix vectors; counts conserve the per-extension flow.
struct WireEntry {
    std::uint32_t prefix_idx = 0;
    std::uint32_t suffix_idx = 0;
    std::uint32_t count = 0;
};

struct MacroNode {
    PackedKmer km1;
    std::vector<Extension> prefixes;
    std::vector<Extension> suffixes;
    std::vector<WireEntry> wiring;
    bool valid = true;
};

struct PakGraph {
    unsigned k = 0;
    std::map<std::uint64_t, MacroNode> nodes;  // keyed by packed (k-1)-mer bits
    std::vector<std::string> completed;        // contig side channel

    std::size_t valid_count() const;
    std::uint64_t live_bytes() const;
};

enum class Direction { predecessor, successor };

// Builds MacroNodes from counted k-mers: each k-mer contributes its first
// base as a prefix of the node keyed by its (k-1)-suffix and its last base
// as a suffix of the node keyed by its (k-1)-prefix. Read boundaries from
// the census balance the books with terminal entries. Every node is wired;
// an imbalance after census application throws (census/read mismatch).
PakGraph build_macronodes(const std::vector<KmerCount>& counts, const BoundaryCensus& census,
                          unsigned k);

// Greedy flow decomposition: repeatedly wires the largest remaining prefix
// to the largest remaining suffix (ties: non-terminal first, then seq
// ascending, then slot index). Produces at most |P|+|S|-1 entries and is
// deterministic. Throws on an unbalanced node.
void wire_macronode(MacroNode& node);

// Neighbor key reached through an extension: the successor is the last
// k-1 bases of km1.seq, the predecessor the first k-1 bases of seq.km1.
// Terminal extensions have no neighbor.
std::optional<PackedKmer> neighbor_of(const PackedKmer& km1, const Extension& ext, Direction dir,
                                      unsigned k);

// Serialized size used for the hybrid offload threshold and trace sizing:
// 16-byte header + 8-byte key + (2 + ceil(|seq|/4) + 4) per extension +
// 8 per wiring entry.
std::uint64_t node_byte_size(const MacroNode& node);
// Portion read by the invalidation check: header, key and extensions
// (everything except the wiring block).
std::uint64_t node_p1_bytes(const MacroNode& node);
std::uint64_t node_wiring_bytes(const MacroNode& node);
std::uint64_t extension_bytes(const Extension& e);

// Static table of ascending (k-1)-mer upper bounds, one per DIMM. Nodes are
// split into contiguous key ranges of near-equal counts; lookups binary
// search the bounds.
struct DimmMap {
    std::vector<std::uint64_t> boundaries;  // inclusive upper bounds, strictly ascending
};

DimmMap build_dimm_map(const PakGraph& graph, unsigned num_dimms);
unsigned lookup_dimm(const DimmMap& map, std::uint64_t key);

// Graph dump/load: "PAKG" header (magic, u32 k, u64 node count) followed by
// per-node records in the serialized layout behind node_byte_size.
// Extensions longer than 32767 bases do not fit the on-disk length field
// and make dump_graph throw.
std::string serialize_graph(const PakGraph& graph);
void dump_graph(const PakGraph& graph, const std::string& path);
PakGraph load_graph(const std::string& path);

}  // namespace mnasm
