#include "mnasm/compaction.hpp"

#include <algorithm>
#include <stdexcept>

namespace mnasm {

namespace {

// Removes zero-count wiring and unreferenced zero-count extensions, then
// merges duplicate extensions and duplicate wired pairs so repeated
// deliveries keep the node in a canonical shape.
void normalize_node(MacroNode& node) {
    auto& wiring = node.wiring;
    wiring.erase(std::remove_if(wiring.begin(), wiring.end(),
                                [](const WireEntry& w) { return w.count == 0; }),
                 wiring.end());

    auto compact_side = [&](std::vector<Extension>& exts, bool prefix_side) {
        // Merge duplicates first so remapping happens once.
        std::vector<std::uint32_t> remap(exts.size());
        std::vector<Extension> merged;
        for (std::size_t i = 0; i < exts.size(); ++i) {
            const Extension& e = exts[i];
            bool found = false;
            for (std::size_t j = 0; j < merged.size(); ++j) {
                if (merged[j].terminal == e.terminal && merged[j].seq == e.seq) {
                    merged[j].count += e.count;
                    remap[i] = static_cast<std::uint32_t>(j);
                    found = true;
                    break;
                }
            }
            if (!found) {
                remap[i] = static_cast<std::uint32_t>(merged.size());
                merged.push_back(e);
            }
        }
        // Drop zero-count slots, remapping again.
        std::vector<std::uint32_t> remap2(merged.size());
        std::vector<Extension> live;
        for (std::size_t j = 0; j < merged.size(); ++j) {
            if (merged[j].count == 0) {
                remap2[j] = ~0u;
            } else {
                remap2[j] = static_cast<std::uint32_t>(live.size());
                live.push_back(std::move(merged[j]));
            }
        }
        for (auto& w : wiring) {
            std::uint32_t& idx = prefix_side ? w.prefix_idx : w.suffix_idx;
            idx = remap2[remap[idx]];
        }
        exts = std::move(live);
    };
    compact_side(node.prefixes, true);
    compact_side(node.suffixes, false);

    // Merge duplicate (prefix, suffix) pairs, first occurrence wins the slot.
    std::vector<WireEntry> out;
    for (const auto& w : wiring) {
        bool found = false;
        for (auto& o : out) {
            if (o.prefix_idx == w.prefix_idx && o.suffix_idx == w.suffix_idx) {
                o.count += w.count;
                found = true;
                break;
            }
        }
        if (!found) out.push_back(w);
    }
    wiring = std::move(out);
}

}  // namespace

std::uint32_t transfer_bytes(const TransferNode& t) {
    // dest key (8) + via key (8) + payload length/flags (2) + packed payload
    // + payload count (4) + direction/flags (2)
    return static_cast<std::uint32_t>(8 + 8 + 2 + (t.payload_seq.size() + 3) / 4 + 4 + 2);
}

std::vector<std::uint64_t> find_candidates(const PakGraph& graph) {
    std::vector<std::uint64_t> out;
    unsigned k = graph.k;
    for (const auto& [key, node] : graph.nodes) {
        if (!node.valid) continue;
        bool has_nonterm = false;
        bool self_loop = false;
        bool is_max = true;
        auto scan = [&](const std::vector<Extension>& exts, Direction dir) {
            for (const auto& e : exts) {
                auto nb = neighbor_of(node.km1, e, dir, k);
                if (!nb) continue;
                has_nonterm = true;
                if (nb->bits == key) self_loop = true;
                else if (nb->bits > key) is_max = false;
            }
        };
        scan(node.prefixes, Direction::predecessor);
        scan(node.suffixes, Direction::successor);
        if (has_nonterm && !self_loop && is_max) out.push_back(key);
    }
    return out;
}

std::vector<TransferNode> extract_transfers(const MacroNode& node, unsigned k,
                                            std::vector<std::string>& completed) {
    std::vector<TransferNode> out;
    for (const auto& w : node.wiring) {
        const Extension& p = node.prefixes[w.prefix_idx];
        const Extension& s = node.suffixes[w.suffix_idx];
        bool p_term = p.terminal;
        bool s_term = s.terminal;
        if (p_term && s_term) {
            completed.push_back(p.seq + decode_kmer(node.km1) + s.seq);
            continue;
        }
        if (!p_term) {
            auto dest = neighbor_of(node.km1, p, Direction::predecessor, k);
            TransferNode t;
            t.dest_key = dest->bits;
            t.to_successor = false;
            t.via_key = node.km1.bits;
            t.payload_seq = s.seq;
            t.payload_count = w.count;
            t.payload_terminal = s.terminal;
            out.push_back(std::move(t));
        }
        if (!s_term) {
            auto dest = neighbor_of(node.km1, s, Direction::successor, k);
            TransferNode t;
            t.dest_key = dest->bits;
            t.to_successor = true;
            t.via_key = node.km1.bits;
            t.payload_seq = p.seq;
            t.payload_count = w.count;
            t.payload_terminal = p.terminal;
            out.push_back(std::move(t));
        }
    }
    return out;
}

void apply_transfer(PakGraph& graph, const TransferNode& t) {
    auto it = graph.nodes.find(t.dest_key);
    if (it == graph.nodes.end() || !it->second.valid)
        throw std::runtime_error("apply_transfer: destination node missing or invalid");
    MacroNode& node = it->second;
    unsigned k = graph.k;

    // to_predecessor extends matching suffixes with the payload appended;
    // to_successor mirrors on the prefix side with the payload prepended.
    std::vector<Extension>& side = t.to_successor ? node.prefixes : node.suffixes;
    Direction dir = t.to_successor ? Direction::predecessor : Direction::successor;

    std::uint32_t remaining = t.payload_count;
    PackedKmer via{t.via_key, static_cast<std::uint8_t>(k - 1)};

    std::size_t orig_wiring = node.wiring.size();
    std::size_t orig_exts = side.size();
    for (std::size_t wi = 0; wi < orig_wiring && remaining > 0; ++wi) {
        WireEntry& w = node.wiring[wi];
        std::uint32_t ext_idx = t.to_successor ? w.prefix_idx : w.suffix_idx;
        if (ext_idx >= orig_exts) continue;  // created by this very transfer
        if (w.count == 0) continue;
        auto nb = neighbor_of(node.km1, side[ext_idx], dir, k);
        if (!nb || nb->bits != via.bits) continue;

        std::uint32_t take = std::min(remaining, w.count);
        Extension grown;
        grown.seq = t.to_successor ? (t.payload_seq + side[ext_idx].seq)
                                   : (side[ext_idx].seq + t.payload_seq);
        grown.count = take;
        grown.terminal = t.payload_terminal;
        side.push_back(std::move(grown));  // may reallocate: re-index from here on
        std::uint32_t new_idx = static_cast<std::uint32_t>(side.size() - 1);

        side[ext_idx].count -= take;
        if (take == w.count) {
            (t.to_successor ? w.prefix_idx : w.suffix_idx) = new_idx;
        } else {
            w.count -= take;
            WireEntry split;
            split.prefix_idx = t.to_successor ? new_idx : w.prefix_idx;
            split.suffix_idx = t.to_successor ? w.suffix_idx : new_idx;
            split.count = take;
            node.wiring.push_back(split);
        }
        remaining -= take;
    }

    if (remaining == t.payload_count)
        throw std::runtime_error("apply_transfer: no extension of " + decode_kmer(node.km1) +
                                 " routes through " + decode_kmer(via));
    if (remaining > 0)
        throw std::runtime_error("apply_transfer: payload flow exceeds wired flow at " +
                                 decode_kmer(node.km1));
    normalize_node(node);
}

IterationReport run_iteration(PakGraph& graph, const SizePartition* hybrid, IterationLog* log) {
    (void)hybrid;  // the partition steers scheduling, never the update order
    IterationReport rep;

    if (log) {
        for (const auto& [key, node] : graph.nodes)
            if (node.valid)
                log->p1_reads.push_back(NodeReadEvent{
                    key, static_cast<std::uint32_t>(node_p1_bytes(node)),
                    static_cast<std::uint32_t>(node_byte_size(node))});
    }

    std::vector<std::uint64_t> cands = find_candidates(graph);
    rep.candidates = cands.size();

    std::vector<TransferNode> transfers;
    for (std::uint64_t key : cands) {
        MacroNode& node = graph.nodes.at(key);
        if (log)
            log->p2_reads.emplace_back(key, static_cast<std::uint32_t>(node_wiring_bytes(node)));
        auto list = extract_transfers(node, graph.k, graph.completed);
        for (auto& t : list) transfers.push_back(std::move(t));
        node.valid = false;  // deferred deletion: swept at fixpoint
    }
    rep.transfers_emitted = transfers.size();

    for (const auto& t : transfers) {
        TransferEvent ev;
        if (log) {
            ev.src_key = t.via_key;
            ev.dest_key = t.dest_key;
            ev.tn_bytes = transfer_bytes(t);
            ev.dest_read_bytes =
                static_cast<std::uint32_t>(node_byte_size(graph.nodes.at(t.dest_key)));
        }
        apply_transfer(graph, t);
        if (log) {
            ev.dest_write_bytes =
                static_cast<std::uint32_t>(node_byte_size(graph.nodes.at(t.dest_key)));
            log->transfers.push_back(ev);
        }
    }

    rep.nodes_remaining = graph.valid_count();
    rep.bytes_live = graph.live_bytes();
    if (log) log->report = rep;
    return rep;
}

FixpointResult run_to_fixpoint(PakGraph& graph, std::size_t max_iters,
                               std::uint32_t size_threshold, CompactionLog* log) {
    FixpointResult res;
    for (std::size_t i = 0; i < max_iters; ++i) {
        SizePartition part;
        if (size_threshold > 0) part = partition_by_size(graph, size_threshold);
        IterationLog iter_log;
        IterationReport rep = run_iteration(graph, size_threshold > 0 ? &part : nullptr,
                                            log ? &iter_log : nullptr);
        rep.iteration = static_cast<std::uint32_t>(i);
        if (log) {
            iter_log.report = rep;
            log->push_back(std::move(iter_log));
        }
        res.reports.push_back(rep);
        if (rep.candidates == 0) {
            res.fixpoint = true;
            break;
        }
    }
    // deferred deletion sweep
    for (auto it = graph.nodes.begin(); it != graph.nodes.end();)
        it = it->second.valid ? std::next(it) : graph.nodes.erase(it);
    return res;
}

SizePartition partition_by_size(const PakGraph& graph, std::uint32_t threshold_bytes) {
    if (threshold_bytes == 0)
        throw std::invalid_argument("partition_by_size: threshold must be > 0");
    SizePartition p;
    for (const auto& [key, node] : graph.nodes) {
        if (!node.valid) continue;
        if (node_byte_size(node) > threshold_bytes)
            p.cpu_keys.push_back(key);
        else
            p.nmp_keys.push_back(key);
    }
    return p;
}

}  // namespace mnasm
