#include "mnasm/contig.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace mnasm {

BatchPlan plan_batches(std::size_t num_reads, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("plan_batches: fraction must be in (0,1]");
    BatchPlan plan;
    plan.fraction = fraction;
    if (num_reads == 0) return plan;
    std::size_t num_batches = static_cast<std::size_t>(std::ceil(1.0 / fraction));
    num_batches = std::min(num_batches, num_reads);
    std::size_t per = num_reads / num_batches;
    std::size_t begin = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
        std::size_t end = (b + 1 == num_batches) ? num_reads : begin + per;
        plan.ranges.emplace_back(begin, end);
        begin = end;
    }
    return plan;
}

PakGraph merge_graphs(const std::vector<PakGraph>& graphs) {
    PakGraph out;
    if (graphs.empty()) return out;
    out.k = graphs.front().k;
    for (const auto& g : graphs) {
        if (g.k != out.k) throw std::invalid_argument("merge_graphs: k mismatch");
        out.completed.insert(out.completed.end(), g.completed.begin(), g.completed.end());
    }

    // Which keys appear in more than one graph.
    std::map<std::uint64_t, unsigned> owners;
    for (const auto& g : graphs)
        for (const auto& [key, node] : g.nodes)
            if (node.valid) ++owners[key];

    auto sort_merge = [](std::vector<Extension>& exts) {
        std::sort(exts.begin(), exts.end(), [](const Extension& a, const Extension& b) {
            if (a.seq != b.seq) return a.seq < b.seq;
            return a.terminal < b.terminal;
        });
        std::vector<Extension> merged;
        for (auto& e : exts) {
            if (!merged.empty() && merged.back().seq == e.seq &&
                merged.back().terminal == e.terminal)
                merged.back().count += e.count;
            else
                merged.push_back(std::move(e));
        }
        exts = std::move(merged);
    };

    for (const auto& g : graphs) {
        for (const auto& [key, node] : g.nodes) {
            if (!node.valid) continue;
            auto [it, inserted] = out.nodes.try_emplace(key, node);
            if (inserted) {
                if (owners[key] > 1) {
                    // will collect the other owners' lists below, canonicalize now
                    MacroNode& n = it->second;
                    sort_merge(n.prefixes);
                    sort_merge(n.suffixes);
                    n.wiring.clear();
                }
                continue;
            }
            MacroNode& n = it->second;
            n.prefixes.insert(n.prefixes.end(), node.prefixes.begin(), node.prefixes.end());
            n.suffixes.insert(n.suffixes.end(), node.suffixes.begin(), node.suffixes.end());
            sort_merge(n.prefixes);
            sort_merge(n.suffixes);
        }
    }
    for (auto& [key, node] : out.nodes)
        if (owners[key] > 1) wire_macronode(node);
    return out;
}

namespace {

struct WalkState {
    const PakGraph& graph;
    // remaining flow per node wiring entry, keyed by node
    std::map<std::uint64_t, std::vector<std::uint32_t>> remaining;

    explicit WalkState(const PakGraph& g) : graph(g) {
        for (const auto& [key, node] : g.nodes) {
            if (!node.valid) continue;
            std::vector<std::uint32_t> rem(node.wiring.size());
            for (std::size_t i = 0; i < node.wiring.size(); ++i) rem[i] = node.wiring[i].count;
            remaining[key] = std::move(rem);
        }
    }
};

// Picks the wired pair continuing `edge_str` into `node`: highest remaining
// flow, ties by suffix seq ascending, then entry order.
int pick_continuation(const MacroNode& node, const std::vector<std::uint32_t>& rem,
                      const std::string& edge_str) {
    int best = -1;
    for (std::size_t i = 0; i < node.wiring.size(); ++i) {
        if (rem[i] == 0) continue;
        const Extension& p = node.prefixes[node.wiring[i].prefix_idx];
        if (p.terminal) continue;
        if (p.seq.size() + node.km1.len != edge_str.size()) continue;
        if (edge_str.compare(0, p.seq.size(), p.seq) != 0) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const Extension& bs = node.suffixes[node.wiring[best].suffix_idx];
        const Extension& cs = node.suffixes[node.wiring[i].suffix_idx];
        if (rem[i] > rem[best] || (rem[i] == rem[best] && cs.seq < bs.seq))
            best = static_cast<int>(i);
    }
    return best;
}

// One unit of flow from a terminal-prefix start pair to a terminal suffix
// (or to flow exhaustion).
std::string walk_once(WalkState& st, const MacroNode& start, std::size_t entry) {
    const PakGraph& g = st.graph;
    unsigned k = g.k;
    const MacroNode* node = &start;
    const WireEntry* w = &start.wiring[entry];
    st.remaining[start.km1.bits][entry] -= 1;

    std::string contig = node->prefixes[w->prefix_idx].seq + decode_kmer(node->km1) +
                         node->suffixes[w->suffix_idx].seq;
    while (!node->suffixes[w->suffix_idx].terminal) {
        const Extension& s = node->suffixes[w->suffix_idx];
        std::string edge_str = decode_kmer(node->km1) + s.seq;
        auto nb = neighbor_of(node->km1, s, Direction::successor, k);
        auto it = g.nodes.find(nb->bits);
        if (it == g.nodes.end() || !it->second.valid) break;  // dangling edge: stop the contig
        const MacroNode& next = it->second;
        auto rem_it = st.remaining.find(nb->bits);
        int pick = pick_continuation(next, rem_it->second, edge_str);
        if (pick < 0) break;  // no unconsumed matching pair
        rem_it->second[pick] -= 1;
        node = &next;
        w = &next.wiring[pick];
        contig += node->suffixes[w->suffix_idx].seq;
    }
    return contig;
}

}  // namespace

std::vector<Contig> walk_contigs(const PakGraph& graph) {
    std::vector<Contig> out;
    std::unordered_set<std::string> seen;
    std::size_t min_len = graph.k >= 1 ? graph.k - 1 : 0;

    auto emit = [&](const std::string& s, bool dedupe) {
        if (s.size() < min_len) return;
        if (dedupe && !seen.insert(s).second) return;
        if (!dedupe) seen.insert(s);
        out.push_back(Contig{"c" + std::to_string(out.size() + 1), s});
    };

    for (const auto& s : graph.completed) emit(s, false);

    WalkState st(graph);
    for (const auto& [key, node] : graph.nodes) {
        if (!node.valid) continue;
        auto& rem = st.remaining[key];
        for (std::size_t i = 0; i < node.wiring.size(); ++i) {
            if (!node.prefixes[node.wiring[i].prefix_idx].terminal) continue;
            while (rem[i] > 0) emit(walk_once(st, node, i), true);
        }
    }
    return out;
}

std::size_t n50(const std::vector<std::size_t>& lengths) {
    if (lengths.empty()) throw std::invalid_argument("n50: empty contig set");
    std::vector<std::size_t> sorted = lengths;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::size_t total = 0;
    for (std::size_t l : sorted) total += l;
    std::size_t cum = 0;
    for (std::size_t l : sorted) {
        cum += l;
        if (2 * cum >= total) return l;
    }
    return sorted.back();
}

AssemblyStats compute_stats(const std::vector<Contig>& contigs,
                            std::optional<std::string_view> genome) {
    AssemblyStats st;
    st.contig_count = contigs.size();
    std::vector<std::size_t> lengths;
    for (const auto& c : contigs) {
        st.total_bases += c.bases.size();
        lengths.push_back(c.bases.size());
    }
    st.n50 = lengths.empty() ? 0 : n50(lengths);
    if (genome) {
        st.has_reference = true;
        std::vector<char> covered(genome->size(), 0);
        for (const auto& c : contigs) {
            std::size_t pos = genome->find(c.bases);
            while (pos != std::string_view::npos) {
                std::fill(covered.begin() + pos, covered.begin() + pos + c.bases.size(), 1);
                pos = genome->find(c.bases, pos + 1);
            }
        }
        std::size_t n = 0;
        for (char c : covered) n += c;
        st.genome_coverage = genome->empty() ? 0.0 : static_cast<double>(n) / genome->size();
    }
    return st;
}

AssemblyResult assemble_reads(const std::vector<Read>& reads, unsigned k, double batch_fraction,
                              std::uint32_t size_threshold, std::uint64_t min_count) {
    AssemblyResult res;
    BatchPlan plan = plan_batches(reads.size(), batch_fraction);

    std::vector<PakGraph> batch_graphs;
    for (const auto& [lo, hi] : plan.ranges) {
        std::vector<Read> slice(reads.begin() + lo, reads.begin() + hi);
        KmerExtraction ext = extract_kmers(slice, k);
        std::vector<KmerCount> counts = filter_counts(count_kmers(std::move(ext.kmers)), min_count);
        BoundaryCensus census = boundary_census(slice, k);
        PakGraph g = build_macronodes(counts, census, k);
        FixpointResult fx = run_to_fixpoint(g, g.nodes.size() + 1, size_threshold);
        res.reports.per_batch.push_back(std::move(fx.reports));
        batch_graphs.push_back(std::move(g));
    }

    if (batch_graphs.empty()) {
        res.graph.k = k;
    } else if (batch_graphs.size() == 1) {
        res.graph = std::move(batch_graphs.front());
    } else {
        res.graph = merge_graphs(batch_graphs);
        FixpointResult fx =
            run_to_fixpoint(res.graph, res.graph.nodes.size() + 1, size_threshold);
        res.reports.merged = std::move(fx.reports);
    }
    res.contigs = walk_contigs(res.graph);
    return res;
}

}  // namespace mnasm
