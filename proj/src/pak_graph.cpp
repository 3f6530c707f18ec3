#include "mnasm/pak_graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mnasm {

std::size_t PakGraph::valid_count() const {
    std::size_t n = 0;
    for (const auto& [key, node] : nodes)
        if (node.valid) ++n;
    return n;
}

std::uint64_t PakGraph::live_bytes() const {
    std::uint64_t b = 0;
    for (const auto& [key, node] : nodes)
        if (node.valid) b += node_byte_size(node);
    return b;
}

std::uint64_t extension_bytes(const Extension& e) {
    return 2 + (e.seq.size() + 3) / 4 + 4;
}

std::uint64_t node_p1_bytes(const MacroNode& node) {
    std::uint64_t b = 16 + 8;
    for (const auto& e : node.prefixes) b += extension_bytes(e);
    for (const auto& e : node.suffixes) b += extension_bytes(e);
    return b;
}

std::uint64_t node_wiring_bytes(const MacroNode& node) {
    return 8ull * node.wiring.size();
}

std::uint64_t node_byte_size(const MacroNode& node) {
    return node_p1_bytes(node) + node_wiring_bytes(node);
}

std::optional<PackedKmer> neighbor_of(const PackedKmer& km1, const Extension& ext, Direction dir,
                                      unsigned k) {
    if (ext.terminal) return std::nullopt;
    unsigned keep = k - 1;
    if (ext.seq.size() >= keep) {
        // The neighbor key is decided entirely by the near end of the seq.
        if (dir == Direction::successor)
            return encode_kmer(std::string_view(ext.seq).substr(ext.seq.size() - keep));
        return encode_kmer(std::string_view(ext.seq).substr(0, keep));
    }
    PackedKmer packed = encode_kmer(ext.seq);
    if (dir == Direction::successor) return append_base_seq(km1, packed, keep);
    return prepend_base_seq(km1, packed, keep);
}

namespace {

std::uint32_t ext_total(const std::vector<Extension>& v) {
    std::uint64_t s = 0;
    for (const auto& e : v) s += e.count;
    return static_cast<std::uint32_t>(s);
}

}  // namespace

void wire_macronode(MacroNode& node) {
    if (ext_total(node.prefixes) != ext_total(node.suffixes))
        throw std::runtime_error("wire_macronode: unbalanced node " + decode_kmer(node.km1));
    node.wiring.clear();

    auto order = [](const std::vector<Extension>& exts) {
        std::vector<std::uint32_t> idx(exts.size());
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            const Extension& x = exts[a];
            const Extension& y = exts[b];
            if (x.count != y.count) return x.count > y.count;
            if (x.terminal != y.terminal) return !x.terminal;  // terminal last
            if (x.seq != y.seq) return x.seq < y.seq;
            return a < b;
        });
        return idx;
    };

    std::vector<std::uint32_t> p_order = order(node.prefixes);
    std::vector<std::uint32_t> s_order = order(node.suffixes);
    std::vector<std::uint32_t> p_rem(node.prefixes.size()), s_rem(node.suffixes.size());
    for (std::size_t i = 0; i < node.prefixes.size(); ++i) p_rem[i] = node.prefixes[i].count;
    for (std::size_t i = 0; i < node.suffixes.size(); ++i) s_rem[i] = node.suffixes[i].count;

    std::size_t pi = 0, si = 0;
    while (pi < p_order.size() && si < s_order.size()) {
        std::uint32_t p = p_order[pi];
        std::uint32_t s = s_order[si];
        if (p_rem[p] == 0) { ++pi; continue; }
        if (s_rem[s] == 0) { ++si; continue; }
        std::uint32_t flow = std::min(p_rem[p], s_rem[s]);
        node.wiring.push_back(WireEntry{p, s, flow});
        p_rem[p] -= flow;
        s_rem[s] -= flow;
        if (p_rem[p] == 0) ++pi;
        if (s_rem[s] == 0) ++si;
    }
}

PakGraph build_macronodes(const std::vector<KmerCount>& counts, const BoundaryCensus& census,
                          unsigned k) {
    if (k < 3 || k > 32) throw std::invalid_argument("build_macronodes: k must be in [3,32]");
    PakGraph g;
    g.k = k;

    auto node_at = [&](const PackedKmer& key) -> MacroNode& {
        auto [it, inserted] = g.nodes.try_emplace(key.bits);
        if (inserted) it->second.km1 = key;
        return it->second;
    };
    auto add_ext = [](std::vector<Extension>& v, const std::string& seq, std::uint64_t count,
                      bool terminal) {
        for (auto& e : v) {
            if (e.terminal == terminal && e.seq == seq) {
                e.count += static_cast<std::uint32_t>(count);
                return;
            }
        }
        v.push_back(Extension{seq, static_cast<std::uint32_t>(count), terminal});
    };

    for (const auto& kc : counts) {
        if (kc.kmer.len != k)
            throw std::invalid_argument("build_macronodes: k-mer length mismatch");
        PackedKmer head = kmer_prefix(kc.kmer, k - 1);
        PackedKmer tail = kmer_suffix(kc.kmer, k - 1);
        std::string first(1, decode_kmer(kmer_prefix(kc.kmer, 1))[0]);
        std::string last(1, decode_kmer(kmer_suffix(kc.kmer, 1))[0]);
        add_ext(node_at(tail).prefixes, first, kc.count, false);
        add_ext(node_at(head).suffixes, last, kc.count, false);
    }

    for (const auto& [bits, count] : census.starts) {
        auto it = g.nodes.find(bits);
        if (it == g.nodes.end())
            throw std::runtime_error("build_macronodes: census start key not in graph");
        add_ext(it->second.prefixes, "", count, true);
    }
    for (const auto& [bits, count] : census.ends) {
        auto it = g.nodes.find(bits);
        if (it == g.nodes.end())
            throw std::runtime_error("build_macronodes: census end key not in graph");
        add_ext(it->second.suffixes, "", count, true);
    }

    for (auto& [bits, node] : g.nodes) wire_macronode(node);
    return g;
}

DimmMap build_dimm_map(const PakGraph& graph, unsigned num_dimms) {
    if (num_dimms == 0) throw std::invalid_argument("build_dimm_map: num_dimms must be >= 1");
    DimmMap m;
    std::size_t n = graph.nodes.size();
    if (n == 0) {
        m.boundaries.push_back(~0ull);  // single open range
        return m;
    }
    std::size_t base = n / num_dimms, rem = n % num_dimms;
    auto it = graph.nodes.begin();
    for (unsigned d = 0; d < num_dimms && it != graph.nodes.end(); ++d) {
        std::size_t take = base + (d < rem ? 1 : 0);
        if (take == 0) take = 1;  // more DIMMs than nodes: degenerate singleton ranges
        std::uint64_t last = 0;
        for (std::size_t i = 0; i < take && it != graph.nodes.end(); ++i, ++it) last = it->first;
        m.boundaries.push_back(last);
    }
    m.boundaries.back() = ~0ull;  // last range is open-ended
    return m;
}

unsigned lookup_dimm(const DimmMap& map, std::uint64_t key) {
    auto it = std::lower_bound(map.boundaries.begin(), map.boundaries.end(), key);
    if (it == map.boundaries.end()) return static_cast<unsigned>(map.boundaries.size()) - 1;
    return static_cast<unsigned>(it - map.boundaries.begin());
}

// ---- dump/load -------------------------------------------------------

namespace {

void put_u16(std::string& out, std::uint16_t v) { out.append(reinterpret_cast<char*>(&v), 2); }
void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<char*>(&v), 8); }

void put_extension(std::string& out, const Extension& e) {
    if (e.seq.size() > 0x7fff)
        throw std::runtime_error("dump_graph: extension of " + std::to_string(e.seq.size()) +
                                 " bases exceeds the on-disk length field");
    put_u16(out, static_cast<std::uint16_t>((e.seq.size() << 1) | (e.terminal ? 1 : 0)));
    std::size_t nbytes = (e.seq.size() + 3) / 4;
    for (std::size_t b = 0; b < nbytes; ++b) {
        unsigned byte = 0;
        for (unsigned j = 0; j < 4; ++j) {
            std::size_t pos = b * 4 + j;
            if (pos < e.seq.size()) byte |= static_cast<unsigned>(base_code(e.seq[pos])) << (6 - 2 * j);
        }
        out.push_back(static_cast<char>(byte));
    }
    put_u32(out, e.count);
}

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("load_graph: truncated graph file");
    }
    std::uint16_t u16() { need(2); std::uint16_t v; std::memcpy(&v, buf.data() + pos, 2); pos += 2; return v; }
    std::uint32_t u32() { need(4); std::uint32_t v; std::memcpy(&v, buf.data() + pos, 4); pos += 4; return v; }
    std::uint64_t u64() { need(8); std::uint64_t v; std::memcpy(&v, buf.data() + pos, 8); pos += 8; return v; }
};

Extension get_extension(Cursor& c) {
    Extension e;
    std::uint16_t lt = c.u16();
    e.terminal = lt & 1;
    std::size_t len = lt >> 1;
    std::size_t nbytes = (len + 3) / 4;
    c.need(nbytes);
    e.seq.resize(len);
    for (std::size_t b = 0; b < nbytes; ++b) {
        unsigned byte = static_cast<unsigned char>(c.buf[c.pos + b]);
        for (unsigned j = 0; j < 4; ++j) {
            std::size_t posn = b * 4 + j;
            if (posn < len) e.seq[posn] = code_base(static_cast<int>((byte >> (6 - 2 * j)) & 3));
        }
    }
    c.pos += nbytes;
    e.count = c.u32();
    return e;
}

}  // namespace

std::string serialize_graph(const PakGraph& graph) {
    std::string out;
    out.append("PAKG", 4);
    put_u32(out, graph.k);
    put_u64(out, graph.nodes.size());
    for (const auto& [bits, node] : graph.nodes) {
        put_u32(out, static_cast<std::uint32_t>(node.prefixes.size()));
        put_u32(out, static_cast<std::uint32_t>(node.suffixes.size()));
        put_u32(out, static_cast<std::uint32_t>(node.wiring.size()));
        put_u32(out, node.valid ? 1u : 0u);
        put_u64(out, bits);
        for (const auto& e : node.prefixes) put_extension(out, e);
        for (const auto& e : node.suffixes) put_extension(out, e);
        for (const auto& w : node.wiring) {
            put_u16(out, static_cast<std::uint16_t>(w.prefix_idx));
            put_u16(out, static_cast<std::uint16_t>(w.suffix_idx));
            put_u32(out, w.count);
        }
    }
    return out;
}

void dump_graph(const PakGraph& graph, const std::string& path) {
    std::string bytes = serialize_graph(graph);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dump_graph: cannot open " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("dump_graph: write failed for " + path);
}

PakGraph load_graph(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_graph: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || buf.compare(0, 4, "PAKG") != 0)
        throw std::runtime_error("load_graph: bad header in " + path);
    Cursor c{buf, 4};
    PakGraph g;
    g.k = c.u32();
    std::uint64_t n = c.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint32_t np = c.u32();
        std::uint32_t ns = c.u32();
        std::uint32_t nw = c.u32();
        std::uint32_t flags = c.u32();
        std::uint64_t bits = c.u64();
        MacroNode node;
        node.km1 = PackedKmer{bits, static_cast<std::uint8_t>(g.k - 1)};
        node.valid = flags & 1;
        node.prefixes.reserve(np);
        node.suffixes.reserve(ns);
        for (std::uint32_t j = 0; j < np; ++j) node.prefixes.push_back(get_extension(c));
        for (std::uint32_t j = 0; j < ns; ++j) node.suffixes.push_back(get_extension(c));
        for (std::uint32_t j = 0; j < nw; ++j) {
            WireEntry w;
            w.prefix_idx = c.u16();
            w.suffix_idx = c.u16();
            w.count = c.u32();
            node.wiring.push_back(w);
        }
        g.nodes.emplace(bits, std::move(node));
    }
    return g;
}

}  // namespace mnasm
