#include "mnasm/nmp_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mnasm {

namespace {

constexpr std::uint64_t kDimmShift = 36;               // address bits per DIMM region
constexpr std::uint64_t kTnRegion = 1ull << 35;        // TransferNode scratch offset
constexpr std::uint32_t kLine = 64;

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::P1: return "P1";
        case Stage::P2: return "P2";
        case Stage::P3: return "P3";
        case Stage::B1: return "B1";
        case Stage::B2: return "B2";
        case Stage::B3: return "B3";
        case Stage::BW: return "BW";
    }
    return "?";
}

bool stage_from_name(const std::string& s, Stage& out) {
    if (s == "P1") out = Stage::P1;
    else if (s == "P2") out = Stage::P2;
    else if (s == "P3") out = Stage::P3;
    else if (s == "B1") out = Stage::B1;
    else if (s == "B2") out = Stage::B2;
    else if (s == "B3") out = Stage::B3;
    else if (s == "BW") out = Stage::BW;
    else return false;
    return true;
}

}  // namespace

const char* mode_name(SimMode m) {
    switch (m) {
        case SimMode::nmp: return "nmp";
        case SimMode::cpu_baseline: return "cpu_baseline";
        case SimMode::ideal_pe: return "ideal_pe";
        case SimMode::ideal_forwarding: return "ideal_forwarding";
    }
    return "?";
}

SimMode mode_from_name(const std::string& s) {
    if (s == "nmp") return SimMode::nmp;
    if (s == "cpu_baseline") return SimMode::cpu_baseline;
    if (s == "ideal_pe") return SimMode::ideal_pe;
    if (s == "ideal_forwarding") return SimMode::ideal_forwarding;
    throw std::invalid_argument("unknown simulation mode: " + s);
}

void SimConfig::apply_kv(const std::string& key, const std::string& value) {
    auto as_u = [&](unsigned& dst) { dst = static_cast<unsigned>(std::stoul(value)); };
    auto as_d = [&](double& dst) { dst = std::stod(value); };
    if (key == "channels") as_u(channels);
    else if (key == "dimms_per_channel") as_u(dimms_per_channel);
    else if (key == "pes_per_channel") as_u(pes_per_channel);
    else if (key == "banks_per_dimm") as_u(banks_per_dimm);
    else if (key == "pe_clock_ghz") as_d(pe_clock_ghz);
    else if (key == "row_buffer") as_u(row_buffer);
    else if (key == "burst_bytes") as_u(burst_bytes);
    else if (key == "trcd") as_u(trcd);
    else if (key == "tcl") as_u(tcl);
    else if (key == "trp") as_u(trp);
    else if (key == "burst_cycles") as_u(burst_cycles);
    else if (key == "xbar_base") as_u(xbar_base);
    else if (key == "bridge_cycles_per_byte") as_d(bridge_cycles_per_byte);
    else if (key == "cpu_threshold") as_u(cpu_threshold);
    else if (key == "cpu_outstanding") as_u(cpu_outstanding);
    else if (key == "stage_alpha") as_u(stage_alpha);
    else if (key == "stage_beta") as_u(stage_beta);
    else if (key == "workers") as_u(workers);
    else if (key == "mode") mode = mode_from_name(value);
    else throw std::invalid_argument("unknown config key: " + key);
}

void SimConfig::apply_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        // trim
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
        try {
            apply_kv(key, val);
        } catch (const std::exception& ex) {
            throw std::runtime_error("config: line " + std::to_string(lineno) + " of " + path +
                                     ": " + ex.what());
        }
    }
}

// ---- placement -------------------------------------------------------

Placement build_placement(const PakGraph& graph, const SimConfig& cfg, PlacementMode mode,
                          std::uint64_t seed) {
    Placement p;
    p.num_dimms = cfg.num_dimms();
    p.pes_per_dimm = cfg.pes_per_channel;
    std::size_t n = graph.nodes.size();
    p.keys.reserve(n);
    for (const auto& [key, node] : graph.nodes) p.keys.push_back(key);

    p.dimm.resize(n);
    p.pe.resize(n);
    p.addr.resize(n);
    std::vector<std::uint64_t> cursor(p.num_dimms, 0);
    std::vector<std::uint32_t> rank_in_dimm(p.num_dimms, 0);

    if (mode == PlacementMode::range) {
        DimmMap dm = build_dimm_map(graph, p.num_dimms);
        std::size_t i = 0;
        for (const auto& [key, node] : graph.nodes) {
            unsigned d = lookup_dimm(dm, key);
            p.dimm[i] = d;
            p.pe[i] = rank_in_dimm[d] % p.pes_per_dimm;
            ++rank_in_dimm[d];
            std::uint64_t slot = ceil_div(node_byte_size(node), kLine) * kLine;
            p.addr[i] = (static_cast<std::uint64_t>(d) << kDimmShift) + cursor[d];
            cursor[d] += slot;
            p.rank[key] = static_cast<std::uint32_t>(i);
            ++i;
        }
    } else {
        std::mt19937_64 rng(seed);
        std::size_t i = 0;
        for (const auto& [key, node] : graph.nodes) {
            unsigned d = static_cast<unsigned>(rng() % p.num_dimms);
            unsigned pe = static_cast<unsigned>(rng() % p.pes_per_dimm);
            p.dimm[i] = d;
            p.pe[i] = pe;
            std::uint64_t slot = ceil_div(node_byte_size(node), kLine) * kLine;
            p.addr[i] = (static_cast<std::uint64_t>(d) << kDimmShift) + cursor[d];
            cursor[d] += slot;
            p.rank[key] = static_cast<std::uint32_t>(i);
            ++i;
        }
    }
    return p;
}

Placement with_pe_count(const Placement& src, unsigned pe_count) {
    Placement p = src;
    p.pes_per_dimm = pe_count;
    std::vector<std::uint32_t> rank_in_dimm(p.num_dimms, 0);
    for (std::size_t i = 0; i < p.keys.size(); ++i) {
        unsigned d = p.dimm[i];
        p.pe[i] = rank_in_dimm[d] % pe_count;
        ++rank_in_dimm[d];
    }
    return p;
}

RouteClass route_class(std::uint32_t src_idx, std::uint32_t dst_idx, const Placement& p) {
    if (p.dimm[src_idx] != p.dimm[dst_idx]) return RouteClass::inter_dimm;
    if (p.pe[src_idx] != p.pe[dst_idx]) return RouteClass::intra_dimm;
    return RouteClass::same_pe;
}

// ---- trace generation ------------------------------------------------

namespace {

void emit_group(std::vector<TraceRecord>& out, bool write, std::uint32_t mn, std::uint64_t base,
                std::uint64_t bytes, Stage stage, std::uint32_t iter) {
    std::uint64_t recs = ceil_div(bytes, kLine);
    for (std::uint64_t i = 0; i < recs; ++i)
        out.push_back(TraceRecord{write, mn, base + i * kLine, kLine, stage, iter});
}

}  // namespace

std::vector<TraceRecord> gen_trace(const CompactionLog& log, const Placement& placement,
                                   SimMode mode) {
    std::vector<TraceRecord> out;
    auto rank_of = [&](std::uint64_t key) -> std::uint32_t {
        auto it = placement.rank.find(key);
        if (it == placement.rank.end())
            throw std::runtime_error("gen_trace: node missing from placement");
        return it->second;
    };

    for (std::size_t iter = 0; iter < log.size(); ++iter) {
        const IterationLog& il = log[iter];
        std::uint32_t it32 = static_cast<std::uint32_t>(iter);

        if (mode == SimMode::cpu_baseline) {
            // Stage-sequential passes, each walking the full live set; the
            // extraction pass materializes TransferNodes through memory and
            // the update pass reads them back.
            for (const auto& nr : il.p1_reads) {
                std::uint32_t mn = rank_of(nr.key);
                emit_group(out, false, mn, placement.addr[mn], nr.full_bytes, Stage::B1, it32);
            }
            // pass 2: full rescan; TransferNode writes interleave at their source
            std::vector<std::uint64_t> tn_cursor(placement.num_dimms, 0);
            std::size_t t0 = 0;
            auto emit_tn = [&](const TransferEvent& ev, Stage stage,
                               std::vector<std::uint64_t>& cursors) {
                std::uint32_t src = rank_of(ev.src_key);
                unsigned d = placement.dimm[src];
                std::uint64_t base = (static_cast<std::uint64_t>(d) << kDimmShift) + kTnRegion +
                                     cursors[d] * kLine;
                emit_group(out, stage == Stage::B2, src, base, ev.tn_bytes, stage, it32);
                cursors[d] += ceil_div(ev.tn_bytes, kLine) + 1;  // pad so runs never merge
            };
            for (const auto& nr : il.p1_reads) {
                std::uint32_t mn = rank_of(nr.key);
                emit_group(out, false, mn, placement.addr[mn], nr.full_bytes, Stage::B2, it32);
                while (t0 < il.transfers.size() && il.transfers[t0].src_key == nr.key)
                    emit_tn(il.transfers[t0++], Stage::B2, tn_cursor);
            }
            // pass 3: read TransferNodes back, read destinations
            std::vector<std::uint64_t> tn_cursor2(placement.num_dimms, 0);
            for (const auto& ev : il.transfers) {
                emit_tn(ev, Stage::B3, tn_cursor2);
                std::uint32_t dst = rank_of(ev.dest_key);
                emit_group(out, false, dst, placement.addr[dst], ev.dest_read_bytes, Stage::B3,
                           it32);
            }
            // write pass
            for (const auto& ev : il.transfers) {
                std::uint32_t dst = rank_of(ev.dest_key);
                emit_group(out, true, dst, placement.addr[dst], ev.dest_write_bytes, Stage::BW,
                           it32);
            }
            continue;
        }

        // nmp / ideal_pe / ideal_forwarding share the pipeline layout
        bool forwarding = (mode == SimMode::ideal_forwarding);
        std::unordered_map<std::uint64_t, std::uint32_t> p1_size;
        for (const auto& nr : il.p1_reads) {
            std::uint32_t mn = rank_of(nr.key);
            p1_size[nr.key] = nr.p1_bytes;
            emit_group(out, false, mn, placement.addr[mn], nr.p1_bytes, Stage::P1, it32);
        }
        std::size_t ti = 0;
        for (const auto& [key, wiring_bytes] : il.p2_reads) {
            std::uint32_t mn = rank_of(key);
            // the wiring block sits behind the extension block in the node record
            std::uint64_t wire_base = placement.addr[mn] + p1_size[key];
            emit_group(out, false, mn, wire_base, wiring_bytes, Stage::P2, it32);
            while (ti < il.transfers.size() && il.transfers[ti].src_key == key) {
                const TransferEvent& ev = il.transfers[ti];
                std::uint32_t dst = rank_of(ev.dest_key);
                if (!forwarding)
                    emit_group(out, false, dst, placement.addr[dst], ev.dest_read_bytes,
                               Stage::P3, it32);
                emit_group(out, true, dst, placement.addr[dst], ev.dest_write_bytes, Stage::P3,
                           it32);
                ++ti;
            }
        }
    }
    return out;
}

// ---- simulation ------------------------------------------------------

namespace {

struct Group {
    Stage stage;
    bool write;
    std::uint32_t mn;
    std::uint32_t iter;
    std::uint64_t bytes = 0;
    std::size_t first = 0, count = 0;  // record span
};

std::vector<Group> group_records(const std::vector<TraceRecord>& trace) {
    std::vector<Group> groups;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceRecord& r = trace[i];
        bool fresh = groups.empty();
        if (!fresh) {
            const Group& g = groups.back();
            const TraceRecord& prev = trace[i - 1];
            fresh = g.stage != r.stage || g.write != r.write || g.mn != r.mn_idx ||
                    g.iter != r.iter || r.addr != prev.addr + kLine;
        }
        if (fresh) groups.push_back(Group{r.stage, r.write, r.mn_idx, r.iter, 0, i, 0});
        groups.back().bytes += r.bytes;
        groups.back().count += 1;
    }
    return groups;
}

// Window-limited memory agent standing in for the host CPU: at most
// `outstanding` lines in flight, issued in program order.
struct CpuAgent {
    std::vector<std::uint64_t> ring;
    std::size_t pos = 0;
    std::uint64_t unit_free = 0;  // single compute pipe
    std::uint64_t busy = 0;

    explicit CpuAgent(unsigned outstanding) : ring(std::max(1u, outstanding), 0) {}
    std::uint64_t gate(std::uint64_t ready) const { return std::max(ready, ring[pos]); }
    void retire(std::uint64_t done) {
        ring[pos] = done;
        pos = (pos + 1) % ring.size();
    }
};

// One pipeline stage of one PE. The stage has two node buffers: the fetch
// of the next node can overlap the compute of the current one, so a read
// issues once the buffer two items back has drained.
struct StageUnit {
    std::uint64_t prev1 = 0;  // compute completion of the last item
    std::uint64_t prev2 = 0;  // ... and of the item before it
};

struct Engine {
    const SimConfig& cfg;
    const Placement& pl;
    bool ideal;

    std::vector<std::uint64_t> bank_free;
    std::vector<std::int64_t> bank_row;
    std::vector<std::uint64_t> bus_free;
    std::vector<StageUnit> units[3];  // P1/P2/P3 per (dimm, pe)
    std::vector<std::uint64_t> pe_busy;
    std::vector<std::uint64_t> xbar_free;
    std::vector<std::uint64_t> bridge_free;  // egress pipe per source DIMM
    CpuAgent cpu;

    std::vector<std::uint64_t> channel_busy;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> rec_issue_done;
    SimStats stats;

    Engine(const SimConfig& c, const Placement& p, std::size_t n_records)
        : cfg(c), pl(p), ideal(c.mode == SimMode::ideal_pe), cpu(c.cpu_outstanding) {
        std::size_t banks = std::size_t(cfg.num_dimms()) * cfg.banks_per_dimm;
        bank_free.assign(banks, 0);
        bank_row.assign(banks, -1);
        bus_free.assign(cfg.channels, 0);
        std::size_t n_units = std::size_t(cfg.num_dimms()) * pl.pes_per_dimm;
        for (auto& u : units) u.assign(n_units, StageUnit{});
        pe_busy.assign(n_units, 0);
        xbar_free.assign(cfg.num_dimms(), 0);
        bridge_free.assign(cfg.num_dimms(), 0);
        channel_busy.assign(cfg.channels, 0);
        rec_issue_done.resize(n_records);
        stats.mode = cfg.mode;
    }

    std::uint64_t stage_cost(std::uint64_t bytes) const {
        if (ideal) return 1;
        return std::uint64_t(cfg.stage_alpha) * ceil_div(bytes, 8) + cfg.stage_beta;
    }

    // Buffer availability gate for the next read this unit will issue.
    std::uint64_t fetch_gate(unsigned stage, std::uint32_t mn) const {
        return units[stage][unit_idx(mn)].prev2;
    }

    // One 64-byte access through its bank and channel bus, in trace order.
    // Lines interleave across banks so small footprints still spread load.
    std::uint64_t mem_line(std::uint64_t addr, std::uint64_t issue, std::size_t rec_idx) {
        unsigned dimm = static_cast<unsigned>(addr >> kDimmShift);
        std::uint64_t offset = addr & ((1ull << kDimmShift) - 1);
        std::uint64_t line_idx = offset / kLine;
        std::uint64_t lines_per_row = std::max<std::uint64_t>(1, cfg.row_buffer / kLine);
        std::size_t bank = std::size_t(dimm) * cfg.banks_per_dimm + line_idx % cfg.banks_per_dimm;
        std::int64_t row =
            static_cast<std::int64_t>(line_idx / cfg.banks_per_dimm / lines_per_row);
        unsigned ch = dimm / std::max(1u, cfg.dimms_per_channel);
        if (ch >= cfg.channels) ch = cfg.channels - 1;

        std::uint64_t start = std::max(issue, bank_free[bank]);
        std::uint64_t lat = (bank_row[bank] == row) ? cfg.tcl : (cfg.trp + cfg.trcd + cfg.tcl);
        std::uint64_t ready = start + lat;
        std::uint64_t burst_start = std::max(ready, bus_free[ch]);
        std::uint64_t done = burst_start + cfg.burst_cycles;
        bank_free[bank] = done;
        bus_free[ch] = done;
        bank_row[bank] = row;
        channel_busy[ch] += cfg.burst_cycles;
        rec_issue_done[rec_idx] = {issue, done};
        return done;
    }

    // All lines of a group issued together; completion is the last line.
    std::uint64_t mem_group(const std::vector<TraceRecord>& trace, const Group& g,
                            std::uint64_t issue, bool via_cpu) {
        std::uint64_t done = issue;
        for (std::size_t i = 0; i < g.count; ++i) {
            std::uint64_t line_issue = issue;
            if (via_cpu) line_issue = cpu.gate(issue);
            std::uint64_t d = mem_line(trace[g.first + i].addr, line_issue, g.first + i);
            if (via_cpu) cpu.retire(d);
            done = std::max(done, d);
        }
        return done;
    }

    std::size_t unit_idx(std::uint32_t mn) const {
        return std::size_t(pl.dimm[mn]) * pl.pes_per_dimm + pl.pe[mn];
    }

    std::uint64_t pe_compute(unsigned stage, std::uint32_t mn, std::uint64_t ready,
                             std::uint64_t bytes) {
        std::size_t u = unit_idx(mn);
        StageUnit& su = units[stage][u];
        std::uint64_t start = std::max(su.prev1, ready);
        std::uint64_t dur = stage_cost(bytes);
        su.prev2 = su.prev1;
        su.prev1 = start + dur;
        pe_busy[u] += dur;
        return start + dur;
    }

    std::uint64_t cpu_compute(std::uint64_t ready, std::uint64_t bytes) {
        std::uint64_t start = std::max(cpu.unit_free, ready);
        std::uint64_t dur = stage_cost(bytes);
        cpu.unit_free = start + dur;
        cpu.busy += dur;
        return start + dur;
    }
};

}  // namespace

SimStats simulate(const std::vector<TraceRecord>& trace, const SimConfig& cfg,
                  const Placement& placement) {
    for (const auto& r : trace)
        if (r.mn_idx >= placement.keys.size())
            throw std::runtime_error("simulate: trace references unknown mn_idx " +
                                     std::to_string(r.mn_idx));
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].iter < trace[i - 1].iter)
            throw std::runtime_error("simulate: iteration tags not monotone in trace");

    Engine eng(cfg, placement, trace.size());
    std::vector<Group> groups = group_records(trace);

    bool baseline = (cfg.mode == SimMode::cpu_baseline);
    std::uint64_t barrier = 0;      // current iteration start
    std::uint64_t iter_max = 0;     // latest event in the current iteration
    std::uint64_t total_mem = 0;    // latest memory completion anywhere
    std::uint32_t cur_iter = 0;
    std::uint64_t pass_base = 0;    // baseline pass barrier
    Stage pass_stage = Stage::B1;

    // per-iteration pipeline state
    std::unordered_map<std::uint32_t, std::uint64_t> p1_done, p2_done;
    std::unordered_map<std::uint32_t, bool> on_cpu;
    std::uint32_t cur_src = ~0u;
    bool pending_read = false;          // a P3 read awaiting its write
    std::uint64_t pending_compute = 0;  // that transfer's P3 compute completion
    std::uint32_t pending_mn = ~0u;
    bool pending_cpu = false;           // side the pending transfer runs on

    auto count_route = [&](std::uint32_t src, std::uint32_t dst) {
        RouteClass rc = route_class(src, dst, placement);
        if (rc == RouteClass::same_pe) eng.stats.transfers_same_pe++;
        else if (rc == RouteClass::intra_dimm) eng.stats.transfers_intra_dimm++;
        else eng.stats.transfers_inter_dimm++;
        return rc;
    };
    // Fabric latency of one TransferNode (a single buffer line). Delivery
    // inside a DIMM passes the local switch (scratchpad fills included), so
    // crossbar load depends only on the DIMM split, not the PE count;
    // cross-DIMM transfers go through the source DIMM's bridge pipe.
    auto route_delay = [&](RouteClass rc, std::uint32_t src, std::uint64_t ready) {
        if (rc != RouteClass::inter_dimm) {
            std::uint64_t occ = cfg.xbar_base + ceil_div(kLine, 32);
            std::uint64_t start = std::max(eng.xbar_free[placement.dimm[src]], ready);
            eng.xbar_free[placement.dimm[src]] = start + occ;
            return start + occ;
        }
        std::uint64_t occ =
            static_cast<std::uint64_t>(std::ceil(kLine * cfg.bridge_cycles_per_byte));
        std::uint64_t start = std::max(eng.bridge_free[placement.dimm[src]], ready);
        eng.bridge_free[placement.dimm[src]] = start + occ;
        return start + occ;
    };

    for (const Group& g : groups) {
        if (g.iter != cur_iter) {
            barrier = iter_max;
            cur_iter = g.iter;
            p1_done.clear();
            p2_done.clear();
            on_cpu.clear();
            cur_src = ~0u;
            pending_read = false;
            pass_base = barrier;
            pass_stage = Stage::B1;
        }

        if (baseline) {
            if (g.stage != pass_stage) {
                pass_base = iter_max;  // a pass starts after the previous one fully lands
                pass_stage = g.stage;
            }
            std::uint64_t done = eng.mem_group(trace, g, pass_base, true);
            iter_max = std::max(iter_max, done);
            total_mem = std::max(total_mem, done);
            if (!g.write) {
                std::uint64_t cdone = eng.cpu_compute(done, g.bytes);
                iter_max = std::max(iter_max, cdone);
            }
            continue;
        }

        bool offload = cfg.cpu_threshold > 0 && g.bytes > cfg.cpu_threshold;
        switch (g.stage) {
            case Stage::P1: {
                bool cpu_side = offload;
                on_cpu[g.mn] = cpu_side;
                std::uint64_t issue =
                    cpu_side ? barrier : std::max(barrier, eng.fetch_gate(0, g.mn));
                std::uint64_t done = eng.mem_group(trace, g, issue, cpu_side);
                std::uint64_t cdone = cpu_side ? eng.cpu_compute(done, g.bytes)
                                               : eng.pe_compute(0, g.mn, done, g.bytes);
                p1_done[g.mn] = cdone;
                iter_max = std::max({iter_max, done, cdone});
                total_mem = std::max(total_mem, done);
                break;
            }
            case Stage::P2: {
                bool cpu_side = on_cpu.count(g.mn) ? on_cpu[g.mn] : offload;
                auto it = p1_done.find(g.mn);
                std::uint64_t ready = (it != p1_done.end()) ? it->second : barrier;
                if (!cpu_side) ready = std::max(ready, eng.fetch_gate(1, g.mn));
                std::uint64_t done = eng.mem_group(trace, g, ready, cpu_side);
                std::uint64_t cdone = cpu_side ? eng.cpu_compute(done, g.bytes)
                                               : eng.pe_compute(1, g.mn, done, g.bytes);
                p2_done[g.mn] = cdone;
                cur_src = g.mn;
                pending_read = false;
                iter_max = std::max({iter_max, done, cdone});
                total_mem = std::max(total_mem, done);
                break;
            }
            case Stage::P3: {
                if (cur_src == ~0u)
                    throw std::runtime_error("simulate: P3 group without a preceding P2");
                std::uint64_t tn_ready =
                    p2_done.count(cur_src) ? p2_done[cur_src] : barrier;
                bool src_cpu = on_cpu.count(cur_src) && on_cpu[cur_src];
                if (!g.write) {
                    // destination read of a fresh transfer
                    RouteClass rc = count_route(cur_src, g.mn);
                    bool cpu_side = src_cpu || offload;
                    std::uint64_t arrival =
                        cpu_side ? tn_ready : route_delay(rc, cur_src, tn_ready);
                    if (!cpu_side) arrival = std::max(arrival, eng.fetch_gate(2, g.mn));
                    std::uint64_t done = eng.mem_group(trace, g, arrival, cpu_side);
                    std::uint64_t cdone = cpu_side ? eng.cpu_compute(done, g.bytes)
                                                   : eng.pe_compute(2, g.mn, done, g.bytes);
                    pending_read = true;
                    pending_compute = cdone;
                    pending_mn = g.mn;
                    pending_cpu = cpu_side;
                    iter_max = std::max({iter_max, done, cdone});
                    total_mem = std::max(total_mem, done);
                } else {
                    bool paired = pending_read && pending_mn == g.mn;
                    std::uint64_t ready;
                    bool cpu_side;
                    if (paired) {
                        ready = pending_compute;
                        cpu_side = pending_cpu;
                        pending_read = false;
                    } else {
                        // forwarding mode: no destination read, compute off the write image
                        RouteClass rc = count_route(cur_src, g.mn);
                        cpu_side = src_cpu || offload;
                        std::uint64_t arrival =
                            cpu_side ? tn_ready : route_delay(rc, cur_src, tn_ready);
                        ready = cpu_side ? eng.cpu_compute(arrival, g.bytes)
                                         : eng.pe_compute(2, g.mn, arrival, g.bytes);
                    }
                    std::uint64_t done = eng.mem_group(trace, g, ready, cpu_side);
                    iter_max = std::max(iter_max, done);
                    total_mem = std::max(total_mem, done);
                }
                break;
            }
            default:
                throw std::runtime_error("simulate: baseline stage tag in pipeline mode trace");
        }
    }

    SimStats& st = eng.stats;
    st.total_cycles = total_mem;
    st.per_channel_busy_cycles = eng.channel_busy;
    st.pe_busy_cycles = eng.pe_busy;
    st.cpu_busy_cycles = eng.cpu.busy;

    // Post-pass over the per-record log, sharded when workers > 1; the
    // combines are order-independent sums so the result is worker-exact.
    unsigned workers = std::max(1u, cfg.workers);
    std::vector<std::uint64_t> rb(workers, 0), wb(workers, 0), nrec(workers, 0);
    std::vector<std::uint64_t> viol(workers, 0);
    // latest completion per iteration, for the barrier check
    std::uint32_t max_iter = trace.empty() ? 0 : trace.back().iter;
    std::vector<std::uint64_t> iter_done(max_iter + 1, 0);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::uint32_t it = trace[i].iter;
        iter_done[it] = std::max(iter_done[it], eng.rec_issue_done[i].second);
    }
    std::vector<std::uint64_t> done_before(max_iter + 1, 0);
    for (std::uint32_t it = 1; it <= max_iter; ++it)
        done_before[it] = std::max(done_before[it - 1], iter_done[it - 1]);

    auto scan = [&](unsigned w, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const TraceRecord& r = trace[i];
            if (r.write) wb[w] += r.bytes; else rb[w] += r.bytes;
            nrec[w] += 1;
            if (eng.rec_issue_done[i].first < done_before[r.iter]) viol[w] += 1;
        }
    };
    if (workers == 1 || trace.size() < 1024) {
        scan(0, 0, trace.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (trace.size() + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t lo = std::min(trace.size(), std::size_t(w) * chunk);
            std::size_t hi = std::min(trace.size(), lo + chunk);
            pool.emplace_back(scan, w, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    for (unsigned w = 0; w < workers; ++w) {
        st.read_bytes += rb[w];
        st.write_bytes += wb[w];
        st.completed_records += nrec[w];
        st.barrier_violations += viol[w];
    }

    if (st.total_cycles > 0) {
        double peak = double(cfg.channels) * cfg.burst_bytes / cfg.burst_cycles;
        st.bandwidth_utilization =
            double(st.read_bytes + st.write_bytes) / (peak * double(st.total_cycles));
    }
    return st;
}

std::vector<std::pair<unsigned, std::uint64_t>> sweep_pes(const std::vector<TraceRecord>& trace,
                                                          const SimConfig& cfg,
                                                          const Placement& placement,
                                                          const std::vector<unsigned>& pe_counts) {
    std::vector<std::pair<unsigned, std::uint64_t>> out;
    for (unsigned n : pe_counts) {
        SimConfig c = cfg;
        c.pes_per_channel = n;
        Placement p = with_pe_count(placement, n);
        SimStats st = simulate(trace, c, p);
        out.emplace_back(n, st.total_cycles);
    }
    return out;
}

int saturation_index(const std::vector<std::pair<unsigned, std::uint64_t>>& sweep) {
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        double prev = double(sweep[i - 1].second);
        if (prev <= 0) return static_cast<int>(i);
        double gain = (prev - double(sweep[i].second)) / prev;
        if (gain < 0.05) return static_cast<int>(i);
    }
    return -1;
}

ComparisonReport report_stats(const SimStats& stats, const SimStats& baseline) {
    ComparisonReport r;
    if (stats.total_cycles > 0)
        r.speedup = double(baseline.total_cycles) / double(stats.total_cycles);
    if (baseline.read_bytes > 0) {
        r.norm_reads = double(stats.read_bytes) / double(baseline.read_bytes);
        r.norm_writes = double(stats.write_bytes) / double(baseline.read_bytes);
    }
    r.mode_utilization = stats.bandwidth_utilization;
    r.baseline_utilization = baseline.bandwidth_utilization;
    return r;
}

// ---- file formats ----------------------------------------------------

void write_trace(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_trace: cannot open " + path);
    for (const auto& r : trace)
        f << (r.write ? 'W' : 'R') << ' ' << r.mn_idx << ' ' << r.addr << ' ' << r.bytes << ' '
          << stage_name(r.stage) << ' ' << r.iter << '\n';
    f.flush();
    if (!f) throw std::runtime_error("write_trace: write failed for " + path);
}

namespace {

TraceRecord parse_trace_line(const std::string& line, std::size_t lineno) {
    std::istringstream ss(line);
    std::string op, stage;
    TraceRecord r;
    std::uint64_t mn, bytes, iter;
    if (!(ss >> op >> mn >> r.addr >> bytes >> stage >> iter) || (op != "R" && op != "W") ||
        !stage_from_name(stage, r.stage))
        throw std::runtime_error("trace: malformed record at line " + std::to_string(lineno));
    std::string extra;
    if (ss >> extra)
        throw std::runtime_error("trace: trailing fields at line " + std::to_string(lineno));
    r.write = (op == "W");
    r.mn_idx = static_cast<std::uint32_t>(mn);
    r.bytes = static_cast<std::uint32_t>(bytes);
    r.iter = static_cast<std::uint32_t>(iter);
    return r;
}

}  // namespace

std::vector<TraceRecord> read_trace(const std::string& path, unsigned workers) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_trace: cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    std::vector<TraceRecord> out(lines.size());
    auto parse_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = parse_trace_line(lines[i], i + 1);
    };
    workers = std::max(1u, workers);
    if (workers == 1 || lines.size() < 1024) {
        parse_range(0, lines.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (lines.size() + workers - 1) / workers;
        std::exception_ptr err;
        std::mutex err_mu;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t lo = std::min(lines.size(), std::size_t(w) * chunk);
            std::size_t hi = std::min(lines.size(), lo + chunk);
            pool.emplace_back([&, lo, hi]() {
                try {
                    parse_range(lo, hi);
                } catch (...) {
                    std::lock_guard<std::mutex> g(err_mu);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    return out;
}

void write_placement(const std::string& path, const Placement& p) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_placement: cannot open " + path);
    f << "# mn_idx key dimm pe addr  (dimms=" << p.num_dimms << " pes=" << p.pes_per_dimm
      << ")\n";
    f << p.num_dimms << ' ' << p.pes_per_dimm << '\n';
    for (std::size_t i = 0; i < p.keys.size(); ++i)
        f << i << ' ' << p.keys[i] << ' ' << p.dimm[i] << ' ' << p.pe[i] << ' ' << p.addr[i]
          << '\n';
    f.flush();
    if (!f) throw std::runtime_error("write_placement: write failed for " + path);
}

Placement read_placement(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_placement: cannot open " + path);
    Placement p;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        if (!have_header) {
            if (!(ss >> p.num_dimms >> p.pes_per_dimm))
                throw std::runtime_error("read_placement: bad header at line " +
                                         std::to_string(lineno));
            have_header = true;
            continue;
        }
        std::size_t idx;
        std::uint64_t key, addr;
        std::uint32_t dimm, pe;
        if (!(ss >> idx >> key >> dimm >> pe >> addr))
            throw std::runtime_error("read_placement: bad record at line " +
                                     std::to_string(lineno));
        if (idx != p.keys.size())
            throw std::runtime_error("read_placement: out-of-order mn_idx at line " +
                                     std::to_string(lineno));
        p.keys.push_back(key);
        p.dimm.push_back(dimm);
        p.pe.push_back(pe);
        p.addr.push_back(addr);
        p.rank[key] = static_cast<std::uint32_t>(idx);
    }
    return p;
}

void write_stats(const std::string& path, const SimStats& st) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_stats: cannot open " + path);
    f << "mode=" << mode_name(st.mode) << '\n';
    f << "total_cycles=" << st.total_cycles << '\n';
    f << "read_bytes=" << st.read_bytes << '\n';
    f << "write_bytes=" << st.write_bytes << '\n';
    f << "completed_records=" << st.completed_records << '\n';
    f << "barrier_violations=" << st.barrier_violations << '\n';
    f << "cpu_busy_cycles=" << st.cpu_busy_cycles << '\n';
    f << "transfers_same_pe=" << st.transfers_same_pe << '\n';
    f << "transfers_intra_dimm=" << st.transfers_intra_dimm << '\n';
    f << "transfers_inter_dimm=" << st.transfers_inter_dimm << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", st.bandwidth_utilization);
    f << "bandwidth_utilization=" << buf << '\n';
    f << "pe_busy_cycles=";
    for (std::size_t i = 0; i < st.pe_busy_cycles.size(); ++i)
        f << (i ? "," : "") << st.pe_busy_cycles[i];
    f << '\n';
    f << "channel_busy_cycles=";
    for (std::size_t i = 0; i < st.per_channel_busy_cycles.size(); ++i)
        f << (i ? "," : "") << st.per_channel_busy_cycles[i];
    f << '\n';
    f.flush();
    if (!f) throw std::runtime_error("write_stats: write failed for " + path);
}

SimStats read_stats(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_stats: cannot open " + path);
    SimStats st;
    std::string line;
    auto parse_list = [](const std::string& s) {
        std::vector<std::uint64_t> v;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) if (!tok.empty()) v.push_back(std::stoull(tok));
        return v;
    };
    while (std::getline(f, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "mode") st.mode = mode_from_name(val);
        else if (key == "total_cycles") st.total_cycles = std::stoull(val);
        else if (key == "read_bytes") st.read_bytes = std::stoull(val);
        else if (key == "write_bytes") st.write_bytes = std::stoull(val);
        else if (key == "completed_records") st.completed_records = std::stoull(val);
        else if (key == "barrier_violations") st.barrier_violations = std::stoull(val);
        else if (key == "cpu_busy_cycles") st.cpu_busy_cycles = std::stoull(val);
        else if (key == "transfers_same_pe") st.transfers_same_pe = std::stoull(val);
        else if (key == "transfers_intra_dimm") st.transfers_intra_dimm = std::stoull(val);
        else if (key == "transfers_inter_dimm") st.transfers_inter_dimm = std::stoull(val);
        else if (key == "bandwidth_utilization") st.bandwidth_utilization = std::stod(val);
        else if (key == "pe_busy_cycles") st.pe_busy_cycles = parse_list(val);
        else if (key == "channel_busy_cycles") st.per_channel_busy_cycles = parse_list(val);
    }
    return st;
}

}  // namespace mnasm
