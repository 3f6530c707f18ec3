#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "mnasm/contig.hpp"
#include "mnasm/genome_io.hpp"
#include "mnasm/nmp_sim.hpp"
#include "oracles.hpp"

using namespace mnasm;

namespace {

struct Workload {
    PakGraph graph;
    Placement placement;
    CompactionLog log;
};

Workload make_workload(std::size_t genome_len, unsigned k, double cov, std::uint64_t seed,
                       const SimConfig& cfg) {
    Workload w;
    std::string genome = random_genome(genome_len, seed);
    auto reads = simulate_reads(genome, 100, cov, seed + 1);
    auto counts = count_kmers(extract_kmers(reads, k).kmers);
    w.graph = build_macronodes(counts, boundary_census(reads, k), k);
    w.placement = build_placement(w.graph, cfg);
    run_to_fixpoint(w.graph, w.graph.nodes.size() + 1, cfg.cpu_threshold, &w.log);
    return w;
}

std::size_t lines(std::uint64_t bytes) { return (bytes + 63) / 64; }

// Recount of expected trace records straight from the compaction log,
// independent of gen_trace's emission loop.
void expected_records(const CompactionLog& log, SimMode mode, std::size_t& reads,
                      std::size_t& writes) {
    reads = writes = 0;
    for (const auto& il : log) {
        if (mode == SimMode::cpu_baseline) {
            for (const auto& nr : il.p1_reads) reads += 2 * lines(nr.full_bytes);
            for (const auto& ev : il.transfers) {
                writes += lines(ev.tn_bytes);               // extraction materializes the TN
                reads += lines(ev.tn_bytes);                // update pass reads it back
                reads += lines(ev.dest_read_bytes);
                writes += lines(ev.dest_write_bytes);
            }
            continue;
        }
        for (const auto& nr : il.p1_reads) reads += lines(nr.p1_bytes);
        for (const auto& [key, wb] : il.p2_reads) reads += lines(wb);
        for (const auto& ev : il.transfers) {
            if (mode != SimMode::ideal_forwarding) reads += lines(ev.dest_read_bytes);
            writes += lines(ev.dest_write_bytes);
        }
    }
}

}  // namespace

TEST_CASE("group sizes round up to whole 64-byte lines") {
    CompactionLog log(1);
    log[0].p1_reads.push_back({1111, 46, 54});
    log[0].p1_reads.push_back({2222, 100, 130});
    PakGraph g;
    g.k = 9;
    MacroNode a, b;
    a.km1 = encode_kmer("ACGTACGT");
    b.km1 = encode_kmer("CCGTACGT");
    g.nodes[1111] = a;
    g.nodes[2222] = b;
    // hand placement: two nodes, one dimm
    Placement pl;
    pl.num_dimms = 1;
    pl.pes_per_dimm = 4;
    pl.keys = {1111, 2222};
    pl.dimm = {0, 0};
    pl.pe = {0, 1};
    pl.addr = {0, 128};
    pl.rank[1111] = 0;
    pl.rank[2222] = 1;

    auto tr = gen_trace(log, pl, SimMode::nmp);
    REQUIRE(tr.size() == 3);  // 1 + 2 records
    CHECK(tr[0].mn_idx == 0);
    CHECK(tr[0].bytes == 64);
    CHECK(tr[1].mn_idx == 1);
    CHECK(tr[2].mn_idx == 1);
    CHECK(tr[2].addr == tr[1].addr + 64);
}

TEST_CASE("chain workload: frozen record counts per mode") {
    SimConfig cfg;
    std::vector<Read> reads{{"r0", "AGTCA"}};
    auto counts = count_kmers(extract_kmers(reads, 3).kmers);
    PakGraph g = build_macronodes(counts, boundary_census(reads, 3), 3);
    Placement pl = build_placement(g, cfg);
    CompactionLog log;
    run_to_fixpoint(g, g.nodes.size() + 1, cfg.cpu_threshold, &log);

    auto count_rw = [&](SimMode m, std::size_t& r, std::size_t& w) {
        auto tr = gen_trace(log, pl, m);
        r = w = 0;
        for (const auto& rec : tr) (rec.write ? w : r)++;
    };
    std::size_t r, w;
    count_rw(SimMode::nmp, r, w);
    CHECK(r == 18);  // 4+1+2, 3+1+2, 2+1+1, 1 across the four iterations
    CHECK(w == 5);
    count_rw(SimMode::cpu_baseline, r, w);
    CHECK(r == 30);  // two full scans per iteration plus TN readbacks and dest reads
    CHECK(w == 10);
    count_rw(SimMode::ideal_forwarding, r, w);
    CHECK(r == 13);  // the five destination re-reads are forwarded
    CHECK(w == 5);

    // the independent recount agrees
    for (SimMode m : {SimMode::nmp, SimMode::cpu_baseline, SimMode::ideal_forwarding}) {
        std::size_t er, ew;
        expected_records(log, m, er, ew);
        count_rw(m, r, w);
        CHECK(er == r);
        CHECK(ew == w);
    }

    // baseline reads roughly double the pipeline reads (Fig. 10 shape)
    CHECK(30.0 / 18.0 > 1.5);
    CHECK(30.0 / 18.0 < 2.9);
}

TEST_CASE("gen_trace record counts match the independent recount on a real workload") {
    SimConfig cfg;
    Workload w = make_workload(1500, 11, 20.0, 42, cfg);
    for (SimMode m : {SimMode::nmp, SimMode::cpu_baseline, SimMode::ideal_forwarding}) {
        auto tr = gen_trace(w.log, w.placement, m);
        std::size_t r = 0, wr = 0;
        for (const auto& rec : tr) (rec.write ? wr : r)++;
        std::size_t er, ew;
        expected_records(w.log, m, er, ew);
        CHECK(r == er);
        CHECK(wr == ew);
    }
    // ideal_pe shares the nmp trace
    auto a = gen_trace(w.log, w.placement, SimMode::nmp);
    auto b = gen_trace(w.log, w.placement, SimMode::ideal_pe);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].addr == b[i].addr);
}

TEST_CASE("empty trace simulates to all-zero stats") {
    SimConfig cfg;
    Placement pl;
    pl.num_dimms = cfg.num_dimms();
    pl.pes_per_dimm = cfg.pes_per_channel;
    SimStats st = simulate({}, cfg, pl);
    CHECK(st.total_cycles == 0);
    CHECK(st.read_bytes == 0);
    CHECK(st.write_bytes == 0);
    CHECK(st.completed_records == 0);
    CHECK(st.bandwidth_utilization == 0.0);
}

TEST_CASE("a single cold-bank read costs tRP+tRCD+tCL+burst") {
    SimConfig cfg;
    Placement pl;
    pl.num_dimms = cfg.num_dimms();
    pl.pes_per_dimm = cfg.pes_per_channel;
    pl.keys = {7};
    pl.dimm = {0};
    pl.pe = {0};
    pl.addr = {0};
    pl.rank[7] = 0;
    std::vector<TraceRecord> tr{{false, 0, 0, 64, Stage::P1, 0}};
    SimStats st = simulate(tr, cfg, pl);
    CHECK(st.total_cycles == 70);  // 22 + 22 + 22 + 4

    // a second read hitting the same bank's open row costs only tCL+burst
    // more (line 16 maps back onto bank 0, same row)
    std::vector<TraceRecord> two{{false, 0, 0, 64, Stage::P1, 0},
                                 {false, 0, 16 * 64, 64, Stage::P1, 0}};
    SimStats st2 = simulate(two, cfg, pl);
    CHECK(st2.total_cycles == 70 + cfg.tcl + cfg.burst_cycles);

    // different banks overlap their activations, serializing only the burst
    std::vector<TraceRecord> par{{false, 0, 0, 64, Stage::P1, 0},
                                 {false, 0, 64, 64, Stage::P1, 0}};
    SimStats st3 = simulate(par, cfg, pl);
    CHECK(st3.total_cycles == 70 + cfg.burst_cycles);
}

TEST_CASE("mode dominance and conservation on a desk workload") {
    SimConfig cfg;
    Workload w = make_workload(2000, 11, 25.0, 7, cfg);

    auto run = [&](SimMode gen_mode, SimMode sim_mode) {
        auto tr = gen_trace(w.log, w.placement, gen_mode);
        SimConfig c = cfg;
        c.mode = sim_mode;
        SimStats st = simulate(tr, c, w.placement);
        CHECK(st.completed_records == tr.size());
        CHECK(st.read_bytes + st.write_bytes == 64ull * tr.size());
        CHECK(st.barrier_violations == 0);
        if (!tr.empty()) {
            CHECK(st.bandwidth_utilization > 0.0);
            CHECK(st.bandwidth_utilization <= 1.0);
        }
        std::uint64_t busy_total = 0;
        for (auto b : st.pe_busy_cycles) {
            CHECK(b <= st.total_cycles);
            busy_total += b;
        }
        return st;
    };

    SimStats nmp = run(SimMode::nmp, SimMode::nmp);
    SimStats ideal = run(SimMode::nmp, SimMode::ideal_pe);
    SimStats fwd = run(SimMode::ideal_forwarding, SimMode::ideal_forwarding);
    SimStats base = run(SimMode::cpu_baseline, SimMode::cpu_baseline);

    CHECK(ideal.total_cycles <= nmp.total_cycles);
    CHECK(nmp.total_cycles < base.total_cycles);
    CHECK(fwd.read_bytes <= nmp.read_bytes);
    CHECK(nmp.read_bytes <= base.read_bytes);
    CHECK(nmp.read_bytes >= nmp.write_bytes);
}

TEST_CASE("route_class splits by placement") {
    Placement pl;
    pl.num_dimms = 4;
    pl.pes_per_dimm = 4;
    pl.keys = {1, 2, 3, 4};
    pl.dimm = {0, 0, 0, 2};
    pl.pe = {1, 1, 3, 1};
    pl.addr = {0, 64, 128, 192};
    CHECK(route_class(0, 1, pl) == RouteClass::same_pe);
    CHECK(route_class(0, 2, pl) == RouteClass::intra_dimm);
    CHECK(route_class(0, 3, pl) == RouteClass::inter_dimm);
}

TEST_CASE("uniform placement sends 7/8 of transfers across DIMMs") {
    SimConfig cfg;
    cfg.channels = 8;
    cfg.dimms_per_channel = 1;
    cfg.pes_per_channel = 16;
    std::string genome = random_genome(2000, 3);
    auto reads = simulate_reads(genome, 100, 10.0, 4);
    auto counts = count_kmers(extract_kmers(reads, 11).kmers);
    PakGraph g = build_macronodes(counts, boundary_census(reads, 11), 11);
    Placement pl = build_placement(g, cfg, PlacementMode::uniform, 99);

    std::mt19937_64 rng(17);
    std::size_t inter = 0, intra = 0, same = 0, n = 40000;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t a = rng() % pl.keys.size();
        std::uint32_t b = rng() % pl.keys.size();
        switch (route_class(a, b, pl)) {
            case RouteClass::inter_dimm: ++inter; break;
            case RouteClass::intra_dimm: ++intra; break;
            case RouteClass::same_pe: ++same; break;
        }
    }
    double inter_frac = double(inter) / n;
    CHECK(inter_frac > 0.855);
    CHECK(inter_frac < 0.895);
    double diff_pe = double(intra) / (intra + same);
    CHECK(diff_pe > 0.9175);
    CHECK(diff_pe < 0.9575);
}

TEST_CASE("pe sweep is monotone with idle PEs accounted") {
    SimConfig cfg;
    Workload w = make_workload(2000, 11, 20.0, 19, cfg);
    auto tr = gen_trace(w.log, w.placement, SimMode::nmp);
    auto sweep = sweep_pes(tr, cfg, w.placement, {1, 2, 4, 8, 16, 32, 64});
    for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i].second <= sweep[i - 1].second);
    int sat = saturation_index(sweep);
    CHECK(sat >= 0);  // saturation shows up within the swept range

    // 64 PEs on one DIMM with a 4-node chain leaves at least 60 idle
    SimConfig small;
    small.channels = 1;
    small.dimms_per_channel = 1;
    small.pes_per_channel = 64;
    std::vector<Read> reads{{"r0", "AGTCA"}};
    auto counts = count_kmers(extract_kmers(reads, 3).kmers);
    PakGraph chain = build_macronodes(counts, boundary_census(reads, 3), 3);
    Placement pl = build_placement(chain, small);
    CompactionLog log;
    run_to_fixpoint(chain, chain.nodes.size() + 1, small.cpu_threshold, &log);
    SimStats st = simulate(gen_trace(log, pl, SimMode::nmp), small, pl);
    std::size_t idle = 0;
    for (auto b : st.pe_busy_cycles) idle += b == 0;
    CHECK(st.pe_busy_cycles.size() == 64);
    CHECK(idle >= 60);
}

TEST_CASE("report normalization") {
    SimStats a;
    a.total_cycles = 1000;
    a.read_bytes = 4000;
    a.write_bytes = 1000;
    ComparisonReport self = report_stats(a, a);
    CHECK(self.speedup == doctest::Approx(1.0));
    CHECK(self.norm_reads == doctest::Approx(1.0));
    CHECK(self.norm_writes == doctest::Approx(0.25));

    SimStats faster = a;
    faster.total_cycles = 250;
    faster.read_bytes = 2000;
    ComparisonReport rep = report_stats(faster, a);
    CHECK(rep.speedup == doctest::Approx(4.0));
    CHECK(rep.norm_reads == doctest::Approx(0.5));
}

TEST_CASE("trace files round-trip and parse errors name the line") {
    SimConfig cfg;
    Workload w = make_workload(800, 9, 15.0, 23, cfg);
    auto tr = gen_trace(w.log, w.placement, SimMode::nmp);
    write_trace("t.trace", tr);
    for (unsigned workers : {1u, 2u, 4u}) {
        auto rt = read_trace("t.trace", workers);
        REQUIRE(rt.size() == tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) {
            CHECK(rt[i].write == tr[i].write);
            CHECK(rt[i].mn_idx == tr[i].mn_idx);
            CHECK(rt[i].addr == tr[i].addr);
            CHECK(rt[i].stage == tr[i].stage);
            CHECK(rt[i].iter == tr[i].iter);
        }
    }
    std::remove("t.trace");

    std::ofstream bad("bad.trace");
    bad << "R 0 0 64 P1 0\nR 0 zzz 64 P1 0\n";
    bad.close();
    CHECK_THROWS_WITH_AS(read_trace("bad.trace"), doctest::Contains("line 2"),
                         std::runtime_error);
    std::remove("bad.trace");
}

TEST_CASE("placement sidecar round-trips") {
    SimConfig cfg;
    Workload w = make_workload(600, 9, 10.0, 31, cfg);
    write_placement("t.place", w.placement);
    Placement rt = read_placement("t.place");
    CHECK(rt.num_dimms == w.placement.num_dimms);
    CHECK(rt.pes_per_dimm == w.placement.pes_per_dimm);
    REQUIRE(rt.keys.size() == w.placement.keys.size());
    for (std::size_t i = 0; i < rt.keys.size(); ++i) {
        CHECK(rt.keys[i] == w.placement.keys[i]);
        CHECK(rt.dimm[i] == w.placement.dimm[i]);
        CHECK(rt.pe[i] == w.placement.pe[i]);
        CHECK(rt.addr[i] == w.placement.addr[i]);
    }
    std::remove("t.place");
}

TEST_CASE("stats files round-trip") {
    SimStats st;
    st.mode = SimMode::ideal_forwarding;
    st.total_cycles = 12345;
    st.read_bytes = 888;
    st.write_bytes = 222;
    st.transfers_inter_dimm = 17;
    st.bandwidth_utilization = 0.4375;
    st.pe_busy_cycles = {1, 2, 3};
    st.per_channel_busy_cycles = {9, 8};
    write_stats("t.stats", st);
    SimStats rt = read_stats("t.stats");
    CHECK(rt.mode == st.mode);
    CHECK(rt.total_cycles == st.total_cycles);
    CHECK(rt.read_bytes == st.read_bytes);
    CHECK(rt.write_bytes == st.write_bytes);
    CHECK(rt.transfers_inter_dimm == st.transfers_inter_dimm);
    CHECK(rt.bandwidth_utilization == doctest::Approx(st.bandwidth_utilization));
    CHECK(rt.pe_busy_cycles == st.pe_busy_cycles);
    CHECK(rt.per_channel_busy_cycles == st.per_channel_busy_cycles);
    std::remove("t.stats");
}

TEST_CASE("config files apply with unknown keys rejected") {
    SimConfig cfg;
    std::ofstream f("t.cfg");
    f << "# comment\nchannels = 4\npes_per_channel=8\nbridge_cycles_per_byte=0.1\nmode=ideal_pe\n";
    f.close();
    cfg.apply_file("t.cfg");
    CHECK(cfg.channels == 4);
    CHECK(cfg.pes_per_channel == 8);
    CHECK(cfg.bridge_cycles_per_byte == doctest::Approx(0.1));
    CHECK(cfg.mode == SimMode::ideal_pe);
    std::remove("t.cfg");

    std::ofstream g2("t2.cfg");
    g2 << "nonsense=1\n";
    g2.close();
    CHECK_THROWS_AS(cfg.apply_file("t2.cfg"), std::runtime_error);
    std::remove("t2.cfg");
}

TEST_CASE("simulation is bit-stable across reruns and worker counts") {
    SimConfig cfg;
    Workload w = make_workload(1200, 11, 15.0, 77, cfg);
    auto tr = gen_trace(w.log, w.placement, SimMode::nmp);
    SimStats first = simulate(tr, cfg, w.placement);
    for (unsigned workers : {1u, 2u, 4u}) {
        SimConfig c = cfg;
        c.workers = workers;
        SimStats st = simulate(tr, c, w.placement);
        CHECK(st.total_cycles == first.total_cycles);
        CHECK(st.read_bytes == first.read_bytes);
        CHECK(st.write_bytes == first.write_bytes);
        CHECK(st.barrier_violations == first.barrier_violations);
        CHECK(st.pe_busy_cycles == first.pe_busy_cycles);
        CHECK(st.per_channel_busy_cycles == first.per_channel_busy_cycles);
    }
}

TEST_CASE("hybrid offload routes oversized node groups through the CPU agent") {
    SimConfig cfg;
    cfg.cpu_threshold = 256;
    CompactionLog log(1);
    // one small node and one 20-line node
    log[0].p1_reads.push_back({1, 100, 108});
    log[0].p1_reads.push_back({2, 1280, 1288});
    Placement pl;
    pl.num_dimms = cfg.num_dimms();
    pl.pes_per_dimm = cfg.pes_per_channel;
    pl.keys = {1, 2};
    pl.dimm = {0, 0};
    pl.pe = {0, 1};
    pl.addr = {0, 4096};
    pl.rank[1] = 0;
    pl.rank[2] = 1;
    auto tr = gen_trace(log, pl, SimMode::nmp);
    SimStats st = simulate(tr, cfg, pl);
    CHECK(st.cpu_busy_cycles > 0);  // the big node computed on the CPU side
    std::uint64_t pe_total = 0;
    for (auto b : st.pe_busy_cycles) pe_total += b;
    CHECK(pe_total > 0);  // the small node stayed on its PE
}

TEST_CASE("trace referencing an unknown node index is an error") {
    SimConfig cfg;
    Placement pl;
    pl.num_dimms = cfg.num_dimms();
    pl.pes_per_dimm = cfg.pes_per_channel;
    std::vector<TraceRecord> tr{{false, 5, 0, 64, Stage::P1, 0}};
    CHECK_THROWS_AS(simulate(tr, cfg, pl), std::runtime_error);
}
