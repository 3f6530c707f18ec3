#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mnasm/genome_io.hpp"

namespace mnasm {

// A DNA string of up to 32 bases packed 2 bits per base into one 64-bit
// word. Bases are left-aligned: base 0 sits in the top bit pair. With the
// code assignment A=00 < C=01 < G=10 < T=11, unsigned comparison of `bits`
// equals lexicographic comparison of the decoded strings whenever the
// lengths are equal.
struct PackedKmer {
    std::uint64_t bits = 0;
    std::uint8_t len = 0;

    bool operator==(const PackedKmer& o) const { return bits == o.bits && len == o.len; }
    bool operator!=(const PackedKmer& o) const { return !(*this == o); }
    // Lexicographic order of the decoded strings (shorter prefix sorts first).
    bool operator<(const PackedKmer& o) const {
        if (bits != o.bits) return bits < o.bits;
        return len < o.len;
    }
};

// Returns 0..3 for ACGT, -1 otherwise (case-insensitive).
int base_code(char c);
char code_base(int code);

// Packs a DNA string, |s| <= 32. Throws std::invalid_argument naming the
// offending position on a non-ACGT base.
PackedKmer encode_kmer(std::string_view s);
std::string decode_kmer(const PackedKmer& m);

// Last `keep` bases of the concatenation m . ext. Throws if
// keep > |m| + |ext| or keep > 32.
PackedKmer append_base_seq(const PackedKmer& m, const PackedKmer& ext, unsigned keep);
// First `keep` bases of the concatenation ext . m (mirror of the above).
PackedKmer prepend_base_seq(const PackedKmer& m, const PackedKmer& ext, unsigned keep);

// First / last `n` bases of a packed word.
PackedKmer kmer_prefix(const PackedKmer& m, unsigned n);
PackedKmer kmer_suffix(const PackedKmer& m, unsigned n);

struct KmerCount {
    PackedKmer kmer;
    std::uint64_t count = 0;
};

struct KmerExtraction {
    std::vector<PackedKmer> kmers;
    std::size_t skipped_reads = 0;  // reads shorter than k
};

// Sliding-window extraction, k <= 32. Per-read windows are emitted in
// position order; reads are processed in list order. `workers` > 1 shards
// reads across threads with per-worker output buffers sized up front; the
// merged result is identical to the serial one.
KmerExtraction extract_kmers(const std::vector<Read>& reads, unsigned k, unsigned workers = 1);

// Sort-and-collapse counting: output ascending by kmer, counts are input
// multiplicities. Throws on mixed input lengths.
std::vector<KmerCount> count_kmers(std::vector<PackedKmer> kmers);

// Drops entries below min_count. With error-free reads the default of 1
// keeps everything; aggressive thresholds can unbalance node construction
// downstream, which build_macronodes reports as a consistency error.
std::vector<KmerCount> filter_counts(std::vector<KmerCount> counts, std::uint64_t min_count);

struct BoundaryCensus {
    std::map<std::uint64_t, std::uint64_t> starts;  // first (k-1)-mer per read
    std::map<std::uint64_t, std::uint64_t> ends;    // last (k-1)-mer per read
};

// Counts the first and last (k-1)-mer of every read of length >= k.
BoundaryCensus boundary_census(const std::vector<Read>& reads, unsigned k);

// Binary k-mer dump: 16-byte header (magic "KMRD", u32 k, u64 count)
// followed by little-endian 64-bit packed words.
void write_kmer_dump(const std::string& path, unsigned k, const std::vector<PackedKmer>& kmers);
struct KmerDump {
    unsigned k = 0;
    std::vector<PackedKmer> kmers;
};
KmerDump read_kmer_dump(const std::string& path);

}  // namespace mnasm
