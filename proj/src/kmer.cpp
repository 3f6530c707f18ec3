#include "mnasm/kmer.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace mnasm {

namespace {

inline std::uint64_t low_mask_keep_top(unsigned bases) {
    // Mask that keeps the top 2*bases bits of a 64-bit word.
    if (bases == 0) return 0;
    if (bases >= 32) return ~0ull;
    return ~0ull << (64 - 2 * bases);
}

}  // namespace

int base_code(char c) {
    switch (c) {
        case 'A': case 'a': return 0;
        case 'C': case 'c': return 1;
        case 'G': case 'g': return 2;
        case 'T': case 't': return 3;
        default: return -1;
    }
}

char code_base(int code) {
    static const char b[4] = {'A', 'C', 'G', 'T'};
    return b[code & 3];
}

PackedKmer encode_kmer(std::string_view s) {
    if (s.size() > 32)
        throw std::invalid_argument("encode_kmer: length " + std::to_string(s.size()) + " > 32");
    PackedKmer m;
    m.len = static_cast<std::uint8_t>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        int c = base_code(s[i]);
        if (c < 0)
            throw std::invalid_argument("encode_kmer: invalid base '" + std::string(1, s[i]) +
                                        "' at position " + std::to_string(i));
        m.bits |= static_cast<std::uint64_t>(c) << (62 - 2 * i);
    }
    return m;
}

std::string decode_kmer(const PackedKmer& m) {
    std::string s(m.len, 'A');
    for (unsigned i = 0; i < m.len; ++i)
        s[i] = code_base(static_cast<int>((m.bits >> (62 - 2 * i)) & 3));
    return s;
}

PackedKmer kmer_prefix(const PackedKmer& m, unsigned n) {
    if (n > m.len) throw std::invalid_argument("kmer_prefix: n > len");
    PackedKmer r;
    r.len = static_cast<std::uint8_t>(n);
    r.bits = m.bits & low_mask_keep_top(n);
    return r;
}

PackedKmer kmer_suffix(const PackedKmer& m, unsigned n) {
    if (n > m.len) throw std::invalid_argument("kmer_suffix: n > len");
    PackedKmer r;
    r.len = static_cast<std::uint8_t>(n);
    unsigned drop = m.len - n;
    r.bits = (drop >= 32) ? 0 : (m.bits << (2 * drop)) & low_mask_keep_top(n);
    return r;
}

PackedKmer append_base_seq(const PackedKmer& m, const PackedKmer& ext, unsigned keep) {
    unsigned total = m.len + ext.len;
    if (keep > 32) throw std::invalid_argument("append_base_seq: keep > 32");
    if (keep > total) throw std::invalid_argument("append_base_seq: keep exceeds combined length");
    // Drop `total - keep` bases off the front of m.ext, then left-align.
    unsigned drop = total - keep;
    PackedKmer r;
    r.len = static_cast<std::uint8_t>(keep);
    if (drop >= m.len) {
        r.bits = kmer_suffix(ext, ext.len - (drop - m.len)).bits;
    } else {
        std::uint64_t head = kmer_suffix(m, m.len - drop).bits;   // m without its first `drop` bases
        unsigned head_len = m.len - drop;
        std::uint64_t tail = (head_len >= 32) ? 0 : (ext.bits >> (2 * head_len));
        r.bits = (head | tail) & low_mask_keep_top(keep);
    }
    return r;
}

PackedKmer prepend_base_seq(const PackedKmer& m, const PackedKmer& ext, unsigned keep) {
    unsigned total = m.len + ext.len;
    if (keep > 32) throw std::invalid_argument("prepend_base_seq: keep > 32");
    if (keep > total) throw std::invalid_argument("prepend_base_seq: keep exceeds combined length");
    // First `keep` bases of ext.m.
    PackedKmer r;
    r.len = static_cast<std::uint8_t>(keep);
    if (keep <= ext.len) {
        r.bits = kmer_prefix(ext, keep).bits;
    } else {
        std::uint64_t tail = (ext.len >= 32) ? 0 : (m.bits >> (2 * ext.len));
        r.bits = (ext.bits | tail) & low_mask_keep_top(keep);
    }
    return r;
}

KmerExtraction extract_kmers(const std::vector<Read>& reads, unsigned k, unsigned workers) {
    if (k == 0 || k > 32) throw std::invalid_argument("extract_kmers: k must be in [1,32]");
    KmerExtraction out;

    // Per-read output sizes are known up front, so each worker writes into
    // an exactly preallocated slice and the merge is a plain concatenation.
    std::vector<std::size_t> offset(reads.size() + 1, 0);
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < reads.size(); ++i) {
        std::size_t L = reads[i].bases.size();
        std::size_t n = (L >= k) ? (L - k + 1) : 0;
        if (L < k) ++skipped;
        offset[i + 1] = offset[i] + n;
    }
    out.skipped_reads = skipped;
    out.kmers.resize(offset.back());

    auto extract_range = [&](std::size_t lo, std::size_t hi) {
        const std::uint64_t keep = low_mask_keep_top(k);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::string& s = reads[i].bases;
            if (s.size() < k) continue;
            PackedKmer* dst = out.kmers.data() + offset[i];
            std::uint64_t bits = 0;
            for (unsigned j = 0; j < k; ++j) {
                int c = base_code(s[j]);
                if (c < 0) throw std::invalid_argument("extract_kmers: invalid base in read " + reads[i].id);
                bits |= static_cast<std::uint64_t>(c) << (62 - 2 * j);
            }
            dst[0] = PackedKmer{bits, static_cast<std::uint8_t>(k)};
            for (std::size_t j = k; j < s.size(); ++j) {
                int c = base_code(s[j]);
                if (c < 0) throw std::invalid_argument("extract_kmers: invalid base in read " + reads[i].id);
                bits = (bits << 2) | (static_cast<std::uint64_t>(c) << (64 - 2 * k));
                bits &= keep;
                dst[j - k + 1] = PackedKmer{bits, static_cast<std::uint8_t>(k)};
            }
        }
    };

    if (workers <= 1 || reads.size() < 2 * workers) {
        extract_range(0, reads.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (reads.size() + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t lo = std::min<std::size_t>(w * chunk, reads.size());
            std::size_t hi = std::min<std::size_t>(lo + chunk, reads.size());
            if (lo < hi) pool.emplace_back(extract_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    return out;
}

std::vector<KmerCount> count_kmers(std::vector<PackedKmer> kmers) {
    std::vector<KmerCount> out;
    if (kmers.empty()) return out;
    std::uint8_t len = kmers.front().len;
    for (const auto& m : kmers)
        if (m.len != len) throw std::invalid_argument("count_kmers: mixed k-mer lengths");
    std::sort(kmers.begin(), kmers.end(),
              [](const PackedKmer& a, const PackedKmer& b) { return a.bits < b.bits; });
    for (std::size_t i = 0; i < kmers.size();) {
        std::size_t j = i;
        while (j < kmers.size() && kmers[j].bits == kmers[i].bits) ++j;
        out.push_back(KmerCount{kmers[i], j - i});
        i = j;
    }
    return out;
}

std::vector<KmerCount> filter_counts(std::vector<KmerCount> counts, std::uint64_t min_count) {
    if (min_count <= 1) return counts;
    counts.erase(std::remove_if(counts.begin(), counts.end(),
                                [&](const KmerCount& kc) { return kc.count < min_count; }),
                 counts.end());
    return counts;
}

BoundaryCensus boundary_census(const std::vector<Read>& reads, unsigned k) {
    if (k < 2 || k > 32) throw std::invalid_argument("boundary_census: k must be in [2,32]");
    BoundaryCensus c;
    for (const auto& r : reads) {
        if (r.bases.size() < k) continue;
        std::string_view s = r.bases;
        c.starts[encode_kmer(s.substr(0, k - 1)).bits] += 1;
        c.ends[encode_kmer(s.substr(s.size() - (k - 1))).bits] += 1;
    }
    return c;
}

void write_kmer_dump(const std::string& path, unsigned k, const std::vector<PackedKmer>& kmers) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_kmer_dump: cannot open " + path);
    char magic[4] = {'K', 'M', 'R', 'D'};
    std::uint32_t k32 = k;
    std::uint64_t n = kmers.size();
    f.write(magic, 4);
    f.write(reinterpret_cast<const char*>(&k32), 4);
    f.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& m : kmers) f.write(reinterpret_cast<const char*>(&m.bits), 8);
    if (!f) throw std::runtime_error("write_kmer_dump: write failed for " + path);
}

KmerDump read_kmer_dump(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_kmer_dump: cannot open " + path);
    char magic[4];
    std::uint32_t k32 = 0;
    std::uint64_t n = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&k32), 4);
    f.read(reinterpret_cast<char*>(&n), 8);
    if (!f || std::memcmp(magic, "KMRD", 4) != 0)
        throw std::runtime_error("read_kmer_dump: bad header in " + path);
    KmerDump d;
    d.k = k32;
    d.kmers.resize(n);
    for (auto& m : d.kmers) {
        f.read(reinterpret_cast<char*>(&m.bits), 8);
        m.len = static_cast<std::uint8_t>(k32);
    }
    if (!f) throw std::runtime_error("read_kmer_dump: truncated file " + path);
    return d;
}

}  // namespace mnasm
