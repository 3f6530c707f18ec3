// Independent reference implementations the tests check the library
// against. Everything here works on plain strings and brute force so it
// shares no code path with the implementation under test.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

// All length-k windows of a read, as strings.
inline std::vector<std::string> window_kmers(const std::string& s, unsigned k) {
    std::vector<std::string> out;
    if (s.size() < k) return out;
    for (std::size_t i = 0; i + k <= s.size(); ++i) out.push_back(s.substr(i, k));
    return out;
}

// Multiset counter over decoded k-mer strings.
inline std::map<std::string, std::size_t> count_multiset(const std::vector<std::string>& kmers) {
    std::map<std::string, std::size_t> m;
    for (const auto& s : kmers) ++m[s];
    return m;
}

// Hand-rolled de Bruijn view of a read set: per (k-1)-mer, the multiset of
// single-base prefixes/suffixes plus read start/end markers.
struct DbgNode {
    std::map<char, std::size_t> prefixes, suffixes;
    std::size_t starts = 0, ends = 0;
};

inline std::map<std::string, DbgNode> naive_dbg(const std::vector<std::string>& reads,
                                                unsigned k) {
    std::map<std::string, DbgNode> g;
    for (const auto& r : reads) {
        if (r.size() < k) continue;
        for (std::size_t i = 0; i + k <= r.size(); ++i) {
            std::string km = r.substr(i, k);
            g[km.substr(1)].prefixes[km.front()] += 1;   // node keyed by k-mer suffix
            g[km.substr(0, k - 1)].suffixes[km.back()] += 1;
        }
        g[r.substr(0, k - 1)].starts += 1;
        g[r.substr(r.size() - (k - 1))].ends += 1;
    }
    return g;
}

// True iff `s` occurs in `genome`.
inline bool is_substring(std::string_view genome, std::string_view s) {
    return genome.find(s) != std::string_view::npos;
}

// Fraction of genome positions covered by at least one occurrence of any
// contig.
inline double coverage_fraction(std::string_view genome,
                                const std::vector<std::string>& contigs) {
    if (genome.empty()) return 0.0;
    std::vector<char> hit(genome.size(), 0);
    for (const auto& c : contigs) {
        std::size_t pos = genome.find(c);
        while (pos != std::string_view::npos) {
            std::fill(hit.begin() + pos, hit.begin() + pos + c.size(), 1);
            pos = genome.find(c, pos + 1);
        }
    }
    std::size_t n = 0;
    for (char h : hit) n += h;
    return double(n) / double(genome.size());
}

inline std::string random_dna(std::size_t len, std::uint64_t seed) {
    static const char b[] = "ACGT";
    std::mt19937_64 rng(seed);
    std::string s(len, 'A');
    for (auto& c : s) c = b[rng() % 4];
    return s;
}

}  // namespace oracle
