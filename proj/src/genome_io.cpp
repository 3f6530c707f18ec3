#include "mnasm/genome_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "mnasm/kmer.hpp"

namespace mnasm {

namespace {

// Strips a trailing \r so both \n and \r\n line endings parse.
inline void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool clean_bases(std::string& s) {
    // Uppercases in place; returns false if any base is outside ACGT.
    bool ok = true;
    for (char& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (base_code(c) < 0) ok = false;
    }
    return ok;
}

}  // namespace

ReadSet read_fasta(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_fasta: cannot open " + path);
    ReadSet out;
    std::string line;
    std::string id, seq;
    bool have_record = false;
    std::size_t lineno = 0;
    auto flush = [&]() {
        if (!have_record) return;
        if (clean_bases(seq))
            out.reads.push_back(Read{id, seq});
        else
            ++out.dropped;
        seq.clear();
    };
    while (std::getline(f, line)) {
        ++lineno;
        chomp(line);
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            id = line.substr(1);
            // trim description after first whitespace
            auto sp = id.find_first_of(" \t");
            if (sp != std::string::npos) id.resize(sp);
            if (id.empty())
                throw std::runtime_error("read_fasta: empty header at line " +
                                         std::to_string(lineno) + " in " + path);
            have_record = true;
        } else {
            if (!have_record)
                throw std::runtime_error("read_fasta: sequence before any header at line " +
                                         std::to_string(lineno) + " in " + path);
            seq += line;
        }
    }
    flush();
    return out;
}

ReadSet read_fastq(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_fastq: cannot open " + path);
    ReadSet out;
    std::string header, seq, plus, qual;
    std::size_t record = 0;
    while (std::getline(f, header)) {
        chomp(header);
        if (header.empty()) continue;
        ++record;
        if (header[0] != '@')
            throw std::runtime_error("read_fastq: record " + std::to_string(record) +
                                     " does not start with '@' in " + path);
        if (!std::getline(f, seq) || !std::getline(f, plus) || !std::getline(f, qual))
            throw std::runtime_error("read_fastq: truncated record " + std::to_string(record) +
                                     " in " + path);
        chomp(seq);
        chomp(plus);
        chomp(qual);
        if (plus.empty() || plus[0] != '+')
            throw std::runtime_error("read_fastq: record " + std::to_string(record) +
                                     " missing '+' separator in " + path);
        if (qual.size() != seq.size())
            throw std::runtime_error("read_fastq: record " + std::to_string(record) +
                                     " length mismatch between sequence and quality in " + path);
        std::string id = header.substr(1);
        auto sp = id.find_first_of(" \t");
        if (sp != std::string::npos) id.resize(sp);
        if (clean_bases(seq))
            out.reads.push_back(Read{id, seq});
        else
            ++out.dropped;
    }
    return out;
}

void write_fasta(const std::vector<Contig>& contigs, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_fasta: cannot open " + path);
    for (const auto& c : contigs) f << '>' << c.id << '\n' << c.bases << '\n';
    f.flush();
    if (!f) throw std::runtime_error("write_fasta: write failed for " + path);
}

std::vector<Read> simulate_reads(std::string_view genome, unsigned read_len, double coverage,
                                 std::uint64_t seed) {
    if (read_len == 0) throw std::invalid_argument("simulate_reads: read_len must be > 0");
    if (genome.size() < read_len)
        throw std::invalid_argument("simulate_reads: read_len " + std::to_string(read_len) +
                                    " exceeds genome length " + std::to_string(genome.size()));
    std::size_t n = static_cast<std::size_t>(
        std::ceil(coverage * static_cast<double>(genome.size()) / read_len));
    std::vector<Read> reads;
    reads.reserve(n);
    std::mt19937_64 rng(seed);
    std::size_t span = genome.size() - read_len + 1;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t off = rng() % span;  // modulo bias is irrelevant at these spans
        reads.push_back(Read{"r" + std::to_string(i), std::string(genome.substr(off, read_len))});
    }
    return reads;
}

std::string random_genome(std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::string g(len, 'A');
    for (auto& c : g) c = code_base(static_cast<int>(rng() % 4));
    return g;
}

}  // namespace mnasm
