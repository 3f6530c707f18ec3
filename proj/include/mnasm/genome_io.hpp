#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mnasm {

struct Read {
    std::string id;
    std::string bases;  // ACGT only once past the parser
};

struct Contig {
    std::string id;
    std::string bases;
    std::size_t length() const { return bases.size(); }
};

struct ReadSet {
    std::vector<Read> reads;
    std::size_t dropped = 0;  // records rejected for non-ACGT bases
};

// FASTA parser: '>' header lines, multi-line sequences folded, lowercase
// normalized. Records containing bases outside ACGT are dropped and
// counted. Throws std::runtime_error with a line number on malformed
// input; an empty file yields an empty list.
ReadSet read_fasta(const std::string& path);

// 4-line FASTQ records; quality lines ignored. A truncated final record
// throws an error naming the record index.
ReadSet read_fastq(const std::string& path);

// One record per contig, one sequence line each (round-trips through
// read_fasta). I/O failures are surfaced with the path in the message.
void write_fasta(const std::vector<Contig>& contigs, const std::string& path);

// Error-free uniform sampler standing in for an external read simulator:
// ceil(coverage * |genome| / read_len) exact substrings at seeded
// pseudorandom offsets. Deterministic for a fixed seed.
std::vector<Read> simulate_reads(std::string_view genome, unsigned read_len, double coverage,
                                 std::uint64_t seed);

// Uniform random genome over ACGT, seeded.
std::string random_genome(std::size_t len, std::uint64_t seed);

}  // namespace mnasm
