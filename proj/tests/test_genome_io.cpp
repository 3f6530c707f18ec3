#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mnasm/genome_io.hpp"
#include "oracles.hpp"

using namespace mnasm;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream f(path, std::ios::binary);
        f << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

// Minimal reference FASTA parser: header + verbatim concatenated lines,
// rejecting any record with a non-ACGT base.
std::pair<std::vector<std::string>, std::size_t> naive_fasta(const std::string& text) {
    std::vector<std::string> kept;
    std::size_t dropped = 0;
    std::string seq;
    bool open = false;
    auto flush = [&]() {
        if (!open) return;
        bool ok = true;
        for (char c : seq)
            if (c != 'A' && c != 'C' && c != 'G' && c != 'T') ok = false;
        if (ok) kept.push_back(seq); else ++dropped;
        seq.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t e = text.find('\n', i);
        if (e == std::string::npos) e = text.size();
        std::string line = text.substr(i, e - i);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '>') {
            flush();
            open = true;
        } else if (!line.empty()) {
            seq += line;
        }
        i = e + 1;
    }
    flush();
    return {kept, dropped};
}

}  // namespace

TEST_CASE("fasta single record") {
    TempFile f("t1.fa", ">r1\nACGT\n");
    ReadSet rs = read_fasta(f.path);
    REQUIRE(rs.reads.size() == 1);
    CHECK(rs.reads[0].id == "r1");
    CHECK(rs.reads[0].bases == "ACGT");
}

TEST_CASE("fasta folds multi-line sequences and normalizes case") {
    TempFile f("t2.fa", ">r1\nAC\ngt\n");
    ReadSet rs = read_fasta(f.path);
    REQUIRE(rs.reads.size() == 1);
    CHECK(rs.reads[0].bases == "ACGT");
}

TEST_CASE("fasta drops records with ambiguous bases and counts them") {
    TempFile f("t3.fa", ">r1\nACNT\n");
    ReadSet rs = read_fasta(f.path);
    CHECK(rs.reads.empty());
    CHECK(rs.dropped == 1);
}

TEST_CASE("fasta N-policy matches the hand-written oracle parser") {
    std::string text = ">a\nACGT\n>b\nACNT\nACGT\n>c\nTT\nGG\n>d\nNNNN\n";
    TempFile f("t4.fa", text);
    ReadSet rs = read_fasta(f.path);
    auto [kept, dropped] = naive_fasta(text);
    REQUIRE(rs.reads.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(rs.reads[i].bases == kept[i]);
    CHECK(rs.dropped == dropped);
}

TEST_CASE("fasta empty file is an empty list, not an error") {
    TempFile f("t5.fa", "");
    CHECK(read_fasta(f.path).reads.empty());
}

TEST_CASE("fasta errors carry line numbers") {
    TempFile f("t6.fa", "ACGT\n");
    CHECK_THROWS_WITH_AS(read_fasta(f.path), doctest::Contains("line 1"), std::runtime_error);
    TempFile g("t7.fa", ">r1\nACGT\n>\nACGT\n");
    CHECK_THROWS_WITH_AS(read_fasta(g.path), doctest::Contains("line 3"), std::runtime_error);
    CHECK_THROWS_AS(read_fasta("does_not_exist.fa"), std::runtime_error);
}

TEST_CASE("fasta accepts CRLF line endings") {
    TempFile f("t8.fa", ">r1\r\nAC\r\nGT\r\n");
    ReadSet rs = read_fasta(f.path);
    REQUIRE(rs.reads.size() == 1);
    CHECK(rs.reads[0].bases == "ACGT");
}

TEST_CASE("fastq single record ignores qualities") {
    TempFile f("t9.fq", "@r1\nACGT\n+\nIIII\n");
    ReadSet rs = read_fastq(f.path);
    REQUIRE(rs.reads.size() == 1);
    CHECK(rs.reads[0].id == "r1");
    CHECK(rs.reads[0].bases == "ACGT");
}

TEST_CASE("fastq keeps file order over multiple records") {
    TempFile f("t10.fq", "@r1\nAC\n+\nII\n@r2\nGT\n+\nII\n");
    ReadSet rs = read_fastq(f.path);
    REQUIRE(rs.reads.size() == 2);
    CHECK(rs.reads[0].bases == "AC");
    CHECK(rs.reads[1].bases == "GT");
}

TEST_CASE("fastq truncated record names the record index") {
    TempFile f("t11.fq", "@r1\nACGT\n+\nIIII\n@r2\nACGT\n");
    CHECK_THROWS_WITH_AS(read_fastq(f.path), doctest::Contains("record 2"), std::runtime_error);
}

TEST_CASE("fastq length mismatch is an error") {
    TempFile f("t12.fq", "@r1\nACGT\n+\nII\n");
    CHECK_THROWS_AS(read_fastq(f.path), std::runtime_error);
}

TEST_CASE("write_fasta emits one sequence line per contig") {
    std::string path = "t13.fa";
    write_fasta({Contig{"c1", "ACGT"}}, path);
    std::ifstream f(path);
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content == ">c1\nACGT\n");
    std::remove(path.c_str());
}

TEST_CASE("write_fasta of an empty list is an empty file") {
    std::string path = "t14.fa";
    write_fasta({}, path);
    std::ifstream f(path);
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content.empty());
    std::remove(path.c_str());
}

TEST_CASE("fasta round-trip reproduces ids and bases") {
    std::mt19937_64 rng(3);
    std::vector<Contig> contigs;
    for (int i = 0; i < 25; ++i)
        contigs.push_back(Contig{"c" + std::to_string(i), oracle::random_dna(1 + rng() % 200, rng())});
    std::string path = "t15.fa";
    write_fasta(contigs, path);
    ReadSet rs = read_fasta(path);
    REQUIRE(rs.reads.size() == contigs.size());
    for (std::size_t i = 0; i < contigs.size(); ++i) {
        CHECK(rs.reads[i].id == contigs[i].id);
        CHECK(rs.reads[i].bases == contigs[i].bases);
    }
    std::remove(path.c_str());
}

TEST_CASE("simulate_reads produces the documented count") {
    auto reads = simulate_reads("ACGTACGT", 4, 1.0, 7);
    CHECK(reads.size() == 2);  // ceil(1.0 * 8 / 4)
    for (const auto& r : reads) CHECK(oracle::is_substring("ACGTACGT", r.bases));

    CHECK(simulate_reads("ACGTACGT", 4, 0.0, 7).empty());
    CHECK_THROWS_AS(simulate_reads("ACG", 4, 1.0, 7), std::invalid_argument);
}

TEST_CASE("every simulated read is an exact substring and totals meet coverage") {
    std::string genome = oracle::random_dna(2000, 99);
    auto reads = simulate_reads(genome, 100, 12.5, 4);
    std::size_t total = 0;
    for (const auto& r : reads) {
        CHECK(r.bases.size() == 100);
        CHECK(oracle::is_substring(genome, r.bases));
        total += r.bases.size();
    }
    CHECK(total >= std::size_t(12.5 * genome.size()) - 100);
}

TEST_CASE("simulate_reads is deterministic per seed") {
    std::string genome = oracle::random_dna(500, 1);
    auto a = simulate_reads(genome, 50, 3.0, 42);
    auto b = simulate_reads(genome, 50, 3.0, 42);
    auto c = simulate_reads(genome, 50, 3.0, 43);
    REQUIRE(a.size() == b.size());
    bool same = true, diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same = same && a[i].bases == b[i].bases;
        diff = diff || a[i].bases != c[i].bases;
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("random_genome is deterministic and ACGT-only") {
    std::string g1 = random_genome(300, 5);
    std::string g2 = random_genome(300, 5);
    CHECK(g1 == g2);
    for (char c : g1) CHECK((c == 'A' || c == 'C' || c == 'G' || c == 'T'));
}
