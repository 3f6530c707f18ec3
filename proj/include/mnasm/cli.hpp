#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mnasm/nmp_sim.hpp"

namespace mnasm {

// Resolved run parameters. Precedence: CLI flags > config file > defaults;
// the config file is plain key=value lines shared with SimConfig.
struct RunConfig {
    unsigned k = 32;
    double batch_fraction = 0.1;
    double coverage = 30.0;
    std::uint64_t seed = 1;
    unsigned read_len = 100;
    std::uint64_t min_count = 1;
    std::string reads_path;
    std::string genome_path;
    std::size_t synthetic_len = 0;
    std::string out_dir = "out";
    SimConfig sim;

    void apply_kv(const std::string& key, const std::string& value);
    void apply_file(const std::string& path);
    void validate() const;  // throws on out-of-range parameters
};

int cmd_assemble(const RunConfig& rc);
int cmd_trace(const RunConfig& rc);
int cmd_simulate(const RunConfig& rc, const std::string& trace_path, const std::string& mode,
                 const std::string& baseline_stats_path);
int cmd_sweep(const RunConfig& rc, const std::string& trace_path,
              const std::vector<unsigned>& pe_counts);
int cmd_report(const std::string& stats_path, const std::string& baseline_stats_path);

}  // namespace mnasm
