#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fdr/dataset.hpp"
#include "fdr/sim.hpp"

namespace fdr {

enum class CampaignMode { Statistical, Exhaustive };

struct CampaignConfig {
    CampaignMode mode = CampaignMode::Statistical;
    int injections_per_ff = 170;   // statistical mode only
    CycleRange active_window;      // flip cycles are drawn from here
    std::uint64_t seed = 1;
    int jobs = 1;
};

enum class Outcome { Pass, FunctionalFailure };

// Any primary output difference inside the observe window is a functional
// failure. Traces must cover the same outputs and window.
Outcome classify(const GoldenTrace& golden, const GoldenTrace& observed);

struct FdrRecord {
    std::string ff_name;
    int injections = 0;
    int failures = 0;
    double fdr = 0.0;
};

// One fault-injection campaign over every flip-flop. Statistical mode draws
// flip cycles per (flip-flop, injection index) from the master seed, so the
// result is independent of execution order and worker count; exhaustive mode
// visits every cycle in the active window once. Records come back sorted by
// flip-flop name.
std::vector<FdrRecord> run_campaign(const Netlist& nl, const CircuitGraph& g,
                                    const Stimulus& stim, const CampaignConfig& cfg);

void write_fdr_csv(const std::string& path, const std::vector<FdrRecord>& records);
std::vector<FdrRecord> read_fdr_csv(const std::string& path);

// Stratified train/test split on the label distribution: the training side
// receives round(training_size * rows) samples spread over label quantile
// bins by largest remainder.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double training_size,
                                          std::uint64_t seed);

} // namespace fdr
