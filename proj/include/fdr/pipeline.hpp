#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdr/evalharness.hpp"
#include "fdr/inject.hpp"
#include "fdr/models.hpp"
#include "fdr/sim.hpp"

namespace fdr {

// Everything one end-to-end run needs. Seeds are explicit constants so a rerun
// of the same config reproduces every artifact byte for byte.
struct RunConfig {
    std::string netlist_path;
    std::string stimulus_path;
    std::optional<CycleRange> observe; // default: the whole stimulus

    CampaignConfig campaign;

    std::vector<ModelKind> kinds{ModelKind::Ols, ModelKind::Knn, ModelKind::Svr};
    bool run_search = true;
    Hyperparameters manual; // used for ols and when run_search is off
    SearchSpace space;

    int folds = 10;
    double training_size = 0.5;
    std::vector<double> curve_fractions; // empty: default_curve_fractions()
    std::uint64_t eval_seed = 1;

    std::string output_dir = "out";
    int jobs = 1;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Exit contract: 0 success, 2 config, 3 netlist, 4 simulation, 5 model.
int exit_code_for(const std::exception& e);

// parse -> graph -> simulate -> features -> inject -> split -> search ->
// train -> evaluate -> learning curve. Writes features.csv, fdr.csv,
// predictions.csv, report.json, learning_curve.csv and models/<kind>.json
// under output_dir. While a run is in flight (and after a failure) the
// directory carries a `.partial` marker naming the active stage; success
// removes it. Existing partial outputs are left in place for inspection.
void run_pipeline(const RunConfig& cfg, std::ostream* log = nullptr);

} // namespace fdr
