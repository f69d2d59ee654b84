#pragma once

#include <array>
#include <string>
#include <vector>

#include "fdr/features.hpp"

namespace fdr {

struct DataRow {
    std::string name;
    std::array<double, kFeatureCount> features{};
    double target = 0.0;
};

// Rows are kept sorted by name so every consumer sees one canonical order.
struct Dataset {
    std::vector<DataRow> rows;

    std::size_t size() const { return rows.size(); }
    std::vector<double> targets() const;
};

void sort_dataset(Dataset& ds);

// Joins per-flip-flop features with measured labels; every name must appear
// on both sides exactly once.
struct LabeledValue {
    std::string name;
    double value;
};

Dataset join_dataset(const std::vector<NamedRow>& features,
                     const std::vector<LabeledValue>& labels);

} // namespace fdr
