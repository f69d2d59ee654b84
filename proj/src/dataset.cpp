#include "fdr/dataset.hpp"

#include <algorithm>
#include <map>

#include "fdr/errors.hpp"

namespace fdr {

std::vector<double> Dataset::targets() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back(r.target);
    return out;
}

void sort_dataset(Dataset& ds) {
    std::sort(ds.rows.begin(), ds.rows.end(),
              [](const DataRow& a, const DataRow& b) { return a.name < b.name; });
}

Dataset join_dataset(const std::vector<NamedRow>& features,
                     const std::vector<LabeledValue>& labels) {
    std::map<std::string, double> by_name;
    for (const auto& l : labels)
        if (!by_name.emplace(l.name, l.value).second)
            throw ColumnMismatchError("duplicate label for '" + l.name + "'");

    Dataset ds;
    for (const auto& f : features) {
        auto it = by_name.find(f.name);
        if (it == by_name.end())
            throw ColumnMismatchError("no label for flip-flop '" + f.name + "'");
        ds.rows.push_back({f.name, f.values, it->second});
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw ColumnMismatchError("label for unknown flip-flop '" +
                                  by_name.begin()->first + "'");
    sort_dataset(ds);
    return ds;
}

} // namespace fdr
