#include "fdr/inject.hpp"

#include <cmath>
#include <exception>
#include <thread>

#include "fdr/errors.hpp"
#include "fdr/evalharness.hpp"
#include "fdr/rng.hpp"
#include "fdr/textio.hpp"

namespace fdr {

Outcome classify(const GoldenTrace& golden, const GoldenTrace& observed) {
    if (golden.po_names != observed.po_names || golden.window != observed.window)
        throw ShapeMismatchError("traces cover different outputs or windows");
    return golden == observed ? Outcome::Pass : Outcome::FunctionalFailure;
}

std::vector<FdrRecord> run_campaign(const Netlist& nl, const CircuitGraph& g,
                                    const Stimulus& stim, const CampaignConfig& cfg) {
    const int cycles = stim.cycles();
    const CycleRange w = cfg.active_window;
    if (w.begin > w.end)
        throw EmptyActiveWindowError("active window " + std::to_string(w.begin) + ".." +
                                     std::to_string(w.end) + " contains no cycle");
    if (w.begin < 0 || w.end >= cycles)
        throw CycleOutOfRangeError("active window " + std::to_string(w.begin) + ".." +
                                   std::to_string(w.end) + " exceeds the " +
                                   std::to_string(cycles) + "-cycle stimulus");
    if (cfg.mode == CampaignMode::Statistical && cfg.injections_per_ff < 1)
        throw ConfigError("statistical campaigns need at least one injection per flip-flop");

    const Simulator probe(nl, g);
    const std::vector<std::string> ffs = probe.ff_names();
    std::vector<FdrRecord> records(ffs.size());
    if (ffs.empty())
        return records;
    const GoldenTrace golden = probe.run_golden(stim);

    const std::uint64_t window_len = static_cast<std::uint64_t>(w.length());
    const int jobs = std::clamp<int>(cfg.jobs, 1, static_cast<int>(ffs.size()));

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    auto worker = [&](int t) {
        try {
            const Simulator sim(nl, g);
            for (std::size_t fi = static_cast<std::size_t>(t); fi < ffs.size();
                 fi += static_cast<std::size_t>(jobs)) {
                int injections = 0, failures = 0;
                auto one = [&](int cycle) {
                    const GoldenTrace obs = sim.run_with_injection(stim, ffs[fi], cycle);
                    ++injections;
                    if (classify(golden, obs) == Outcome::FunctionalFailure)
                        ++failures;
                };
                if (cfg.mode == CampaignMode::Exhaustive) {
                    for (int c = w.begin; c <= w.end; ++c)
                        one(c);
                } else {
                    for (int j = 0; j < cfg.injections_per_ff; ++j) {
                        // One throwaway generator per draw, keyed on the
                        // flip-flop and injection index: the sampled cycle
                        // does not depend on worker count or visit order.
                        Rng draw(mix_seed(cfg.seed, fi, static_cast<std::uint64_t>(j)));
                        one(w.begin + static_cast<int>(draw.next_below(window_len)));
                    }
                }
                records[fi] = {ffs[fi], injections, failures,
                               static_cast<double>(failures) / static_cast<double>(injections)};
            }
        } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
    };

    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back(worker, t);
        for (auto& th : pool)
            th.join();
    }
    for (const auto& err : errors)
        if (err)
            std::rethrow_exception(err);
    return records;
}

void write_fdr_csv(const std::string& path, const std::vector<FdrRecord>& records) {
    std::string out = "ff_name,injections,failures,fdr\n";
    for (const FdrRecord& r : records) {
        out += r.ff_name;
        out += ',';
        out += std::to_string(r.injections);
        out += ',';
        out += std::to_string(r.failures);
        out += ',';
        out += format_double(r.fdr);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<FdrRecord> read_fdr_csv(const std::string& path) {
    const CsvTable csv = read_csv(path);
    const std::vector<std::string> expected = {"ff_name", "injections", "failures", "fdr"};
    if (csv.header != expected)
        throw ColumnMismatchError(path + " is not a measurement table");
    std::vector<FdrRecord> records;
    records.reserve(csv.rows.size());
    for (const auto& row : csv.rows) {
        if (row.size() != expected.size())
            throw ColumnMismatchError(path + " has a short row");
        FdrRecord r;
        r.ff_name = row[0];
        r.injections = static_cast<int>(parse_long(row[1]));
        r.failures = static_cast<int>(parse_long(row[2]));
        r.fdr = parse_double(row[3]);
        records.push_back(r);
    }
    return records;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double training_size,
                                          std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (n < 2)
        throw TooFewSamplesError("need at least two rows to split");
    if (!(training_size > 0.0 && training_size < 1.0))
        throw ConfigError("training size must be strictly between 0 and 1");
    const std::size_t take =
        static_cast<std::size_t>(std::llround(training_size * static_cast<double>(n)));
    if (take == 0 || take == n)
        throw TooFewSamplesError("training size " + format_double(training_size) +
                                 " leaves one side of the split empty");

    Rng rng(seed);
    const std::vector<std::size_t> pick = stratified_subsample(ds.targets(), take, rng);
    std::vector<char> in_train(n, 0);
    for (std::size_t i : pick)
        in_train[i] = 1;

    std::pair<Dataset, Dataset> out;
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? out.first : out.second).rows.push_back(ds.rows[i]);
    return out;
}

} // namespace fdr
