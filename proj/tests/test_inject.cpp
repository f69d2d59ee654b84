#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <fdr/graph.hpp>
#include <fdr/inject.hpp>
#include <fdr/netlist.hpp>
#include <fdr/rng.hpp>
#include <fdr/sim.hpp>
#include <fdr/textio.hpp>

namespace {

std::string fixture(const char* name) {
    return std::string(FDR_SOURCE_DIR "/circuits/") + name;
}

struct Rig {
    fdr::Netlist nl;
    fdr::CircuitGraph g;
    fdr::Stimulus stim;

    Rig(const char* circuit, const char* stim_file,
        std::optional<fdr::CycleRange> observe = std::nullopt)
        : nl(fdr::load_netlist(fixture(circuit))), g(fdr::build_graph(nl)),
          stim(fdr::load_stimulus(fixture(stim_file), nl, observe)) {}
};

double fdr_of(const std::vector<fdr::FdrRecord>& records, const std::string& ff) {
    for (const auto& r : records)
        if (r.ff_name == ff)
            return r.fdr;
    FAIL("no record for " << ff);
    return -1.0;
}

fdr::Dataset synthetic_dataset(std::size_t n) {
    fdr::Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        fdr::DataRow row;
        char buf[16];
        std::snprintf(buf, sizeof buf, "r%04zu", i);
        row.name = buf;
        row.features.fill(static_cast<double>(i % 7));
        row.target = static_cast<double>(i) / static_cast<double>(n);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

} // namespace

TEST_CASE("inject: classification compares traces inside the window only") {
    fdr::GoldenTrace a;
    a.po_names = {"y"};
    a.window = {0, 3};
    a.values = {{0, 1, 0, 1}};
    fdr::GoldenTrace b = a;
    CHECK(fdr::classify(a, b) == fdr::Outcome::Pass);

    b.values[0][2] = 1;
    CHECK(fdr::classify(a, b) == fdr::Outcome::FunctionalFailure);

    fdr::GoldenTrace c = a;
    c.window = {1, 4};
    CHECK_THROWS_AS(fdr::classify(a, c), fdr::ShapeMismatchError);
    c = a;
    c.po_names = {"z"};
    CHECK_THROWS_AS(fdr::classify(a, c), fdr::ShapeMismatchError);
}

TEST_CASE("inject: exhaustive campaign on shift3 counts unobservable tail flips") {
    Rig rig("shift3.json", "shift3_stim8.csv");
    fdr::CampaignConfig cfg;
    cfg.mode = fdr::CampaignMode::Exhaustive;
    cfg.active_window = {0, 7};

    auto records = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    REQUIRE(records.size() == 3);
    // A flip in FF<k> reaches the output 3-k cycles later; flips too close to
    // the end of the trace never surface. 8 injections per flip-flop.
    CHECK(records[0].injections == 8);
    CHECK(fdr_of(records, "FF0") == 0.625);
    CHECK(fdr_of(records, "FF1") == 0.75);
    CHECK(fdr_of(records, "FF2") == 0.875);
}

TEST_CASE("inject: a narrow observe window masks early and late flips") {
    Rig rig("shift3.json", "shift3_stim8.csv", fdr::CycleRange{4, 7});
    fdr::CampaignConfig cfg;
    cfg.mode = fdr::CampaignMode::Exhaustive;
    cfg.active_window = {0, 4};

    auto records = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    CHECK(fdr_of(records, "FF0") == 0.8);
    CHECK(fdr_of(records, "FF1") == 0.6);
    CHECK(fdr_of(records, "FF2") == 0.4);
}

TEST_CASE("inject: toggle fails on every flip except the final edge") {
    Rig rig("toggle.json", "toggle_stim8.csv");
    fdr::CampaignConfig cfg;
    cfg.mode = fdr::CampaignMode::Exhaustive;
    cfg.active_window = {0, 7};
    auto records = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    CHECK(fdr_of(records, "FF") == 0.875);
}

TEST_CASE("inject: a flip-flop nobody reads never fails") {
    Rig rig("deadend.json", "deadend_stim8.csv");
    fdr::CampaignConfig cfg;
    cfg.active_window = {0, 7};
    for (auto mode : {fdr::CampaignMode::Exhaustive, fdr::CampaignMode::Statistical}) {
        cfg.mode = mode;
        cfg.injections_per_ff = 50;
        auto records = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
        CHECK(fdr_of(records, "dead_ff") == 0.0);
        CHECK(records[0].failures == 0);
    }
}

TEST_CASE("inject: statistical draws follow the per-injection seed contract") {
    Rig rig("toggle.json", "toggle_stim8.csv");
    fdr::CampaignConfig cfg;
    cfg.mode = fdr::CampaignMode::Statistical;
    cfg.injections_per_ff = 6;
    cfg.active_window = {0, 7};
    cfg.seed = 123;

    auto records = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    REQUIRE(records.size() == 1);
    CHECK(records[0].injections == 6);

    // Replay the same draws by hand: flip-flop 0, injection j.
    fdr::Simulator sim(rig.nl, rig.g);
    fdr::GoldenTrace golden = sim.run_golden(rig.stim);
    int failures = 0;
    for (int j = 0; j < 6; ++j) {
        fdr::Rng draw(fdr::mix_seed(cfg.seed, 0, static_cast<std::uint64_t>(j)));
        int cycle = cfg.active_window.begin +
                    static_cast<int>(draw.next_below(
                        static_cast<std::uint64_t>(cfg.active_window.length())));
        auto observed = sim.run_with_injection(rig.stim, "FF", cycle);
        failures += fdr::classify(golden, observed) == fdr::Outcome::FunctionalFailure;
    }
    CHECK(records[0].failures == failures);
    CHECK(records[0].fdr == static_cast<double>(failures) / 6.0);
}

TEST_CASE("inject: campaign results do not depend on the worker count") {
    Rig rig("bus4.json", "bus4_stim64.csv");
    fdr::CampaignConfig cfg;
    cfg.mode = fdr::CampaignMode::Statistical;
    cfg.injections_per_ff = 40;
    cfg.active_window = {0, 63};
    cfg.seed = 9;

    cfg.jobs = 1;
    auto one = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    cfg.jobs = 5;
    auto five = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    REQUIRE(one.size() == five.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].ff_name == five[i].ff_name);
        CHECK(one[i].failures == five[i].failures);
        CHECK(one[i].fdr == five[i].fdr);
    }

    // And a rerun with the same config reproduces itself exactly.
    auto again = fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg);
    for (std::size_t i = 0; i < one.size(); ++i)
        CHECK(one[i].failures == again[i].failures);
}

TEST_CASE("inject: campaign configuration is validated") {
    Rig rig("toggle.json", "toggle_stim8.csv");
    fdr::CampaignConfig cfg;

    cfg.active_window = {5, 2}; // inverted
    CHECK_THROWS_AS(fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg),
                    fdr::EmptyActiveWindowError);

    cfg.active_window = {0, 8}; // last cycle is 7
    CHECK_THROWS_AS(fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg),
                    fdr::CycleOutOfRangeError);

    cfg.active_window = {0, 7};
    cfg.injections_per_ff = 0;
    CHECK_THROWS_AS(fdr::run_campaign(rig.nl, rig.g, rig.stim, cfg), fdr::ConfigError);
}

TEST_CASE("inject: fdr csv round trip") {
    std::vector<fdr::FdrRecord> records = {
        {"a", 8, 3, 0.375},
        {"b", 8, 0, 0.0},
    };
    const std::string path = std::string(FDR_BINARY_DIR "/fdr_roundtrip.csv");
    fdr::write_fdr_csv(path, records);

    auto back = fdr::read_fdr_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].ff_name == "a");
    CHECK(back[0].injections == 8);
    CHECK(back[0].failures == 3);
    CHECK(back[0].fdr == 0.375);
    CHECK(back[1].fdr == 0.0);

    std::string content = fdr::read_text_file(path);
    fdr::write_text_file(path, "ff," + content.substr(8));
    CHECK_THROWS_AS(fdr::read_fdr_csv(path), fdr::ColumnMismatchError);
    std::remove(path.c_str());
}

TEST_CASE("inject: split keeps both label strata on both sides") {
    fdr::Dataset ds;
    const char* names[] = {"w", "x", "y", "z"};
    const double targets[] = {0.0, 0.0, 1.0, 1.0};
    for (int i = 0; i < 4; ++i) {
        fdr::DataRow row;
        row.name = names[i];
        row.features.fill(0.0);
        row.target = targets[i];
        ds.rows.push_back(row);
    }

    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
        auto [train, test] = fdr::split_dataset(ds, 0.5, seed);
        REQUIRE(train.size() == 2);
        REQUIRE(test.size() == 2);
        CHECK(train.rows[0].target + train.rows[1].target == 1.0);
        CHECK(test.rows[0].target + test.rows[1].target == 1.0);
    }
}

TEST_CASE("inject: split arithmetic on a large dataset") {
    fdr::Dataset ds = synthetic_dataset(1054);
    auto [train, test] = fdr::split_dataset(ds, 0.5, 7);
    CHECK(train.size() == 527);
    CHECK(test.size() == 527);

    // No row is lost or duplicated.
    std::vector<std::string> all;
    for (const auto& r : train.rows)
        all.push_back(r.name);
    for (const auto& r : test.rows)
        all.push_back(r.name);
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == 1054);

    auto [train2, test2] = fdr::split_dataset(ds, 0.3, 7);
    CHECK(train2.size() == 316); // round(0.3 * 1054)
}

TEST_CASE("inject: split rejects degenerate configurations") {
    fdr::Dataset tiny = synthetic_dataset(1);
    CHECK_THROWS_AS(fdr::split_dataset(tiny, 0.5, 1), fdr::TooFewSamplesError);

    fdr::Dataset ds = synthetic_dataset(10);
    CHECK_THROWS_AS(fdr::split_dataset(ds, 0.0, 1), fdr::ConfigError);
    CHECK_THROWS_AS(fdr::split_dataset(ds, 1.0, 1), fdr::ConfigError);
    CHECK_THROWS_AS(fdr::split_dataset(ds, 0.01, 1), fdr::TooFewSamplesError);
    CHECK_THROWS_AS(fdr::split_dataset(ds, 0.99, 1), fdr::TooFewSamplesError);
}

TEST_CASE("inject: dataset join matches names exactly") {
    std::vector<fdr::NamedRow> feats(2);
    feats[0].name = "a";
    feats[0].values.fill(1.0);
    feats[1].name = "b";
    feats[1].values.fill(2.0);

    fdr::Dataset ds = fdr::join_dataset(feats, {{"b", 0.5}, {"a", 0.25}});
    REQUIRE(ds.size() == 2);
    CHECK(ds.rows[0].name == "a");
    CHECK(ds.rows[0].target == 0.25);
    CHECK(ds.rows[1].target == 0.5);

    CHECK_THROWS_AS(fdr::join_dataset(feats, {{"a", 0.1}}), fdr::ColumnMismatchError);
    CHECK_THROWS_AS(fdr::join_dataset(feats, {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}),
                    fdr::ColumnMismatchError);
    CHECK_THROWS_AS(fdr::join_dataset(feats, {{"a", 0.1}, {"a", 0.2}}),
                    fdr::ColumnMismatchError);
}
