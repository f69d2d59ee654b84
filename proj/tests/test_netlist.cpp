#include <doctest.h>

#include <fdr/netlist.hpp>

using fdr::Json;

namespace {

// A two flip-flop divider with one gate; small enough to mutate per case.
Json base_doc() {
    return Json::parse(R"({
        "version": 1,
        "name": "tiny",
        "clock": "clk",
        "inputs": ["clk", "en"],
        "outputs": ["q1"],
        "cells": [
            {"name": "U1", "type": "AND2", "pins": {"A": "en", "B": "q0", "Y": "d1"}},
            {"name": "F0", "type": "DFF", "pins": {"D": "en", "CK": "clk", "Q": "q0"}},
            {"name": "F1", "type": "DFF_X2", "pins": {"D": "d1", "CK": "clk", "Q": "q1"}}
        ],
        "constants": {}
    })");
}

} // namespace

TEST_CASE("netlist: well formed document parses") {
    fdr::Netlist nl = fdr::parse_netlist(base_doc());
    CHECK(nl.name == "tiny");
    CHECK(nl.clock_net == "clk");
    // The clock is tracked separately, never as a data input.
    CHECK(nl.primary_inputs == std::vector<std::string>{"en"});
    CHECK(nl.primary_outputs == std::vector<std::string>{"q1"});
    CHECK(nl.cells.size() == 3);
    CHECK(nl.flip_flops() == std::vector<std::string>{"F0", "F1"});
    CHECK(nl.cell("F1").drive_strength == 2);
    CHECK(nl.cell("F0").drive_strength == 1);
    CHECK(nl.cell("U1").type == fdr::CellType::And2);

    // Connectivity: q0 is driven by F0 and read by U1.
    const fdr::Net& q0 = nl.nets.at("q0");
    REQUIRE(q0.has_driver());
    const auto& drv = std::get<fdr::PortRef>(q0.driver);
    CHECK(drv.owner == "F0");
    CHECK(drv.pin == "Q");
    REQUIRE(q0.sinks.size() == 1);
    CHECK(q0.sinks[0].owner == "U1");
}

TEST_CASE("netlist: version key is optional but must be 1") {
    Json doc = base_doc();
    doc.erase("version");
    CHECK_NOTHROW(fdr::parse_netlist(doc));
    doc["version"] = 2;
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    doc["version"] = "1";
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
}

TEST_CASE("netlist: unknown or missing top-level keys are rejected") {
    Json doc = base_doc();
    doc["comment"] = "hi";
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);

    doc = base_doc();
    doc.erase("outputs");
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);

    CHECK_THROWS_AS(fdr::parse_netlist(Json::array()), fdr::SchemaError);
}

TEST_CASE("netlist: cell validation") {
    SUBCASE("unknown type") {
        Json doc = base_doc();
        doc["cells"][0]["type"] = "AND5";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::UnknownCellTypeError);
    }
    SUBCASE("bad drive suffix") {
        Json doc = base_doc();
        doc["cells"][0]["type"] = "AND2_X3";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::UnknownCellTypeError);
    }
    SUBCASE("missing pin") {
        Json doc = base_doc();
        doc["cells"][0]["pins"].erase("B");
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
    SUBCASE("extra pin") {
        Json doc = base_doc();
        doc["cells"][0]["pins"]["Z"] = "d1";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
    SUBCASE("unknown cell key") {
        Json doc = base_doc();
        doc["cells"][0]["area"] = 1.5;
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
    SUBCASE("duplicate cell name") {
        Json doc = base_doc();
        Json dup = doc["cells"][1];
        dup["pins"] = {{"D", "en"}, {"CK", "clk"}, {"Q", "q9"}};
        doc["cells"].push_back(dup);
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
}

TEST_CASE("netlist: every net needs exactly one driver") {
    SUBCASE("two cell outputs on one net") {
        Json doc = base_doc();
        doc["cells"][0]["pins"]["Y"] = "q0"; // collides with F0's Q
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::MultiDriverError);
    }
    SUBCASE("cell output on a primary input") {
        Json doc = base_doc();
        doc["cells"][0]["pins"]["Y"] = "en";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::MultiDriverError);
    }
    SUBCASE("constant on a driven net") {
        Json doc = base_doc();
        doc["constants"]["q0"] = 1;
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::MultiDriverError);
    }
    SUBCASE("undriven net") {
        Json doc = base_doc();
        doc["cells"][0]["pins"]["A"] = "floats";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
}

TEST_CASE("netlist: clock discipline") {
    SUBCASE("empty clock name") {
        Json doc = base_doc();
        doc["clock"] = "";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::MissingClockError);
    }
    SUBCASE("flip-flop on a different clock") {
        Json doc = base_doc();
        doc["cells"][1]["pins"]["CK"] = "en";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::MissingClockError);
    }
    SUBCASE("clock feeding a data pin") {
        Json doc = base_doc();
        doc["cells"][0]["pins"]["A"] = "clk";
        CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    }
}

TEST_CASE("netlist: constants must be binary") {
    Json doc = base_doc();
    doc["constants"]["tie"] = 2;
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
    doc["constants"]["tie"] = 1;
    // The constant net must still be read by someone or it only dangles,
    // which is legal; parsing succeeds.
    CHECK_NOTHROW(fdr::parse_netlist(doc));
}

TEST_CASE("netlist: serialize round-trips") {
    fdr::Netlist nl = fdr::parse_netlist(base_doc());
    Json out = fdr::serialize_netlist(nl);
    fdr::Netlist again = fdr::parse_netlist(out);
    CHECK(fdr::serialize_netlist(again) == out);
    CHECK(again.flip_flops() == nl.flip_flops());
    CHECK(again.cell("F1").drive_strength == 2);
}

TEST_CASE("netlist: fixture circuits load and report correctly") {
    fdr::Netlist toggle = fdr::load_netlist(FDR_SOURCE_DIR "/circuits/toggle.json");
    fdr::NetlistReport r = fdr::describe_netlist(toggle);
    CHECK(r.cells == 2);
    CHECK(r.flip_flops == 1);
    CHECK(r.nets == 3); // clk, q, nq
    CHECK(r.primary_inputs == 0);
    CHECK(r.primary_outputs == 1);
    CHECK(r.dangling_nets.empty());

    fdr::Netlist deadend = fdr::load_netlist(FDR_SOURCE_DIR "/circuits/deadend.json");
    fdr::NetlistReport rd = fdr::describe_netlist(deadend);
    CHECK(rd.dangling_nets == std::vector<std::string>{"qq"});
}

TEST_CASE("netlist: DFFR carries its reset pin through parsing") {
    Json doc = base_doc();
    doc["inputs"].push_back("rstn");
    doc["cells"].push_back(Json::parse(
        R"({"name": "FR", "type": "DFFR", "pins":
            {"D": "q1", "CK": "clk", "RN": "rstn", "Q": "qr"}})"));
    doc["outputs"].push_back("qr");
    fdr::Netlist nl = fdr::parse_netlist(doc);
    CHECK(nl.cell("FR").type == fdr::CellType::Dffr);
    CHECK(nl.cell("FR").pins.at("RN") == "rstn");

    // RN is a data input, so the reset net must exist.
    doc["cells"].back()["pins"].erase("RN");
    CHECK_THROWS_AS(fdr::parse_netlist(doc), fdr::SchemaError);
}
