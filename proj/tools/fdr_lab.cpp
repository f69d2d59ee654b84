#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdr/errors.hpp"
#include "fdr/evalharness.hpp"
#include "fdr/features.hpp"
#include "fdr/graph.hpp"
#include "fdr/inject.hpp"
#include "fdr/models.hpp"
#include "fdr/netlist.hpp"
#include "fdr/pipeline.hpp"
#include "fdr/sim.hpp"
#include "fdr/textio.hpp"

namespace {

using namespace fdr;

std::optional<CycleRange> parse_optional_range(const std::string& text) {
    if (text.empty())
        return std::nullopt;
    return parse_cycle_range(text);
}

Dataset load_joined(const std::string& features_path, const std::string& fdr_path) {
    const std::vector<NamedRow> rows = read_features_csv(features_path);
    std::vector<LabeledValue> labels;
    for (const FdrRecord& r : read_fdr_csv(fdr_path))
        labels.push_back({r.ff_name, r.fdr});
    return join_dataset(rows, labels);
}

void emit(const std::string& out_path, const std::string& payload) {
    if (out_path.empty())
        std::cout << payload;
    else
        write_text_file(out_path, payload);
}

Json metrics_json(const MetricSet& m) {
    return Json{{"mae", m.mae},
                {"max", m.max_err},
                {"rmse", m.rmse},
                {"ev", m.ev},
                {"r2", m.r2}};
}

struct HyperFlags {
    int k = Hyperparameters{}.knn_k;
    std::string metric = metric_name(Hyperparameters{}.knn_metric);
    double c = Hyperparameters{}.svr_c;
    double gamma = Hyperparameters{}.svr_gamma;
    double epsilon = Hyperparameters{}.svr_epsilon;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k", k, "neighbour count (knn)")->capture_default_str();
        cmd->add_option("--metric", metric, "distance metric (knn): manhattan or euclidean")
            ->capture_default_str();
        cmd->add_option("--c", c, "box constraint (svr)")->capture_default_str();
        cmd->add_option("--gamma", gamma, "rbf kernel width (svr)")->capture_default_str();
        cmd->add_option("--epsilon", epsilon, "insensitive tube (svr)")->capture_default_str();
    }

    Hyperparameters resolve() const {
        Hyperparameters hp;
        hp.knn_k = k;
        hp.knn_metric = parse_metric(metric);
        hp.svr_c = c;
        hp.svr_gamma = gamma;
        hp.svr_epsilon = epsilon;
        return hp;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdr-lab: netlist-level functional de-rating measurement and estimation"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "worker thread count")->capture_default_str();

    std::function<void()> action;

    // netlist check <file>
    auto* netlist_cmd = app.add_subcommand("netlist", "netlist file operations");
    netlist_cmd->require_subcommand(1);
    {
        auto* check = netlist_cmd->add_subcommand("check", "parse and validate a netlist file");
        auto path = std::make_shared<std::string>();
        check->add_option("file", *path, "netlist JSON file")->required();
        check->callback([path, &action] {
            action = [path] {
                const Netlist nl = load_netlist(*path);
                const NetlistReport report = describe_netlist(nl);
                Json doc{{"name", nl.name},
                         {"clock", nl.clock_net},
                         {"cells", report.cells},
                         {"flip_flops", report.flip_flops},
                         {"nets", report.nets},
                         {"primary_inputs", report.primary_inputs},
                         {"primary_outputs", report.primary_outputs},
                         {"constant_nets", report.constant_nets},
                         {"dangling_nets", report.dangling_nets}};
                std::cout << doc.dump(2) << "\n";
            };
        });
    }

    // graph stats <file>
    auto* graph_cmd = app.add_subcommand("graph", "circuit graph operations");
    graph_cmd->require_subcommand(1);
    {
        auto* stats = graph_cmd->add_subcommand("stats", "node, edge and depth counts");
        auto path = std::make_shared<std::string>();
        stats->add_option("file", *path, "netlist JSON file")->required();
        stats->callback([path, &action] {
            action = [path] {
                const Netlist nl = load_netlist(*path);
                const CircuitGraph g = build_graph(nl);
                Json doc{{"name", nl.name},
                         {"nodes", g.nodes().size()},
                         {"edges", g.edge_count()},
                         {"flip_flops", g.count_kind(NodeKind::FlipFlop)},
                         {"combinational", g.count_kind(NodeKind::Combinational)},
                         {"primary_inputs", g.count_kind(NodeKind::PrimaryInput)},
                         {"primary_outputs", g.count_kind(NodeKind::PrimaryOutput)},
                         {"constants", g.count_kind(NodeKind::Constant)}};
                std::cout << doc.dump(2) << "\n";
            };
        });
    }

    // simulate <netlist> <stimulus> [--observe A..B] [--trace out.csv]
    {
        auto* sim_cmd = app.add_subcommand("simulate", "run the golden simulation");
        struct Args {
            std::string netlist, stimulus, observe, trace;
        };
        auto a = std::make_shared<Args>();
        sim_cmd->add_option("netlist", a->netlist)->required();
        sim_cmd->add_option("stimulus", a->stimulus)->required();
        sim_cmd->add_option("--observe", a->observe, "observation window A..B");
        sim_cmd->add_option("--trace", a->trace, "write per-cycle trace CSV here");
        sim_cmd->callback([a, &action] {
            action = [a] {
                const Netlist nl = load_netlist(a->netlist);
                const CircuitGraph g = build_graph(nl);
                const Stimulus stim = load_stimulus(a->stimulus, nl,
                                                    parse_optional_range(a->observe));
                const Simulator sim(nl, g);
                ActivityTrace activity;
                const GoldenTrace golden = sim.run_golden(stim, &activity);
                if (!a->trace.empty()) {
                    std::string csv = "cycle";
                    for (const auto& po : golden.po_names)
                        csv += ",po:" + po;
                    for (const auto& ff : activity.ff_names)
                        csv += ",ff:" + ff;
                    csv += '\n';
                    for (int cyc = 0; cyc < stim.cycles(); ++cyc) {
                        csv += std::to_string(cyc);
                        for (std::size_t p = 0; p < golden.po_names.size(); ++p) {
                            csv += ',';
                            if (golden.window.contains(cyc))
                                csv += golden.values[p][static_cast<std::size_t>(
                                                            cyc - golden.window.begin)]
                                           ? '1'
                                           : '0';
                        }
                        for (std::size_t f = 0; f < activity.ff_names.size(); ++f) {
                            csv += ',';
                            csv += activity.samples[f][static_cast<std::size_t>(cyc)] ? '1' : '0';
                        }
                        csv += '\n';
                    }
                    write_text_file(a->trace, csv);
                }
                Json doc{{"cycles", stim.cycles()},
                         {"observe", std::to_string(golden.window.begin) + ".." +
                                         std::to_string(golden.window.end)},
                         {"primary_outputs", golden.po_names},
                         {"flip_flops", activity.ff_names.size()}};
                std::cout << doc.dump(2) << "\n";
            };
        });
    }

    // features <netlist> <stimulus> [-o out] [--observe A..B]
    {
        auto* feat = app.add_subcommand("features", "extract per-flip-flop features");
        struct Args {
            std::string netlist, stimulus, observe, out = "features.csv";
        };
        auto a = std::make_shared<Args>();
        feat->add_option("netlist", a->netlist)->required();
        feat->add_option("stimulus", a->stimulus)->required();
        feat->add_option("--observe", a->observe, "observation window A..B");
        feat->add_option("-o,--output", a->out, "output CSV path")->capture_default_str();
        feat->callback([a, &action] {
            action = [a] {
                const Netlist nl = load_netlist(a->netlist);
                const CircuitGraph g = build_graph(nl);
                const Stimulus stim = load_stimulus(a->stimulus, nl,
                                                    parse_optional_range(a->observe));
                const Simulator sim(nl, g);
                ActivityTrace activity;
                sim.run_golden(stim, &activity);
                write_features_csv(a->out, extract_all(nl, g, activity));
                std::cout << "wrote " << a->out << "\n";
            };
        });
    }

    // inject <netlist> <stimulus> --window A..B [--per-ff N] [--seed S]
    //        [--exhaustive] [--observe A..B] [-o out]
    {
        auto* inj = app.add_subcommand("inject", "run a fault-injection campaign");
        struct Args {
            std::string netlist, stimulus, window, observe, out = "fdr.csv";
            int per_ff = 170;
            std::uint64_t seed = 1;
            bool exhaustive = false;
        };
        auto a = std::make_shared<Args>();
        inj->add_option("netlist", a->netlist)->required();
        inj->add_option("stimulus", a->stimulus)->required();
        inj->add_option("--window", a->window, "flip cycles are drawn from A..B")->required();
        inj->add_option("--per-ff", a->per_ff, "injections per flip-flop (statistical mode)")
            ->capture_default_str();
        inj->add_option("--seed", a->seed, "campaign seed")->capture_default_str();
        inj->add_flag("--exhaustive", a->exhaustive, "inject at every window cycle instead");
        inj->add_option("--observe", a->observe, "observation window A..B");
        inj->add_option("-o,--output", a->out, "output CSV path")->capture_default_str();
        inj->callback([a, &action, &jobs] {
            action = [a, &jobs] {
                const Netlist nl = load_netlist(a->netlist);
                const CircuitGraph g = build_graph(nl);
                const Stimulus stim = load_stimulus(a->stimulus, nl,
                                                    parse_optional_range(a->observe));
                CampaignConfig cfg;
                cfg.mode = a->exhaustive ? CampaignMode::Exhaustive : CampaignMode::Statistical;
                cfg.injections_per_ff = a->per_ff;
                cfg.active_window = parse_cycle_range(a->window);
                cfg.seed = a->seed;
                cfg.jobs = jobs;
                const std::vector<FdrRecord> records = run_campaign(nl, g, stim, cfg);
                write_fdr_csv(a->out, records);
                std::cout << "wrote " << a->out << " (" << records.size() << " flip-flops)\n";
            };
        });
    }

    // search <features.csv> <fdr.csv> --model kind [...]
    {
        auto* search = app.add_subcommand("search", "random-then-grid hyperparameter search");
        struct Args {
            std::string features, fdr, model, out;
            int folds = 10;
            double training_size = 0.5;
            std::uint64_t seed = 1;
            int samples = SearchSpace{}.random_samples;
        };
        auto a = std::make_shared<Args>();
        search->add_option("features", a->features)->required();
        search->add_option("fdr", a->fdr)->required();
        search->add_option("--model", a->model, "knn or svr")->required();
        search->add_option("--folds", a->folds)->capture_default_str();
        search->add_option("--training-size", a->training_size)->capture_default_str();
        search->add_option("--seed", a->seed)->capture_default_str();
        search->add_option("--samples", a->samples, "random candidates before the grid stage")
            ->capture_default_str();
        search->add_option("-o,--output", a->out, "write the result JSON here (default stdout)");
        search->callback([a, &action, &jobs] {
            action = [a, &jobs] {
                const Dataset ds = load_joined(a->features, a->fdr);
                SearchSpace space;
                space.random_samples = a->samples;
                const ModelKind kind = parse_model_kind(a->model);
                const SearchResult sr = hyperparameter_search(ds, kind, space, a->folds,
                                                              a->training_size, a->seed, jobs);
                Json doc{{"kind", model_kind_name(kind)},
                         {"evaluated", sr.evaluated},
                         {"best_score", sr.best_score}};
                if (kind == ModelKind::Knn) {
                    doc["hyperparameters"] =
                        Json{{"k", sr.best.knn_k}, {"metric", metric_name(sr.best.knn_metric)}};
                } else {
                    doc["hyperparameters"] = Json{{"c", sr.best.svr_c},
                                                  {"gamma", sr.best.svr_gamma},
                                                  {"epsilon", sr.best.svr_epsilon}};
                }
                emit(a->out, doc.dump(2) + "\n");
            };
        });
    }

    // train <features.csv> <fdr.csv> --model kind [hp flags] -o model.json
    {
        auto* train = app.add_subcommand("train", "fit one model on the full dataset given");
        struct Args {
            std::string features, fdr, model, out = "model.json";
            HyperFlags hp;
        };
        auto a = std::make_shared<Args>();
        train->add_option("features", a->features)->required();
        train->add_option("fdr", a->fdr)->required();
        train->add_option("--model", a->model, "ols, knn or svr")->required();
        a->hp.attach(train);
        train->add_option("-o,--output", a->out, "model JSON path")->capture_default_str();
        train->callback([a, &action] {
            action = [a] {
                const Dataset ds = load_joined(a->features, a->fdr);
                const TrainedModel model =
                    fit_model(ds, parse_model_kind(a->model), a->hp.resolve());
                save_model(a->out, model);
                std::cout << "wrote " << a->out << "\n";
            };
        });
    }

    // evaluate <model.json> <features.csv> <fdr.csv> [-o report.json]
    {
        auto* ev = app.add_subcommand("evaluate", "score a trained model against measurements");
        struct Args {
            std::string model, features, fdr, out;
        };
        auto a = std::make_shared<Args>();
        ev->add_option("model", a->model)->required();
        ev->add_option("features", a->features)->required();
        ev->add_option("fdr", a->fdr)->required();
        ev->add_option("-o,--output", a->out, "write the metrics JSON here (default stdout)");
        ev->callback([a, &action] {
            action = [a] {
                const TrainedModel model = load_model(a->model);
                const Dataset ds = load_joined(a->features, a->fdr);
                const MetricSet m = compute_metrics(ds.targets(), predict_all(model, ds));
                Json doc{{"kind", model_kind_name(model.kind)},
                         {"rows", ds.size()},
                         {"metrics", metrics_json(m)}};
                emit(a->out, doc.dump(2) + "\n");
            };
        });
    }

    // learning-curve <features.csv> <fdr.csv> --model kind [hp flags] [...]
    {
        auto* curve = app.add_subcommand("learning-curve",
                                         "cross-validated metrics over training sizes");
        struct Args {
            std::string features, fdr, model, fractions, out = "learning_curve.csv";
            int folds = 10;
            std::uint64_t seed = 1;
            HyperFlags hp;
        };
        auto a = std::make_shared<Args>();
        curve->add_option("features", a->features)->required();
        curve->add_option("fdr", a->fdr)->required();
        curve->add_option("--model", a->model, "ols, knn or svr")->required();
        a->hp.attach(curve);
        curve->add_option("--folds", a->folds)->capture_default_str();
        curve->add_option("--fractions", a->fractions,
                          "comma-separated training fractions (default 0.05..0.8)");
        curve->add_option("--seed", a->seed)->capture_default_str();
        curve->add_option("-o,--output", a->out, "output CSV path")->capture_default_str();
        curve->callback([a, &action] {
            action = [a] {
                const Dataset ds = load_joined(a->features, a->fdr);
                std::vector<double> fractions = default_curve_fractions();
                if (!a->fractions.empty()) {
                    fractions.clear();
                    for (const std::string& part : split(a->fractions, ','))
                        fractions.push_back(parse_double(strip(part)));
                }
                const ModelKind kind = parse_model_kind(a->model);
                const std::vector<LearningPoint> points =
                    learning_curve(ds, kind, a->hp.resolve(), fractions, a->folds, a->seed);
                std::string csv =
                    "model,fraction,train_rows,mae_mean,mae_stddev,max_mean,max_stddev,"
                    "rmse_mean,rmse_stddev,ev_mean,ev_stddev,r2_mean,r2_stddev\n";
                for (const LearningPoint& p : points) {
                    csv += model_kind_name(kind);
                    csv += ',';
                    csv += format_double(p.fraction);
                    csv += ',';
                    csv += std::to_string(p.train_rows);
                    const double MetricSet::* fields[] = {&MetricSet::mae, &MetricSet::max_err,
                                                          &MetricSet::rmse, &MetricSet::ev,
                                                          &MetricSet::r2};
                    for (auto field : fields) {
                        csv += ',';
                        csv += format_double(p.mean.*field);
                        csv += ',';
                        csv += format_double(p.stddev.*field);
                    }
                    csv += '\n';
                }
                emit(a->out, csv);
                if (!a->out.empty())
                    std::cout << "wrote " << a->out << "\n";
            };
        });
    }

    // predict <model.json> <features.csv> [-o predictions.csv]
    {
        auto* pred = app.add_subcommand("predict", "apply a trained model to a feature table");
        struct Args {
            std::string model, features, out;
        };
        auto a = std::make_shared<Args>();
        pred->add_option("model", a->model)->required();
        pred->add_option("features", a->features)->required();
        pred->add_option("-o,--output", a->out, "output CSV path (default stdout)");
        pred->callback([a, &action] {
            action = [a] {
                const TrainedModel model = load_model(a->model);
                const std::vector<NamedRow> rows = read_features_csv(a->features);
                std::string csv = "ff_name,prediction,out_of_range\n";
                for (const NamedRow& row : rows) {
                    const double p = model.predict(
                        std::vector<double>(row.values.begin(), row.values.end()));
                    csv += row.name;
                    csv += ',';
                    csv += format_double(p);
                    csv += (p < 0.0 || p > 1.0) ? ",1\n" : ",0\n";
                }
                emit(a->out, csv);
            };
        });
    }

    // pipeline <config.ini> [--output-dir DIR]
    {
        auto* pipe = app.add_subcommand("pipeline", "run the whole flow from a config file");
        struct Args {
            std::string config, output_dir;
        };
        auto a = std::make_shared<Args>();
        pipe->add_option("config", a->config, "run configuration file")->required();
        pipe->add_option("--output-dir", a->output_dir, "override [cli] output_dir");
        pipe->callback([a, &action, &jobs] {
            action = [a, &jobs] {
                RunConfig cfg = load_run_config(a->config);
                if (!a->output_dir.empty())
                    cfg.output_dir = a->output_dir;
                cfg.jobs = jobs;
                run_pipeline(cfg, &std::cout);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (action)
            action();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fdr::exit_code_for(e);
    }
    return 0;
}
