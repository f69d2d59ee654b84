#include "fdr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include "fdr/errors.hpp"
#include "fdr/features.hpp"
#include "fdr/graph.hpp"
#include "fdr/netlist.hpp"
#include "fdr/textio.hpp"

namespace fdr {

namespace {

// Strict sectioned key-value reader: unknown sections or keys are rejected so
// a typo cannot silently fall back to a default.
class IniDoc {
  public:
    IniDoc(const std::string& text, const std::string& origin) : origin_(origin) {
        std::string section;
        std::size_t lineno = 0;
        for (const std::string& raw : split(text, '\n')) {
            ++lineno;
            const std::string line = strip(raw);
            if (line.empty() || line[0] == '#' || line[0] == ';')
                continue;
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3)
                    throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = line.substr(1, line.size() - 2);
                sections_.insert(section);
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            if (section.empty())
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": key outside any [section]");
            const std::string key = strip(line.substr(0, eq));
            const std::string value = strip(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin_ + ":" + std::to_string(lineno) + ": empty key");
            if (!values_.emplace(section + "." + key, value).second)
                throw ConfigError(origin_ + ": duplicate key '" + section + "." + key + "'");
        }
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        const std::string full = section + "." + key;
        known_.insert(full);
        auto it = values_.find(full);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

    std::string require(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v)
            throw ConfigError(origin_ + ": missing required key '" + section + "." + key + "'");
        return *v;
    }

    void finish() const {
        for (const auto& [full, value] : values_)
            if (!known_.count(full))
                throw ConfigError(origin_ + ": unknown key '" + full + "'");
    }

  private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    std::set<std::string> sections_;
    std::set<std::string> known_;
};

bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    throw ConfigError(what + " must be a boolean, got '" + v + "'");
}

std::vector<ModelKind> parse_kinds(const std::string& v) {
    std::vector<ModelKind> kinds;
    for (const std::string& part : split(v, ',')) {
        const ModelKind k = parse_model_kind(strip(part));
        if (std::find(kinds.begin(), kinds.end(), k) != kinds.end())
            throw ConfigError("model kind '" + strip(part) + "' listed twice");
        kinds.push_back(k);
    }
    if (kinds.empty())
        throw ConfigError("empty model kind list");
    return kinds;
}

std::vector<double> parse_fraction_list(const std::string& v) {
    std::vector<double> out;
    for (const std::string& part : split(v, ','))
        out.push_back(parse_double(strip(part)));
    return out;
}

} // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    IniDoc ini(text, origin);
    RunConfig cfg;

    cfg.netlist_path = ini.require("netlist", "path");
    cfg.stimulus_path = ini.require("sim", "stimulus");
    if (auto v = ini.get("sim", "observe"))
        cfg.observe = parse_cycle_range(*v);

    if (auto v = ini.get("inject", "mode")) {
        if (*v == "statistical")
            cfg.campaign.mode = CampaignMode::Statistical;
        else if (*v == "exhaustive")
            cfg.campaign.mode = CampaignMode::Exhaustive;
        else
            throw ConfigError("inject.mode must be statistical or exhaustive, got '" + *v + "'");
    }
    if (auto v = ini.get("inject", "per_ff"))
        cfg.campaign.injections_per_ff = static_cast<int>(parse_long(*v));
    cfg.campaign.active_window = parse_cycle_range(ini.require("inject", "window"));
    if (auto v = ini.get("inject", "seed"))
        cfg.campaign.seed = static_cast<std::uint64_t>(parse_long(*v));

    if (auto v = ini.get("models", "kinds"))
        cfg.kinds = parse_kinds(*v);
    if (auto v = ini.get("models", "search"))
        cfg.run_search = parse_bool(*v, "models.search");
    if (auto v = ini.get("models", "knn_k"))
        cfg.manual.knn_k = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("models", "knn_metric"))
        cfg.manual.knn_metric = parse_metric(*v);
    if (auto v = ini.get("models", "svr_c"))
        cfg.manual.svr_c = parse_double(*v);
    if (auto v = ini.get("models", "svr_gamma"))
        cfg.manual.svr_gamma = parse_double(*v);
    if (auto v = ini.get("models", "svr_epsilon"))
        cfg.manual.svr_epsilon = parse_double(*v);

    if (auto v = ini.get("evalharness", "folds"))
        cfg.folds = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("evalharness", "training_size"))
        cfg.training_size = parse_double(*v);
    if (auto v = ini.get("evalharness", "seed"))
        cfg.eval_seed = static_cast<std::uint64_t>(parse_long(*v));
    if (auto v = ini.get("evalharness", "search_samples"))
        cfg.space.random_samples = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("evalharness", "grid_points"))
        cfg.space.grid_points = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("evalharness", "grid_span"))
        cfg.space.grid_span = parse_double(*v);
    if (auto v = ini.get("evalharness", "k_min"))
        cfg.space.k_min = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("evalharness", "k_max"))
        cfg.space.k_max = static_cast<int>(parse_long(*v));
    if (auto v = ini.get("evalharness", "c_lo"))
        cfg.space.c_lo = parse_double(*v);
    if (auto v = ini.get("evalharness", "c_hi"))
        cfg.space.c_hi = parse_double(*v);
    if (auto v = ini.get("evalharness", "gamma_lo"))
        cfg.space.gamma_lo = parse_double(*v);
    if (auto v = ini.get("evalharness", "gamma_hi"))
        cfg.space.gamma_hi = parse_double(*v);
    if (auto v = ini.get("evalharness", "epsilon_lo"))
        cfg.space.epsilon_lo = parse_double(*v);
    if (auto v = ini.get("evalharness", "epsilon_hi"))
        cfg.space.epsilon_hi = parse_double(*v);
    if (auto v = ini.get("evalharness", "curve_fractions"))
        cfg.curve_fractions = parse_fraction_list(*v);

    if (auto v = ini.get("cli", "output_dir"))
        cfg.output_dir = *v;

    ini.finish();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config_text(read_text_file(path), path);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e))
        return 2;
    if (dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const MultiDriverError*>(&e) ||
        dynamic_cast<const UnknownCellTypeError*>(&e) ||
        dynamic_cast<const MissingClockError*>(&e) ||
        dynamic_cast<const CombinationalLoopError*>(&e))
        return 3;
    if (dynamic_cast<const StimulusError*>(&e) || dynamic_cast<const CycleOutOfRangeError*>(&e) ||
        dynamic_cast<const ShapeMismatchError*>(&e) ||
        dynamic_cast<const EmptyActiveWindowError*>(&e) ||
        dynamic_cast<const MissingTraceError*>(&e) ||
        dynamic_cast<const UnknownFlipFlopError*>(&e))
        return 4;
    if (dynamic_cast<const FdrError*>(&e))
        return 5;
    return 1;
}

namespace {

Json metric_json(const MetricSet& m) {
    return Json{{"mae", m.mae},
                {"max", m.max_err},
                {"rmse", m.rmse},
                {"ev", m.ev},
                {"r2", m.r2}};
}

Json cv_json(const CvAggregate& agg) {
    Json out;
    const std::pair<const char*, double MetricSet::*> fields[] = {
        {"mae", &MetricSet::mae},
        {"max", &MetricSet::max_err},
        {"rmse", &MetricSet::rmse},
        {"ev", &MetricSet::ev},
        {"r2", &MetricSet::r2},
    };
    for (const auto& [name, field] : fields)
        out[name] = Json{{"mean", agg.mean.*field}, {"stddev", agg.stddev.*field}};
    return out;
}

Json hyperparameters_json(ModelKind kind, const Hyperparameters& hp) {
    switch (kind) {
    case ModelKind::Ols: return Json::object();
    case ModelKind::Knn: return Json{{"k", hp.knn_k}, {"metric", metric_name(hp.knn_metric)}};
    case ModelKind::Svr:
        return Json{{"c", hp.svr_c}, {"gamma", hp.svr_gamma}, {"epsilon", hp.svr_epsilon}};
    }
    return Json::object();
}

const char* metric_columns[] = {"mae", "max", "rmse", "ev", "r2"};
constexpr double MetricSet::* metric_fields[] = {&MetricSet::mae, &MetricSet::max_err,
                                                 &MetricSet::rmse, &MetricSet::ev,
                                                 &MetricSet::r2};

} // namespace

void run_pipeline(const RunConfig& cfg, std::ostream* log) {
    namespace fs = std::filesystem;
    auto say = [&](const std::string& line) {
        if (log)
            *log << line << "\n";
    };

    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.output_dir + "/models");
    const std::string marker = cfg.output_dir + "/.partial";
    std::string stage = "config";
    write_text_file(marker, "stage " + stage + " in progress\n");
    auto enter = [&](const std::string& s) {
        stage = s;
        write_text_file(marker, "stage " + stage + " in progress\n");
    };

    try {
        enter("netlist");
        const Netlist nl = load_netlist(cfg.netlist_path);
        say("netlist: " + nl.name + " (" + std::to_string(nl.cells.size()) + " cells, " +
            std::to_string(nl.flip_flops().size()) + " flip-flops)");

        enter("graph");
        const CircuitGraph g = build_graph(nl);

        enter("simulate");
        const Stimulus stim = load_stimulus(cfg.stimulus_path, nl, cfg.observe);
        const Simulator sim(nl, g);
        ActivityTrace activity;
        sim.run_golden(stim, &activity);
        say("simulate: " + std::to_string(stim.cycles()) + " cycles, observing " +
            std::to_string(stim.observe.begin) + ".." + std::to_string(stim.observe.end));

        enter("features");
        const std::vector<FeatureVector> features = extract_all(nl, g, activity);
        write_features_csv(cfg.output_dir + "/features.csv", features);

        enter("inject");
        CampaignConfig campaign = cfg.campaign;
        campaign.jobs = cfg.jobs;
        const std::vector<FdrRecord> records = run_campaign(nl, g, stim, campaign);
        write_fdr_csv(cfg.output_dir + "/fdr.csv", records);
        long total_runs = 0;
        for (const auto& r : records)
            total_runs += r.injections;
        say("inject: " + std::to_string(total_runs) + " runs over " +
            std::to_string(records.size()) + " flip-flops");

        enter("split");
        std::vector<NamedRow> named;
        named.reserve(features.size());
        for (const FeatureVector& fv : features)
            named.push_back({fv.ff_name, fv.as_row()});
        std::vector<LabeledValue> labels;
        labels.reserve(records.size());
        for (const FdrRecord& r : records)
            labels.push_back({r.ff_name, r.fdr});
        const Dataset ds = join_dataset(named, labels);
        const auto [train, test] = split_dataset(ds, cfg.training_size,
                                                 mix_seed(cfg.eval_seed, 0x5317));
        say("split: " + std::to_string(train.size()) + " training rows, " +
            std::to_string(test.size()) + " held out");

        struct PerModel {
            ModelKind kind;
            Hyperparameters hp;
            Json search = nullptr;
            CvAggregate cv;
            TrainedModel model;
            MetricSet holdout;
        };
        std::vector<PerModel> outcomes;

        for (ModelKind kind : cfg.kinds) {
            PerModel pm;
            pm.kind = kind;
            pm.hp = cfg.manual;

            enter("search");
            if (cfg.run_search && kind != ModelKind::Ols) {
                const SearchResult sr = hyperparameter_search(
                    train, kind, cfg.space, cfg.folds, cfg.training_size, cfg.eval_seed,
                    cfg.jobs);
                pm.hp = sr.best;
                pm.search = Json{{"evaluated", sr.evaluated}, {"best_score", sr.best_score}};
                pm.cv = sr.best_cv;
                say(std::string("search: ") + model_kind_name(kind) + " best " +
                    hyperparameters_json(kind, pm.hp).dump() + " r2 " +
                    format_double(sr.best_score));
            } else {
                pm.cv = cross_validate(train, kind, pm.hp, cfg.folds, cfg.training_size,
                                       cfg.eval_seed);
            }

            enter("train");
            pm.model = fit_model(train, kind, pm.hp);
            save_model(cfg.output_dir + "/models/" + model_kind_name(kind) + ".json", pm.model);

            enter("evaluate");
            pm.holdout = compute_metrics(test.targets(), predict_all(pm.model, test));
            say(std::string("evaluate: ") + model_kind_name(kind) + " holdout r2 " +
                format_double(pm.holdout.r2));
            outcomes.push_back(std::move(pm));
        }

        enter("evaluate");
        {
            std::string csv = "ff_name,fdr,split";
            for (const PerModel& pm : outcomes) {
                csv += ",pred_";
                csv += model_kind_name(pm.kind);
                csv += ",oob_";
                csv += model_kind_name(pm.kind);
            }
            csv += '\n';
            std::vector<char> is_train(ds.size(), 0);
            {
                std::size_t ti = 0;
                for (std::size_t i = 0; i < ds.size(); ++i)
                    if (ti < train.size() && ds.rows[i].name == train.rows[ti].name) {
                        is_train[i] = 1;
                        ++ti;
                    }
            }
            for (std::size_t i = 0; i < ds.size(); ++i) {
                csv += ds.rows[i].name;
                csv += ',';
                csv += format_double(ds.rows[i].target);
                csv += is_train[i] ? ",train" : ",test";
                for (const PerModel& pm : outcomes) {
                    const double p = pm.model.predict(ds.rows[i].features);
                    csv += ',';
                    csv += format_double(p);
                    csv += (p < 0.0 || p > 1.0) ? ",1" : ",0";
                }
                csv += '\n';
            }
            write_text_file(cfg.output_dir + "/predictions.csv", csv);
        }

        {
            Json report;
            report["version"] = 1;
            report["circuit"] = nl.name;
            report["flip_flops"] = records.size();
            report["dataset"] = Json{{"rows", ds.size()},
                                     {"train_rows", train.size()},
                                     {"test_rows", test.size()},
                                     {"training_size", cfg.training_size},
                                     {"folds", cfg.folds},
                                     {"campaign_seed", cfg.campaign.seed},
                                     {"eval_seed", cfg.eval_seed}};
            report["models"] = Json::array();
            for (const PerModel& pm : outcomes) {
                Json row;
                row["kind"] = model_kind_name(pm.kind);
                row["hyperparameters"] = hyperparameters_json(pm.kind, pm.hp);
                row["search"] = pm.search;
                row["cross_validation"] = cv_json(pm.cv);
                row["holdout"] = metric_json(pm.holdout);
                report["models"].push_back(row);
            }
            write_text_file(cfg.output_dir + "/report.json", report.dump(2) + "\n");
        }

        enter("learning-curve");
        {
            std::string csv = "model,fraction,train_rows";
            for (const char* col : metric_columns) {
                csv += ',';
                csv += col;
                csv += "_mean,";
                csv += col;
                csv += "_stddev";
            }
            csv += '\n';
            const std::vector<double> fractions =
                cfg.curve_fractions.empty() ? default_curve_fractions() : cfg.curve_fractions;
            for (const PerModel& pm : outcomes) {
                const std::vector<LearningPoint> points =
                    learning_curve(ds, pm.kind, pm.hp, fractions, cfg.folds, cfg.eval_seed);
                for (const LearningPoint& p : points) {
                    csv += model_kind_name(pm.kind);
                    csv += ',';
                    csv += format_double(p.fraction);
                    csv += ',';
                    csv += std::to_string(p.train_rows);
                    for (auto field : metric_fields) {
                        csv += ',';
                        csv += format_double(p.mean.*field);
                        csv += ',';
                        csv += format_double(p.stddev.*field);
                    }
                    csv += '\n';
                }
            }
            write_text_file(cfg.output_dir + "/learning_curve.csv", csv);
        }

        fs::remove(marker);
        say("done: artifacts in " + cfg.output_dir);
    } catch (const std::exception& e) {
        write_text_file(marker, "stage " + stage + " failed: " + e.what() + "\n");
        throw;
    }
}

} // namespace fdr
