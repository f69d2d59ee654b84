#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdr/dataset.hpp"
#include "fdr/netlist.hpp" // for Json

namespace fdr {

enum class ModelKind { Ols, Knn, Svr };

ModelKind parse_model_kind(const std::string& name);
const char* model_kind_name(ModelKind kind);

enum class DistanceMetric { Manhattan, Euclidean };

DistanceMetric parse_metric(const std::string& name);
const char* metric_name(DistanceMetric m);

// One bag for all tunables; each model reads only its own fields.
struct Hyperparameters {
    int knn_k = 3;
    DistanceMetric knn_metric = DistanceMetric::Manhattan;
    double svr_c = 3.5;
    double svr_gamma = 0.055;
    double svr_epsilon = 0.025;
};

// Per-feature z-score fitted on training data only. Zero-variance features
// map to 0 so they carry no information instead of blowing up.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale; // population standard deviation; 0 kept as-is

    void fit(const std::vector<std::vector<double>>& rows);
    std::vector<double> transform(const std::vector<double>& row) const;
};

struct TrainedModel {
    ModelKind kind = ModelKind::Ols;
    std::size_t dim = 0;
    Standardizer standardizer;

    // least squares
    std::vector<double> weights;
    double intercept = 0.0;

    // k nearest neighbours (rows stored standardized)
    int k = 0;
    DistanceMetric metric = DistanceMetric::Manhattan;
    std::vector<std::vector<double>> train_rows;
    std::vector<double> train_targets;

    // support vector regression (rows stored standardized)
    double svr_c = 0.0;
    double svr_gamma = 0.0;
    double svr_epsilon = 0.0;
    double bias = 0.0;
    std::vector<std::vector<double>> support_rows;
    std::vector<double> dual_coefs;
    double kkt_violation = 0.0;
    long smo_steps = 0;

    // Raw (unstandardized) features in; predictions are not clamped to any
    // range, callers flag out-of-range values.
    double predict(const std::vector<double>& features) const;
    double predict(const std::array<double, kFeatureCount>& features) const;
};

// Deterministic for a fixed dataset order; Dataset is already
// name-normalized by construction.
TrainedModel fit_model(const Dataset& ds, ModelKind kind, const Hyperparameters& hp);

std::vector<double> predict_all(const TrainedModel& model, const Dataset& ds);

Json serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const Json& doc);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

} // namespace fdr
