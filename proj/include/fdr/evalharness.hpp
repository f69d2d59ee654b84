#pragma once

#include <cstdint>
#include <vector>

#include "fdr/dataset.hpp"
#include "fdr/models.hpp"
#include "fdr/rng.hpp"

namespace fdr {

double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred);
double max_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred);
double root_mean_squared_error(const std::vector<double>& truth, const std::vector<double>& pred);
double explained_variance(const std::vector<double>& truth, const std::vector<double>& pred);
double r_squared(const std::vector<double>& truth, const std::vector<double>& pred);

// The five scores reported for every evaluation.
struct MetricSet {
    double mae = 0.0;
    double max_err = 0.0;
    double rmse = 0.0;
    double ev = 0.0;
    double r2 = 0.0;
};

MetricSet compute_metrics(const std::vector<double>& truth, const std::vector<double>& pred);

// Quantile bin labels (0-based, contiguous) over the value distribution.
// Bins smaller than min_bin_size are merged into their lower neighbour until
// every bin is large enough or only one bin remains.
std::vector<int> quantile_bins(const std::vector<double>& values, int bins,
                               std::size_t min_bin_size);

// Fold label per row. Rows are binned on the target, shuffled within each
// bin, and dealt round robin, so every fold sees the whole label range and
// overall fold sizes differ by at most one.
std::vector<int> stratified_folds(const std::vector<double>& targets, int folds,
                                  std::uint64_t seed);

// Picks `take` positions out of targets.size(), allocated across label
// quantile bins by largest remainder. Returned positions are sorted.
std::vector<std::size_t> stratified_subsample(const std::vector<double>& targets,
                                              std::size_t take, Rng& rng);

struct CvAggregate {
    std::vector<MetricSet> per_fold;
    std::vector<std::size_t> train_sizes;
    MetricSet mean;
    MetricSet stddev;
};

// Stratified k-fold cross validation. Each fold trains on a stratified
// subsample of round(training_size * pool) rows drawn from the other folds
// and scores on the held-out fold.
CvAggregate cross_validate(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                           int folds, double training_size, std::uint64_t seed);

struct SearchSpace {
    int k_min = 1;
    int k_max = 15;
    std::vector<DistanceMetric> metrics = {DistanceMetric::Manhattan,
                                           DistanceMetric::Euclidean};
    double c_lo = 0.1;
    double c_hi = 100.0;
    double gamma_lo = 1e-3;
    double gamma_hi = 1.0;
    double epsilon_lo = 0.0;
    double epsilon_hi = 0.2;
    int random_samples = 60;
    int grid_points = 5;  // per parameter in the refinement stage
    double grid_span = 4.0; // refinement reaches winner/span .. winner*span
};

struct SearchResult {
    Hyperparameters best;
    double best_score = 0.0; // mean r2 across folds
    CvAggregate best_cv;
    long evaluated = 0;
};

// Two-stage search: random sampling over the space, then a local grid around
// the stage-one winner. Every candidate is scored with cross_validate on the
// same seed, hence on identical folds; the winner is independent of the
// worker count. Least squares has nothing to tune.
SearchResult hyperparameter_search(const Dataset& ds, ModelKind kind, const SearchSpace& space,
                                   int folds, double training_size, std::uint64_t seed,
                                   int jobs = 1);

struct LearningPoint {
    double fraction = 0.0;
    std::size_t train_rows = 0; // mean rows actually fitted per fold
    MetricSet mean;
    MetricSet stddev;
};

std::vector<double> default_curve_fractions();

std::vector<LearningPoint> learning_curve(const Dataset& ds, ModelKind kind,
                                          const Hyperparameters& hp,
                                          const std::vector<double>& fractions, int folds,
                                          std::uint64_t seed);

} // namespace fdr
