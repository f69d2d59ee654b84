#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include <fdr/evalharness.hpp>
#include <fdr/rng.hpp>

namespace {

fdr::Dataset random_dataset(std::size_t n, std::uint64_t seed) {
    fdr::Rng rng(seed);
    fdr::Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        fdr::DataRow row;
        char buf[16];
        std::snprintf(buf, sizeof buf, "r%04zu", i);
        row.name = buf;
        double acc = 0.0;
        for (double& f : row.features) {
            f = rng.uniform(0.0, 2.0);
            acc += f;
        }
        row.target = acc / (2.0 * fdr::kFeatureCount) + 0.1 * rng.next_double();
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

std::size_t count_label(const std::vector<int>& v, int label) {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), label));
}

} // namespace

TEST_CASE("evalharness: metrics match their definitions on random data") {
    fdr::Rng rng(42);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 2 + rng.next_below(60);
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Spread guarantees non-constant truth.
            y[i] = rng.next_double() + static_cast<double>(i % 7);
            p[i] = y[i] + rng.uniform(-0.5, 0.5);
        }

        double abs_sum = 0.0, sq_sum = 0.0, worst = 0.0;
        double y_mean = 0.0, e_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = y[i] - p[i];
            abs_sum += std::abs(e);
            sq_sum += e * e;
            worst = std::max(worst, std::abs(e));
            y_mean += y[i];
            e_mean += e;
        }
        y_mean /= static_cast<double>(n);
        e_mean /= static_cast<double>(n);
        double ss_tot = 0.0, var_e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ss_tot += (y[i] - y_mean) * (y[i] - y_mean);
            const double e = y[i] - p[i];
            var_e += (e - e_mean) * (e - e_mean);
        }

        const fdr::MetricSet m = fdr::compute_metrics(y, p);
        CHECK(m.mae ==
              doctest::Approx(abs_sum / static_cast<double>(n)).epsilon(1e-12));
        CHECK(m.max_err == doctest::Approx(worst).epsilon(1e-12));
        CHECK(m.rmse ==
              doctest::Approx(std::sqrt(sq_sum / static_cast<double>(n))).epsilon(1e-12));
        CHECK(m.ev == doctest::Approx(1.0 - var_e / ss_tot).epsilon(1e-12));
        CHECK(m.r2 == doctest::Approx(1.0 - sq_sum / ss_tot).epsilon(1e-12));

        // The bundle equals the standalone functions.
        CHECK(m.mae == fdr::mean_absolute_error(y, p));
        CHECK(m.max_err == fdr::max_absolute_error(y, p));
        CHECK(m.rmse == fdr::root_mean_squared_error(y, p));
        CHECK(m.ev == fdr::explained_variance(y, p));
        CHECK(m.r2 == fdr::r_squared(y, p));

        // Error magnitudes always order mae <= rmse <= max.
        CHECK(m.mae <= m.rmse + 1e-15);
        CHECK(m.rmse <= m.max_err + 1e-15);

        // r2 differs from ev exactly by the squared bias term.
        const double bias_term =
            static_cast<double>(n) * e_mean * e_mean / ss_tot;
        CHECK(m.r2 == doctest::Approx(m.ev - bias_term).epsilon(1e-10));
    }
}

TEST_CASE("evalharness: worked metric examples") {
    const std::vector<double> y = {0, 1, 1, 0};
    const std::vector<double> p = {0.5, 0.5, 0.5, 0.5};
    fdr::MetricSet m = fdr::compute_metrics(y, p);
    CHECK(m.mae == 0.5);
    CHECK(m.rmse == 0.5);
    CHECK(m.max_err == 0.5);
    CHECK(m.ev == 0.0);
    CHECK(m.r2 == 0.0);

    CHECK(fdr::max_absolute_error({0, 1}, {0.1, 0.4}) == 0.6);
    CHECK(fdr::mean_absolute_error({0, 1}, {0.1, 0.4}) == doctest::Approx(0.35));
}

TEST_CASE("evalharness: metric input validation") {
    CHECK_THROWS_AS(fdr::mean_absolute_error({1.0}, {1.0, 2.0}), fdr::LengthMismatchError);
    CHECK_THROWS_AS(fdr::compute_metrics({}, {}), fdr::EmptyInputError);
    // Constant truth has no variance to explain.
    CHECK_THROWS_AS(fdr::explained_variance({1, 1, 1}, {1, 2, 3}), fdr::ZeroVarianceError);
    CHECK_THROWS_AS(fdr::r_squared({1, 1, 1}, {1, 2, 3}), fdr::ZeroVarianceError);
    CHECK_NOTHROW(fdr::mean_absolute_error({1, 1, 1}, {1, 2, 3}));
}

TEST_CASE("evalharness: quantile bins split at sorted order statistics") {
    const std::vector<double> v = {9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
    std::vector<int> bins = fdr::quantile_bins(v, 5, 1);
    // Edges 2,4,6,8; a value equal to an edge stays in the lower bin.
    const std::vector<int> expect = {4, 3, 3, 2, 2, 1, 1, 0, 0, 0};
    CHECK(bins == expect);
}

TEST_CASE("evalharness: undersized quantile bins merge downward") {
    const std::vector<double> v = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<int> bins = fdr::quantile_bins(v, 5, 2);
    // The singleton top bin merges into its lower neighbour.
    const std::vector<int> expect = {0, 0, 0, 1, 1, 2, 2, 3, 3, 3};
    CHECK(bins == expect);
    for (int b = 0; b <= 3; ++b)
        CHECK(count_label(bins, b) >= 2);
}

TEST_CASE("evalharness: degenerate quantile bin inputs") {
    // Identical values collapse to one bin.
    std::vector<int> bins = fdr::quantile_bins({3, 3, 3, 3}, 5, 1);
    CHECK(bins == std::vector<int>{0, 0, 0, 0});

    // Heavy duplication keeps edges strictly increasing.
    bins = fdr::quantile_bins({1, 1, 1, 1, 2, 2}, 3, 1);
    CHECK(bins == std::vector<int>{0, 0, 0, 0, 1, 1});

    CHECK_THROWS_AS(fdr::quantile_bins({}, 5, 1), fdr::EmptyInputError);
    CHECK_THROWS_AS(fdr::quantile_bins({1.0}, 0, 1), fdr::ConfigError);
}

TEST_CASE("evalharness: stratified folds balance sizes to within one row") {
    std::vector<double> targets(1054);
    fdr::Rng rng(5);
    for (double& t : targets)
        t = rng.next_double();

    std::vector<int> fold = fdr::stratified_folds(targets, 10, 77);
    std::map<int, std::size_t> sizes;
    for (int f : fold)
        ++sizes[f];
    REQUIRE(sizes.size() == 10);
    std::size_t at105 = 0, at106 = 0;
    for (const auto& [f, n] : sizes) {
        if (n == 105)
            ++at105;
        if (n == 106)
            ++at106;
    }
    // 1054 = 6*105 + 4*106.
    CHECK(at105 == 6);
    CHECK(at106 == 4);

    // Same seed, same deal; new seed, new deal.
    CHECK(fdr::stratified_folds(targets, 10, 77) == fold);
    CHECK(fdr::stratified_folds(targets, 10, 78) != fold);

    CHECK_THROWS_AS(fdr::stratified_folds(targets, 1, 7), fdr::ConfigError);
    CHECK_THROWS_AS(fdr::stratified_folds({1.0, 2.0}, 3, 7), fdr::TooFewSamplesError);
}

TEST_CASE("evalharness: every fold spans the label range") {
    std::vector<double> targets(200);
    for (std::size_t i = 0; i < targets.size(); ++i)
        targets[i] = static_cast<double>(i) / 200.0;
    std::vector<int> fold = fdr::stratified_folds(targets, 5, 3);

    // Each fold must contain rows from the lowest and highest quintile.
    for (int f = 0; f < 5; ++f) {
        bool has_low = false, has_high = false;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (fold[i] != f)
                continue;
            has_low |= targets[i] < 0.2;
            has_high |= targets[i] >= 0.8;
        }
        CAPTURE(f);
        CHECK(has_low);
        CHECK(has_high);
    }
}

TEST_CASE("evalharness: stratified subsample allocates by largest remainder") {
    // Bins of size 6 and 2; taking 3 gives 2 from the big bin and 1 from the
    // small one (exact shares 2.25 and 0.75).
    const std::vector<double> targets = {0, 0, 0, 0, 0, 0, 1, 1};
    fdr::Rng rng(1);
    std::vector<std::size_t> picks = fdr::stratified_subsample(targets, 3, rng);
    REQUIRE(picks.size() == 3);
    CHECK(std::is_sorted(picks.begin(), picks.end()));
    int zeros = 0, ones = 0;
    for (std::size_t i : picks)
        (targets[i] == 0.0 ? zeros : ones)++;
    CHECK(zeros == 2);
    CHECK(ones == 1);

    // Both strata survive a half split of {0,0,1,1}.
    const std::vector<double> four = {0, 0, 1, 1};
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        fdr::Rng r(seed);
        std::vector<std::size_t> half = fdr::stratified_subsample(four, 2, r);
        CHECK(four[half[0]] + four[half[1]] == 1.0);
    }

    fdr::Rng r2(3);
    CHECK_THROWS_AS(fdr::stratified_subsample({}, 0, r2), fdr::EmptyInputError);
    CHECK_THROWS_AS(fdr::stratified_subsample(four, 5, r2), fdr::TooFewSamplesError);
}

TEST_CASE("evalharness: cross validation bookkeeping") {
    fdr::Dataset ds = random_dataset(60, 13);
    fdr::Hyperparameters hp;
    hp.knn_k = 3;

    fdr::CvAggregate agg = fdr::cross_validate(ds, fdr::ModelKind::Knn, hp, 10, 0.5, 7);
    REQUIRE(agg.per_fold.size() == 10);
    REQUIRE(agg.train_sizes.size() == 10);
    // 60 rows, 6 per test fold, half of the 54-row pool trains.
    for (std::size_t s : agg.train_sizes)
        CHECK(s == 27);

    // The aggregate is the plain mean and population spread of the folds.
    double sum = 0.0;
    for (const auto& m : agg.per_fold)
        sum += m.mae;
    const double mean = sum / 10.0;
    double var = 0.0;
    for (const auto& m : agg.per_fold)
        var += (m.mae - mean) * (m.mae - mean);
    CHECK(agg.mean.mae == mean);
    CHECK(agg.stddev.mae == std::sqrt(var / 10.0));

    // Rerun is identical.
    fdr::CvAggregate again = fdr::cross_validate(ds, fdr::ModelKind::Knn, hp, 10, 0.5, 7);
    CHECK(again.mean.r2 == agg.mean.r2);
    CHECK(again.stddev.rmse == agg.stddev.rmse);

    CHECK_THROWS_AS(fdr::cross_validate(ds, fdr::ModelKind::Knn, hp, 10, 1.5, 7),
                    fdr::ConfigError);
    CHECK_THROWS_AS(fdr::cross_validate(ds, fdr::ModelKind::Knn, hp, 10, 0.0, 7),
                    fdr::ConfigError);
}

TEST_CASE("evalharness: full-pool training size is allowed in cross validation") {
    fdr::Dataset ds = random_dataset(40, 19);
    fdr::CvAggregate agg =
        fdr::cross_validate(ds, fdr::ModelKind::Ols, {}, 5, 1.0, 3);
    for (std::size_t s : agg.train_sizes)
        CHECK(s == 32); // the whole pool
}

TEST_CASE("evalharness: search is deterministic and thread-count independent") {
    fdr::Dataset ds = random_dataset(50, 23);
    fdr::SearchSpace space;
    space.random_samples = 8;
    space.grid_points = 3;
    space.k_max = 8;

    fdr::SearchResult a =
        fdr::hyperparameter_search(ds, fdr::ModelKind::Knn, space, 5, 0.5, 11, 1);
    fdr::SearchResult b =
        fdr::hyperparameter_search(ds, fdr::ModelKind::Knn, space, 5, 0.5, 11, 4);
    CHECK(a.best.knn_k == b.best.knn_k);
    CHECK(a.best.knn_metric == b.best.knn_metric);
    CHECK(a.best_score == b.best_score);
    CHECK(a.evaluated == b.evaluated);
    CHECK(a.evaluated >= space.random_samples);

    // The reported score is reproducible from the winning candidate.
    fdr::CvAggregate check =
        fdr::cross_validate(ds, fdr::ModelKind::Knn, a.best, 5, 0.5, 11);
    CHECK(check.mean.r2 == a.best_score);
    CHECK(a.best_cv.per_fold.size() == 5);
}

TEST_CASE("evalharness: svr search stays within the declared space") {
    fdr::Dataset ds = random_dataset(30, 29);
    fdr::SearchSpace space;
    space.random_samples = 4;
    space.grid_points = 2;

    fdr::SearchResult r =
        fdr::hyperparameter_search(ds, fdr::ModelKind::Svr, space, 5, 0.5, 3, 2);
    CHECK(r.best.svr_c >= space.c_lo);
    CHECK(r.best.svr_c <= space.c_hi);
    CHECK(r.best.svr_gamma >= space.gamma_lo);
    CHECK(r.best.svr_gamma <= space.gamma_hi);
    CHECK(r.best.svr_epsilon >= space.epsilon_lo);
    CHECK(r.best.svr_epsilon <= space.epsilon_hi);
}

TEST_CASE("evalharness: least squares is not searchable") {
    fdr::Dataset ds = random_dataset(30, 31);
    CHECK_THROWS_AS(fdr::hyperparameter_search(ds, fdr::ModelKind::Ols, {}, 5, 0.5, 1),
                    fdr::NonSearchableError);
}

TEST_CASE("evalharness: learning curve covers the default grid") {
    const std::vector<double> fractions = fdr::default_curve_fractions();
    CHECK(fractions ==
          std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});

    fdr::Dataset ds = random_dataset(60, 37);
    fdr::Hyperparameters hp;
    hp.knn_k = 3;
    std::vector<fdr::LearningPoint> curve =
        fdr::learning_curve(ds, fdr::ModelKind::Knn, hp, fractions, 10, 7);
    REQUIRE(curve.size() == 9);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].fraction == fractions[i]);
        CHECK(curve[i].train_rows >= 1);
        CHECK(std::isfinite(curve[i].mean.r2));
        CHECK(curve[i].stddev.mae >= 0.0);
    }
    // 54-row pools: 0.05 -> 3 rows, 0.5 -> 27, 0.8 -> 43.
    CHECK(curve[0].train_rows == 3);
    CHECK(curve[5].train_rows == 27);
    CHECK(curve[8].train_rows == 43);

    CHECK_THROWS_AS(fdr::learning_curve(ds, fdr::ModelKind::Knn, hp, {}, 10, 7),
                    fdr::ConfigError);
    CHECK_THROWS_AS(fdr::learning_curve(ds, fdr::ModelKind::Knn, hp, {0.5, 1.0}, 10, 7),
                    fdr::ConfigError);
    CHECK_THROWS_AS(fdr::learning_curve(ds, fdr::ModelKind::Knn, hp, {0.0}, 10, 7),
                    fdr::ConfigError);
}
