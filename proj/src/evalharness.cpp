#include "fdr/evalharness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "fdr/errors.hpp"

namespace fdr {

namespace {

void check_pair(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size())
        throw LengthMismatchError("got " + std::to_string(truth.size()) + " truth values and " +
                                  std::to_string(pred.size()) + " predictions");
    if (truth.empty())
        throw EmptyInputError("cannot score zero values");
}

double population_variance(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double acc = 0.0;
    for (double x : v)
        acc += (x - mean) * (x - mean);
    return acc / n;
}

} // namespace

double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred) {
    check_pair(truth, pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        acc += std::abs(truth[i] - pred[i]);
    return acc / static_cast<double>(truth.size());
}

double max_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred) {
    check_pair(truth, pred);
    double worst = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        worst = std::max(worst, std::abs(truth[i] - pred[i]));
    return worst;
}

double root_mean_squared_error(const std::vector<double>& truth, const std::vector<double>& pred) {
    check_pair(truth, pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - pred[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

double explained_variance(const std::vector<double>& truth, const std::vector<double>& pred) {
    check_pair(truth, pred);
    const double vy = population_variance(truth);
    if (vy == 0.0)
        throw ZeroVarianceError("explained variance is undefined for constant truth");
    std::vector<double> resid(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
        resid[i] = truth[i] - pred[i];
    return 1.0 - population_variance(resid) / vy;
}

double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
    check_pair(truth, pred);
    const double mean =
        std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - pred[i];
        ss_res += e * e;
        const double d = truth[i] - mean;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0)
        throw ZeroVarianceError("r2 is undefined for constant truth");
    return 1.0 - ss_res / ss_tot;
}

MetricSet compute_metrics(const std::vector<double>& truth, const std::vector<double>& pred) {
    MetricSet m;
    m.mae = mean_absolute_error(truth, pred);
    m.max_err = max_absolute_error(truth, pred);
    m.rmse = root_mean_squared_error(truth, pred);
    m.ev = explained_variance(truth, pred);
    m.r2 = r_squared(truth, pred);
    return m;
}

std::vector<int> quantile_bins(const std::vector<double>& values, int bins,
                               std::size_t min_bin_size) {
    if (values.empty())
        throw EmptyInputError("cannot bin zero values");
    if (bins < 1)
        throw ConfigError("bin count must be positive");

    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int j = 1; j < bins; ++j) {
        const double e = sorted[values.size() * static_cast<std::size_t>(j) /
                                static_cast<std::size_t>(bins)];
        if (edges.empty() || e > edges.back())
            edges.push_back(e);
    }

    // A value equal to an edge belongs to the bin below it.
    auto assign = [&edges](double v) {
        int b = 0;
        for (double e : edges) {
            if (e < v)
                ++b;
            else
                break;
        }
        return b;
    };

    for (;;) {
        std::vector<std::size_t> counts(edges.size() + 1, 0);
        for (double v : values)
            ++counts[static_cast<std::size_t>(assign(v))];
        std::size_t small = counts.size();
        for (std::size_t b = 0; b < counts.size(); ++b)
            if (counts[b] < min_bin_size) {
                small = b;
                break;
            }
        if (small == counts.size() || edges.empty())
            break;
        // Merge into the bin below; the lowest bin merges upward instead.
        edges.erase(edges.begin() + static_cast<long>(small == 0 ? 0 : small - 1));
    }

    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = assign(values[i]);
    return out;
}

std::vector<int> stratified_folds(const std::vector<double>& targets, int folds,
                                  std::uint64_t seed) {
    if (folds < 2)
        throw ConfigError("need at least two folds");
    if (targets.size() < static_cast<std::size_t>(folds))
        throw TooFewSamplesError(std::to_string(targets.size()) + " rows cannot fill " +
                                 std::to_string(folds) + " folds");

    const std::vector<int> bins =
        quantile_bins(targets, 5, static_cast<std::size_t>(folds));
    const int nbins = *std::max_element(bins.begin(), bins.end()) + 1;

    std::vector<int> fold(targets.size(), 0);
    Rng rng(seed);
    std::size_t offset = 0;
    for (int b = 0; b < nbins; ++b) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (bins[i] == b)
                idx.push_back(i);
        rng.shuffle(idx);
        // Continue the deal where the previous bin stopped so overall fold
        // sizes stay balanced, not just per-bin ones.
        for (std::size_t i = 0; i < idx.size(); ++i)
            fold[idx[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(folds));
        offset = (offset + idx.size()) % static_cast<std::size_t>(folds);
    }
    return fold;
}

std::vector<std::size_t> stratified_subsample(const std::vector<double>& targets,
                                              std::size_t take, Rng& rng) {
    const std::size_t n = targets.size();
    if (n == 0)
        throw EmptyInputError("cannot subsample zero rows");
    if (take > n)
        throw TooFewSamplesError("cannot pick " + std::to_string(take) + " of " +
                                 std::to_string(n) + " rows");
    const std::vector<int> bins = quantile_bins(targets, 5, 2);
    const int nbins = *std::max_element(bins.begin(), bins.end()) + 1;

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(nbins));
    for (std::size_t i = 0; i < n; ++i)
        members[static_cast<std::size_t>(bins[i])].push_back(i);

    // Largest-remainder allocation of `take` across bins.
    std::vector<std::size_t> alloc(members.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainder; // (-frac, bin)
    std::size_t allocated = 0;
    for (std::size_t b = 0; b < members.size(); ++b) {
        const double exact = static_cast<double>(take) * static_cast<double>(members[b].size()) /
                             static_cast<double>(n);
        alloc[b] = static_cast<std::size_t>(exact);
        allocated += alloc[b];
        remainder.emplace_back(-(exact - static_cast<double>(alloc[b])), b);
    }
    std::sort(remainder.begin(), remainder.end());
    for (std::size_t r = 0; allocated < take; ++r) {
        const std::size_t b = remainder[r % remainder.size()].second;
        if (alloc[b] < members[b].size()) {
            ++alloc[b];
            ++allocated;
        }
    }

    std::vector<std::size_t> picked;
    picked.reserve(take);
    for (std::size_t b = 0; b < members.size(); ++b) {
        rng.shuffle(members[b]);
        for (std::size_t i = 0; i < alloc[b]; ++i)
            picked.push_back(members[b][i]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

namespace {

constexpr std::array<double MetricSet::*, 5> kMetricFields = {
    &MetricSet::mae, &MetricSet::max_err, &MetricSet::rmse, &MetricSet::ev, &MetricSet::r2};

void aggregate(CvAggregate& agg) {
    const double n = static_cast<double>(agg.per_fold.size());
    for (auto field : kMetricFields) {
        double sum = 0.0;
        for (const MetricSet& m : agg.per_fold)
            sum += m.*field;
        const double mean = sum / n;
        double var = 0.0;
        for (const MetricSet& m : agg.per_fold)
            var += (m.*field - mean) * (m.*field - mean);
        agg.mean.*field = mean;
        agg.stddev.*field = std::sqrt(var / n);
    }
}

} // namespace

CvAggregate cross_validate(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                           int folds, double training_size, std::uint64_t seed) {
    if (!(training_size > 0.0 && training_size <= 1.0))
        throw ConfigError("training size fraction must be in (0, 1]");
    const std::vector<double> targets = ds.targets();
    const std::vector<int> fold_of = stratified_folds(targets, folds, mix_seed(seed, 0xF01D));

    CvAggregate agg;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> pool, test_idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            (fold_of[i] == f ? test_idx : pool).push_back(i);
        if (test_idx.empty() || pool.empty())
            throw TooFewSamplesError("fold " + std::to_string(f) + " has no data");

        std::vector<double> pool_targets;
        pool_targets.reserve(pool.size());
        for (std::size_t i : pool)
            pool_targets.push_back(targets[i]);
        std::size_t take = static_cast<std::size_t>(
            std::llround(training_size * static_cast<double>(pool.size())));
        take = std::clamp<std::size_t>(take, 1, pool.size());

        Rng rng(mix_seed(seed, 0x5AB5, static_cast<std::uint64_t>(f)));
        const std::vector<std::size_t> pick = stratified_subsample(pool_targets, take, rng);

        Dataset train, test;
        for (std::size_t p : pick)
            train.rows.push_back(ds.rows[pool[p]]);
        for (std::size_t i : test_idx)
            test.rows.push_back(ds.rows[i]);

        const TrainedModel model = fit_model(train, kind, hp);
        const std::vector<double> pred = predict_all(model, test);
        agg.per_fold.push_back(compute_metrics(test.targets(), pred));
        agg.train_sizes.push_back(train.rows.size());
    }
    aggregate(agg);
    return agg;
}

namespace {

// Tie break after the score: prefer the smoother model (larger k, smaller C),
// then a fixed lexical order so reruns pick the same winner.
bool better_candidate(ModelKind kind, const Hyperparameters& a, double score_a,
                      const Hyperparameters& b, double score_b) {
    if (score_a != score_b)
        return score_a > score_b;
    if (kind == ModelKind::Knn) {
        if (a.knn_k != b.knn_k)
            return a.knn_k > b.knn_k;
        return std::string(metric_name(a.knn_metric)) < metric_name(b.knn_metric);
    }
    if (a.svr_c != b.svr_c)
        return a.svr_c < b.svr_c;
    if (a.svr_gamma != b.svr_gamma)
        return a.svr_gamma < b.svr_gamma;
    return a.svr_epsilon < b.svr_epsilon;
}

std::vector<double> log_grid(double center, double span, double lo, double hi, int points) {
    const double a = std::clamp(center / span, lo, hi);
    const double b = std::clamp(center * span, lo, hi);
    std::vector<double> out;
    for (int p = 0; p < points; ++p) {
        const double frac = points == 1 ? 0.5 : static_cast<double>(p) / (points - 1);
        const double x = std::exp(std::log(a) + frac * (std::log(b) - std::log(a)));
        if (out.empty() || x > out.back())
            out.push_back(x);
    }
    return out;
}

std::vector<double> linear_grid(double center, double halfwidth, double lo, double hi,
                                int points) {
    const double a = std::max(lo, center - halfwidth);
    const double b = std::min(hi, center + halfwidth);
    std::vector<double> out;
    for (int p = 0; p < points; ++p) {
        const double frac = points == 1 ? 0.5 : static_cast<double>(p) / (points - 1);
        const double x = a + frac * (b - a);
        if (out.empty() || x > out.back())
            out.push_back(x);
    }
    return out;
}

} // namespace

namespace {

struct ScoredCandidate {
    Hyperparameters hp;
    CvAggregate cv;
    bool ok = false;
    std::exception_ptr error;
};

// Scores every candidate with cross_validate on the shared seed (identical
// folds for all of them). Evaluation order never affects the outcome: scores
// land in per-candidate slots and the winner is chosen by a sequential scan.
std::vector<ScoredCandidate> score_candidates(const Dataset& ds, ModelKind kind,
                                              const std::vector<Hyperparameters>& candidates,
                                              int folds, double training_size,
                                              std::uint64_t seed, int jobs) {
    std::vector<ScoredCandidate> scored(candidates.size());
    const int width = std::clamp<int>(jobs, 1, static_cast<int>(candidates.size()));
    auto worker = [&](int t) {
        for (std::size_t i = static_cast<std::size_t>(t); i < candidates.size();
             i += static_cast<std::size_t>(width)) {
            scored[i].hp = candidates[i];
            try {
                scored[i].cv = cross_validate(ds, kind, candidates[i], folds, training_size, seed);
                scored[i].ok = true;
            } catch (const FdrError&) {
                // A diverging candidate loses the comparison instead of
                // aborting the search; if every candidate fails, the first
                // error surfaces in the caller.
                scored[i].error = std::current_exception();
            }
        }
    };
    if (width == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(width));
        for (int t = 0; t < width; ++t)
            pool.emplace_back(worker, t);
        for (auto& th : pool)
            th.join();
    }
    return scored;
}

// Returns the winner index, or candidates.size() when none converged.
std::size_t pick_winner(ModelKind kind, const std::vector<ScoredCandidate>& scored) {
    std::size_t best = scored.size();
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (!scored[i].ok)
            continue;
        if (best == scored.size() ||
            better_candidate(kind, scored[i].hp, scored[i].cv.mean.r2, scored[best].hp,
                             scored[best].cv.mean.r2))
            best = i;
    }
    return best;
}

} // namespace

SearchResult hyperparameter_search(const Dataset& ds, ModelKind kind, const SearchSpace& space,
                                   int folds, double training_size, std::uint64_t seed,
                                   int jobs) {
    if (kind == ModelKind::Ols)
        throw NonSearchableError("least squares has no hyperparameters to search");
    if (space.random_samples < 1 || space.grid_points < 1)
        throw ConfigError("search needs at least one sample per stage");
    if (space.metrics.empty())
        throw ConfigError("search space has no distance metrics");

    std::vector<Hyperparameters> random_stage;
    Rng rng(mix_seed(seed, 0x5EA7C4));
    for (int i = 0; i < space.random_samples; ++i) {
        Hyperparameters hp;
        if (kind == ModelKind::Knn) {
            hp.knn_k = space.k_min +
                       static_cast<int>(rng.next_below(
                           static_cast<std::uint64_t>(space.k_max - space.k_min + 1)));
            hp.knn_metric = space.metrics[static_cast<std::size_t>(
                rng.next_below(space.metrics.size()))];
        } else {
            hp.svr_c = std::exp(rng.uniform(std::log(space.c_lo), std::log(space.c_hi)));
            hp.svr_gamma =
                std::exp(rng.uniform(std::log(space.gamma_lo), std::log(space.gamma_hi)));
            hp.svr_epsilon = rng.uniform(space.epsilon_lo, space.epsilon_hi);
        }
        random_stage.push_back(hp);
    }

    std::vector<ScoredCandidate> scored =
        score_candidates(ds, kind, random_stage, folds, training_size, seed, jobs);
    std::size_t winner = pick_winner(kind, scored);
    if (winner == scored.size()) {
        for (const auto& s : scored)
            if (s.error)
                std::rethrow_exception(s.error);
        throw TooFewSamplesError("search evaluated no candidates");
    }

    const Hyperparameters center = scored[winner].hp;
    std::vector<Hyperparameters> grid_stage;
    if (kind == ModelKind::Knn) {
        std::vector<int> ks;
        for (double x : log_grid(center.knn_k, space.grid_span, space.k_min, space.k_max,
                                 space.grid_points)) {
            const int k = std::clamp(static_cast<int>(std::llround(x)), space.k_min, space.k_max);
            if (ks.empty() || k > ks.back())
                ks.push_back(k);
        }
        for (int k : ks)
            for (DistanceMetric m : space.metrics) {
                Hyperparameters hp;
                hp.knn_k = k;
                hp.knn_metric = m;
                grid_stage.push_back(hp);
            }
    } else {
        const std::vector<double> cs =
            log_grid(center.svr_c, space.grid_span, space.c_lo, space.c_hi, space.grid_points);
        const std::vector<double> gs = log_grid(center.svr_gamma, space.grid_span, space.gamma_lo,
                                                space.gamma_hi, space.grid_points);
        const double eps_half = (space.epsilon_hi - space.epsilon_lo) / space.grid_span;
        const std::vector<double> es = linear_grid(center.svr_epsilon, eps_half, space.epsilon_lo,
                                                   space.epsilon_hi, space.grid_points);
        for (double c : cs)
            for (double g : gs)
                for (double e : es) {
                    Hyperparameters hp;
                    hp.svr_c = c;
                    hp.svr_gamma = g;
                    hp.svr_epsilon = e;
                    grid_stage.push_back(hp);
                }
    }

    std::vector<ScoredCandidate> refined =
        score_candidates(ds, kind, grid_stage, folds, training_size, seed, jobs);
    scored.insert(scored.end(), std::make_move_iterator(refined.begin()),
                  std::make_move_iterator(refined.end()));
    winner = pick_winner(kind, scored);

    SearchResult result;
    result.best = scored[winner].hp;
    result.best_score = scored[winner].cv.mean.r2;
    result.best_cv = std::move(scored[winner].cv);
    result.evaluated = static_cast<long>(scored.size());
    return result;
}

std::vector<double> default_curve_fractions() {
    return {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
}

std::vector<LearningPoint> learning_curve(const Dataset& ds, ModelKind kind,
                                          const Hyperparameters& hp,
                                          const std::vector<double>& fractions, int folds,
                                          std::uint64_t seed) {
    if (fractions.empty())
        throw ConfigError("learning curve needs at least one fraction");
    for (double f : fractions)
        if (!(f > 0.0 && f < 1.0))
            throw ConfigError("learning curve fractions must lie strictly between 0 and 1");
    std::vector<LearningPoint> points;
    points.reserve(fractions.size());
    for (double f : fractions) {
        const CvAggregate agg = cross_validate(ds, kind, hp, folds, f, seed);
        LearningPoint p;
        p.fraction = f;
        std::size_t total = 0;
        for (std::size_t s : agg.train_sizes)
            total += s;
        p.train_rows = (total + agg.train_sizes.size() / 2) / agg.train_sizes.size();
        p.mean = agg.mean;
        p.stddev = agg.stddev;
        points.push_back(p);
    }
    return points;
}

} // namespace fdr
