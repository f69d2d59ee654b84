#include "fdr/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fdr/errors.hpp"
#include "fdr/textio.hpp"

namespace fdr {

ModelKind parse_model_kind(const std::string& name) {
    if (name == "ols")
        return ModelKind::Ols;
    if (name == "knn")
        return ModelKind::Knn;
    if (name == "svr")
        return ModelKind::Svr;
    throw ConfigError("unknown model kind '" + name + "' (expected ols, knn or svr)");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::Ols: return "ols";
    case ModelKind::Knn: return "knn";
    case ModelKind::Svr: return "svr";
    }
    return "?";
}

DistanceMetric parse_metric(const std::string& name) {
    if (name == "manhattan")
        return DistanceMetric::Manhattan;
    if (name == "euclidean")
        return DistanceMetric::Euclidean;
    throw ConfigError("unknown distance metric '" + name + "'");
}

const char* metric_name(DistanceMetric m) {
    return m == DistanceMetric::Manhattan ? "manhattan" : "euclidean";
}

void Standardizer::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty())
        throw EmptyDatasetError("cannot fit a standardizer on zero rows");
    const std::size_t d = rows[0].size();
    mean.assign(d, 0.0);
    scale.assign(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j)
            mean[j] += r[j];
    for (std::size_t j = 0; j < d; ++j)
        mean[j] /= static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = r[j] - mean[j];
            scale[j] += delta * delta;
        }
    for (std::size_t j = 0; j < d; ++j)
        scale[j] = std::sqrt(scale[j] / static_cast<double>(rows.size()));
}

std::vector<double> Standardizer::transform(const std::vector<double>& row) const {
    if (row.size() != mean.size())
        throw DimensionMismatchError("feature vector has " + std::to_string(row.size()) +
                                     " entries, expected " + std::to_string(mean.size()));
    std::vector<double> z(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        z[j] = scale[j] > 0.0 ? (row[j] - mean[j]) / scale[j] : 0.0;
    return z;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double manhattan(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::abs(a[i] - b[i]);
    return s;
}

double squared_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Minimum-norm least squares solution of cols * x ~= b via one-sided Jacobi
// orthogonalization. Rank-deficient columns (within tolerance of the largest
// singular value) are dropped, which keeps duplicated or constant features
// harmless.
std::vector<double> min_norm_least_squares(std::vector<std::vector<double>> cols,
                                           const std::vector<double>& b) {
    const std::size_t m = cols.size();
    std::vector<std::vector<double>> v(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        v[i][i] = 1.0;

    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double p = dot(cols[i], cols[j]);
                const double q = dot(cols[i], cols[i]);
                const double r = dot(cols[j], cols[j]);
                if (q * r == 0.0 || std::abs(p) <= eps * std::sqrt(q * r))
                    continue;
                rotated = true;
                const double zeta = (r - q) / (2.0 * p);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t row = 0; row < cols[i].size(); ++row) {
                    const double ci = cols[i][row], cj = cols[j][row];
                    cols[i][row] = cs * ci - sn * cj;
                    cols[j][row] = sn * ci + cs * cj;
                }
                for (std::size_t row = 0; row < m; ++row) {
                    const double vi = v[i][row], vj = v[j][row];
                    v[i][row] = cs * vi - sn * vj;
                    v[j][row] = sn * vi + cs * vj;
                }
            }
        }
        if (!rotated)
            break;
    }

    std::vector<double> sigma(m, 0.0);
    double smax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sigma[i] = std::sqrt(dot(cols[i], cols[i]));
        smax = std::max(smax, sigma[i]);
    }
    const double tol = smax * 1e-10;

    std::vector<double> x(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (sigma[i] <= tol)
            continue;
        const double coef = dot(cols[i], b) / (sigma[i] * sigma[i]);
        for (std::size_t row = 0; row < m; ++row)
            x[row] += v[i][row] * coef;
    }
    return x;
}

void fit_ols(TrainedModel& model, const std::vector<std::vector<double>>& z,
             const std::vector<double>& y) {
    const std::size_t n = z.size();
    const std::size_t d = z[0].size();
    // Column-major design matrix with a trailing all-ones intercept column.
    std::vector<std::vector<double>> cols(d + 1, std::vector<double>(n, 1.0));
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i)
            cols[j][i] = z[i][j];
    std::vector<double> x = min_norm_least_squares(std::move(cols), y);
    model.weights.assign(x.begin(), x.begin() + static_cast<long>(d));
    model.intercept = x[d];
}

void fit_knn(TrainedModel& model, std::vector<std::vector<double>> z,
             std::vector<double> y, const Hyperparameters& hp) {
    if (hp.knn_k < 1)
        throw ConfigError("k must be at least 1");
    if (static_cast<std::size_t>(hp.knn_k) > z.size())
        throw KTooLargeError("k=" + std::to_string(hp.knn_k) + " exceeds " +
                             std::to_string(z.size()) + " training rows");
    model.k = hp.knn_k;
    model.metric = hp.knn_metric;
    model.train_rows = std::move(z);
    model.train_targets = std::move(y);
}

double knn_predict(const TrainedModel& model, const std::vector<double>& z) {
    const std::size_t n = model.train_rows.size();
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i)
        dist[i] = model.metric == DistanceMetric::Manhattan
                      ? manhattan(model.train_rows[i], z)
                      : std::sqrt(squared_euclidean(model.train_rows[i], z));

    // Exact hits dominate: inverse-distance weights have no finite limit, so
    // the prediction is the mean over coinciding points.
    double hit_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (dist[i] == 0.0) {
            hit_sum += model.train_targets[i];
            ++hits;
        }
    if (hits > 0)
        return hit_sum / static_cast<double>(hits);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    });
    // Ties at the k-th rank widen the neighbourhood rather than picking
    // arbitrarily.
    const double kth = dist[order[model.k - 1]];
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i : order) {
        if (dist[i] > kth)
            break;
        const double w = 1.0 / dist[i];
        wsum += w;
        acc += w * model.train_targets[i];
    }
    return acc / wsum;
}

double rbf(double gamma, const std::vector<double>& a, const std::vector<double>& b) {
    return std::exp(-gamma * squared_euclidean(a, b));
}

// Two-variable ascent on the epsilon-insensitive dual, maximal violating pair
// selection. Variables 0..n-1 are the positive-side duals, n..2n-1 the
// negative side; the pair constraint keeps sum(beta) = 0.
void fit_svr(TrainedModel& model, const std::vector<std::vector<double>>& z,
             const std::vector<double>& y, const Hyperparameters& hp) {
    if (hp.svr_c <= 0.0 || hp.svr_gamma <= 0.0 || hp.svr_epsilon < 0.0)
        throw ConfigError("svr requires c > 0, gamma > 0 and epsilon >= 0");
    const std::size_t n = z.size();
    const double c_box = hp.svr_c;
    const double eps_tube = hp.svr_epsilon;
    const double tol = 1e-3;
    const long max_steps = 1000000;

    std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            kernel[i][j] = kernel[j][i] = rbf(hp.svr_gamma, z[i], z[j]);

    std::vector<double> theta(2 * n, 0.0);
    std::vector<double> f(n, 0.0); // kernel * beta
    auto objective_h = [&](std::size_t u) {
        const std::size_t a = u % n;
        const double s = u < n ? 1.0 : -1.0;
        return y[a] - f[a] - s * eps_tube;
    };

    double gap = 0.0;
    long steps = 0;
    const double snap = 1e-12 * std::max(1.0, c_box);
    while (steps < max_steps) {
        // Maximal violating pair.
        std::size_t u = 2 * n, v = 2 * n;
        double hu = 0.0, hv = 0.0;
        for (std::size_t w = 0; w < 2 * n; ++w) {
            const bool pos = w < n;
            const double th = theta[w];
            const double h = objective_h(w);
            const bool in_up = pos ? th < c_box : th > 0.0;
            const bool in_low = pos ? th > 0.0 : th < c_box;
            if (in_up && (u == 2 * n || h > hu)) {
                u = w;
                hu = h;
            }
            if (in_low && (v == 2 * n || h < hv)) {
                v = w;
                hv = h;
            }
        }
        if (u == 2 * n || v == 2 * n)
            break; // no movable pair left
        gap = hu - hv;
        if (gap <= tol)
            break;

        const std::size_t a = u % n, b = v % n;
        const double su = u < n ? 1.0 : -1.0;
        const double sv = v < n ? 1.0 : -1.0;
        const double eta = kernel[a][a] + kernel[b][b] - 2.0 * kernel[a][b];
        const double linear = -su * gap;
        double t = eta > 1e-12 ? -linear / eta : (linear > 0.0 ? -1.0 : 1.0) * 4.0 * c_box;

        double lo = -theta[u], hi = c_box - theta[u];
        if (su * sv > 0.0) {
            lo = std::max(lo, theta[v] - c_box);
            hi = std::min(hi, theta[v]);
        } else {
            lo = std::max(lo, -theta[v]);
            hi = std::min(hi, c_box - theta[v]);
        }
        t = std::clamp(t, lo, hi);
        if (t == 0.0)
            break; // numerically stuck; the gap check below reports it

        theta[u] += t;
        theta[v] -= su * sv * t;
        for (double* th : {&theta[u], &theta[v]}) {
            if (std::abs(*th) < snap)
                *th = 0.0;
            if (std::abs(*th - c_box) < snap)
                *th = c_box;
            *th = std::clamp(*th, 0.0, c_box);
        }
        if (a != b) {
            const double da = su * t, db = -su * t;
            for (std::size_t i = 0; i < n; ++i)
                f[i] += da * kernel[a][i] + db * kernel[b][i];
        }
        ++steps;
    }
    // Recompute the exit gap so the reported violation reflects the final
    // duals even on the stuck path.
    {
        double m_up = 0.0, m_low = 0.0;
        bool any_up = false, any_low = false;
        for (std::size_t w = 0; w < 2 * n; ++w) {
            const bool pos = w < n;
            const double h = objective_h(w);
            if (pos ? theta[w] < c_box : theta[w] > 0.0) {
                if (!any_up || h > m_up)
                    m_up = h;
                any_up = true;
            }
            if (pos ? theta[w] > 0.0 : theta[w] < c_box) {
                if (!any_low || h < m_low)
                    m_low = h;
                any_low = true;
            }
        }
        gap = (any_up && any_low) ? m_up - m_low : 0.0;
        if (gap > tol)
            throw NonConvergenceError(
                "svr optimizer stopped after " + std::to_string(steps) +
                " steps with KKT violation " + format_double(gap));
        // Bias from unbounded support vectors when available, else the
        // midpoint of the remaining feasible interval.
        double bias_sum = 0.0;
        std::size_t unbounded = 0;
        for (std::size_t w = 0; w < 2 * n; ++w)
            if (theta[w] > 0.0 && theta[w] < c_box) {
                bias_sum += objective_h(w);
                ++unbounded;
            }
        model.bias = unbounded > 0 ? bias_sum / static_cast<double>(unbounded)
                                   : (m_up + m_low) / 2.0;
    }

    model.svr_c = c_box;
    model.svr_gamma = hp.svr_gamma;
    model.svr_epsilon = eps_tube;
    model.kkt_violation = gap;
    model.smo_steps = steps;
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = theta[i] - theta[n + i];
        if (beta != 0.0) {
            model.support_rows.push_back(z[i]);
            model.dual_coefs.push_back(beta);
        }
    }
}

double svr_predict(const TrainedModel& model, const std::vector<double>& z) {
    double acc = model.bias;
    for (std::size_t i = 0; i < model.support_rows.size(); ++i)
        acc += model.dual_coefs[i] * rbf(model.svr_gamma, model.support_rows[i], z);
    return acc;
}

} // namespace

TrainedModel fit_model(const Dataset& ds, ModelKind kind, const Hyperparameters& hp) {
    if (ds.rows.empty())
        throw EmptyDatasetError("cannot fit on an empty dataset");
    std::vector<std::vector<double>> raw;
    std::vector<double> y;
    raw.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        raw.emplace_back(row.features.begin(), row.features.end());
        y.push_back(row.target);
    }

    TrainedModel model;
    model.kind = kind;
    model.dim = raw[0].size();
    model.standardizer.fit(raw);
    std::vector<std::vector<double>> z;
    z.reserve(raw.size());
    for (const auto& r : raw)
        z.push_back(model.standardizer.transform(r));

    switch (kind) {
    case ModelKind::Ols: fit_ols(model, z, y); break;
    case ModelKind::Knn: fit_knn(model, std::move(z), std::move(y), hp); break;
    case ModelKind::Svr: fit_svr(model, z, y, hp); break;
    }
    return model;
}

double TrainedModel::predict(const std::vector<double>& features) const {
    const std::vector<double> z = standardizer.transform(features);
    switch (kind) {
    case ModelKind::Ols: {
        double acc = intercept;
        for (std::size_t j = 0; j < weights.size(); ++j)
            acc += weights[j] * z[j];
        return acc;
    }
    case ModelKind::Knn: return knn_predict(*this, z);
    case ModelKind::Svr: return svr_predict(*this, z);
    }
    return 0.0;
}

double TrainedModel::predict(const std::array<double, kFeatureCount>& features) const {
    return predict(std::vector<double>(features.begin(), features.end()));
}

std::vector<double> predict_all(const TrainedModel& model, const Dataset& ds) {
    std::vector<double> out;
    out.reserve(ds.rows.size());
    for (const auto& row : ds.rows)
        out.push_back(model.predict(row.features));
    return out;
}

Json serialize_model(const TrainedModel& model) {
    Json doc;
    doc["version"] = 1;
    doc["kind"] = model_kind_name(model.kind);
    doc["feature_names"] = Json::array();
    for (const char* name : kFeatureNames)
        doc["feature_names"].push_back(name);
    doc["standardizer"] = {{"mean", model.standardizer.mean},
                           {"scale", model.standardizer.scale}};
    switch (model.kind) {
    case ModelKind::Ols:
        doc["weights"] = model.weights;
        doc["intercept"] = model.intercept;
        break;
    case ModelKind::Knn:
        doc["k"] = model.k;
        doc["metric"] = metric_name(model.metric);
        doc["rows"] = model.train_rows;
        doc["targets"] = model.train_targets;
        break;
    case ModelKind::Svr:
        doc["c"] = model.svr_c;
        doc["gamma"] = model.svr_gamma;
        doc["epsilon"] = model.svr_epsilon;
        doc["bias"] = model.bias;
        doc["support_rows"] = model.support_rows;
        doc["dual_coefs"] = model.dual_coefs;
        doc["kkt_violation"] = model.kkt_violation;
        break;
    }
    return doc;
}

TrainedModel deserialize_model(const Json& doc) {
    if (!doc.is_object() || !doc.contains("version"))
        throw SchemaError("model file is not a model document");
    if (doc["version"].get<int>() != 1)
        throw VersionMismatchError("unsupported model file version");
    std::vector<std::string> names = doc.at("feature_names").get<std::vector<std::string>>();
    if (names.size() != kFeatureCount)
        throw ColumnMismatchError("model was trained on a different feature set");
    for (int i = 0; i < kFeatureCount; ++i)
        if (names[i] != kFeatureNames[i])
            throw ColumnMismatchError("model feature '" + names[i] +
                                      "' does not match expected '" + kFeatureNames[i] + "'");

    TrainedModel model;
    model.kind = parse_model_kind(doc.at("kind").get<std::string>());
    model.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
    model.standardizer.scale = doc.at("standardizer").at("scale").get<std::vector<double>>();
    model.dim = model.standardizer.mean.size();
    switch (model.kind) {
    case ModelKind::Ols:
        model.weights = doc.at("weights").get<std::vector<double>>();
        model.intercept = doc.at("intercept").get<double>();
        break;
    case ModelKind::Knn:
        model.k = doc.at("k").get<int>();
        model.metric = parse_metric(doc.at("metric").get<std::string>());
        model.train_rows = doc.at("rows").get<std::vector<std::vector<double>>>();
        model.train_targets = doc.at("targets").get<std::vector<double>>();
        break;
    case ModelKind::Svr:
        model.svr_c = doc.at("c").get<double>();
        model.svr_gamma = doc.at("gamma").get<double>();
        model.svr_epsilon = doc.at("epsilon").get<double>();
        model.bias = doc.at("bias").get<double>();
        model.support_rows = doc.at("support_rows").get<std::vector<std::vector<double>>>();
        model.dual_coefs = doc.at("dual_coefs").get<std::vector<double>>();
        model.kkt_violation = doc.at("kkt_violation").get<double>();
        break;
    }
    return model;
}

void save_model(const std::string& path, const TrainedModel& model) {
    write_text_file(path, serialize_model(model).dump(2) + "\n");
}

TrainedModel load_model(const std::string& path) {
    Json doc;
    try {
        doc = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("model file is not valid JSON: " + std::string(e.what()));
    }
    return deserialize_model(doc);
}

} // namespace fdr
