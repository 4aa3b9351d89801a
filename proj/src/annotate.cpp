#include "scilit/annotate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "scilit/binfile.hpp"
#include "scilit/rng.hpp"

namespace scilit::annotate {

using nlohmann::json;

// --- embeddings -----------------------------------------------------------------

std::vector<double> HashEmbedder::embed(const corpus::PairRecord& record) const {
    SplitMix64 rng(mix_seed(seed_, fnv1a64(record.pair_id)));
    std::vector<double> v(dimension_);
    double norm_sq = 0;
    for (auto& x : v) {
        x = 2.0 * rng.next_double() - 1.0;
        norm_sq += x * x;
    }
    if (norm_sq == 0) {
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& x : v) x *= inv;
    return v;
}

EmbeddingMatrix embed(std::span<const corpus::PairRecord> pairs, const Embedder& embedder) {
    EmbeddingMatrix m;
    m.dims = embedder.dimension();
    m.ids.reserve(pairs.size());
    m.values.reserve(pairs.size() * m.dims);
    for (const auto& p : pairs) {
        auto v = embedder.embed(p);
        if (v.size() != m.dims)
            throw DimensionMismatch("embedder returned dimension " + std::to_string(v.size()) +
                                    ", declared " + std::to_string(m.dims));
        bool finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        if (!finite) throw InvalidArgument("embedding for " + p.pair_id + " is not finite");
        m.ids.push_back(p.pair_id);
        m.values.insert(m.values.end(), v.begin(), v.end());
    }
    return m;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
    std::vector<float> values(matrix.values.begin(), matrix.values.end());
    binfile::write_matrix(path, matrix.rows(), matrix.dims, values);
    json keys = matrix.ids;
    std::ofstream out(path.string() + ".keys.json", std::ios::trunc);
    if (!out) throw IoError("cannot write keys file for " + path.string());
    out << keys.dump() << "\n";
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, size_t chunk_size) {
    auto file = binfile::read_matrix(path, chunk_size);
    std::ifstream in(path.string() + ".keys.json");
    if (!in) throw IoError("cannot read keys file for " + path.string());
    json keys;
    in >> keys;
    EmbeddingMatrix m;
    m.ids = keys.get<std::vector<std::string>>();
    m.dims = file.cols;
    if (m.ids.size() != file.rows)
        throw IoError("embeddings row count does not match keys file");
    m.values.assign(file.values.begin(), file.values.end());
    return m;
}

// --- PCA ------------------------------------------------------------------------

EmbeddingMatrix PcaModel::project(const EmbeddingMatrix& X) const {
    if (X.dims != input_dims) throw DimensionMismatch("project: dimension mismatch");
    EmbeddingMatrix out;
    out.ids = X.ids;
    out.dims = n_components;
    out.values.resize(X.rows() * n_components);
    for (size_t i = 0; i < X.rows(); ++i) {
        const auto row = X.row(i);
        for (size_t c = 0; c < n_components; ++c) {
            const auto comp = component(c);
            double acc = 0;
            for (size_t d = 0; d < input_dims; ++d) acc += (row[d] - mean[d]) * comp[d];
            out.values[i * n_components + c] = acc;
        }
    }
    return out;
}

EmbeddingMatrix PcaModel::reconstruct(const EmbeddingMatrix& projected,
                                      std::span<const std::string> ids) const {
    if (projected.dims != n_components)
        throw DimensionMismatch("reconstruct: dimension mismatch");
    EmbeddingMatrix out;
    out.ids.assign(ids.begin(), ids.end());
    out.dims = input_dims;
    out.values.resize(projected.rows() * input_dims);
    for (size_t i = 0; i < projected.rows(); ++i) {
        const auto row = projected.row(i);
        for (size_t d = 0; d < input_dims; ++d) {
            double acc = mean[d];
            for (size_t c = 0; c < n_components; ++c)
                acc += row[c] * components[c * input_dims + d];
            out.values[i * input_dims + d] = acc;
        }
    }
    return out;
}

PcaModel fit_pca(const EmbeddingMatrix& X, size_t n_components) {
    const size_t n = X.rows();
    const size_t d = X.dims;
    if (n_components == 0) throw InvalidArgument("fit_pca: n_components must be positive");
    if (n_components > d)
        throw InvalidArgument("fit_pca: n_components exceeds input dimension");
    if (n < n_components)
        throw RankDeficiency("fit_pca: " + std::to_string(n) + " rows < " +
                             std::to_string(n_components) + " components");

    PcaModel model;
    model.input_dims = d;
    model.n_components = n_components;
    model.mean.assign(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const auto row = X.row(i);
        for (size_t j = 0; j < d; ++j) model.mean[j] += row[j];
    }
    for (auto& m : model.mean) m /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<long>(d), static_cast<long>(d));
    for (size_t i = 0; i < n; ++i) {
        const auto row = X.row(i);
        Eigen::VectorXd centered(static_cast<long>(d));
        for (size_t j = 0; j < d; ++j) centered[static_cast<long>(j)] = row[j] - model.mean[j];
        cov.noalias() += centered * centered.transpose();
    }
    cov /= static_cast<double>(std::max<size_t>(n - 1, 1));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw Error("fit_pca: eigendecomposition failed to converge");
    const auto& eigenvalues = solver.eigenvalues();   // ascending
    const auto& eigenvectors = solver.eigenvectors();  // columns

    model.components.resize(n_components * d);
    model.explained_variance.resize(n_components);
    for (size_t c = 0; c < n_components; ++c) {
        const long src = static_cast<long>(d - 1 - c);  // descending eigenvalue order
        model.explained_variance[c] = std::max(eigenvalues[src], 0.0);
        // sign convention: largest-magnitude entry positive
        long max_idx = 0;
        double max_abs = 0;
        for (long j = 0; j < static_cast<long>(d); ++j) {
            const double a = std::abs(eigenvectors(j, src));
            if (a > max_abs) {
                max_abs = a;
                max_idx = j;
            }
        }
        const double sign = eigenvectors(max_idx, src) < 0 ? -1.0 : 1.0;
        for (long j = 0; j < static_cast<long>(d); ++j)
            model.components[c * d + static_cast<size_t>(j)] = sign * eigenvectors(j, src);
    }
    return model;
}

// --- K-means ----------------------------------------------------------------------

namespace {

double dist_sq(std::span<const double> a, const double* b) {
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

std::vector<std::vector<std::string>> Clustering::members_by_cluster() const {
    std::vector<std::vector<std::string>> members(k);
    for (size_t i = 0; i < ids.size(); ++i) members[assignment[i]].push_back(ids[i]);
    return members;
}

json Clustering::to_json() const {
    return json{{"k", k},
                {"dims", dims},
                {"centroids", centroids},
                {"ids", ids},
                {"assignment", assignment},
                {"inertia", inertia},
                {"inertia_history", inertia_history}};
}

Clustering Clustering::from_json(const json& j) {
    Clustering c;
    c.k = j.at("k").get<size_t>();
    c.dims = j.at("dims").get<size_t>();
    c.centroids = j.at("centroids").get<std::vector<double>>();
    c.ids = j.at("ids").get<std::vector<std::string>>();
    c.assignment = j.at("assignment").get<std::vector<uint32_t>>();
    c.inertia = j.value("inertia", 0.0);
    c.inertia_history = j.value("inertia_history", std::vector<double>{});
    return c;
}

Clustering kmeans(const EmbeddingMatrix& X, size_t k, uint64_t seed, size_t max_iters,
                  double rel_tol) {
    const size_t n = X.rows();
    if (k == 0) throw InvalidArgument("kmeans: k must be positive");
    if (n < k)
        throw TooFewPoints("kmeans: " + std::to_string(n) + " points < k=" + std::to_string(k));

    // canonical order: sorted by id, so the outcome does not depend on the
    // order rows arrived in
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return X.ids[a] < X.ids[b]; });

    const size_t dims = X.dims;
    std::vector<double> points(n * dims);
    Clustering result;
    result.k = k;
    result.dims = dims;
    result.ids.resize(n);
    for (size_t i = 0; i < n; ++i) {
        result.ids[i] = X.ids[order[i]];
        const auto row = X.row(order[i]);
        std::copy(row.begin(), row.end(), points.begin() + static_cast<long>(i * dims));
    }
    auto point = [&](size_t i) {
        return std::span<const double>(points.data() + i * dims, dims);
    };

    // k-means++ seeding
    SplitMix64 rng(seed);
    std::vector<double> centroids(k * dims);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    {
        const size_t first = rng.next_below(n);
        std::copy(point(first).begin(), point(first).end(), centroids.begin());
        for (size_t i = 0; i < n; ++i) min_d2[i] = dist_sq(point(i), centroids.data());
        for (size_t c = 1; c < k; ++c) {
            double total = std::accumulate(min_d2.begin(), min_d2.end(), 0.0);
            size_t chosen;
            if (total <= 0) {
                chosen = rng.next_below(n);
            } else {
                const double r = rng.next_double() * total;
                double cum = 0;
                chosen = n - 1;
                for (size_t i = 0; i < n; ++i) {
                    cum += min_d2[i];
                    if (cum > r) {
                        chosen = i;
                        break;
                    }
                }
            }
            double* dst = centroids.data() + c * dims;
            std::copy(point(chosen).begin(), point(chosen).end(), dst);
            for (size_t i = 0; i < n; ++i)
                min_d2[i] = std::min(min_d2[i], dist_sq(point(i), dst));
        }
    }

    // Lloyd iterations
    std::vector<uint32_t> assignment(n, 0);
    std::vector<double> d2(n, 0.0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (size_t iter = 0; iter < max_iters; ++iter) {
        // assignment step: nearest centroid, ties to the lowest index
        double inertia = 0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            uint32_t best_c = 0;
            for (size_t c = 0; c < k; ++c) {
                const double dd = dist_sq(point(i), centroids.data() + c * dims);
                if (dd < best) {
                    best = dd;
                    best_c = static_cast<uint32_t>(c);
                }
            }
            assignment[i] = best_c;
            d2[i] = best;
            inertia += best;
        }

        // empty clusters: re-seed each from the current farthest point
        std::vector<size_t> counts(k, 0);
        for (auto a : assignment) ++counts[a];
        for (size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            size_t farthest = 0;
            double max_dd = -1;
            for (size_t i = 0; i < n; ++i) {
                if (d2[i] > max_dd && counts[assignment[i]] > 1) {
                    max_dd = d2[i];
                    farthest = i;
                }
            }
            inertia -= d2[farthest];
            --counts[assignment[farthest]];
            assignment[farthest] = static_cast<uint32_t>(c);
            counts[c] = 1;
            std::copy(point(farthest).begin(), point(farthest).end(),
                      centroids.begin() + static_cast<long>(c * dims));
            d2[farthest] = 0;
        }

        result.inertia_history.push_back(inertia);
        result.inertia = inertia;

        // stop before moving centroids so the returned triple
        // (centroids, assignment, inertia) is self-consistent
        const bool converged =
            prev_inertia - inertia < rel_tol * std::max(prev_inertia, 1e-12) ||
            inertia == 0.0;
        prev_inertia = inertia;
        if (converged || iter + 1 == max_iters) break;

        // update step: centroid = mean of members, accumulated in canonical order
        std::vector<double> sums(k * dims, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const auto p = point(i);
            double* dst = sums.data() + assignment[i] * dims;
            for (size_t dd = 0; dd < dims; ++dd) dst[dd] += p[dd];
        }
        for (size_t c = 0; c < k; ++c) {
            for (size_t dd = 0; dd < dims; ++dd)
                centroids[c * dims + dd] = sums[c * dims + dd] / static_cast<double>(counts[c]);
        }
    }

    result.centroids = std::move(centroids);
    result.assignment = std::move(assignment);
    return result;
}

// --- sheets -----------------------------------------------------------------------

json AnnotationSheet::to_json() const {
    json j;
    j["cluster_id"] = cluster_id;
    j["sampled_pair_ids"] = sampled_pair_ids;
    if (assigned_labels) j["assigned_labels"] = corpus::to_json(*assigned_labels);
    return j;
}

AnnotationSheet AnnotationSheet::from_json(const json& j) {
    AnnotationSheet s;
    s.cluster_id = j.at("cluster_id").get<uint32_t>();
    s.sampled_pair_ids = j.value("sampled_pair_ids", std::vector<std::string>{});
    if (j.contains("assigned_labels") && !j["assigned_labels"].is_null())
        s.assigned_labels = corpus::labels_from_json(j["assigned_labels"]);
    return s;
}

std::vector<AnnotationSheet> make_sheets(const Clustering& clustering, size_t sample_size,
                                         uint64_t seed) {
    const auto members = clustering.members_by_cluster();
    std::vector<AnnotationSheet> sheets;
    for (size_t c = 0; c < members.size(); ++c) {
        if (members[c].empty()) continue;
        AnnotationSheet sheet;
        sheet.cluster_id = static_cast<uint32_t>(c);
        // partial Fisher-Yates over the cluster's members (canonical order)
        std::vector<std::string> pool = members[c];
        SplitMix64 rng(mix_seed(seed, c));
        const size_t take = std::min(sample_size, pool.size());
        for (size_t i = 0; i < take; ++i) {
            const size_t j = i + rng.next_below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            sheet.sampled_pair_ids.push_back(pool[i]);
        }
        sheets.push_back(std::move(sheet));
    }
    return sheets;
}

std::map<std::string, corpus::AnnotationLabels> propagate_labels(
    const Clustering& clustering, std::span<const AnnotationSheet> sheets) {
    std::map<uint32_t, const corpus::AnnotationLabels*> labels_by_cluster;
    for (const auto& sheet : sheets) {
        if (sheet.assigned_labels) labels_by_cluster[sheet.cluster_id] = &*sheet.assigned_labels;
    }

    const auto members = clustering.members_by_cluster();
    std::vector<uint32_t> unlabeled;
    for (size_t c = 0; c < members.size(); ++c) {
        if (!members[c].empty() && !labels_by_cluster.count(static_cast<uint32_t>(c)))
            unlabeled.push_back(static_cast<uint32_t>(c));
    }
    if (!unlabeled.empty()) {
        std::string msg = "clusters without labels:";
        for (auto c : unlabeled) msg += " " + std::to_string(c);
        throw UnlabeledCluster(msg, std::move(unlabeled));
    }

    std::map<std::string, corpus::AnnotationLabels> out;
    for (size_t i = 0; i < clustering.ids.size(); ++i)
        out[clustering.ids[i]] = *labels_by_cluster[clustering.assignment[i]];
    return out;
}

}  // namespace scilit::annotate
