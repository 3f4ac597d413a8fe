#include "crfdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "crfdn/threads.hpp"

namespace crfdn {

EffectiveSets effective_sets(const QueryGroundTruth& gt, ProtocolMode mode) {
    EffectiveSets eff;
    switch (mode) {
        case ProtocolMode::easy:
            eff.positives = gt.easy;
            eff.junk = gt.junk;
            eff.junk.insert(eff.junk.end(), gt.hard.begin(), gt.hard.end());
            break;
        case ProtocolMode::medium:
            eff.positives = gt.easy;
            eff.positives.insert(eff.positives.end(), gt.hard.begin(), gt.hard.end());
            eff.junk = gt.junk;
            break;
        case ProtocolMode::hard:
            eff.positives = gt.hard;
            eff.junk = gt.junk;
            eff.junk.insert(eff.junk.end(), gt.easy.begin(), gt.easy.end());
            break;
    }
    std::sort(eff.positives.begin(), eff.positives.end());
    std::sort(eff.junk.begin(), eff.junk.end());
    return eff;
}

namespace {

void check_disjoint(const QueryGroundTruth& gt) {
    std::vector<int> all = gt.easy;
    all.insert(all.end(), gt.hard.begin(), gt.hard.end());
    all.insert(all.end(), gt.junk.begin(), gt.junk.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::runtime_error("protocol: easy/hard/junk sets overlap for query " +
                                 std::to_string(gt.id));
}

}  // namespace

Protocol load_protocol(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_protocol: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_protocol: invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("queries") || !j["queries"].is_array())
        throw std::runtime_error("load_protocol: missing \"queries\" array in " + path);
    Protocol p;
    try {
        for (const auto& q : j["queries"]) {
            QueryGroundTruth gt;
            gt.id = q.at("id").get<int>();
            for (const char* key : {"easy", "hard", "junk"}) {
                if (!q.contains(key)) continue;
                auto& dst = key[0] == 'e' ? gt.easy : (key[0] == 'h' ? gt.hard : gt.junk);
                for (const auto& v : q.at(key)) {
                    const int idx = v.get<int>();
                    if (idx < 0)
                        throw std::runtime_error("load_protocol: negative index for query " +
                                                 std::to_string(gt.id));
                    dst.push_back(idx);
                }
            }
            check_disjoint(gt);
            p.queries.push_back(std::move(gt));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_protocol: bad query entry in " + path + ": " + e.what());
    }
    return p;
}

void save_protocol(const std::string& path, const Protocol& protocol) {
    nlohmann::json j;
    j["queries"] = nlohmann::json::array();
    for (const auto& q : protocol.queries) {
        nlohmann::json e;
        e["id"] = q.id;
        e["easy"] = q.easy;
        e["hard"] = q.hard;
        e["junk"] = q.junk;
        j["queries"].push_back(std::move(e));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_protocol: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_protocol: write failed for " + path);
}

double average_precision(const RetrievalRanking& ranking, const std::vector<int>& positives,
                         const std::vector<int>& junk) {
    if (positives.empty()) throw std::invalid_argument("average_precision: empty positive set");
    std::vector<int> pos = positives, jnk = junk;
    std::sort(pos.begin(), pos.end());
    std::sort(jnk.begin(), jnk.end());
    const auto in = [](const std::vector<int>& s, int v) {
        return std::binary_search(s.begin(), s.end(), v);
    };
    int64_t rank = 0, hits = 0;
    double sum = 0.0;
    for (int idx : ranking.indices) {
        if (in(jnk, idx)) continue;  // junk is skipped, not penalized
        ++rank;
        if (in(pos, idx)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    return sum / static_cast<double>(pos.size());
}

double mean_ap(const std::vector<std::pair<int, RetrievalRanking>>& rankings,
               const Protocol& protocol, ProtocolMode mode) {
    std::vector<std::pair<int, const RetrievalRanking*>> byid;
    byid.reserve(rankings.size());
    for (const auto& [id, r] : rankings) byid.emplace_back(id, &r);
    std::sort(byid.begin(), byid.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto find = [&](int id) -> const RetrievalRanking* {
        auto it = std::lower_bound(byid.begin(), byid.end(), id,
                                   [](const auto& e, int v) { return e.first < v; });
        return (it != byid.end() && it->first == id) ? it->second : nullptr;
    };

    double sum = 0.0;
    int64_t used = 0;
    for (const auto& gt : protocol.queries) {
        const EffectiveSets eff = effective_sets(gt, mode);
        if (eff.positives.empty()) continue;  // excluded under this mode
        const RetrievalRanking* r = find(gt.id);
        if (r == nullptr)
            throw std::invalid_argument("mean_ap: no ranking for query id " +
                                        std::to_string(gt.id));
        sum += average_precision(*r, eff.positives, eff.junk);
        ++used;
    }
    if (used == 0) throw std::runtime_error("mean_ap: every query has an empty positive set");
    return 100.0 * sum / static_cast<double>(used);
}

RetrievalRanking nns_baseline(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, double gamma) {
    std::vector<double> scores(static_cast<size_t>(X.n));
    for (int64_t i = 0; i < X.n; ++i)
        scores[static_cast<size_t>(i)] = pairwise_similarity(queries, query_row, X, i, gamma);
    return rank_scores(scores);
}

RetrievalRanking aqe_baseline(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, int nqe, double gamma) {
    if (nqe < 0 || nqe > X.n) throw std::invalid_argument("aqe_baseline: nqe out of range");
    const RetrievalRanking base = nns_baseline(queries, query_row, X, gamma);

    std::vector<double> expanded(static_cast<size_t>(X.dim));
    const float* q = queries.row(query_row);
    for (int64_t c = 0; c < X.dim; ++c) expanded[static_cast<size_t>(c)] = q[c];
    for (int t = 0; t < nqe; ++t) {
        const float* x = X.row(base.indices[static_cast<size_t>(t)]);
        for (int64_t c = 0; c < X.dim; ++c) expanded[static_cast<size_t>(c)] += x[c];
    }
    for (auto& v : expanded) v /= static_cast<double>(nqe + 1);
    double nrm = 0.0;
    for (double v : expanded) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
        for (auto& v : expanded) v /= nrm;

    std::vector<double> scores(static_cast<size_t>(X.n));
    for (int64_t i = 0; i < X.n; ++i) {
        const float* x = X.row(i);
        double dot = 0.0;
        for (int64_t c = 0; c < X.dim; ++c) dot += expanded[static_cast<size_t>(c)] * x[c];
        scores[static_cast<size_t>(i)] = dot <= 0.0 ? 0.0 : std::pow(dot, gamma);
    }
    return rank_scores(scores);
}

namespace {

// Fixed PRNG so synthetic data depends only on (parameters, seed): mt19937_64
// uniforms fed through Box-Muller. std::normal_distribution is
// implementation-defined and would break the determinism contract.
struct Gaussian {
    std::mt19937_64 eng;
    double spare = 0.0;
    bool has_spare = false;

    explicit Gaussian(uint64_t seed) : eng(seed) {}

    double uniform01() {  // [0, 1)
        return static_cast<double>(eng() >> 11) * (1.0 / 9007199254740992.0);
    }
    double next() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }
};

}  // namespace

SynthData synth_manifolds(int n_per_manifold, double noise_sigma, SynthShape shape, uint64_t seed,
                          double shift) {
    if (n_per_manifold < 2)
        throw std::invalid_argument("synth_manifolds: need at least 2 points per manifold");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth_manifolds: negative noise");
    const int n = n_per_manifold;
    std::vector<double> px(static_cast<size_t>(2 * n)), py(static_cast<size_t>(2 * n));
    if (shape == SynthShape::two_moons) {
        for (int i = 0; i < n; ++i) {
            const double t = M_PI * static_cast<double>(i) / static_cast<double>(n - 1);
            px[static_cast<size_t>(i)] = std::cos(t);
            py[static_cast<size_t>(i)] = std::sin(t);
            px[static_cast<size_t>(n + i)] = 1.0 - std::cos(t);
            py[static_cast<size_t>(n + i)] = 0.5 - std::sin(t);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
            px[static_cast<size_t>(i)] = std::cos(t);
            py[static_cast<size_t>(i)] = std::sin(t);
            px[static_cast<size_t>(n + i)] = 0.5 * std::cos(t);
            py[static_cast<size_t>(n + i)] = 0.5 * std::sin(t);
        }
    }
    Gaussian g(seed);
    for (int i = 0; i < 2 * n; ++i) {
        px[static_cast<size_t>(i)] += noise_sigma * g.next();
        py[static_cast<size_t>(i)] += noise_sigma * g.next();
    }

    // Lift to d=3 by appending the shift constant, then normalize to the unit
    // sphere; with shift dominant every pairwise inner product stays positive.
    SynthData out;
    out.X.n = 2 * n;
    out.X.dim = 3;
    out.X.data.resize(static_cast<size_t>(6 * n));
    for (int i = 0; i < 2 * n; ++i) {
        const double x = px[static_cast<size_t>(i)], y = py[static_cast<size_t>(i)];
        const double nrm = std::sqrt(x * x + y * y + shift * shift);
        float* r = out.X.row(i);
        r[0] = static_cast<float>(x / nrm);
        r[1] = static_cast<float>(y / nrm);
        r[2] = static_cast<float>(shift / nrm);
    }
    out.labels.assign(static_cast<size_t>(2 * n), 0);
    for (int i = n; i < 2 * n; ++i) out.labels[static_cast<size_t>(i)] = 1;
    return out;
}

Protocol synth_protocol(const std::vector<int>& labels) {
    Protocol p;
    const int n = static_cast<int>(labels.size());
    p.queries.reserve(labels.size());
    for (int i = 0; i < n; ++i) {
        QueryGroundTruth gt;
        gt.id = i;
        for (int j = 0; j < n; ++j)
            if (j != i && labels[static_cast<size_t>(j)] == labels[static_cast<size_t>(i)])
                gt.easy.push_back(j);
        gt.junk.push_back(i);
        p.queries.push_back(std::move(gt));
    }
    return p;
}

namespace {

KnnLists slice_knn(const KnnLists& knn, int k) {
    KnnLists out;
    out.k = k;
    out.neighbors.resize(knn.neighbors.size());
    out.sims.resize(knn.sims.size());
    for (size_t i = 0; i < knn.neighbors.size(); ++i) {
        out.neighbors[i].assign(knn.neighbors[i].begin(), knn.neighbors[i].begin() + k);
        out.sims[i].assign(knn.sims[i].begin(), knn.sims[i].begin() + k);
    }
    return out;
}

double pipeline_map(const NormalizedAffinity& S, const DescriptorSet& X,
                    const DescriptorSet& queries, const Protocol& protocol, ProtocolMode mode,
                    const DiffusionParams& diffusion, int graph_k, double gamma) {
    std::vector<std::pair<int, RetrievalRanking>> rankings(protocol.queries.size());
    std::vector<int> ids(protocol.queries.size());
    for (size_t q = 0; q < protocol.queries.size(); ++q) ids[q] = protocol.queries[q].id;
    OfflineIndex offline;
    const OfflineIndex* off = nullptr;
    if (diffusion.mode == DiffusionMode::offline) {
        offline = offline_precompute(S, diffusion.rho, diffusion.trunc, diffusion.tol,
                                     diffusion.max_iter, diffusion.threads);
        off = &offline;
    }
    parallel_for(static_cast<int64_t>(protocol.queries.size()), diffusion.threads, [&](int64_t q) {
        rankings[static_cast<size_t>(q)] = {
            ids[static_cast<size_t>(q)],
            rerank_query(queries, ids[static_cast<size_t>(q)], X, S, diffusion, graph_k, gamma, off)};
    });
    return mean_ap(rankings, protocol, mode);
}

}  // namespace

std::vector<SweepPoint> sweep(const SweepConfig& cfg, const DescriptorSet& X,
                              const DescriptorSet& queries, const Protocol& protocol) {
    if (cfg.values.empty()) throw std::invalid_argument("sweep: no axis values");
    std::vector<int> values = cfg.values;
    std::sort(values.begin(), values.end());

    // one knn pass at the largest neighborhood any point needs
    int need = cfg.graph_k;
    for (int v : values) need = std::max(need, cfg.axis == SweepAxis::k ? v : cfg.graph_k);
    int needL = cfg.ccrf.L;
    for (int v : values)
        if (cfg.axis == SweepAxis::clique_size) needL = std::max(needL, v);
    need = std::min<int>(std::max(need, needL), static_cast<int>(X.n - 1));
    const KnnLists knn_full = build_knn(X, need, cfg.gamma, cfg.ccrf.threads);

    std::vector<SweepPoint> points;
    for (int v : values) {
        SweepPoint pt;
        pt.value = v;
        try {
            const int k = cfg.axis == SweepAxis::k ? v : cfg.graph_k;
            CcrfParams cp = cfg.ccrf;
            cp.gamma = cfg.gamma;
            if (cfg.axis == SweepAxis::clique_size) cp.L = v;
            cp.k_out = cfg.axis == SweepAxis::k ? v : (cp.k_out > 0 ? cp.k_out : cfg.graph_k);
            if (k < 1 || k > X.n - 1)
                throw std::invalid_argument("k=" + std::to_string(k) + " outside [1, N-1]");
            if (cp.L < 1 || cp.L > X.n - 1)
                throw std::invalid_argument("L=" + std::to_string(cp.L) + " outside [1, N-1]");
            if (cp.k_out > cp.L)
                throw std::invalid_argument("k_out=" + std::to_string(cp.k_out) + " exceeds L");

            const SparseAffinity base = reciprocity_affinity(slice_knn(knn_full, k));
            const NormalizedAffinity s_base = symmetric_normalize(base);
            pt.map_baseline = pipeline_map(s_base, X, queries, protocol, cfg.mode, cfg.diffusion,
                                           k, cfg.gamma);

            const SparseAffinity den = denoise_database(X, knn_full, cp);
            const NormalizedAffinity s_den = symmetric_normalize(den);
            pt.map_denoised = pipeline_map(s_den, X, queries, protocol, cfg.mode, cfg.diffusion,
                                           k, cfg.gamma);
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        points.push_back(std::move(pt));
    }
    return points;
}

}  // namespace crfdn
