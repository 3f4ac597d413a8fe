#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crfdn/ccrf.hpp"
#include "crfdn/descriptors.hpp"
#include "crfdn/diffusion.hpp"

namespace crfdn {

enum class ProtocolMode { easy, medium, hard };

struct QueryGroundTruth {
    int id = 0;  // row in the query descriptor set
    std::vector<int> easy;
    std::vector<int> hard;
    std::vector<int> junk;
};

struct Protocol {
    std::vector<QueryGroundTruth> queries;
};

// Effective positive / junk sets under a protocol mode:
//   easy:   positives = easy,        junk = junk + hard
//   medium: positives = easy + hard, junk = junk
//   hard:   positives = hard,        junk = junk + easy
struct EffectiveSets {
    std::vector<int> positives;
    std::vector<int> junk;
};
EffectiveSets effective_sets(const QueryGroundTruth& gt, ProtocolMode mode);

// JSON layout: {"queries": [{"id":.., "easy":[..], "hard":[..], "junk":[..]}]}
Protocol load_protocol(const std::string& path);
void save_protocol(const std::string& path, const Protocol& protocol);

// Junk indices are removed from the ranking without penalty; AP averages
// precision-at-rank over all positives, so positives missing from a truncated
// ranking contribute zero. Throws on an empty positive set.
double average_precision(const RetrievalRanking& ranking, const std::vector<int>& positives,
                         const std::vector<int>& junk);

// Mean AP x 100 over protocol queries; queries whose effective positive set is
// empty under the mode are excluded. Throws if every query is excluded.
double mean_ap(const std::vector<std::pair<int, RetrievalRanking>>& rankings,
               const Protocol& protocol, ProtocolMode mode);

// Average Query Expansion: mean of the query and its top-nqe neighbor
// descriptors, renormalized, then exhaustive ranking by the expanded query.
RetrievalRanking aqe_baseline(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, int nqe, double gamma);

// Exhaustive similarity ranking (plain NN search baseline).
RetrievalRanking nns_baseline(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, double gamma);

enum class SynthShape { two_moons, two_circles };

// Two planted 2D manifolds (n points each, Gaussian coordinate noise) embedded
// as unit descriptors by appending a constant lift component `shift` and
// L2-normalizing, which keeps every pairwise inner product positive. The PRNG
// is fixed (mt19937_64 + Box-Muller), so output depends only on parameters and
// seed. labels[i] is the manifold index (0 or 1).
struct SynthData {
    DescriptorSet X;
    std::vector<int> labels;
};
SynthData synth_manifolds(int n_per_manifold, double noise_sigma, SynthShape shape,
                          uint64_t seed, double shift = 2.0);

// Leave-one-out protocol over the synthetic set: every point queries for its
// own manifold (easy positives), itself junked.
Protocol synth_protocol(const std::vector<int>& labels);

enum class SweepAxis { k, clique_size };

struct SweepPoint {
    double value = 0.0;
    double map_baseline = 0.0;   // diffusion on the reciprocity graph
    double map_denoised = 0.0;   // diffusion on the denoised graph
    bool ok = false;
    std::string error;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::k;
    std::vector<int> values;
    int graph_k = 10;
    double gamma = 3.0;
    CcrfParams ccrf;
    DiffusionParams diffusion;
    ProtocolMode mode = ProtocolMode::medium;
};

// Runs the reciprocity and denoise+diffuse pipelines per axis value; per-point
// failures are recorded, not fatal.
std::vector<SweepPoint> sweep(const SweepConfig& cfg, const DescriptorSet& X,
                              const DescriptorSet& queries, const Protocol& protocol);

}  // namespace crfdn
