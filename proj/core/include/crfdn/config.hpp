#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crfdn/ccrf.hpp"
#include "crfdn/diffusion.hpp"
#include "crfdn/eval.hpp"

namespace crfdn {

enum class RerankMethod { diffusion, nns, aqe };

// Resolved run configuration. Files use an INI-style layout: "[section]"
// headers, "key = value" lines, "#" comments. Unknown sections or keys are
// rejected; --set overrides use "section.key=value".
struct RunConfig {
    // top level
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    // [paths]
    std::string descriptors;
    std::string queries;
    std::string protocol;
    std::string affinity;   // input graph for rerank
    std::string rankings;   // input rankings for eval
    std::string output = ".";

    // [graph]
    int k = 10;
    double gamma = 3.0;
    bool normalize = false;

    // [ccrf]
    double alpha = 1.0;
    double beta = 0.1;
    double sigma_d = 0.0;
    bool sigma_d_set = false;
    double sigma_r = 0.0;
    bool sigma_r_set = false;
    int L = 1000;
    int k_out = 0;  // 0 = graph k
    SolverKind solver = SolverKind::cg;
    double ccrf_tol = 1e-6;
    int ccrf_max_iter = 0;  // 0 = 10 * L
    WeightTerms weight_terms = WeightTerms::both;
    ReselectOrder reselect = ReselectOrder::pre;

    // [diffusion]
    double rho = 0.99;
    double diffusion_tol = 1e-6;
    int diffusion_max_iter = 1000;
    DiffusionMode mode = DiffusionMode::online;
    int trunc = 0;      // 0 = full columns
    int query_k = 0;    // 0 = graph k
    RerankMethod method = RerankMethod::diffusion;
    int nqe = 10;

    // [eval]
    ProtocolMode protocol_mode = ProtocolMode::medium;

    // [synth]
    SynthShape shape = SynthShape::two_moons;
    int n_per_manifold = 200;
    double noise_sigma = 0.05;
    double shift = 2.0;

    // [sweep]
    SweepAxis axis = SweepAxis::k;
    std::vector<int> sweep_values;

    CcrfParams ccrf_params() const;
    DiffusionParams diffusion_params() const;

    // "section.key = value" lines of the resolved config in declaration
    // order. threads is excluded: it is an execution detail and manifests
    // must not vary with the worker count.
    std::vector<std::string> echo() const;
};

RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& assignment);  // "sec.key=value"

// Per-command validation of required fields and ranges; throws
// std::invalid_argument naming the offending key.
void validate_config(const RunConfig& cfg, const std::string& command);

// FNV-1a 64-bit checksum of a file's bytes, hex-encoded. Used by manifests.
std::string file_checksum(const std::string& path);

// Deterministic run manifest: resolved config echo plus input/output checksums
// and any extra stat lines. No timestamps, so reruns are byte-identical.
void write_manifest(const std::string& path, const std::string& command,
                    const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::pair<std::string, std::string>>& outputs,
                    const std::vector<std::string>& stats);

}  // namespace crfdn
