#include "crfdn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crfdn {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (...) {
        throw std::invalid_argument("config: " + key + " expects an integer, got \"" + v + "\"");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (...) {
        throw std::invalid_argument("config: " + key + " expects an unsigned integer, got \"" + v +
                                    "\"");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (...) {
        throw std::invalid_argument("config: " + key + " expects a number, got \"" + v + "\"");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: " + key + " expects a boolean, got \"" + v + "\"");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void set_key(RunConfig& c, const std::string& section, const std::string& key,
             const std::string& value) {
    const std::string full = section.empty() ? key : section + "." + key;
    if (section.empty()) {
        if (key == "seed") c.seed = to_u64(full, value);
        else if (key == "threads") c.threads = to_int(full, value);
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "paths") {
        if (key == "descriptors") c.descriptors = value;
        else if (key == "queries") c.queries = value;
        else if (key == "protocol") c.protocol = value;
        else if (key == "affinity") c.affinity = value;
        else if (key == "rankings") c.rankings = value;
        else if (key == "output") c.output = value;
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "graph") {
        if (key == "k") c.k = to_int(full, value);
        else if (key == "gamma") c.gamma = to_double(full, value);
        else if (key == "normalize") c.normalize = to_bool(full, value);
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "ccrf") {
        if (key == "alpha") c.alpha = to_double(full, value);
        else if (key == "beta") c.beta = to_double(full, value);
        else if (key == "sigma_d") { c.sigma_d = to_double(full, value); c.sigma_d_set = true; }
        else if (key == "sigma_r") { c.sigma_r = to_double(full, value); c.sigma_r_set = true; }
        else if (key == "L") c.L = to_int(full, value);
        else if (key == "k_out") c.k_out = to_int(full, value);
        else if (key == "solver") {
            if (value == "cg") c.solver = SolverKind::cg;
            else if (value == "direct") c.solver = SolverKind::direct;
            else throw std::invalid_argument("config: ccrf.solver must be cg or direct");
        }
        else if (key == "tol") c.ccrf_tol = to_double(full, value);
        else if (key == "max_iter") c.ccrf_max_iter = to_int(full, value);
        else if (key == "weight_terms") {
            if (value == "ed") c.weight_terms = WeightTerms::ed;
            else if (value == "sd") c.weight_terms = WeightTerms::sd;
            else if (value == "both") c.weight_terms = WeightTerms::both;
            else throw std::invalid_argument("config: ccrf.weight_terms must be ed, sd or both");
        }
        else if (key == "reselect") {
            if (value == "pre") c.reselect = ReselectOrder::pre;
            else if (value == "post") c.reselect = ReselectOrder::post;
            else throw std::invalid_argument("config: ccrf.reselect must be pre or post");
        }
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "diffusion") {
        if (key == "rho") c.rho = to_double(full, value);
        else if (key == "tol") c.diffusion_tol = to_double(full, value);
        else if (key == "max_iter") c.diffusion_max_iter = to_int(full, value);
        else if (key == "mode") {
            if (value == "online") c.mode = DiffusionMode::online;
            else if (value == "offline") c.mode = DiffusionMode::offline;
            else throw std::invalid_argument("config: diffusion.mode must be online or offline");
        }
        else if (key == "trunc") c.trunc = to_int(full, value);
        else if (key == "query_k") c.query_k = to_int(full, value);
        else if (key == "method") {
            if (value == "diffusion") c.method = RerankMethod::diffusion;
            else if (value == "nns") c.method = RerankMethod::nns;
            else if (value == "aqe") c.method = RerankMethod::aqe;
            else throw std::invalid_argument("config: diffusion.method must be diffusion, nns or aqe");
        }
        else if (key == "nqe") c.nqe = to_int(full, value);
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "eval") {
        if (key == "protocol_mode") {
            if (value == "easy") c.protocol_mode = ProtocolMode::easy;
            else if (value == "medium") c.protocol_mode = ProtocolMode::medium;
            else if (value == "hard") c.protocol_mode = ProtocolMode::hard;
            else throw std::invalid_argument("config: eval.protocol_mode must be easy, medium or hard");
        }
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "synth") {
        if (key == "shape") {
            if (value == "two_moons") c.shape = SynthShape::two_moons;
            else if (value == "two_circles") c.shape = SynthShape::two_circles;
            else throw std::invalid_argument("config: synth.shape must be two_moons or two_circles");
        }
        else if (key == "n_per_manifold") c.n_per_manifold = to_int(full, value);
        else if (key == "noise_sigma") c.noise_sigma = to_double(full, value);
        else if (key == "shift") c.shift = to_double(full, value);
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else if (section == "sweep") {
        if (key == "axis") {
            if (value == "k") c.axis = SweepAxis::k;
            else if (value == "clique_size") c.axis = SweepAxis::clique_size;
            else throw std::invalid_argument("config: sweep.axis must be k or clique_size");
        }
        else if (key == "values") {
            c.sweep_values.clear();
            std::string item;
            std::istringstream ss(value);
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) c.sweep_values.push_back(to_int(full, item));
            }
        }
        else throw std::invalid_argument("config: unknown key \"" + full + "\"");
    } else {
        throw std::invalid_argument("config: unknown section \"" + section + "\"");
    }
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    RunConfig cfg;
    std::string line, section;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section at line " +
                                            std::to_string(lineno) + " of " + path);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno) + " of " + path);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        set_key(cfg, section, key, value);
    }
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects section.key=value, got \"" + assignment + "\"");
    std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    const size_t dot = key.find('.');
    std::string section;
    if (dot != std::string::npos) {
        section = key.substr(0, dot);
        key = key.substr(dot + 1);
    }
    set_key(cfg, section, key, value);
}

CcrfParams RunConfig::ccrf_params() const {
    CcrfParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.sigma_d = sigma_d;
    p.sigma_r = sigma_r;
    p.gamma = gamma;
    p.L = L;
    p.k_out = k_out > 0 ? k_out : k;
    p.solver = solver;
    p.tol = ccrf_tol;
    p.max_iter = ccrf_max_iter;
    p.weight_terms = weight_terms;
    p.reselect = reselect;
    p.threads = threads;
    return p;
}

DiffusionParams RunConfig::diffusion_params() const {
    DiffusionParams p;
    p.rho = rho;
    p.tol = diffusion_tol;
    p.max_iter = diffusion_max_iter;
    p.mode = mode;
    p.trunc = trunc;
    p.query_k = query_k > 0 ? query_k : k;
    p.threads = threads;
    return p;
}

std::vector<std::string> RunConfig::echo() const {
    // threads is an execution detail: leaving it out keeps manifests
    // byte-identical across worker counts.
    std::vector<std::string> out;
    out.push_back("seed = " + std::to_string(seed));
    out.push_back("paths.descriptors = " + descriptors);
    out.push_back("paths.queries = " + queries);
    out.push_back("paths.protocol = " + protocol);
    out.push_back("paths.affinity = " + affinity);
    out.push_back("paths.rankings = " + rankings);
    out.push_back("paths.output = " + output);
    out.push_back("graph.k = " + std::to_string(k));
    out.push_back("graph.gamma = " + fmt_double(gamma));
    out.push_back(std::string("graph.normalize = ") + (normalize ? "true" : "false"));
    out.push_back("ccrf.alpha = " + fmt_double(alpha));
    out.push_back("ccrf.beta = " + fmt_double(beta));
    out.push_back("ccrf.sigma_d = " + (sigma_d_set ? fmt_double(sigma_d) : "unset"));
    out.push_back("ccrf.sigma_r = " + (sigma_r_set ? fmt_double(sigma_r) : "unset"));
    out.push_back("ccrf.L = " + std::to_string(L));
    out.push_back("ccrf.k_out = " + std::to_string(k_out > 0 ? k_out : k));
    out.push_back(std::string("ccrf.solver = ") + (solver == SolverKind::cg ? "cg" : "direct"));
    out.push_back("ccrf.tol = " + fmt_double(ccrf_tol));
    out.push_back("ccrf.max_iter = " + std::to_string(ccrf_max_iter));
    out.push_back(std::string("ccrf.weight_terms = ") +
                  (weight_terms == WeightTerms::ed ? "ed"
                   : weight_terms == WeightTerms::sd ? "sd" : "both"));
    out.push_back(std::string("ccrf.reselect = ") +
                  (reselect == ReselectOrder::pre ? "pre" : "post"));
    out.push_back("diffusion.rho = " + fmt_double(rho));
    out.push_back("diffusion.tol = " + fmt_double(diffusion_tol));
    out.push_back("diffusion.max_iter = " + std::to_string(diffusion_max_iter));
    out.push_back(std::string("diffusion.mode = ") +
                  (mode == DiffusionMode::online ? "online" : "offline"));
    out.push_back("diffusion.trunc = " + std::to_string(trunc));
    out.push_back("diffusion.query_k = " + std::to_string(query_k > 0 ? query_k : k));
    out.push_back(std::string("diffusion.method = ") +
                  (method == RerankMethod::diffusion ? "diffusion"
                   : method == RerankMethod::nns ? "nns" : "aqe"));
    out.push_back("diffusion.nqe = " + std::to_string(nqe));
    out.push_back(std::string("eval.protocol_mode = ") +
                  (protocol_mode == ProtocolMode::easy ? "easy"
                   : protocol_mode == ProtocolMode::medium ? "medium" : "hard"));
    out.push_back(std::string("synth.shape = ") +
                  (shape == SynthShape::two_moons ? "two_moons" : "two_circles"));
    out.push_back("synth.n_per_manifold = " + std::to_string(n_per_manifold));
    out.push_back("synth.noise_sigma = " + fmt_double(noise_sigma));
    out.push_back("synth.shift = " + fmt_double(shift));
    out.push_back(std::string("sweep.axis = ") + (axis == SweepAxis::k ? "k" : "clique_size"));
    std::string vals;
    for (size_t i = 0; i < sweep_values.size(); ++i)
        vals += (i ? "," : "") + std::to_string(sweep_values[i]);
    out.push_back("sweep.values = " + vals);
    return out;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
}

}  // namespace

void validate_config(const RunConfig& cfg, const std::string& command) {
    require(cfg.threads >= 0, "threads must be >= 0");
    require(cfg.gamma > 0.0, "graph.gamma must be positive");
    require(cfg.k >= 1, "graph.k must be >= 1");
    require(cfg.rho > 0.0 && cfg.rho < 1.0, "diffusion.rho must lie in (0, 1)");
    require(cfg.diffusion_tol > 0.0, "diffusion.tol must be positive");
    require(cfg.diffusion_max_iter > 0, "diffusion.max_iter must be positive");
    require(!cfg.output.empty(), "paths.output is required");

    if (command == "build-graph") {
        require(!cfg.descriptors.empty(), "paths.descriptors is required for build-graph");
    } else if (command == "denoise") {
        require(!cfg.descriptors.empty(), "paths.descriptors is required for denoise");
        require(cfg.sigma_d_set, "ccrf.sigma_d is required for denoise");
        require(cfg.sigma_r_set, "ccrf.sigma_r is required for denoise");
        require(cfg.sigma_d > 0.0, "ccrf.sigma_d must be positive");
        require(cfg.sigma_r > 0.0, "ccrf.sigma_r must be positive");
        require(cfg.alpha > 0.0, "ccrf.alpha must be positive");
        require(cfg.beta >= 0.0, "ccrf.beta must be nonnegative");
        require(cfg.L >= 1, "ccrf.L must be >= 1");
        require(cfg.ccrf_tol > 0.0, "ccrf.tol must be positive");
        const int k_out = cfg.k_out > 0 ? cfg.k_out : cfg.k;
        require(k_out <= cfg.L, "ccrf.k_out must not exceed ccrf.L");
    } else if (command == "rerank") {
        require(!cfg.descriptors.empty(), "paths.descriptors is required for rerank");
        require(!cfg.queries.empty(), "paths.queries is required for rerank");
        require(!cfg.affinity.empty(), "paths.affinity is required for rerank");
        require(cfg.trunc >= 0, "diffusion.trunc must be >= 0");
        require(cfg.nqe >= 0, "diffusion.nqe must be >= 0");
    } else if (command == "eval") {
        require(!cfg.rankings.empty(), "paths.rankings is required for eval");
        require(!cfg.protocol.empty(), "paths.protocol is required for eval");
    } else if (command == "sweep") {
        require(!cfg.descriptors.empty(), "paths.descriptors is required for sweep");
        require(!cfg.queries.empty(), "paths.queries is required for sweep");
        require(!cfg.protocol.empty(), "paths.protocol is required for sweep");
        require(!cfg.sweep_values.empty(), "sweep.values is required for sweep");
        require(cfg.sigma_d_set, "ccrf.sigma_d is required for sweep");
        require(cfg.sigma_r_set, "ccrf.sigma_r is required for sweep");
    } else if (command == "gen-synth") {
        require(cfg.n_per_manifold >= 2, "synth.n_per_manifold must be >= 2");
        require(cfg.noise_sigma >= 0.0, "synth.noise_sigma must be nonnegative");
        require(cfg.shift > 0.0, "synth.shift must be positive");
    } else {
        throw std::invalid_argument("validate_config: unknown command " + command);
    }
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_checksum: cannot open " + path);
    uint64_t h = 14695981039346656037ULL;  // FNV-1a 64
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof buf)) break;
    }
    char out[20];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_manifest(const std::string& path, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::pair<std::string, std::string>>& outputs,
                    const std::vector<std::string>& stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << "# crfdn run manifest\n";
    out << "command " << command << "\n";
    for (const auto& line : cfg.echo()) out << "config " << line << "\n";
    for (const auto& [p, sum] : inputs) out << "input " << p << " fnv1a64 " << sum << "\n";
    for (const auto& [p, sum] : outputs) out << "output " << p << " fnv1a64 " << sum << "\n";
    for (const auto& s : stats) out << "stat " << s << "\n";
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

}  // namespace crfdn
