// End-to-end smoke test of the crfdn CLI. Run as:
//   cli_smoke <path-to-crfdn> <scratch-dir>
// Prints one [ok]/[FAIL] line per check and exits with the failure count.

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crfdn/descriptors.hpp"
#include "crfdn/diffusion.hpp"
#include "crfdn/eval.hpp"
#include "crfdn/graph.hpp"

namespace fs = std::filesystem;
using namespace crfdn;

namespace {

std::string cli;
std::string scratch;
int failures = 0;

void check(bool ok, const std::string& name) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name.c_str());
    if (!ok) ++failures;
}

std::string path_in(const std::string& rel) { return (fs::path(scratch) / rel).string(); }

int run(const std::string& args, const std::string& tag) {
    const std::string cmd = "\"" + cli + "\" " + args + " >\"" + path_in(tag + ".out") +
                            "\" 2>\"" + path_in(tag + ".err") + "\"";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << body;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

DescriptorSet from_angles(const std::vector<double>& degrees) {
    DescriptorSet X;
    X.n = static_cast<int64_t>(degrees.size());
    X.dim = 2;
    for (double deg : degrees) {
        const double t = deg * M_PI / 180.0;
        X.data.push_back(static_cast<float>(std::cos(t)));
        X.data.push_back(static_cast<float>(std::sin(t)));
    }
    return X;
}

// same undirected edge list, weights within tol
bool same_graph(const SparseAffinity& a, const SparseAffinity& b, double tol) {
    const auto ea = a.edges(), eb = b.edges();
    if (a.n != b.n || ea.size() != eb.size()) return false;
    for (size_t t = 0; t < ea.size(); ++t) {
        if (ea[t].first != eb[t].first) return false;
        if (std::fabs(ea[t].second - eb[t].second) > tol) return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: cli_smoke <crfdn-binary> <scratch-dir>\n");
        return 64;
    }
    cli = argv[1];
    scratch = argv[2];
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    // ---------------------------------------------------------- fixtures
    const DescriptorSet toy4 = from_angles({5.0, 20.0, 50.0, 80.0});
    save_descriptors(path_in("toy4.bin"), toy4);

    std::vector<double> bridge_angles;
    for (int a = 2; a <= 16; a += 2) bridge_angles.push_back(a);       // cluster A: 0..7
    for (int a = 74; a <= 88; a += 2) bridge_angles.push_back(a);      // cluster B: 8..15
    bridge_angles.push_back(44.9);                                     // 16, side A
    bridge_angles.push_back(45.1);                                     // 17, side B
    const DescriptorSet bridge = from_angles(bridge_angles);
    save_descriptors(path_in("bridge.bin"), bridge);

    // -------------------------------------------- gen-synth determinism
    spit(path_in("gen.ini"),
         "seed = 7\n[paths]\noutput = " + path_in("synth") +
             "\n[synth]\nshape = two_moons\nn_per_manifold = 30\nnoise_sigma = 0.08\n");
    int rc = run("gen-synth --config \"" + path_in("gen.ini") + "\"", "gen1");
    check(rc == 0, "gen-synth runs");
    const std::string synth_desc = slurp(path_in("synth/descriptors.bin"));
    const std::string synth_manifest = slurp(path_in("synth/gen-synth.manifest"));
    rc = run("gen-synth --config \"" + path_in("gen.ini") + "\"", "gen2");
    check(rc == 0 && slurp(path_in("synth/descriptors.bin")) == synth_desc &&
              slurp(path_in("synth/gen-synth.manifest")) == synth_manifest,
          "gen-synth rerun is byte-identical (descriptors + manifest)");

    // ---------------------------------------------- build-graph vs library
    spit(path_in("bg.ini"), "[paths]\ndescriptors = " + path_in("toy4.bin") +
                                "\noutput = " + path_in("bg") + "\n[graph]\nk = 2\n");
    rc = run("build-graph --config \"" + path_in("bg.ini") + "\"", "bg1");
    bool ok = rc == 0;
    if (ok) {
        const SparseAffinity got = load_affinity(path_in("bg/graph.gra1"));
        const SparseAffinity want = reciprocity_affinity(build_knn(toy4, 2, 3.0));
        ok = same_graph(got, want, 1e-8);
    }
    check(ok, "build-graph matches the in-memory reciprocity graph");

    const std::string bg_graph = slurp(path_in("bg/graph.gra1"));
    const std::string bg_manifest = slurp(path_in("bg/build-graph.manifest"));
    rc = run("build-graph --config \"" + path_in("bg.ini") + "\"", "bg2");
    check(rc == 0 && slurp(path_in("bg/graph.gra1")) == bg_graph &&
              slurp(path_in("bg/build-graph.manifest")) == bg_manifest,
          "build-graph rerun is byte-identical (graph + manifest)");

    rc = run("build-graph --config \"" + path_in("bg.ini") + "\" --set graph.k=5", "bgk");
    check(rc != 0 && contains(slurp(path_in("bgk.err")), "must be smaller"),
          "build-graph rejects k >= database size");

    // --------------------------------------------------- denoise, beta = 0
    // with beta = 0 and k_out = L = n - 1 the posterior mean equals the raw
    // similarities, so the output is the complete positive-similarity graph
    spit(path_in("den0.ini"),
         "[paths]\ndescriptors = " + path_in("toy4.bin") + "\noutput = " + path_in("den0") +
             "\n[ccrf]\nbeta = 0\nsigma_d = 0.5\nsigma_r = 0.1\nL = 3\nk_out = 3\n");
    rc = run("denoise --config \"" + path_in("den0.ini") + "\"", "den0");
    ok = rc == 0;
    if (ok) {
        const SparseAffinity got = load_affinity(path_in("den0/denoised.gra1"));
        SparseAffinity want(4);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                const double s = pairwise_similarity(toy4, i, toy4, j, 3.0);
                want.rows[static_cast<size_t>(i)].emplace_back(j, s);
                want.rows[static_cast<size_t>(j)].emplace_back(i, s);
            }
        ok = same_graph(got, want, 1e-8);
    }
    check(ok, "denoise with beta = 0 returns the raw similarity graph");

    rc = run("denoise --config \"" + path_in("den0.ini") + "\" --set ccrf.sigma_r=-1", "densig");
    check(rc != 0 && contains(slurp(path_in("densig.err")), "sigma_r"),
          "denoise rejects a non-positive sigma_r");
    spit(path_in("nosig.ini"),
         "[paths]\ndescriptors = " + path_in("toy4.bin") + "\noutput = " + path_in("nosig") +
             "\n[ccrf]\nsigma_d = 0.5\nL = 3\nk_out = 3\n");
    rc = run("denoise --config \"" + path_in("nosig.ini") + "\"", "nosig");
    check(rc != 0 && contains(slurp(path_in("nosig.err")), "sigma_r"),
          "denoise requires sigma_r to be set");

    // ------------------------------------------------- planted bridge edge
    spit(path_in("br.ini"),
         "[paths]\ndescriptors = " + path_in("bridge.bin") + "\noutput = " + path_in("br1") +
             "\n[ccrf]\nalpha = 1\nbeta = 1\nsigma_d = 0.9\nsigma_r = 0.1\nL = 10\nk_out = 5\n");
    rc = run("denoise --config \"" + path_in("br.ini") + "\"", "br1");
    int rc2 = run("denoise --config \"" + path_in("br.ini") + "\" --set ccrf.beta=0 --set paths.output=" +
                      path_in("br0"),
                  "br0");
    ok = rc == 0 && rc2 == 0;
    if (ok) {
        const auto side = [&](int i) { return bridge_angles[static_cast<size_t>(i)] < 45.0 ? 0 : 1; };
        const auto cross_mass = [&](const SparseAffinity& A) {
            double m = 0.0;
            for (const auto& [ij, w] : A.edges())
                if (side(ij.first) != side(ij.second)) m += w;
            return m;
        };
        const double m1 = cross_mass(load_affinity(path_in("br1/denoised.gra1")));
        const double m0 = cross_mass(load_affinity(path_in("br0/denoised.gra1")));
        ok = m0 > 0.5 && m1 < m0;  // smoothing shrinks the cross-cluster mass
    }
    check(ok, "denoise shrinks the planted cross-cluster mass (beta 1 vs 0)");
    const std::string br_manifest = slurp(path_in("br1/denoise.manifest"));
    check(contains(br_manifest, "stat nnz ") && contains(br_manifest, "stat total_weight "),
          "denoise manifest records graph statistics");

    // threads must not change any output byte (manifest excludes threads)
    rc = run("denoise --config \"" + path_in("br.ini") + "\" --set threads=1", "brt1");
    const std::string gra_t1 = slurp(path_in("br1/denoised.gra1"));
    const std::string man_t1 = slurp(path_in("br1/denoise.manifest"));
    rc2 = run("denoise --config \"" + path_in("br.ini") + "\" --set threads=4", "brt4");
    check(rc == 0 && rc2 == 0 && slurp(path_in("br1/denoised.gra1")) == gra_t1 &&
              slurp(path_in("br1/denoise.manifest")) == man_t1,
          "denoise output is byte-identical across thread counts");

    // --------------------------------------------------------------- rerank
    const DescriptorSet q1 = from_angles({10.0});
    save_descriptors(path_in("q1.bin"), q1);
    spit(path_in("rr.ini"),
         "[paths]\ndescriptors = " + path_in("toy4.bin") + "\nqueries = " + path_in("q1.bin") +
             "\naffinity = " + path_in("bg/graph.gra1") + "\noutput = " + path_in("rr_on") +
             "\n[graph]\nk = 2\n[diffusion]\nrho = 0.9\ntol = 1e-10\nmax_iter = 10000\n");
    rc = run("rerank --config \"" + path_in("rr.ini") + "\"", "rr_on");
    ok = rc == 0;
    std::vector<std::pair<int, RetrievalRanking>> on;
    if (ok) {
        on = load_rankings(path_in("rr_on/rankings.txt"));
        ok = on.size() == 1 && on[0].first == 0 && on[0].second.indices.size() == 4;
        for (size_t t = 1; ok && t < 4; ++t)
            ok = on[0].second.scores[t - 1] >= on[0].second.scores[t];
    }
    check(ok, "rerank writes a loadable descending ranking per query");

    rc = run("rerank --config \"" + path_in("rr.ini") +
                 "\" --set paths.output=" + path_in("rr_off") +
                 " --set diffusion.mode=offline --set diffusion.trunc=4",
             "rr_off");
    ok = rc == 0 && !on.empty();
    if (ok) {
        const auto off = load_rankings(path_in("rr_off/rankings.txt"));
        ok = off.size() == 1 && off[0].second.indices == on[0].second.indices;
        for (size_t t = 0; ok && t < 4; ++t)
            ok = std::fabs(off[0].second.scores[t] - on[0].second.scores[t]) <= 1e-5;
    }
    check(ok, "offline rerank with full truncation matches online");

    // two disjoint-support clusters: diffusion must keep the query's cluster
    // strictly ahead of the unreachable one
    DescriptorSet six;
    six.n = 6;
    six.dim = 4;
    six.data = {1.0f, 0.0f, 0.0f, 0.0f, 0.8f, 0.6f, 0.0f, 0.0f, 0.6f, 0.8f, 0.0f, 0.0f,
                0.0f, 0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.8f, 0.6f, 0.0f, 0.0f, 0.6f, 0.8f};
    save_descriptors(path_in("six.bin"), six);
    DescriptorSet qa;
    qa.n = 1;
    qa.dim = 4;
    qa.data = {0.9f, 0.43589f, 0.0f, 0.0f};
    save_descriptors(path_in("qa.bin"), qa);
    spit(path_in("bg6.ini"), "[paths]\ndescriptors = " + path_in("six.bin") +
                                 "\noutput = " + path_in("bg6") + "\n[graph]\nk = 2\n");
    rc = run("build-graph --config \"" + path_in("bg6.ini") + "\"", "bg6");
    spit(path_in("rr6.ini"),
         "[paths]\ndescriptors = " + path_in("six.bin") + "\nqueries = " + path_in("qa.bin") +
             "\naffinity = " + path_in("bg6/graph.gra1") + "\noutput = " + path_in("rr6") +
             "\n[graph]\nk = 2\n[diffusion]\nrho = 0.9\ntol = 1e-10\nmax_iter = 10000\n");
    rc2 = run("rerank --config \"" + path_in("rr6.ini") + "\"", "rr6");
    ok = rc == 0 && rc2 == 0;
    if (ok) {
        const auto rk = load_rankings(path_in("rr6/rankings.txt"));
        ok = rk.size() == 1;
        if (ok) {
            const auto& r = rk[0].second;
            ok = r.indices.size() == 6;
            for (size_t t = 0; ok && t < 3; ++t) ok = r.indices[t] < 3;   // cluster A first
            if (ok) ok = r.scores[2] > 0.0;
            for (size_t t = 3; ok && t < 6; ++t) ok = r.scores[t] == 0.0; // B is unreachable
        }
    }
    check(ok, "rerank ranks the connected cluster strictly ahead of the disconnected one");

    // ----------------------------------------------------------------- eval
    {
        Protocol p;
        QueryGroundTruth g0;
        g0.id = 0;
        g0.easy = {1, 2};
        QueryGroundTruth g1;
        g1.id = 1;
        g1.easy = {0};
        p.queries = {g0, g1};
        save_protocol(path_in("perfect.json"), p);
        RetrievalRanking r0;
        r0.indices = {1, 2, 0};
        r0.scores = {0.9, 0.8, 0.7};
        RetrievalRanking r1;
        r1.indices = {0, 1, 2};
        r1.scores = {0.9, 0.8, 0.7};
        save_rankings(path_in("perfect.txt"), {0, 1}, {r0, r1});
    }
    spit(path_in("ev.ini"), "[paths]\nrankings = " + path_in("perfect.txt") +
                                "\nprotocol = " + path_in("perfect.json") +
                                "\noutput = " + path_in("ev") +
                                "\n[eval]\nprotocol_mode = medium\n");
    rc = run("eval --config \"" + path_in("ev.ini") + "\"", "ev");
    check(rc == 0 && contains(slurp(path_in("ev/eval.txt")), "mAP 100.0000"),
          "eval reports mAP 100.0000 for perfect rankings");

    // ---------------------------------------------------------------- sweep
    spit(path_in("sw.ini"),
         "[paths]\ndescriptors = " + path_in("synth/descriptors.bin") +
             "\nqueries = " + path_in("synth/queries.bin") +
             "\nprotocol = " + path_in("synth/protocol.json") + "\noutput = " + path_in("sw") +
             "\n[graph]\nk = 6\n[ccrf]\nalpha = 1\nbeta = 1\nsigma_d = 0.2\nsigma_r = 0.05\n"
             "L = 12\nk_out = 6\n[diffusion]\nrho = 0.9\ntol = 1e-8\nmax_iter = 5000\n"
             "[sweep]\naxis = k\nvalues = 6\n");
    rc = run("sweep --config \"" + path_in("sw.ini") + "\"", "sw");
    double sweep_baseline = -1.0, sweep_denoised = -1.0;
    ok = rc == 0;
    if (ok) {
        std::istringstream in(slurp(path_in("sw/sweep_k.txt")));
        std::string line;
        ok = false;
        while (std::getline(in, line))
            if (std::sscanf(line.c_str(), "6 %lf %lf", &sweep_baseline, &sweep_denoised) == 2) {
                ok = contains(line, " ok");
                break;
            }
    }
    check(ok, "sweep writes the swept point");

    // the baseline column must agree with the standalone pipeline
    spit(path_in("bgsw.ini"), "[paths]\ndescriptors = " + path_in("synth/descriptors.bin") +
                                  "\noutput = " + path_in("bgsw") + "\n[graph]\nk = 6\n");
    rc = run("build-graph --config \"" + path_in("bgsw.ini") + "\"", "bgsw");
    spit(path_in("rrsw.ini"),
         "[paths]\ndescriptors = " + path_in("synth/descriptors.bin") +
             "\nqueries = " + path_in("synth/queries.bin") +
             "\naffinity = " + path_in("bgsw/graph.gra1") + "\noutput = " + path_in("rrsw") +
             "\n[graph]\nk = 6\n[diffusion]\nrho = 0.9\ntol = 1e-8\nmax_iter = 5000\n");
    rc2 = run("rerank --config \"" + path_in("rrsw.ini") + "\"", "rrsw");
    spit(path_in("evsw.ini"), "[paths]\nrankings = " + path_in("rrsw/rankings.txt") +
                                  "\nprotocol = " + path_in("synth/protocol.json") +
                                  "\noutput = " + path_in("evsw") +
                                  "\n[eval]\nprotocol_mode = medium\n");
    const int rc3 = run("eval --config \"" + path_in("evsw.ini") + "\"", "evsw");
    ok = rc == 0 && rc2 == 0 && rc3 == 0 && sweep_baseline >= 0.0;
    if (ok) {
        double standalone = -1.0;
        std::istringstream in(slurp(path_in("evsw/eval.txt")));
        std::string line;
        while (std::getline(in, line))
            if (std::sscanf(line.c_str(), "mAP %lf", &standalone) == 1) break;
        ok = standalone >= 0.0 && std::fabs(standalone - sweep_baseline) <= 0.01;
    }
    check(ok, "sweep baseline matches the standalone build/rerank/eval pipeline");

    // ------------------------------------------------------- corrupt input
    {
        std::string bytes = slurp(path_in("toy4.bin"));
        bytes.resize(bytes.size() - 2);
        spit(path_in("torn.bin"), bytes);
    }
    rc = run("build-graph --config \"" + path_in("bg.ini") + "\" --set paths.descriptors=" +
                 path_in("torn.bin"),
             "torn");
    check(rc != 0 && contains(slurp(path_in("torn.err")), "byte offset"),
          "build-graph reports the byte offset of a truncated record");

    if (failures) std::printf("%d check(s) failed\n", failures);
    return failures;
}
