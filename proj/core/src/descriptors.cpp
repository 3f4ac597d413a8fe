#include "crfdn/descriptors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crfdn {

double pairwise_similarity(const float* a, const float* b, int64_t dim, double gamma) {
    double dot = 0.0;
    for (int64_t c = 0; c < dim; ++c) dot += static_cast<double>(a[c]) * static_cast<double>(b[c]);
    if (!std::isfinite(dot)) throw std::invalid_argument("pairwise_similarity: non-finite input");
    if (dot <= 0.0) return 0.0;
    return std::pow(dot, gamma);
}

double pairwise_similarity(const DescriptorSet& a, int64_t ia, const DescriptorSet& b,
                           int64_t ib, double gamma) {
    if (a.dim != b.dim) throw std::invalid_argument("pairwise_similarity: dimension mismatch");
    if (gamma <= 0.0) throw std::invalid_argument("pairwise_similarity: gamma must be positive");
    return pairwise_similarity(a.row(ia), b.row(ib), a.dim, gamma);
}

namespace {

// Plain little-endian reads; the build targets little-endian hosts, asserted
// by the byte pattern below rather than assumed silently.
static_assert(sizeof(float) == 4 && sizeof(int32_t) == 4);

bool host_little_endian() {
    const uint32_t probe = 1;
    return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

}  // namespace

DescriptorSet load_descriptors(const std::string& path, bool normalize) {
    if (!host_little_endian())
        throw std::runtime_error("load_descriptors: big-endian hosts unsupported");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_descriptors: cannot open " + path);

    DescriptorSet X;
    int64_t offset = 0;
    while (true) {
        int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), 4);
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != 4)
            throw std::runtime_error("load_descriptors: truncated record header at byte offset " +
                                     std::to_string(offset) + " in " + path);
        if (d <= 0)
            throw std::runtime_error("load_descriptors: invalid dimension " + std::to_string(d) +
                                     " at byte offset " + std::to_string(offset) + " in " + path);
        if (X.n == 0) {
            X.dim = d;
        } else if (d != X.dim) {
            throw std::runtime_error("load_descriptors: dimension changed from " +
                                     std::to_string(X.dim) + " to " + std::to_string(d) +
                                     " at byte offset " + std::to_string(offset) + " in " + path);
        }
        offset += 4;
        const size_t old = X.data.size();
        X.data.resize(old + static_cast<size_t>(d));
        in.read(reinterpret_cast<char*>(X.data.data() + old), 4LL * d);
        if (in.gcount() != 4LL * d)
            throw std::runtime_error("load_descriptors: truncated record body at byte offset " +
                                     std::to_string(offset) + " in " + path);
        offset += 4LL * d;
        ++X.n;
    }
    if (X.n == 0) throw std::runtime_error("load_descriptors: empty file " + path);
    for (float v : X.data)
        if (!std::isfinite(v))
            throw std::runtime_error("load_descriptors: non-finite component in " + path);

    if (normalize) {
        for (int64_t i = 0; i < X.n; ++i) {
            float* r = X.row(i);
            double nrm = 0.0;
            for (int64_t c = 0; c < X.dim; ++c) nrm += static_cast<double>(r[c]) * r[c];
            nrm = std::sqrt(nrm);
            if (nrm > 0.0)
                for (int64_t c = 0; c < X.dim; ++c)
                    r[c] = static_cast<float>(r[c] / nrm);
        }
    }

    std::ifstream sidecar(path + ".ids");
    if (sidecar) {
        std::string line;
        while (std::getline(sidecar, line)) X.ids.push_back(line);
        if (static_cast<int64_t>(X.ids.size()) != X.n)
            throw std::runtime_error("load_descriptors: sidecar " + path + ".ids has " +
                                     std::to_string(X.ids.size()) + " ids for " +
                                     std::to_string(X.n) + " records");
    }
    return X;
}

void save_descriptors(const std::string& path, const DescriptorSet& X) {
    if (!host_little_endian())
        throw std::runtime_error("save_descriptors: big-endian hosts unsupported");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_descriptors: cannot open " + path);
    const int32_t d = static_cast<int32_t>(X.dim);
    for (int64_t i = 0; i < X.n; ++i) {
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(X.row(i)), 4LL * d);
    }
    if (!out) throw std::runtime_error("save_descriptors: write failed for " + path);
    if (!X.ids.empty()) {
        std::ofstream sidecar(path + ".ids", std::ios::trunc);
        for (const auto& id : X.ids) sidecar << id << "\n";
        if (!sidecar) throw std::runtime_error("save_descriptors: write failed for " + path + ".ids");
    }
}

}  // namespace crfdn
