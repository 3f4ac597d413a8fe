#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crfdn {

// Database of N descriptor rows of dimension dim. Storage is float32 to match
// the on-disk format exactly; all arithmetic promotes to double.
struct DescriptorSet {
    int64_t n = 0;
    int64_t dim = 0;
    std::vector<float> data;       // row-major, n * dim
    std::vector<std::string> ids;  // optional; empty means 0-based indices

    const float* row(int64_t i) const { return data.data() + i * dim; }
    float* row(int64_t i) { return data.data() + i * dim; }

    std::string id(int64_t i) const {
        return ids.empty() ? std::to_string(i) : ids[static_cast<size_t>(i)];
    }
};

// s(a, b) = max(0, <a, b>)^gamma. Positive kernel with zero self-similarity
// by convention: callers zero self pairs themselves.
double pairwise_similarity(const float* a, const float* b, int64_t dim, double gamma);
double pairwise_similarity(const DescriptorSet& a, int64_t ia,
                           const DescriptorSet& b, int64_t ib, double gamma);

// Binary vector file: per record one little-endian int32 dimension followed by
// that many little-endian float32 components. The dimension must be constant
// across records. An optional "<path>.ids" sidecar supplies one identifier per
// line. With normalize set, every row is scaled to unit Euclidean norm.
DescriptorSet load_descriptors(const std::string& path, bool normalize = false);
void save_descriptors(const std::string& path, const DescriptorSet& X);

}  // namespace crfdn
