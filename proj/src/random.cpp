#include "dnsfp/random.hpp"

#include <algorithm>
#include <unordered_set>

namespace dnsfp {

std::vector<uint32_t> Rng::sample_indices(size_t n, size_t k) {
    if (k >= n) {
        std::vector<uint32_t> all(n);
        for (size_t i = 0; i < n; ++i) all[i] = static_cast<uint32_t>(i);
        return all;
    }
    std::unordered_set<uint32_t> chosen;
    chosen.reserve(k * 2);
    for (size_t i = n - k; i < n; ++i) {
        const auto j = static_cast<uint32_t>(below(i + 1));
        if (!chosen.insert(j).second) chosen.insert(static_cast<uint32_t>(i));
    }
    std::vector<uint32_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace dnsfp
