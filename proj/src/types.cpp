#include "scm/types.hpp"

#include <sstream>

namespace scm {

void require_dim(const Vector& x, Eigen::Index dim, const char* what) {
    if (x.size() != dim) {
        std::ostringstream msg;
        msg << what << ": dimension " << x.size() << " does not match " << dim;
        throw DimensionError(msg.str());
    }
}

void require_finite(const Vector& x, const char* what) {
    if (!x.allFinite()) {
        throw ParameterError(std::string(what) + ": entries must be finite");
    }
}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name) {
    // FNV-1a over the name, then mixed with the base seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return derive_seed(base, h);
}

}  // namespace scm
