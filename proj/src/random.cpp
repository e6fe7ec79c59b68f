#include "magflow/random.hpp"

namespace magflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

Rng::Rng(std::uint64_t seed, std::string name)
    : seed_(seed), name_(std::move(name)), engine_(splitmix64(seed)) {}

Rng Rng::split(std::string_view stream) const {
    return Rng(splitmix64(seed_ ^ fnv1a(stream)), name_ + "/" + std::string(stream));
}

double Rng::uniform() {
    // 53 random bits; avoids generate_canonical's occasional 1.0 on some libraries.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

} // namespace magflow
