#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace magflow {

// Seedable, splittable generator. Child streams are derived from the parent seed and a
// stream name, so a run is reproducible from (seed, stream names) alone.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed, std::string name = "root");

    [[nodiscard]] Rng split(std::string_view stream) const;

    double uniform();                     // [0, 1)
    double uniform(double lo, double hi); // [lo, hi)
    double normal();                      // standard normal
    std::size_t index(std::size_t n);     // uniform in [0, n)

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::string name_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace magflow
