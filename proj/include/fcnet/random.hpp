#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fcnet {

/// Gaussian stream with a fully specified bit pattern: std::mt19937_64
/// (whose output sequence the standard fixes), 53-bit uniforms, and the
/// Box-Muller transform with both outputs used. std::normal_distribution is
/// implementation-defined and would make fixtures toolchain-specific.
class NormalStream {
public:
    static constexpr const char* kAlgorithm = "mt19937_64+box-muller/v1";

    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1).
    double uniform() {
        double u;
        do {
            u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        } while (u == 0.0);
        return u;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fcnet
