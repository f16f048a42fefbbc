#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvbody {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

inline constexpr int kNumJoints = 24;   // kinematic tree size
inline constexpr int kNumParts = 14;    // sparse joint / part-segmentation size
inline constexpr int kShapeDim = 10;

/// Dense H x W x C grid of doubles, row-major, channel-interleaved.
struct Grid {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    Grid() = default;
    Grid(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, 0.0) {}

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

    Vec3 vec3(int y, int x) const {
        size_t base = (static_cast<size_t>(y) * width + x) * channels;
        return Vec3(data[base], data[base + 1], data[base + 2]);
    }
    void set_vec3(int y, int x, const Vec3& v) {
        size_t base = (static_cast<size_t>(y) * width + x) * channels;
        data[base] = v.x();
        data[base + 1] = v.y();
        data[base + 2] = v.z();
    }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool same_shape(const Grid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// H x W boolean grid (stored as bytes).
struct MaskGrid {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    MaskGrid() = default;
    MaskGrid(int h, int w, bool v = false)
        : height(h), width(w), data(static_cast<size_t>(h) * w, v ? 1 : 0) {}

    bool at(int y, int x) const { return data[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const {
        size_t n = 0;
        for (uint8_t v : data) n += (v != 0);
        return n;
    }
};

/// Deterministic RNG used everywhere randomness is needed. Wraps a fully
/// specified engine and derives normal variates by Box-Muller so that
/// streams are bit-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {
        // warm up splitmix so nearby seeds decorrelate
        for (int i = 0; i < 4; ++i) next_u64();
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Deterministic seed combination for derived random streams.
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0) {
    uint64_t z = a;
    auto mix = [&z](uint64_t v) {
        z ^= v + 0x9e3779b97f4a7c15ULL + (z << 12) + (z >> 4);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
    };
    mix(b);
    mix(c);
    return z;
}

/// Stateless counter-based uniform: hash of (seed, stream, step, index).
/// Used for dropout masks so a training run replays bit-exactly.
inline double counter_uniform(uint64_t seed, uint64_t stream, uint64_t step, uint64_t index) {
    return static_cast<double>(mix_seed(mix_seed(seed, stream, step), index) >> 11) * 0x1.0p-53;
}

}  // namespace uvbody
