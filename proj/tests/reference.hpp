// Test-only reference implementations. These deliberately avoid the
// library's lookup tables: bin responses are recomputed from the
// documented formulas and spread bytes are walked bit by bit.
#pragma once

#include <cmath>

#include "hough6d/features/descriptor.hpp"
#include "hough6d/forest/forest.hpp"

namespace hough6d::testref {

constexpr double kPi = 3.14159265358979323846;

inline double gradientResponseRef(int a, int b) {
    int d = std::abs(a - b);
    d = std::min(d, 8 - d);
    const double table[5] = {1.0, std::cos(kPi / 8.0), std::cos(kPi / 4.0), 0.0, 0.0};
    return table[d];
}

inline Vec3d normalAxisRef(int k) {
    if (k == 0) return Vec3d(0, 0, -1);
    const double inclination = 50.0 * kPi / 180.0;
    const double azimuth = 2.0 * kPi * (k - 1) / 7.0;
    return Vec3d(std::sin(inclination) * std::cos(azimuth),
                 std::sin(inclination) * std::sin(azimuth), -std::cos(inclination));
}

inline double normalResponseRef(int a, int b) {
    const Vec3d u = normalAxisRef(a);
    const Vec3d v = normalAxisRef(b);
    return std::max(0.0, u.x() * v.x() + u.y() * v.y() + u.z() * v.z());
}

// Max response of a template bin over the set bits of a spread byte.
inline double spreadResponseRef(Modality m, int bin, uint8_t byte) {
    double best = 0;
    for (int b = 0; b < kOrientationBins; ++b) {
        if (!(byte & (1 << b))) continue;
        const double g = m == Modality::Gradient ? gradientResponseRef(bin, b)
                                                 : normalResponseRef(bin, b);
        best = std::max(best, g);
    }
    return best;
}

// Scalar similarity: identical contract to hough6d::similarity but all
// responses are evaluated bin by bin.
inline double similarityRef(const SceneFeatureMap& scene, const Vec2i& at,
                            const PatchTemplate& tmpl, double depthToleranceMm,
                            double canonicalDepthMm) {
    if (!scene.validDepthAt(at.x(), at.y())) throw InvalidCenterDepth();
    const double centerDepth = scene.depth(at.y(), at.x());
    const double toPixels = canonicalDepthMm / centerDepth;
    const int w = scene.width(), h = scene.height();
    double score = 0;
    for (const auto& f : tmpl.features) {
        const int x = at.x() + static_cast<int>(std::lround(f.offset.x() * toPixels));
        const int y = at.y() + static_cast<int>(std::lround(f.offset.y() * toPixels));
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        const uint8_t byte = f.modality == Modality::Gradient ? scene.gradientSpread(y, x)
                                                              : scene.normalSpread(y, x);
        const double g = spreadResponseRef(f.modality, f.bin, byte);
        if (g == 0) continue;
        const uint16_t probeDepth = scene.depth(y, x);
        if (!depthValid(probeDepth)) continue;
        const double zDiff = (centerDepth - static_cast<double>(probeDepth)) - f.depthDelta;
        if (std::abs(zDiff) < depthToleranceMm) score += g;
    }
    return score;
}

// Manual tree walk with the reference similarity.
inline int32_t routeRef(const Tree& tree, const SceneFeatureMap& scene, const Vec2i& at,
                        const DescriptorParams& params) {
    int32_t idx = 0;
    while (!tree.nodes[idx].isLeaf) {
        const double s = similarityRef(scene, at, tree.nodes[idx].splitTemplate,
                                       params.depthToleranceMm, params.canonicalDepthMm);
        idx = s <= tree.nodes[idx].threshold ? tree.nodes[idx].left : tree.nodes[idx].right;
    }
    return idx;
}

// Brute-force symmetric matching score (double loop).
inline double matchScoreSymRef(const std::vector<Vec3d>& vertices, const Pose6D& gt,
                               const Pose6D& est) {
    double sum = 0;
    for (const auto& v1 : vertices) {
        const Vec3d p = gt.apply(v1);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v2 : vertices) best = std::min(best, (p - est.apply(v2)).norm());
        sum += best;
    }
    return sum / static_cast<double>(vertices.size());
}

inline double matchScoreNonSymRef(const std::vector<Vec3d>& vertices, const Pose6D& gt,
                                  const Pose6D& est) {
    double sum = 0;
    for (const auto& v : vertices) sum += (gt.apply(v) - est.apply(v)).norm();
    return sum / static_cast<double>(vertices.size());
}

}  // namespace hough6d::testref
