#include "hough6d/forest/mean_shift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hough6d {

namespace {

constexpr int kMaxIterations = 100;

double kernelDensity(const std::vector<Vec3d>& points, const std::vector<double>& weights,
                     double bandwidth, const Vec3d& at) {
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    double density = 0;
    for (size_t i = 0; i < points.size(); ++i)
        density += weights[i] * std::exp(-(at - points[i]).squaredNorm() * inv2h2);
    return density;
}

}  // namespace

Vec3d meanShiftAscent(const std::vector<Vec3d>& points, const std::vector<double>& weights,
                      double bandwidth, const Vec3d& start) {
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    Vec3d y = start;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        Vec3d num = Vec3d::Zero();
        double den = 0;
        for (size_t i = 0; i < points.size(); ++i) {
            const double k = weights[i] * std::exp(-(y - points[i]).squaredNorm() * inv2h2);
            num += k * points[i];
            den += k;
        }
        if (den <= 0) break;
        const Vec3d next = num / den;
        const double move = (next - y).norm();
        y = next;
        if (move < 1e-3 * bandwidth) break;
    }
    return y;
}

MeanShiftModes meanShift3d(const std::vector<Vec3d>& points, const std::vector<double>& weights,
                           double bandwidth, int maxSeeds) {
    MeanShiftModes result;
    if (points.empty()) return result;

    std::vector<size_t> seeds;
    if (static_cast<int>(points.size()) <= maxSeeds) {
        seeds.resize(points.size());
        std::iota(seeds.begin(), seeds.end(), 0);
    } else {
        // Even deterministic subsample.
        for (int i = 0; i < maxSeeds; ++i)
            seeds.push_back(static_cast<size_t>(i) * points.size() / maxSeeds);
    }

    std::vector<Vec3d> converged;
    converged.reserve(seeds.size());
    for (size_t s : seeds)
        converged.push_back(meanShiftAscent(points, weights, bandwidth, points[s]));

    // Merge converged seeds within half a bandwidth, densest first.
    std::vector<double> density(converged.size());
    for (size_t i = 0; i < converged.size(); ++i)
        density[i] = kernelDensity(points, weights, bandwidth, converged[i]);
    std::vector<size_t> order(converged.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return density[a] > density[b]; });

    const double mergeDist = bandwidth / 2;
    for (size_t idx : order) {
        bool merged = false;
        for (const auto& m : result.modes) {
            if ((m - converged[idx]).norm() <= mergeDist) {
                merged = true;
                break;
            }
        }
        if (!merged) {
            result.modes.push_back(converged[idx]);
            result.density.push_back(density[idx]);
        }
    }

    result.assignment.resize(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        int best = 0;
        double bestDist = std::numeric_limits<double>::max();
        for (size_t m = 0; m < result.modes.size(); ++m) {
            const double d = (points[i] - result.modes[m]).squaredNorm();
            if (d < bestDist) {
                bestDist = d;
                best = static_cast<int>(m);
            }
        }
        result.assignment[i] = best;
    }
    return result;
}

double rotationAngle(const Quatd& a, const Quatd& b) {
    const double d = std::min(1.0, std::abs(a.dot(b)));
    return 2.0 * std::acos(d);
}

QuatClusters clusterRotations(const std::vector<Quatd>& rotations,
                              const std::vector<double>& weights, double bandwidthRad,
                              int maxModes, int maxSeeds) {
    QuatClusters out;
    std::vector<char> used(rotations.size(), 0);
    for (int emitted = 0; emitted < maxModes; ++emitted) {
        std::vector<Quatd> remaining;
        std::vector<double> remWeights;
        std::vector<size_t> remIdx;
        for (size_t i = 0; i < rotations.size(); ++i)
            if (!used[i]) {
                remaining.push_back(rotations[i]);
                remWeights.push_back(weights[i]);
                remIdx.push_back(i);
            }
        if (remaining.empty()) break;
        const Quatd q = quaternionMode(remaining, remWeights, bandwidthRad, maxSeeds);
        std::vector<size_t> members;
        size_t nearest = remIdx[0];
        double nearestAngle = std::numeric_limits<double>::max();
        for (size_t i = 0; i < remaining.size(); ++i) {
            const double angle = rotationAngle(q, remaining[i]);
            if (angle <= 2.0 * bandwidthRad) {
                used[remIdx[i]] = 1;
                members.push_back(remIdx[i]);
            }
            if (angle < nearestAngle) {
                nearestAngle = angle;
                nearest = remIdx[i];
            }
        }
        if (members.empty()) {  // isolated rotation: claim the nearest
            used[nearest] = 1;
            members.push_back(nearest);
        }
        out.modes.push_back(q);
        out.members.push_back(std::move(members));
    }
    return out;
}

Quatd quaternionMode(const std::vector<Quatd>& rotations, const std::vector<double>& weights,
                     double bandwidthRad, int maxSeeds) {
    if (rotations.empty()) return Quatd::Identity();
    if (rotations.size() == 1) return rotations.front();

    const double inv2h2 = 1.0 / (2.0 * bandwidthRad * bandwidthRad);
    auto ascend = [&](Quatd y) {
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            Eigen::Vector4d num = Eigen::Vector4d::Zero();
            for (size_t i = 0; i < rotations.size(); ++i) {
                const double angle = rotationAngle(y, rotations[i]);
                const double k = weights[i] * std::exp(-angle * angle * inv2h2);
                // Align to the same hemisphere before averaging.
                const double sign = y.dot(rotations[i]) >= 0 ? 1.0 : -1.0;
                num += k * sign * rotations[i].coeffs();
            }
            if (num.norm() < 1e-12) break;
            const Quatd next(num.normalized());
            const double move = rotationAngle(y, next);
            y = next;
            if (move < 1e-4) break;
        }
        if (y.w() < 0) y.coeffs() = -y.coeffs();
        return y;
    };
    auto densityAt = [&](const Quatd& y) {
        double density = 0;
        for (size_t i = 0; i < rotations.size(); ++i) {
            const double angle = rotationAngle(y, rotations[i]);
            density += weights[i] * std::exp(-angle * angle * inv2h2);
        }
        return density;
    };

    std::vector<size_t> seeds;
    if (static_cast<int>(rotations.size()) <= maxSeeds) {
        seeds.resize(rotations.size());
        std::iota(seeds.begin(), seeds.end(), 0);
    } else {
        for (int i = 0; i < maxSeeds; ++i)
            seeds.push_back(static_cast<size_t>(i) * rotations.size() / maxSeeds);
    }

    Quatd best = Quatd::Identity();
    double bestDensity = -1;
    for (size_t s : seeds) {
        const Quatd mode = ascend(rotations[s]);
        const double d = densityAt(mode);
        if (d > bestDensity + 1e-12) {
            bestDensity = d;
            best = mode;
        }
    }
    return best;
}

}  // namespace hough6d
