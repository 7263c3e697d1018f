#pragma once

#include <vector>

#include "hough6d/core/types.hpp"

namespace hough6d {

struct MeanShiftModes {
    std::vector<Vec3d> modes;        // descending kernel density
    std::vector<int> assignment;     // point index -> mode index (nearest)
    std::vector<double> density;     // kernel density at each mode
};

/// Gaussian-kernel mean shift over 3D points. Seeds at every point
/// (subsampled above maxSeeds), converged seeds within half a bandwidth
/// are merged.
MeanShiftModes meanShift3d(const std::vector<Vec3d>& points, const std::vector<double>& weights,
                           double bandwidth, int maxSeeds = 256);

/// Single mean-shift ascent from `start` over weighted points; returns
/// the converged mode.
Vec3d meanShiftAscent(const std::vector<Vec3d>& points, const std::vector<double>& weights,
                      double bandwidth, const Vec3d& start);

/// Dominant rotation mode: mean shift on the unit quaternion hemisphere
/// with a Gaussian kernel over rotation angle. bandwidth in radians of
/// rotation angle. Returns identity for empty input.
Quatd quaternionMode(const std::vector<Quatd>& rotations, const std::vector<double>& weights,
                     double bandwidthRad, int maxSeeds = 64);

/// Greedy rotation clustering: peel off the dominant mean-shift mode,
/// claim rotations within two bandwidths, repeat up to maxModes times.
/// Unclaimed leftovers stay unassigned.
struct QuatClusters {
    std::vector<Quatd> modes;
    std::vector<std::vector<size_t>> members;  // indices into the input
};
QuatClusters clusterRotations(const std::vector<Quatd>& rotations,
                              const std::vector<double>& weights, double bandwidthRad,
                              int maxModes, int maxSeeds = 48);

/// Rotation angle between two quaternions, radians, in [0, pi].
double rotationAngle(const Quatd& a, const Quatd& b);

}  // namespace hough6d
