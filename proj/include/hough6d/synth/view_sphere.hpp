#pragma once

#include <vector>

#include "hough6d/core/types.hpp"

namespace hough6d {

/// Viewpoint sampling sphere: unit direction per virtual camera.
struct ViewSphere {
    double radius = 1.0;  // mm when used for camera placement
    int subdivisionLevel = 0;
    std::vector<Vec3d> vertices;  // unit vectors
};

inline constexpr int kMaxSubdivisionLevel = 4;

/// Icosahedron subdivided `level` times; each edge is split at its
/// midpoint and midpoints are reprojected onto the sphere. Vertex count
/// is 10 * 4^level + 2.
ViewSphere subdivideIcosahedron(int level, double radius = 1.0);

/// Object pose in the camera frame for a camera sitting at
/// direction * radius, looking at the origin, rolled by inplaneRad
/// about the optical axis. World up is +z (fallback +x near the poles).
Pose6D viewPose(const Vec3d& direction, double radiusMm, double inplaneRad = 0.0);

/// All training poses of a view sphere crossed with in-plane angles.
std::vector<Pose6D> trainingViewPoses(const ViewSphere& sphere,
                                      const std::vector<double>& inplaneRad);

}  // namespace hough6d
