#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hough6d/core/types.hpp"

namespace hough6d {

enum class PrimitiveKind : uint8_t { Box = 0, Cylinder = 1, Sphere = 2 };

/// One analytic solid. Box dims are full extents (x, y, z); cylinder is
/// (radius, height, unused) with its axis along local z; sphere is
/// (radius, unused, unused). All millimeters.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Box;
    Vec3d dims{1, 1, 1};
    Vec3d albedo{200, 200, 200};  // 0..255 per channel
    Pose6D localPose;             // primitive frame in shape frame
};

/// A rigid object made of one or more primitives (union). The shape
/// frame origin is the object "center" that votes point at.
struct ParametricShape {
    std::string id;
    std::vector<Primitive> parts;

    static ParametricShape box(std::string id, const Vec3d& dims, const Vec3d& albedo);
    static ParametricShape cylinder(std::string id, double radius, double height,
                                    const Vec3d& albedo);
    static ParametricShape sphere(std::string id, double radius, const Vec3d& albedo);
    ParametricShape& addPart(const Primitive& p) {
        parts.push_back(p);
        return *this;
    }

    /// Radius of a bounding sphere around the shape frame origin.
    double boundingRadius() const;
};

struct RayHit {
    double t = 0;          // parameter along the ray
    Vec3d normal{0, 0, 1}; // unit, shape frame
    Vec3d albedo{0, 0, 0};
};

/// Nearest positive intersection of the ray (origin + t * dir) with the
/// shape, in the shape frame. dir need not be normalized; t is in units
/// of |dir|.
std::optional<RayHit> intersectShape(const ParametricShape& shape, const Vec3d& origin,
                                     const Vec3d& dir, double tMin = 1e-9);

/// Deterministic surface point sampling (object frame, mm). Points are
/// allocated to parts proportionally to surface area; at least
/// targetCount points are returned.
std::vector<Vec3d> sampleSurface(const ParametricShape& shape, int targetCount);

/// Surface model derived from a shape: sampled vertices plus diameter.
ObjectModel makeObjectModel(const ParametricShape& shape, int targetCount = 800,
                            bool symmetric = false);

/// Axis-aligned bounds of the shape in its own frame.
void shapeBounds(const ParametricShape& shape, Vec3d& minCorner, Vec3d& maxCorner);

}  // namespace hough6d
