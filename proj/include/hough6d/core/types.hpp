#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hough6d/core/errors.hpp"

namespace hough6d {

using Vec2i = Eigen::Vector2i;
using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Mat3d = Eigen::Matrix3d;
using Quatd = Eigen::Quaterniond;

// Row-major dense image planes. Access is (row, col) = (y, x).
template <typename T>
using Image = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageU8 = Image<uint8_t>;
using ImageU16 = Image<uint16_t>;
using ImageF = Image<double>;
using MaskU8 = Image<uint8_t>;

// Depth values outside this range are treated as invalid sensor readings.
inline constexpr uint16_t kMinValidDepthMm = 100;
inline constexpr uint16_t kMaxValidDepthMm = 10000;

inline bool depthValid(uint16_t d) { return d > kMinValidDepthMm && d < kMaxValidDepthMm; }

/// Rigid transform: rotation stored as a unit quaternion with non-negative
/// scalar part, translation in millimeters. Euler angles use the intrinsic
/// Z-Y-X (yaw-pitch-roll) convention.
class Pose6D {
public:
    Pose6D() : q_(1, 0, 0, 0), t_(0, 0, 0) {}

    Pose6D(const Quatd& q, const Vec3d& translation_mm) : q_(q), t_(translation_mm) {
        // Keep already-unit quaternions bit-exact (serialization round trips).
        if (std::abs(q_.squaredNorm() - 1.0) > 1e-12) q_.normalize();
        canonicalize();
    }

    Pose6D(const Mat3d& rotation, const Vec3d& translation_mm)
        : q_(rotation), t_(translation_mm) {
        if (std::abs(q_.squaredNorm() - 1.0) > 1e-12) q_.normalize();
        canonicalize();
    }

    static Pose6D identity() { return Pose6D(); }

    /// roll/pitch/yaw in radians; R = Rz(yaw) * Ry(pitch) * Rx(roll).
    static Pose6D fromEuler(double roll, double pitch, double yaw, const Vec3d& translation_mm) {
        Quatd q = Eigen::AngleAxisd(yaw, Vec3d::UnitZ()) *
                  Eigen::AngleAxisd(pitch, Vec3d::UnitY()) *
                  Eigen::AngleAxisd(roll, Vec3d::UnitX());
        return Pose6D(q, translation_mm);
    }

    const Quatd& rotation() const { return q_; }
    const Vec3d& translation() const { return t_; }
    Vec3d& translation() { return t_; }

    Mat3d rotationMatrix() const { return q_.toRotationMatrix(); }

    /// Returns (roll, pitch, yaw) in radians.
    Vec3d eulerRpy() const {
        const Mat3d r = rotationMatrix();
        const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
        const double roll = std::atan2(r(2, 1), r(2, 2));
        const double yaw = std::atan2(r(1, 0), r(0, 0));
        return {roll, pitch, yaw};
    }

    Vec3d apply(const Vec3d& p) const { return q_ * p + t_; }

    /// (a * b) applies b first, then a.
    Pose6D operator*(const Pose6D& b) const { return Pose6D(q_ * b.q_, q_ * b.t_ + t_); }

    Pose6D inverse() const {
        const Quatd qi = q_.conjugate();
        return Pose6D(qi, qi * (-t_));
    }

    bool isApprox(const Pose6D& other, double tol = 1e-9) const {
        return rotationMatrix().isApprox(other.rotationMatrix(), tol) &&
               (t_ - other.t_).norm() <= tol * std::max(1.0, t_.norm());
    }

private:
    void canonicalize() {
        if (q_.w() < 0) q_.coeffs() = -q_.coeffs();
    }

    Quatd q_;
    Vec3d t_;
};

inline Pose6D compose(const Pose6D& a, const Pose6D& b) { return a * b; }

struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height;
    }
    bool inFrame(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
};

struct PixelCoord {
    double u = 0, v = 0;
    double z = 0;  // mm
};

/// Pinhole projection, point in camera frame (mm) to pixel coordinates.
inline PixelCoord project(const Vec3d& point_mm, const CameraIntrinsics& intr) {
    if (point_mm.z() <= 0) throw NonPositiveDepth();
    return {intr.fx * point_mm.x() / point_mm.z() + intr.cx,
            intr.fy * point_mm.y() / point_mm.z() + intr.cy, point_mm.z()};
}

inline Vec3d backproject(double u, double v, double z_mm, const CameraIntrinsics& intr) {
    return {(u - intr.cx) * z_mm / intr.fx, (v - intr.cy) * z_mm / intr.fy, z_mm};
}

/// Registered color + depth pair. Color is stored as three planes,
/// depth in millimeters with 0 as the invalid sentinel.
struct RgbdFrame {
    std::array<ImageU8, 3> rgb;
    ImageU16 depth;
    CameraIntrinsics intrinsics;

    int width() const { return static_cast<int>(depth.cols()); }
    int height() const { return static_cast<int>(depth.rows()); }
    bool empty() const { return depth.size() == 0; }

    uint16_t depthAt(int u, int v) const { return depth(v, u); }
    bool validDepthAt(int u, int v) const {
        return intrinsics.inFrame(u, v) && depthValid(depth(v, u));
    }

    static RgbdFrame blank(const CameraIntrinsics& intr) {
        RgbdFrame f;
        f.intrinsics = intr;
        for (auto& p : f.rgb) p = ImageU8::Zero(intr.height, intr.width);
        f.depth = ImageU16::Zero(intr.height, intr.width);
        return f;
    }
};

/// Crop with the principal point shifted so that geometry is preserved.
inline RgbdFrame cropFrame(const RgbdFrame& frame, int x0, int y0, int w, int h) {
    RgbdFrame out;
    for (int c = 0; c < 3; ++c) out.rgb[c] = frame.rgb[c].block(y0, x0, h, w);
    out.depth = frame.depth.block(y0, x0, h, w);
    out.intrinsics = frame.intrinsics;
    out.intrinsics.cx -= x0;
    out.intrinsics.cy -= y0;
    out.intrinsics.width = w;
    out.intrinsics.height = h;
    return out;
}

/// Surface point set of one rigid object, in the object frame (mm).
struct ObjectModel {
    std::string id;
    std::vector<Vec3d> vertices;
    double diameter = 0;  // max pairwise vertex distance, mm
    bool symmetric = false;

    static double computeDiameter(const std::vector<Vec3d>& vertices) {
        double best = 0;
        for (size_t i = 0; i < vertices.size(); ++i)
            for (size_t j = i + 1; j < vertices.size(); ++j)
                best = std::max(best, (vertices[i] - vertices[j]).squaredNorm());
        return std::sqrt(best);
    }

    static ObjectModel fromVertices(std::string id, std::vector<Vec3d> vertices,
                                    bool symmetric = false) {
        ObjectModel m;
        m.id = std::move(id);
        m.vertices = std::move(vertices);
        m.diameter = computeDiameter(m.vertices);
        m.symmetric = symmetric;
        return m;
    }
};

/// Identifies one leaf inside a forest.
struct LeafRef {
    int32_t tree = -1;
    int32_t node = -1;
    bool operator==(const LeafRef&) const = default;
};

/// One vote cast by a patch: predicted object-center offset and rotation,
/// plus where it came from.
struct PixelVote {
    Vec2i pixel{0, 0};        // patch center pixel
    Vec3d patchCenter3d{0, 0, 0};  // backprojected patch center, camera frame mm
    Vec3d offset{0, 0, 0};    // patch center -> object center, camera frame mm
    Quatd rotation{1, 0, 0, 0};
    double weight = 0;
    LeafRef leaf;
    int32_t modeIndex = 0;

    Vec3d predictedCenter() const { return patchCenter3d + offset; }
};

}  // namespace hough6d
