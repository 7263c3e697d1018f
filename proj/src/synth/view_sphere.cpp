#include "hough6d/synth/view_sphere.hpp"

#include <array>
#include <cmath>
#include <map>

#include "hough6d/core/errors.hpp"

namespace hough6d {

namespace {

struct IcoMesh {
    std::vector<Vec3d> vertices;
    std::vector<std::array<int, 3>> faces;
};

IcoMesh baseIcosahedron() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    IcoMesh mesh;
    const double verts[12][3] = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                                 {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                                 {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    for (const auto& v : verts) mesh.vertices.push_back(Vec3d(v[0], v[1], v[2]).normalized());
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    return mesh;
}

IcoMesh subdivideOnce(const IcoMesh& in) {
    IcoMesh out;
    out.vertices = in.vertices;
    std::map<std::pair<int, int>, int> midpointCache;
    auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpointCache.find(key);
        if (it != midpointCache.end()) return it->second;
        const int idx = static_cast<int>(out.vertices.size());
        out.vertices.push_back((in.vertices[a] + in.vertices[b]).normalized());
        midpointCache.emplace(key, idx);
        return idx;
    };
    for (const auto& f : in.faces) {
        const int ab = midpoint(f[0], f[1]);
        const int bc = midpoint(f[1], f[2]);
        const int ca = midpoint(f[2], f[0]);
        out.faces.push_back({f[0], ab, ca});
        out.faces.push_back({f[1], bc, ab});
        out.faces.push_back({f[2], ca, bc});
        out.faces.push_back({ab, bc, ca});
    }
    return out;
}

}  // namespace

ViewSphere subdivideIcosahedron(int level, double radius) {
    if (level < 0 || level > kMaxSubdivisionLevel) throw LevelTooDeep();
    IcoMesh mesh = baseIcosahedron();
    for (int i = 0; i < level; ++i) mesh = subdivideOnce(mesh);
    ViewSphere sphere;
    sphere.radius = radius;
    sphere.subdivisionLevel = level;
    sphere.vertices = std::move(mesh.vertices);
    return sphere;
}

Pose6D viewPose(const Vec3d& direction, double radiusMm, double inplaneRad) {
    const Vec3d dir = direction.normalized();
    const Vec3d forward = -dir;  // camera +z, toward the object
    Vec3d upWorld(0, 0, 1);
    if (std::abs(forward.dot(upWorld)) > 0.99) upWorld = Vec3d(1, 0, 0);
    const Vec3d right = forward.cross(upWorld).normalized();
    const Vec3d down = forward.cross(right).normalized();
    Mat3d cameraFromWorld;
    cameraFromWorld.row(0) = right;
    cameraFromWorld.row(1) = down;
    cameraFromWorld.row(2) = forward;
    Pose6D pose(cameraFromWorld, Vec3d(0, 0, radiusMm));
    if (inplaneRad != 0.0)
        pose = Pose6D::fromEuler(0, 0, inplaneRad, Vec3d::Zero()) * pose;
    return pose;
}

std::vector<Pose6D> trainingViewPoses(const ViewSphere& sphere,
                                      const std::vector<double>& inplaneRad) {
    std::vector<Pose6D> poses;
    poses.reserve(sphere.vertices.size() * inplaneRad.size());
    for (const auto& v : sphere.vertices)
        for (double a : inplaneRad) poses.push_back(viewPose(v, sphere.radius, a));
    return poses;
}

}  // namespace hough6d
