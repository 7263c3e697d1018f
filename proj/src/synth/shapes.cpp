#include "hough6d/synth/shapes.hpp"

#include <algorithm>
#include <cmath>

namespace hough6d {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::optional<RayHit> intersectSphere(double radius, const Vec3d& o, const Vec3d& d, double tMin) {
    const double a = d.squaredNorm();
    const double b = 2.0 * o.dot(d);
    const double c = o.squaredNorm() - radius * radius;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t = (-b - s) / (2 * a);
    if (t < tMin) t = (-b + s) / (2 * a);
    if (t < tMin) return std::nullopt;
    RayHit hit;
    hit.t = t;
    hit.normal = (o + t * d).normalized();
    return hit;
}

std::optional<RayHit> intersectBox(const Vec3d& dims, const Vec3d& o, const Vec3d& d,
                                   double tMin) {
    const Vec3d half = dims / 2.0;
    double tNear = -std::numeric_limits<double>::infinity();
    double tFar = std::numeric_limits<double>::infinity();
    int nearAxis = -1, farAxis = -1;
    double nearSign = 1, farSign = 1;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (std::abs(o[i]) > half[i]) return std::nullopt;
            continue;
        }
        double t0 = (-half[i] - o[i]) / d[i];
        double t1 = (half[i] - o[i]) / d[i];
        double sign0 = -1, sign1 = 1;
        if (t0 > t1) {
            std::swap(t0, t1);
            std::swap(sign0, sign1);
        }
        if (t0 > tNear) {
            tNear = t0;
            nearAxis = i;
            nearSign = sign0;
        }
        if (t1 < tFar) {
            tFar = t1;
            farAxis = i;
            farSign = sign1;
        }
    }
    if (tNear > tFar || tFar < tMin) return std::nullopt;
    RayHit hit;
    if (tNear >= tMin) {
        hit.t = tNear;
        hit.normal = Vec3d::Zero();
        hit.normal[nearAxis] = nearSign;
    } else {
        hit.t = tFar;
        hit.normal = Vec3d::Zero();
        hit.normal[farAxis] = farSign;
    }
    return hit;
}

std::optional<RayHit> intersectCylinder(double radius, double height, const Vec3d& o,
                                        const Vec3d& d, double tMin) {
    const double halfH = height / 2.0;
    double bestT = std::numeric_limits<double>::infinity();
    Vec3d bestN;

    // Lateral surface.
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-15) {
        const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
        const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
        const double disc = b * b - 4 * a * c;
        if (disc >= 0) {
            const double s = std::sqrt(disc);
            for (double t : {(-b - s) / (2 * a), (-b + s) / (2 * a)}) {
                if (t < tMin || t >= bestT) continue;
                const double z = o.z() + t * d.z();
                if (std::abs(z) > halfH) continue;
                bestT = t;
                const Vec3d p = o + t * d;
                bestN = Vec3d(p.x(), p.y(), 0).normalized();
            }
        }
    }
    // Caps.
    if (std::abs(d.z()) > 1e-15) {
        for (double zCap : {-halfH, halfH}) {
            const double t = (zCap - o.z()) / d.z();
            if (t < tMin || t >= bestT) continue;
            const Vec3d p = o + t * d;
            if (p.x() * p.x() + p.y() * p.y() > radius * radius) continue;
            bestT = t;
            bestN = Vec3d(0, 0, zCap > 0 ? 1 : -1);
        }
    }
    if (!std::isfinite(bestT)) return std::nullopt;
    RayHit hit;
    hit.t = bestT;
    hit.normal = bestN;
    return hit;
}

double primitiveArea(const Primitive& p) {
    switch (p.kind) {
        case PrimitiveKind::Box:
            return 2.0 * (p.dims.x() * p.dims.y() + p.dims.y() * p.dims.z() +
                          p.dims.z() * p.dims.x());
        case PrimitiveKind::Cylinder:
            return 2.0 * kPi * p.dims.x() * p.dims.y() + 2.0 * kPi * p.dims.x() * p.dims.x();
        case PrimitiveKind::Sphere:
            return 4.0 * kPi * p.dims.x() * p.dims.x();
    }
    return 0;
}

double primitiveBoundingRadius(const Primitive& p) {
    switch (p.kind) {
        case PrimitiveKind::Box:
            return (p.dims / 2.0).norm();
        case PrimitiveKind::Cylinder:
            return std::hypot(p.dims.x(), p.dims.y() / 2.0);
        case PrimitiveKind::Sphere:
            return p.dims.x();
    }
    return 0;
}

void samplePrimitive(const Primitive& prim, int count, std::vector<Vec3d>& out) {
    count = std::max(count, 8);
    switch (prim.kind) {
        case PrimitiveKind::Sphere: {
            // Fibonacci spiral on the sphere.
            const double r = prim.dims.x();
            const double golden = kPi * (3.0 - std::sqrt(5.0));
            for (int i = 0; i < count; ++i) {
                const double z = 1.0 - 2.0 * (i + 0.5) / count;
                const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                const double phi = golden * i;
                out.push_back(prim.localPose.apply(
                    Vec3d(r * rho * std::cos(phi), r * rho * std::sin(phi), r * z)));
            }
            break;
        }
        case PrimitiveKind::Box: {
            const Vec3d h = prim.dims / 2.0;
            const double faceAreas[3] = {prim.dims.y() * prim.dims.z(),
                                         prim.dims.x() * prim.dims.z(),
                                         prim.dims.x() * prim.dims.y()};
            const double total = 2.0 * (faceAreas[0] + faceAreas[1] + faceAreas[2]);
            for (int axis = 0; axis < 3; ++axis) {
                const int perFace =
                    std::max(4, static_cast<int>(std::lround(count * faceAreas[axis] / total)));
                const int n = std::max(2, static_cast<int>(std::ceil(std::sqrt(perFace))));
                const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
                for (double sign : {-1.0, 1.0}) {
                    for (int i = 0; i < n; ++i) {
                        for (int j = 0; j < n; ++j) {
                            Vec3d p;
                            p[axis] = sign * h[axis];
                            p[a1] = -h[a1] + prim.dims[a1] * (i + 0.5) / n;
                            p[a2] = -h[a2] + prim.dims[a2] * (j + 0.5) / n;
                            out.push_back(prim.localPose.apply(p));
                        }
                    }
                }
            }
            break;
        }
        case PrimitiveKind::Cylinder: {
            const double r = prim.dims.x(), h = prim.dims.y();
            const double sideArea = 2.0 * kPi * r * h;
            const double capArea = kPi * r * r;
            const double total = sideArea + 2 * capArea;
            const int sideCount = std::max(8, static_cast<int>(std::lround(count * sideArea / total)));
            const int rings = std::max(2, static_cast<int>(std::lround(std::sqrt(sideCount * h / (2 * kPi * r)))));
            const int around = std::max(6, sideCount / rings);
            for (int i = 0; i < rings; ++i) {
                const double z = -h / 2 + h * (i + 0.5) / rings;
                for (int j = 0; j < around; ++j) {
                    const double phi = 2 * kPi * j / around;
                    out.push_back(
                        prim.localPose.apply(Vec3d(r * std::cos(phi), r * std::sin(phi), z)));
                }
            }
            const int capCount = std::max(4, static_cast<int>(std::lround(count * capArea / total)));
            const int capRings = std::max(1, static_cast<int>(std::lround(std::sqrt(capCount / kPi))));
            for (double sign : {-1.0, 1.0}) {
                for (int i = 0; i < capRings; ++i) {
                    const double rr = r * (i + 0.5) / capRings;
                    const int around2 = std::max(4, static_cast<int>(std::lround(2 * kPi * (i + 0.5))));
                    for (int j = 0; j < around2; ++j) {
                        const double phi = 2 * kPi * j / around2;
                        out.push_back(prim.localPose.apply(
                            Vec3d(rr * std::cos(phi), rr * std::sin(phi), sign * h / 2)));
                    }
                }
            }
            break;
        }
    }
}

}  // namespace

ParametricShape ParametricShape::box(std::string id, const Vec3d& dims, const Vec3d& albedo) {
    ParametricShape s;
    s.id = std::move(id);
    s.parts.push_back({PrimitiveKind::Box, dims, albedo, Pose6D()});
    return s;
}

ParametricShape ParametricShape::cylinder(std::string id, double radius, double height,
                                          const Vec3d& albedo) {
    ParametricShape s;
    s.id = std::move(id);
    s.parts.push_back({PrimitiveKind::Cylinder, Vec3d(radius, height, 0), albedo, Pose6D()});
    return s;
}

ParametricShape ParametricShape::sphere(std::string id, double radius, const Vec3d& albedo) {
    ParametricShape s;
    s.id = std::move(id);
    s.parts.push_back({PrimitiveKind::Sphere, Vec3d(radius, 0, 0), albedo, Pose6D()});
    return s;
}

double ParametricShape::boundingRadius() const {
    double r = 0;
    for (const auto& p : parts)
        r = std::max(r, p.localPose.translation().norm() + primitiveBoundingRadius(p));
    return r;
}

std::optional<RayHit> intersectShape(const ParametricShape& shape, const Vec3d& origin,
                                     const Vec3d& dir, double tMin) {
    std::optional<RayHit> best;
    for (const auto& part : shape.parts) {
        const Pose6D inv = part.localPose.inverse();
        const Vec3d o = inv.apply(origin);
        const Vec3d d = inv.rotation() * dir;
        std::optional<RayHit> hit;
        switch (part.kind) {
            case PrimitiveKind::Box:
                hit = intersectBox(part.dims, o, d, tMin);
                break;
            case PrimitiveKind::Cylinder:
                hit = intersectCylinder(part.dims.x(), part.dims.y(), o, d, tMin);
                break;
            case PrimitiveKind::Sphere:
                hit = intersectSphere(part.dims.x(), o, d, tMin);
                break;
        }
        if (!hit) continue;
        if (!best || hit->t < best->t) {
            best = hit;
            best->normal = part.localPose.rotation() * hit->normal;
            best->albedo = part.albedo;
        }
    }
    return best;
}

std::vector<Vec3d> sampleSurface(const ParametricShape& shape, int targetCount) {
    std::vector<Vec3d> points;
    double totalArea = 0;
    for (const auto& p : shape.parts) totalArea += primitiveArea(p);
    for (const auto& p : shape.parts) {
        const int n = std::max(
            8, static_cast<int>(std::lround(targetCount * primitiveArea(p) / totalArea)));
        samplePrimitive(p, n, points);
    }
    return points;
}

ObjectModel makeObjectModel(const ParametricShape& shape, int targetCount, bool symmetric) {
    return ObjectModel::fromVertices(shape.id, sampleSurface(shape, targetCount), symmetric);
}

void shapeBounds(const ParametricShape& shape, Vec3d& minCorner, Vec3d& maxCorner) {
    minCorner = Vec3d::Constant(std::numeric_limits<double>::infinity());
    maxCorner = -minCorner;
    for (const auto& p : sampleSurface(shape, 600)) {
        minCorner = minCorner.cwiseMin(p);
        maxCorner = maxCorner.cwiseMax(p);
    }
}

}  // namespace hough6d
