#include "hough6d/synth/scene_gen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace hough6d {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t mixSeed(uint64_t seed, uint64_t index) {
    uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

Vec3d randomUnit(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec3d v;
    do {
        v = Vec3d(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

Quatd randomRotation(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Quatd q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    if (q.w() < 0) q.coeffs() = -q.coeffs();
    return q;
}

// Placement limits keeping a sphere of the given radius fully in frame.
Vec2d lateralLimits(const CameraIntrinsics& intr, double z, double boundingRadius,
                    double fraction) {
    const double halfW = z * (intr.width / 2.0) / intr.fx;
    const double halfH = z * (intr.height / 2.0) / intr.fy;
    return {std::max(0.0, (halfW - boundingRadius) * fraction),
            std::max(0.0, (halfH - boundingRadius) * fraction)};
}

double firstTargetVisibility(const SceneSpec& spec, const CameraIntrinsics& intr) {
    SceneSpec probe = spec;
    probe.noiseSigmaMm = 0;
    probe.invalidFraction = 0;
    const ComposedScene scene = composeScene(probe, intr);
    return scene.visibility.empty() ? 0.0 : scene.visibility[0];
}

}  // namespace

std::vector<Pose6D> viewSetPoses(const ViewSetSpec& spec) {
    const ViewSphere sphere = subdivideIcosahedron(spec.subdivisionLevel, spec.radiusMm);
    std::vector<double> rad;
    for (double deg : spec.inplaneDeg) rad.push_back(deg * kPi / 180.0);
    return trainingViewPoses(sphere, rad);
}

SceneSpec generateScene(const SceneSetSpec& set, const CameraIntrinsics& intr, int index) {
    std::mt19937_64 rng(mixSeed(set.seed, index));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    SceneSpec spec;
    spec.seed = mixSeed(set.seed, 0x5CE5E5ULL + index);
    spec.noiseSigmaMm = set.noiseSigmaMm;
    spec.invalidFraction = set.invalidFraction;
    spec.backgroundDepthMm = set.backgroundDepthMm;

    const double targetRadius = set.target.boundingRadius();
    const double diameter = 2.0 * targetRadius;

    // Targets: view-sphere orientation plus bounded in-plane roll, kept
    // pairwise separated.
    for (int i = 0; i < set.targetInstances; ++i) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const Vec3d dir = randomUnit(rng);
            const double inplane = (2.0 * uni(rng) - 1.0) * set.inplaneMaxDeg * kPi / 180.0;
            const double z = set.zMinMm + uni(rng) * (set.zMaxMm - set.zMinMm);
            Pose6D pose = viewPose(dir, z, inplane);
            const Vec2d lim = lateralLimits(intr, z, targetRadius, set.lateralFraction);
            pose.translation().x() = (2.0 * uni(rng) - 1.0) * lim.x();
            pose.translation().y() = (2.0 * uni(rng) - 1.0) * lim.y();

            bool separated = true;
            for (const auto& other : spec.targets)
                if ((other.pose.translation() - pose.translation()).norm() < 1.3 * diameter)
                    separated = false;
            if (!separated) continue;
            spec.targets.push_back({set.target, pose});
            break;
        }
    }

    // Clutter: random primitives beside and behind the targets.
    const int clutterCount =
        set.clutterMin +
        (set.clutterMax > set.clutterMin
             ? static_cast<int>(uni(rng) * (set.clutterMax - set.clutterMin + 1))
             : 0);
    for (int i = 0; i < clutterCount && !spec.targets.empty(); ++i) {
        const ScenePlacement& anchor = spec.targets[i % spec.targets.size()];
        Primitive prim;
        const double kindDraw = uni(rng);
        prim.kind = kindDraw < 0.4 ? PrimitiveKind::Box
                    : kindDraw < 0.7 ? PrimitiveKind::Cylinder
                                     : PrimitiveKind::Sphere;
        switch (prim.kind) {
            case PrimitiveKind::Box:
                prim.dims = Vec3d(25 + 65 * uni(rng), 25 + 65 * uni(rng), 25 + 65 * uni(rng));
                break;
            case PrimitiveKind::Cylinder:
                prim.dims = Vec3d(12 + 30 * uni(rng), 40 + 80 * uni(rng), 0);
                break;
            case PrimitiveKind::Sphere:
                prim.dims = Vec3d(15 + 35 * uni(rng), 0, 0);
                break;
        }
        prim.albedo = Vec3d(40 + 190 * uni(rng), 40 + 190 * uni(rng), 40 + 190 * uni(rng));
        ParametricShape shape;
        shape.id = "clutter";
        shape.parts.push_back(prim);
        const double clutterRadius = shape.boundingRadius();

        for (int attempt = 0; attempt < 32; ++attempt) {
            const double angle = 2.0 * kPi * uni(rng);
            const double dist = (1.0 + 0.9 * uni(rng)) * (targetRadius + clutterRadius);
            Vec3d center = anchor.pose.translation();
            center.x() += dist * std::cos(angle);
            center.y() += dist * std::sin(angle);
            center.z() += (uni(rng) * 1.1 - 0.3) * diameter;  // mostly beside/behind
            if (center.z() < 300) continue;
            bool clear = true;
            for (const auto& t : spec.targets)
                if ((t.pose.translation() - center).norm() < targetRadius + clutterRadius)
                    clear = false;
            if (!clear) continue;
            spec.clutter.push_back({shape, Pose6D(randomRotation(rng), center)});
            break;
        }
    }

    if (!set.occluded || spec.targets.empty()) return spec;

    // Occluder: a fronto-parallel slab between camera and the first
    // target; its lateral offset is bisected until the visibility lands
    // inside [visibilityMin, visibilityMax].
    const ScenePlacement& target = spec.targets.front();
    const Vec3d tc = target.pose.translation();
    Primitive slab;
    slab.kind = PrimitiveKind::Box;
    slab.dims = Vec3d(diameter * (0.55 + 0.25 * uni(rng)), diameter * 1.6, 20);
    slab.albedo = Vec3d(50 + 160 * uni(rng), 50 + 160 * uni(rng), 50 + 160 * uni(rng));
    ParametricShape occShape;
    occShape.id = "occluder";
    occShape.parts.push_back(slab);

    const double zOcc = std::max(300.0, tc.z() * 0.62);
    const double scale = zOcc / tc.z();  // occluder plane offsets scale with depth
    const double side = uni(rng) < 0.5 ? -1.0 : 1.0;

    // offset 0: slab centered on the target line of sight (max occlusion);
    // offset 1.2 * diameter: clear of the object.
    double lo = 0.0, hi = 1.2 * diameter;
    double chosen = -1;
    spec.occluders.push_back({occShape, Pose6D()});
    const double visTarget = 0.5 * (set.visibilityMin + set.visibilityMax);
    for (int step = 0; step < 12; ++step) {
        const double mid = 0.5 * (lo + hi);
        Vec3d center(tc.x() * scale + side * mid, tc.y() * scale, zOcc);
        spec.occluders.back().pose = Pose6D(Quatd::Identity(), center);
        const double vis = firstTargetVisibility(spec, intr);
        if (vis >= set.visibilityMin && vis <= set.visibilityMax) {
            chosen = mid;
            break;
        }
        if (vis < visTarget)
            lo = mid;  // too occluded: move the slab out
        else
            hi = mid;
        chosen = mid;
    }
    Vec3d center(tc.x() * scale + side * chosen, tc.y() * scale, zOcc);
    spec.occluders.back().pose = Pose6D(Quatd::Identity(), center);
    return spec;
}

CameraIntrinsics defaultIntrinsics() {
    CameraIntrinsics intr;
    intr.fx = intr.fy = 450.0;
    intr.cx = 240.0;
    intr.cy = 180.0;
    intr.width = 480;
    intr.height = 360;
    return intr;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void writeIntrinsics(std::ostream& os, const CameraIntrinsics& intr) {
    os << "camera " << fmt(intr.fx) << ' ' << fmt(intr.fy) << ' ' << fmt(intr.cx) << ' '
       << fmt(intr.cy) << ' ' << intr.width << ' ' << intr.height << "\n";
}

}  // namespace

RenderSpec loadRenderSpec(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoFailure("cannot open: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    std::istringstream is(buf.str());

    RenderSpec spec;
    spec.intrinsics = defaultIntrinsics();
    std::string tok;
    is >> tok;
    if (tok != "render_spec_version") throw IoFailure("not a render spec: " + path);
    int version = 0;
    is >> version;
    if (version != 1) throw VersionMismatch("render spec version");
    is >> tok;
    if (tok != "mode") throw IoFailure("expected mode");
    std::string mode;
    is >> mode;
    if (mode == "view_set")
        spec.mode = RenderSpec::Mode::ViewSet;
    else if (mode == "scene_set")
        spec.mode = RenderSpec::Mode::SceneSet;
    else
        throw IoFailure("unknown render mode: " + mode);

    while (is >> tok) {
        if (tok == "camera") {
            is >> spec.intrinsics.fx >> spec.intrinsics.fy >> spec.intrinsics.cx >>
                spec.intrinsics.cy >> spec.intrinsics.width >> spec.intrinsics.height;
        } else if (tok == "shape") {
            ParametricShape shape = readShapeBlock(is);
            spec.views.target = shape;
            spec.scenes.target = std::move(shape);
        } else if (tok == "symmetric") {
            int sym;
            is >> sym;
            spec.views.targetSymmetric = spec.scenes.targetSymmetric = sym != 0;
        } else if (tok == "radius_mm") {
            is >> spec.views.radiusMm;
        } else if (tok == "subdivision_level") {
            is >> spec.views.subdivisionLevel;
        } else if (tok == "inplane_deg") {
            size_t n;
            is >> n;
            spec.views.inplaneDeg.assign(n, 0.0);
            for (auto& d : spec.views.inplaneDeg) is >> d;
        } else if (tok == "count") {
            is >> spec.scenes.sceneCount;
        } else if (tok == "seed") {
            is >> spec.scenes.seed;
        } else if (tok == "target_instances") {
            is >> spec.scenes.targetInstances;
        } else if (tok == "z_min") {
            is >> spec.scenes.zMinMm;
        } else if (tok == "z_max") {
            is >> spec.scenes.zMaxMm;
        } else if (tok == "lateral_fraction") {
            is >> spec.scenes.lateralFraction;
        } else if (tok == "inplane_max_deg") {
            is >> spec.scenes.inplaneMaxDeg;
        } else if (tok == "clutter_min") {
            is >> spec.scenes.clutterMin;
        } else if (tok == "clutter_max") {
            is >> spec.scenes.clutterMax;
        } else if (tok == "occluded") {
            int o;
            is >> o;
            spec.scenes.occluded = o != 0;
        } else if (tok == "visibility_min") {
            is >> spec.scenes.visibilityMin;
        } else if (tok == "visibility_max") {
            is >> spec.scenes.visibilityMax;
        } else if (tok == "background_depth_mm") {
            is >> spec.scenes.backgroundDepthMm;
        } else if (tok == "noise_sigma_mm") {
            is >> spec.scenes.noiseSigmaMm;
        } else if (tok == "invalid_fraction") {
            is >> spec.scenes.invalidFraction;
        } else {
            throw IoFailure("unknown render spec key: " + tok);
        }
        if (!is && !is.eof()) throw IoFailure("bad value for key " + tok);
    }
    return spec;
}

void saveRenderSpec(const RenderSpec& spec, const std::string& path) {
    std::ostringstream os;
    os << "render_spec_version 1\n";
    os << "mode " << (spec.mode == RenderSpec::Mode::ViewSet ? "view_set" : "scene_set") << "\n";
    writeIntrinsics(os, spec.intrinsics);
    if (spec.mode == RenderSpec::Mode::ViewSet) {
        const ViewSetSpec& v = spec.views;
        os << "symmetric " << (v.targetSymmetric ? 1 : 0) << "\n";
        os << "radius_mm " << fmt(v.radiusMm) << "\n";
        os << "subdivision_level " << v.subdivisionLevel << "\n";
        os << "inplane_deg " << v.inplaneDeg.size();
        for (double d : v.inplaneDeg) os << ' ' << fmt(d);
        os << "\n";
        writeShapeBlock(os, v.target);
    } else {
        const SceneSetSpec& s = spec.scenes;
        os << "symmetric " << (s.targetSymmetric ? 1 : 0) << "\n";
        os << "count " << s.sceneCount << "\n";
        os << "seed " << s.seed << "\n";
        os << "target_instances " << s.targetInstances << "\n";
        os << "z_min " << fmt(s.zMinMm) << "\n";
        os << "z_max " << fmt(s.zMaxMm) << "\n";
        os << "lateral_fraction " << fmt(s.lateralFraction) << "\n";
        os << "inplane_max_deg " << fmt(s.inplaneMaxDeg) << "\n";
        os << "clutter_min " << s.clutterMin << "\n";
        os << "clutter_max " << s.clutterMax << "\n";
        os << "occluded " << (s.occluded ? 1 : 0) << "\n";
        os << "visibility_min " << fmt(s.visibilityMin) << "\n";
        os << "visibility_max " << fmt(s.visibilityMax) << "\n";
        os << "background_depth_mm " << fmt(s.backgroundDepthMm) << "\n";
        os << "noise_sigma_mm " << fmt(s.noiseSigmaMm) << "\n";
        os << "invalid_fraction " << fmt(s.invalidFraction) << "\n";
        writeShapeBlock(os, s.target);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoFailure("cannot open for write: " + path);
    file << os.str();
    if (!file) throw IoFailure("write failed: " + path);
}

}  // namespace hough6d
