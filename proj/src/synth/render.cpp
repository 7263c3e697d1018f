#include "hough6d/synth/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hough6d/core/errors.hpp"

namespace hough6d {

namespace {

// Fixed directional light, camera frame.
const Vec3d kLightDir = Vec3d(0.3, 0.5, 0.8).normalized();
constexpr double kAmbient = 0.35;

Vec3d shade(const Vec3d& albedo, const Vec3d& normalCam) {
    const double diffuse = std::max(0.0, -normalCam.dot(kLightDir));
    return albedo * std::min(1.0, kAmbient + 0.65 * diffuse);
}

struct PixelBounds {
    int x0, y0, x1, y1;
    bool empty() const { return x0 > x1 || y0 > y1; }
};

// Conservative pixel bounds of the shape's bounding sphere.
PixelBounds projectedBounds(const ParametricShape& shape, const Pose6D& pose,
                            const CameraIntrinsics& intr) {
    const double r = shape.boundingRadius();
    const Vec3d c = pose.translation();
    if (c.z() - r <= 1.0) return {0, 0, intr.width - 1, intr.height - 1};
    const double zNear = c.z() - r;
    const double u0 = intr.fx * (c.x() - r) / zNear + intr.cx;
    const double u1 = intr.fx * (c.x() + r) / zNear + intr.cx;
    const double v0 = intr.fy * (c.y() - r) / zNear + intr.cy;
    const double v1 = intr.fy * (c.y() + r) / zNear + intr.cy;
    PixelBounds b;
    b.x0 = std::max(0, static_cast<int>(std::floor(u0)) - 1);
    b.y0 = std::max(0, static_cast<int>(std::floor(v0)) - 1);
    b.x1 = std::min(intr.width - 1, static_cast<int>(std::ceil(u1)) + 1);
    b.y1 = std::min(intr.height - 1, static_cast<int>(std::ceil(v1)) + 1);
    return b;
}

// Casts rays against one placed shape; calls visit(x, y, tDepth, normalCam,
// albedo) for every covered pixel. Ray direction has z = 1 so the hit
// parameter equals camera z-depth in mm.
template <typename Visitor>
void rasterize(const ParametricShape& shape, const Pose6D& pose, const CameraIntrinsics& intr,
               Visitor&& visit) {
    const PixelBounds b = projectedBounds(shape, pose, intr);
    if (b.empty()) return;
    const Pose6D inv = pose.inverse();
    const Vec3d originObj = inv.translation();
    const Mat3d rotToObj = inv.rotationMatrix();
    const Mat3d rotToCam = pose.rotationMatrix();
    for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
            const Vec3d dirCam((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
            const Vec3d dirObj = rotToObj * dirCam;
            const auto hit = intersectShape(shape, originObj, dirObj, 1.0);
            if (!hit) continue;
            visit(x, y, hit->t, (rotToCam * hit->normal).eval(), hit->albedo);
        }
    }
}

uint16_t quantizeDepth(double mm) {
    return static_cast<uint16_t>(std::clamp(std::lround(mm), 1L, 65535L));
}

}  // namespace

MaskU8 erodeMask(const MaskU8& mask, int radius) {
    const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
    MaskU8 out = MaskU8::Zero(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(y, x)) continue;
            bool interior = true;
            for (int dy = -radius; dy <= radius && interior; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w || !mask(yy, xx)) {
                        interior = false;
                        break;
                    }
                }
            }
            if (interior) out(y, x) = 1;
        }
    }
    return out;
}

MaskU8 innerBoundary(const MaskU8& body) {
    const int h = static_cast<int>(body.rows()), w = static_cast<int>(body.cols());
    MaskU8 out = MaskU8::Zero(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!body(y, x)) continue;
            bool interior = true;
            for (int dy = -1; dy <= 1 && interior; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w || !body(yy, xx)) {
                        interior = false;
                        break;
                    }
                }
            }
            if (!interior) out(y, x) = 1;
        }
    }
    return out;
}

RenderedView renderView(const ParametricShape& shape, const Pose6D& objectPoseInCamera,
                        const CameraIntrinsics& intr) {
    RenderedView view;
    view.pose = objectPoseInCamera;
    view.frame = RgbdFrame::blank(intr);
    view.depthExact = ImageF::Zero(intr.height, intr.width);
    view.bodyMask = MaskU8::Zero(intr.height, intr.width);

    int covered = 0;
    rasterize(shape, objectPoseInCamera, intr,
              [&](int x, int y, double t, const Vec3d& normalCam, const Vec3d& albedo) {
                  view.depthExact(y, x) = t;
                  view.frame.depth(y, x) = quantizeDepth(t);
                  const Vec3d color = shade(albedo, normalCam);
                  for (int c = 0; c < 3; ++c)
                      view.frame.rgb[c](y, x) =
                          static_cast<uint8_t>(std::clamp(std::lround(color[c]), 0L, 255L));
                  view.bodyMask(y, x) = 1;
                  ++covered;
              });
    if (covered == 0) throw ObjectOutOfView();
    view.contourMask = innerBoundary(view.bodyMask);
    return view;
}

ComposedScene composeScene(const SceneSpec& spec, const CameraIntrinsics& intr) {
    ComposedScene scene;
    scene.frame = RgbdFrame::blank(intr);
    const int h = intr.height, w = intr.width;

    ImageF zbuf = ImageF::Constant(h, w, std::numeric_limits<double>::infinity());
    Image<int32_t> winner = Image<int32_t>::Constant(h, w, -1);
    std::array<ImageF, 3> rgb;
    for (auto& p : rgb) p = ImageF::Zero(h, w);

    std::vector<const ScenePlacement*> placements;
    for (const auto& t : spec.targets) placements.push_back(&t);
    for (const auto& c : spec.clutter) placements.push_back(&c);
    for (const auto& o : spec.occluders) placements.push_back(&o);

    const int targetCount = static_cast<int>(spec.targets.size());
    std::vector<int> unoccluded(targetCount, 0);

    for (int i = 0; i < static_cast<int>(placements.size()); ++i) {
        rasterize(placements[i]->shape, placements[i]->pose, intr,
                  [&](int x, int y, double t, const Vec3d& normalCam, const Vec3d& albedo) {
                      if (i < targetCount) ++unoccluded[i];
                      if (t >= zbuf(y, x)) return;
                      zbuf(y, x) = t;
                      winner(y, x) = i;
                      const Vec3d color = shade(albedo, normalCam);
                      for (int c = 0; c < 3; ++c) rgb[c](y, x) = color[c];
                  });
    }

    // Background plane (fronto-parallel) or far field.
    const bool hasBackground = spec.backgroundDepthMm > 0;
    const Vec3d bgColor = shade(spec.backgroundAlbedo, Vec3d(0, 0, -1));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (winner(y, x) >= 0) {
                scene.frame.depth(y, x) = quantizeDepth(zbuf(y, x));
                for (int c = 0; c < 3; ++c)
                    scene.frame.rgb[c](y, x) =
                        static_cast<uint8_t>(std::clamp(std::lround(rgb[c](y, x)), 0L, 255L));
            } else if (hasBackground) {
                scene.frame.depth(y, x) = quantizeDepth(spec.backgroundDepthMm);
                for (int c = 0; c < 3; ++c)
                    scene.frame.rgb[c](y, x) =
                        static_cast<uint8_t>(std::clamp(std::lround(bgColor[c]), 0L, 255L));
            }
        }
    }

    scene.targetPoses.reserve(targetCount);
    scene.visibility.resize(targetCount, 0.0);
    scene.visibleMasks.resize(targetCount);
    for (int i = 0; i < targetCount; ++i) {
        scene.targetPoses.push_back(spec.targets[i].pose);
        scene.visibleMasks[i] = MaskU8::Zero(h, w);
        int visible = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (winner(y, x) == i) {
                    scene.visibleMasks[i](y, x) = 1;
                    ++visible;
                }
        scene.visibility[i] = unoccluded[i] > 0 ? double(visible) / unoccluded[i] : 0.0;
    }

    // Sensor noise last: Gaussian depth jitter, then random dropouts.
    std::mt19937_64 rng(spec.seed);
    if (spec.noiseSigmaMm > 0) {
        std::normal_distribution<double> noise(0.0, spec.noiseSigmaMm);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (scene.frame.depth(y, x) != 0)
                    scene.frame.depth(y, x) =
                        quantizeDepth(scene.frame.depth(y, x) + noise(rng));
    }
    if (spec.invalidFraction > 0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (coin(rng) < spec.invalidFraction) scene.frame.depth(y, x) = 0;
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Scene spec text format
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void writePose(std::ostream& os, const Pose6D& p) {
    const Quatd& q = p.rotation();
    os << fmt(q.w()) << ' ' << fmt(q.x()) << ' ' << fmt(q.y()) << ' ' << fmt(q.z());
    for (int i = 0; i < 3; ++i) os << ' ' << fmt(p.translation()[i]);
}

Pose6D readPose(std::istream& is) {
    double w, x, y, z;
    Vec3d t;
    is >> w >> x >> y >> z >> t.x() >> t.y() >> t.z();
    if (!is) throw IoFailure("bad pose in scene spec");
    return Pose6D(Quatd(w, x, y, z), t);
}

}  // namespace

void writeShapeBlock(std::ostream& os, const ParametricShape& s) {
    os << "shape " << (s.id.empty() ? "-" : s.id) << " parts " << s.parts.size() << "\n";
    for (const auto& p : s.parts) {
        os << "part ";
        switch (p.kind) {
            case PrimitiveKind::Box:
                os << "box " << fmt(p.dims.x()) << ' ' << fmt(p.dims.y()) << ' '
                   << fmt(p.dims.z());
                break;
            case PrimitiveKind::Cylinder:
                os << "cylinder " << fmt(p.dims.x()) << ' ' << fmt(p.dims.y());
                break;
            case PrimitiveKind::Sphere:
                os << "sphere " << fmt(p.dims.x());
                break;
        }
        os << " albedo " << fmt(p.albedo.x()) << ' ' << fmt(p.albedo.y()) << ' '
           << fmt(p.albedo.z()) << " pose ";
        writePose(os, p.localPose);
        os << "\n";
    }
}

ParametricShape readShapeBlock(std::istream& is) {
    std::string tok, id, partsTok;
    size_t nParts = 0;
    is >> id >> partsTok >> nParts;
    if (!is || partsTok != "parts") throw IoFailure("bad shape header in scene spec");
    ParametricShape s;
    s.id = (id == "-") ? "" : id;
    for (size_t i = 0; i < nParts; ++i) {
        is >> tok;
        if (tok != "part") throw IoFailure("expected part line");
        std::string kind;
        is >> kind;
        Primitive p;
        if (kind == "box") {
            p.kind = PrimitiveKind::Box;
            is >> p.dims.x() >> p.dims.y() >> p.dims.z();
        } else if (kind == "cylinder") {
            p.kind = PrimitiveKind::Cylinder;
            is >> p.dims.x() >> p.dims.y();
            p.dims.z() = 0;
        } else if (kind == "sphere") {
            p.kind = PrimitiveKind::Sphere;
            is >> p.dims.x();
            p.dims.y() = p.dims.z() = 0;
        } else {
            throw IoFailure("unknown primitive kind: " + kind);
        }
        is >> tok;
        if (tok != "albedo") throw IoFailure("expected albedo");
        is >> p.albedo.x() >> p.albedo.y() >> p.albedo.z();
        is >> tok;
        if (tok != "pose") throw IoFailure("expected pose");
        p.localPose = readPose(is);
        s.parts.push_back(p);
    }
    return s;
}

namespace {

void writePlacements(std::ostream& os, const char* kind,
                     const std::vector<ScenePlacement>& list) {
    for (const auto& pl : list) {
        os << "begin_instance " << kind << "\n";
        writeShapeBlock(os, pl.shape);
        os << "pose ";
        writePose(os, pl.pose);
        os << "\nend_instance\n";
    }
}

}  // namespace

std::string writeSceneSpec(const SceneSpec& spec) {
    std::ostringstream os;
    os << "scene_spec_version 1\n";
    os << "seed " << spec.seed << "\n";
    os << "noise_sigma_mm " << fmt(spec.noiseSigmaMm) << "\n";
    os << "invalid_fraction " << fmt(spec.invalidFraction) << "\n";
    os << "background_depth_mm " << fmt(spec.backgroundDepthMm) << "\n";
    os << "background_albedo " << fmt(spec.backgroundAlbedo.x()) << ' '
       << fmt(spec.backgroundAlbedo.y()) << ' ' << fmt(spec.backgroundAlbedo.z()) << "\n";
    writePlacements(os, "target", spec.targets);
    writePlacements(os, "clutter", spec.clutter);
    writePlacements(os, "occluder", spec.occluders);
    return os.str();
}

SceneSpec parseSceneSpec(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    SceneSpec spec;
    is >> tok;
    if (tok != "scene_spec_version") throw IoFailure("not a scene spec");
    int version = 0;
    is >> version;
    if (version != 1) throw VersionMismatch("scene spec version " + std::to_string(version));
    while (is >> tok) {
        if (tok == "seed")
            is >> spec.seed;
        else if (tok == "noise_sigma_mm")
            is >> spec.noiseSigmaMm;
        else if (tok == "invalid_fraction")
            is >> spec.invalidFraction;
        else if (tok == "background_depth_mm")
            is >> spec.backgroundDepthMm;
        else if (tok == "background_albedo")
            is >> spec.backgroundAlbedo.x() >> spec.backgroundAlbedo.y() >>
                spec.backgroundAlbedo.z();
        else if (tok == "begin_instance") {
            std::string kind;
            is >> kind;
            ScenePlacement pl;
            is >> tok;
            if (tok != "shape") throw IoFailure("expected shape in instance");
            pl.shape = readShapeBlock(is);
            is >> tok;
            if (tok != "pose") throw IoFailure("expected instance pose");
            pl.pose = readPose(is);
            is >> tok;
            if (tok != "end_instance") throw IoFailure("expected end_instance");
            if (kind == "target")
                spec.targets.push_back(std::move(pl));
            else if (kind == "clutter")
                spec.clutter.push_back(std::move(pl));
            else if (kind == "occluder")
                spec.occluders.push_back(std::move(pl));
            else
                throw IoFailure("unknown instance kind: " + kind);
        } else {
            throw IoFailure("unknown scene spec key: " + tok);
        }
    }
    return spec;
}

void saveSceneSpec(const SceneSpec& spec, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoFailure("cannot open " + path);
    os << writeSceneSpec(spec);
    if (!os) throw IoFailure("write failed: " + path);
}

SceneSpec loadSceneSpec(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoFailure("cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parseSceneSpec(buf.str());
}

}  // namespace hough6d
