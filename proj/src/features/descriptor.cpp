#include "hough6d/features/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hough6d {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gradient response by circular bin distance. Bins are 22.5 degrees
// apart; responses beyond two bins are clamped to zero.
const double kGradientDistanceResponse[5] = {1.0, std::cos(kPi / 8.0), std::cos(kPi / 4.0), 0.0,
                                             0.0};

struct ResponseTables {
    // [modality][template bin][scene byte]
    double lut[2][kOrientationBins][256];

    ResponseTables() {
        for (int a = 0; a < kOrientationBins; ++a) {
            for (int mask = 0; mask < 256; ++mask) {
                double gGrad = 0, gNorm = 0;
                for (int b = 0; b < kOrientationBins; ++b) {
                    if (!(mask & (1 << b))) continue;
                    gGrad = std::max(gGrad, gradientBinResponse(a, b));
                    gNorm = std::max(gNorm, normalBinResponse(a, b));
                }
                lut[0][a][mask] = gGrad;
                lut[1][a][mask] = gNorm;
            }
        }
    }
};

const ResponseTables& responseTables() {
    static const ResponseTables tables;
    return tables;
}

}  // namespace

const std::array<Vec3d, kOrientationBins>& normalConeAxes() {
    static const std::array<Vec3d, kOrientationBins> axes = [] {
        std::array<Vec3d, kOrientationBins> a;
        a[0] = Vec3d(0, 0, -1);
        const double inclination = 50.0 * kPi / 180.0;
        for (int k = 1; k < kOrientationBins; ++k) {
            const double azimuth = 2.0 * kPi * (k - 1) / 7.0;
            a[k] = Vec3d(std::sin(inclination) * std::cos(azimuth),
                         std::sin(inclination) * std::sin(azimuth), -std::cos(inclination));
        }
        return a;
    }();
    return axes;
}

double gradientBinResponse(int a, int b) {
    int d = std::abs(a - b);
    d = std::min(d, kOrientationBins - d);
    return kGradientDistanceResponse[d];
}

double normalBinResponse(int a, int b) {
    const auto& axes = normalConeAxes();
    const Vec3d& u = axes[a];
    const Vec3d& v = axes[b];
    return std::max(0.0, u.x() * v.x() + u.y() * v.y() + u.z() * v.z());
}

double spreadResponse(Modality m, int templateBin, uint8_t sceneByte) {
    return responseTables().lut[static_cast<int>(m)][templateBin][sceneByte];
}

namespace {

// Sobel responses of the dominant color channel; direction folded to
// [0, 180) and quantized into 22.5-degree bins.
void quantizeGradients(const RgbdFrame& frame, double threshold, ImageU8& out) {
    const int h = frame.height(), w = frame.width();
    out = ImageU8::Zero(h, w);
    const double thresholdSq = threshold * threshold;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            double bestMag = 0, bestGx = 0, bestGy = 0;
            for (const auto& plane : frame.rgb) {
                const double gx = (plane(y - 1, x + 1) + 2.0 * plane(y, x + 1) + plane(y + 1, x + 1)) -
                                  (plane(y - 1, x - 1) + 2.0 * plane(y, x - 1) + plane(y + 1, x - 1));
                const double gy = (plane(y + 1, x - 1) + 2.0 * plane(y + 1, x) + plane(y + 1, x + 1)) -
                                  (plane(y - 1, x - 1) + 2.0 * plane(y - 1, x) + plane(y - 1, x + 1));
                const double mag = gx * gx + gy * gy;
                if (mag > bestMag) {
                    bestMag = mag;
                    bestGx = gx;
                    bestGy = gy;
                }
            }
            if (bestMag <= thresholdSq) continue;
            double angle = std::atan2(bestGy, bestGx);
            if (angle < 0) angle += kPi;
            if (angle >= kPi) angle -= kPi;
            int bin = static_cast<int>(angle * (kOrientationBins / kPi));
            bin = std::clamp(bin, 0, kOrientationBins - 1);
            out(y, x) = static_cast<uint8_t>(1u << bin);
        }
    }
}

// Surface normals from central differences of backprojected points,
// oriented toward the camera and assigned to the nearest cone axis.
void quantizeNormals(const RgbdFrame& frame, int step, ImageU8& out) {
    const int h = frame.height(), w = frame.width();
    const auto& intr = frame.intrinsics;
    out = ImageU8::Zero(h, w);
    const auto& axes = normalConeAxes();
    for (int y = step; y < h - step; ++y) {
        for (int x = step; x < w - step; ++x) {
            const uint16_t dc = frame.depth(y, x);
            const uint16_t dl = frame.depth(y, x - step), dr = frame.depth(y, x + step);
            const uint16_t du = frame.depth(y - step, x), dd = frame.depth(y + step, x);
            if (!depthValid(dc) || !depthValid(dl) || !depthValid(dr) || !depthValid(du) ||
                !depthValid(dd))
                continue;
            const Vec3d px = backproject(x + step, y, dr, intr) - backproject(x - step, y, dl, intr);
            const Vec3d py = backproject(x, y + step, dd, intr) - backproject(x, y - step, du, intr);
            Vec3d n = px.cross(py);
            const double norm = n.norm();
            if (norm < 1e-12) continue;
            n /= norm;
            if (n.z() > 0) n = -n;
            int best = 0;
            double bestDot = -2;
            for (int k = 0; k < kOrientationBins; ++k) {
                const double d = n.dot(axes[k]);
                if (d > bestDot) {
                    bestDot = d;
                    best = k;
                }
            }
            out(y, x) = static_cast<uint8_t>(1u << best);
        }
    }
}

ImageU8 spread3x3(const ImageU8& bits) {
    const int h = static_cast<int>(bits.rows()), w = static_cast<int>(bits.cols());
    ImageU8 out = ImageU8::Zero(h, w);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
            uint8_t acc = 0;
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) acc |= bits(yy, xx);
            out(y, x) = acc;
        }
    }
    return out;
}

}  // namespace

SceneFeatureMap extractOrientations(const RgbdFrame& frame, double gradientThreshold,
                                    double normalSmoothing) {
    if (frame.empty()) throw EmptyFrame();
    SceneFeatureMap map;
    map.intrinsics = frame.intrinsics;
    map.depth = frame.depth;
    quantizeGradients(frame, gradientThreshold, map.gradientBits);
    quantizeNormals(frame, std::max(1, static_cast<int>(std::lround(normalSmoothing))),
                    map.normalBits);
    map.gradientSpread = spread3x3(map.gradientBits);
    map.normalSpread = spread3x3(map.normalBits);
    return map;
}

namespace {

struct Candidate {
    Vec2i pixel;
    uint8_t bin;
};

// Greedy farthest-point selection, seeded at the candidate nearest the
// patch center. Keeps the kept features spatially even.
std::vector<Candidate> selectEven(const std::vector<Candidate>& candidates, size_t budget,
                                  const Vec2i& center) {
    if (candidates.size() <= budget) return candidates;
    std::vector<Candidate> picked;
    picked.reserve(budget);
    std::vector<char> used(candidates.size(), 0);

    size_t seed = 0;
    double bestDist = std::numeric_limits<double>::max();
    for (size_t i = 0; i < candidates.size(); ++i) {
        const double d = (candidates[i].pixel - center).cast<double>().squaredNorm();
        if (d < bestDist) {
            bestDist = d;
            seed = i;
        }
    }
    picked.push_back(candidates[seed]);
    used[seed] = 1;

    std::vector<double> minDist(candidates.size(), std::numeric_limits<double>::max());
    while (picked.size() < budget) {
        size_t best = 0;
        double bestMin = -1;
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            const double d =
                (candidates[i].pixel - picked.back().pixel).cast<double>().squaredNorm();
            minDist[i] = std::min(minDist[i], d);
            if (minDist[i] > bestMin) {
                bestMin = minDist[i];
                best = i;
            }
        }
        picked.push_back(candidates[best]);
        used[best] = 1;
    }
    return picked;
}

uint8_t bitToBin(uint8_t byte) {
    for (int b = 0; b < kOrientationBins; ++b)
        if (byte == (1u << b)) return static_cast<uint8_t>(b);
    return 0;
}

}  // namespace

PatchTemplate buildTemplate(const SceneFeatureMap& features, const MaskU8& bodyMask,
                            const MaskU8& contourMask, const Vec2i& patchCenter, int patchSizePx,
                            const Vec3d& objectCenterMm, const Pose6D& pose,
                            const DescriptorParams& params) {
    const int half = patchSizePx / 2;
    const int w = features.width(), h = features.height();
    if (patchCenter.x() - half < 0 || patchCenter.y() - half < 0 ||
        patchCenter.x() + half >= w || patchCenter.y() + half >= h)
        throw TooFewFeatures("patch not fully inside frame");
    if (!features.validDepthAt(patchCenter.x(), patchCenter.y())) throw InvalidCenterDepth();
    const double centerDepth = features.depth(patchCenter.y(), patchCenter.x());

    std::vector<Candidate> gradCand, normCand;
    for (int y = patchCenter.y() - half; y <= patchCenter.y() + half; ++y) {
        for (int x = patchCenter.x() - half; x <= patchCenter.x() + half; ++x) {
            if (!depthValid(features.depth(y, x))) continue;
            if (contourMask(y, x) && features.gradientBits(y, x))
                gradCand.push_back({{x, y}, bitToBin(features.gradientBits(y, x))});
            if (bodyMask(y, x) && features.normalBits(y, x))
                normCand.push_back({{x, y}, bitToBin(features.normalBits(y, x))});
        }
    }
    if (gradCand.size() + normCand.size() < kMinTemplateFeatures)
        throw TooFewFeatures();

    const size_t budget = std::min<size_t>(params.featureBudget, kMaxTemplateFeatures);
    size_t gradBudget, normBudget;
    if (gradCand.empty() || normCand.empty()) {
        gradBudget = gradCand.empty() ? 0 : budget;
        normBudget = normCand.empty() ? 0 : budget;
    } else {
        gradBudget = budget / 2;
        normBudget = budget - gradBudget;
        // Reassign slack if one modality runs short.
        if (gradCand.size() < gradBudget) {
            normBudget = std::min(normCand.size(), budget - gradCand.size());
            gradBudget = gradCand.size();
        } else if (normCand.size() < normBudget) {
            gradBudget = std::min(gradCand.size(), budget - normCand.size());
            normBudget = normCand.size();
        }
    }

    const auto gradPicked = selectEven(gradCand, gradBudget, patchCenter);
    const auto normPicked = selectEven(normCand, normBudget, patchCenter);

    PatchTemplate tmpl;
    tmpl.centerDepth = centerDepth;
    tmpl.centerPixel = patchCenter;
    tmpl.voteRotation = pose.rotation();
    tmpl.voteOffset =
        objectCenterMm - backproject(patchCenter.x(), patchCenter.y(), centerDepth,
                                     features.intrinsics);
    const double toCanonical = centerDepth / params.canonicalDepthMm;
    auto addFeature = [&](const Candidate& c, Modality m) {
        PatchFeature f;
        f.modality = m;
        f.bin = c.bin;
        f.offset = (c.pixel - patchCenter).cast<double>() * toCanonical;
        f.depthDelta = centerDepth - static_cast<double>(features.depth(c.pixel.y(), c.pixel.x()));
        tmpl.features.push_back(f);
    };
    for (const auto& c : gradPicked) addFeature(c, Modality::Gradient);
    for (const auto& c : normPicked) addFeature(c, Modality::Normal);
    if (tmpl.size() < kMinTemplateFeatures) throw TooFewFeatures();
    return tmpl;
}

double similarity(const SceneFeatureMap& scene, const Vec2i& at, const PatchTemplate& tmpl,
                  double depthToleranceMm, double canonicalDepthMm) {
    const int w = scene.width(), h = scene.height();
    if (!scene.validDepthAt(at.x(), at.y())) throw InvalidCenterDepth();
    const double centerDepth = scene.depth(at.y(), at.x());
    const double toPixels = canonicalDepthMm / centerDepth;
    const auto& tables = responseTables();

    double score = 0;
    for (const auto& f : tmpl.features) {
        const int x = at.x() + static_cast<int>(std::lround(f.offset.x() * toPixels));
        const int y = at.y() + static_cast<int>(std::lround(f.offset.y() * toPixels));
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        const uint8_t byte = (f.modality == Modality::Gradient) ? scene.gradientSpread(y, x)
                                                                : scene.normalSpread(y, x);
        const double g = tables.lut[static_cast<int>(f.modality)][f.bin][byte];
        if (g == 0) continue;
        const uint16_t probeDepth = scene.depth(y, x);
        if (!depthValid(probeDepth)) continue;
        const double zDiff = (centerDepth - static_cast<double>(probeDepth)) - f.depthDelta;
        if (std::abs(zDiff) < depthToleranceMm) score += g;
    }
    return score;
}

}  // namespace hough6d
