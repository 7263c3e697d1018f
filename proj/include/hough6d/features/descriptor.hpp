#pragma once

#include <cstdint>
#include <vector>

#include "hough6d/core/types.hpp"

namespace hough6d {

/// Feature modalities: color gradient orientation on object contours,
/// surface normal orientation on the object body.
enum class Modality : uint8_t { Gradient = 0, Normal = 1 };

inline constexpr int kOrientationBins = 8;

/// Knobs of the quantized RGB-D patch descriptor. Stored with every
/// trained model so that templates stay portable.
struct DescriptorParams {
    double gradientThreshold = 120.0;  // raw 3x3 Sobel magnitude
    double normalSmoothing = 2.0;      // central-difference step, pixels
    int featureBudget = 20;            // max features per patch
    double canonicalDepthMm = 1000.0;  // depth at which offsets are stored
    double depthToleranceMm = 50.0;    // z-check gate

    bool operator==(const DescriptorParams&) const = default;
};

/// Cone axes partitioning the view-facing hemisphere: one camera-facing
/// cone plus seven tilted ones at equal azimuth steps.
const std::array<Vec3d, kOrientationBins>& normalConeAxes();

/// Bin-pair response for two gradient bins: cosine of the bin-center
/// angle difference, clamped to zero beyond two bins.
double gradientBinResponse(int a, int b);

/// Bin-pair response for two normal bins: cosine between cone axes,
/// clamped at zero.
double normalBinResponse(int a, int b);

/// Response of a template bin against a spread scene byte: max response
/// over the set bits. Looked up from a precomputed table.
double spreadResponse(Modality m, int templateBin, uint8_t sceneByte);

/// Per-pixel quantized orientations of one frame, plus the spread
/// (3x3 OR) masks used by the similarity kernel. Owns a copy of the
/// depth plane so it can be shared across threads with no lifetime ties.
struct SceneFeatureMap {
    ImageU8 gradientBits;    // single-bit byte or 0
    ImageU8 normalBits;      // single-bit byte or 0
    ImageU8 gradientSpread;  // OR of the 3x3 neighborhood
    ImageU8 normalSpread;
    ImageU16 depth;
    CameraIntrinsics intrinsics;

    int width() const { return static_cast<int>(depth.cols()); }
    int height() const { return static_cast<int>(depth.rows()); }
    bool validDepthAt(int u, int v) const {
        return intrinsics.inFrame(u, v) && depthValid(depth(v, u));
    }
};

/// Quantizes gradient and normal orientations of a frame and spreads
/// them into the 3x3 neighborhood masks.
SceneFeatureMap extractOrientations(const RgbdFrame& frame, double gradientThreshold,
                                    double normalSmoothing);

struct PatchFeature {
    Modality modality = Modality::Gradient;
    uint8_t bin = 0;       // [0, 8)
    Vec2d offset{0, 0};    // pixels at canonical depth
    double depthDelta = 0; // D(center) - D(feature), mm
};

/// A patch template: quantized features at canonical-depth offsets plus
/// the 6D vote of the patch it was built from.
struct PatchTemplate {
    std::vector<PatchFeature> features;
    double centerDepth = 0;  // mm
    Vec3d voteOffset{0, 0, 0};
    Quatd voteRotation{1, 0, 0, 0};
    int32_t sourceViewId = -1;
    Vec2i centerPixel{0, 0};

    int size() const { return static_cast<int>(features.size()); }
};

inline constexpr int kMinTemplateFeatures = 5;
inline constexpr int kMaxTemplateFeatures = 100;

/// Extracts a template from a patch of a training view. Gradient
/// features come from the contour mask, normal features from the body
/// mask; features are spread evenly by farthest-point selection.
/// Offsets are normalized to the canonical depth.
PatchTemplate buildTemplate(const SceneFeatureMap& features, const MaskU8& bodyMask,
                            const MaskU8& contourMask, const Vec2i& patchCenter, int patchSizePx,
                            const Vec3d& objectCenterMm, const Pose6D& pose,
                            const DescriptorParams& params);

/// Depth-rescaled template response at one scene location, in
/// [0, |features|]. Each feature contributes its spread-mask response
/// gated by the relative-depth check; features probing out-of-bounds or
/// invalid pixels contribute zero.
double similarity(const SceneFeatureMap& scene, const Vec2i& at, const PatchTemplate& tmpl,
                  double depthToleranceMm, double canonicalDepthMm);

}  // namespace hough6d
