#pragma once

#include <vector>

#include "hough6d/synth/shapes.hpp"

namespace hough6d {

/// One rendered training or test view of a single object on an empty
/// (far-field) background.
struct RenderedView {
    RgbdFrame frame;
    ImageF depthExact;   // analytic depth before 16-bit quantization, mm
    MaskU8 bodyMask;     // 1 on object pixels
    MaskU8 contourMask;  // inner boundary of the body mask
    Pose6D pose;         // object pose in camera frame
    int viewId = -1;
};

/// Ray-casts the shape under the given object-in-camera pose. Throws
/// ObjectOutOfView when no pixel is covered.
RenderedView renderView(const ParametricShape& shape, const Pose6D& objectPoseInCamera,
                        const CameraIntrinsics& intr);

/// Inner 8-connected boundary: body minus its 3x3 erosion.
MaskU8 innerBoundary(const MaskU8& body);

/// Chebyshev erosion: pixels whose full (2r+1)^2 neighborhood is set.
MaskU8 erodeMask(const MaskU8& mask, int radius);

/// One placed object instance in a composed scene.
struct ScenePlacement {
    ParametricShape shape;
    Pose6D pose;
};

/// Full description of a synthetic test scene. Serializes losslessly;
/// identical specs render identical frames.
struct SceneSpec {
    std::vector<ScenePlacement> targets;
    std::vector<ScenePlacement> clutter;
    std::vector<ScenePlacement> occluders;
    double backgroundDepthMm = 0;  // 0 = far field (invalid depth)
    Vec3d backgroundAlbedo{90, 90, 95};
    double noiseSigmaMm = 2.0;
    double invalidFraction = 0.01;
    uint64_t seed = 0;
};

struct ComposedScene {
    RgbdFrame frame;
    std::vector<Pose6D> targetPoses;
    std::vector<double> visibility;    // visible / unoccluded pixels, per target
    std::vector<MaskU8> visibleMasks;  // per target, after occlusion
};

/// Z-buffered composition of targets, clutter and occluders over the
/// background, with depth noise and dropout applied last.
ComposedScene composeScene(const SceneSpec& spec, const CameraIntrinsics& intr);

std::string writeSceneSpec(const SceneSpec& spec);
SceneSpec parseSceneSpec(const std::string& text);
void saveSceneSpec(const SceneSpec& spec, const std::string& path);
SceneSpec loadSceneSpec(const std::string& path);

/// Shape text block (shared by scene specs and archive object files).
void writeShapeBlock(std::ostream& os, const ParametricShape& shape);
ParametricShape readShapeBlock(std::istream& is);

}  // namespace hough6d
