#pragma once

#include "hough6d/synth/render.hpp"
#include "hough6d/synth/view_sphere.hpp"

namespace hough6d {

/// Parameters of a generated family of test scenes. One SceneSetSpec
/// deterministically yields `sceneCount` SceneSpecs.
struct SceneSetSpec {
    ParametricShape target;
    bool targetSymmetric = false;
    int targetInstances = 1;
    int sceneCount = 50;
    double zMinMm = 800;
    double zMaxMm = 1400;
    double lateralFraction = 0.55;  // of the in-frame placement range
    double inplaneMaxDeg = 55;
    int clutterMin = 0;
    int clutterMax = 0;
    bool occluded = false;
    double visibilityMin = 0.4;  // occlusion target band
    double visibilityMax = 0.7;
    double backgroundDepthMm = 2600;
    double noiseSigmaMm = 2.0;
    double invalidFraction = 0.01;
    uint64_t seed = 0;
};

/// Deterministic scene for (set.seed, index). Occluded sets tune the
/// occluder position by bisection until the first target's visibility
/// falls inside the requested band.
SceneSpec generateScene(const SceneSetSpec& set, const CameraIntrinsics& intr, int index);

/// Training view sampling parameters (icosahedron vertices crossed with
/// in-plane rotations at a single radius).
struct ViewSetSpec {
    ParametricShape target;
    bool targetSymmetric = false;
    double radiusMm = 1000;
    int subdivisionLevel = 2;
    std::vector<double> inplaneDeg{-60, -30, 0, 30, 60};
};

std::vector<Pose6D> viewSetPoses(const ViewSetSpec& spec);

/// Render-spec file: either a `view_set` or a `scene_set` block plus
/// camera intrinsics. Used by the render subcommand.
struct RenderSpec {
    enum class Mode { ViewSet, SceneSet } mode = Mode::ViewSet;
    ViewSetSpec views;
    SceneSetSpec scenes;
    CameraIntrinsics intrinsics;
};

RenderSpec loadRenderSpec(const std::string& path);
void saveRenderSpec(const RenderSpec& spec, const std::string& path);

CameraIntrinsics defaultIntrinsics();

}  // namespace hough6d
