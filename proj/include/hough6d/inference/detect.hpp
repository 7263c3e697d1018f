#pragma once

#include <vector>

#include "hough6d/forest/forest.hpp"

namespace hough6d {

struct InferConfig {
    int patchStride = 4;            // probe grid step, pixels
    int topN = 10;                  // hypotheses per iteration
    int iterations = 10;            // leaf-update rounds; 0 = single shot
    int bagSize = 0;                // trees per round; 0 = ceil(|F|/2)
    double validThreshold = 0;      // absolute; 0 = relative auto threshold
    double validFraction = 0.3;     // auto threshold = fraction * best initial score
    double nmsRadiusPx = 20;
    double translationBandwidthMm = 0;  // 0 = 0.1 * object diameter
    double rotationBandwidthDeg = 15;
    uint64_t seed = 7;
};

struct Hypothesis {
    Pose6D pose;
    double score = 0;
    std::vector<uint32_t> supporters;  // indices into the round's vote list
    bool valid = false;
};

/// Mutable per-frame copy of the latent leaf state. The forest itself
/// stays immutable; frames processed in parallel each own one of these.
struct LeafState {
    std::vector<std::vector<double>> pFg;           // [tree][node]
    std::vector<std::vector<uint64_t>> tallyFg;     // accumulated diagnostics
    std::vector<std::vector<uint64_t>> tallyTotal;

    static LeafState fresh(const ForestModel& model);
    void resetAllForeground();
};

struct RoutedPixel {
    LeafRef leaf;
    Vec2i pixel;
};

struct VoteRound {
    std::vector<PixelVote> votes;
    std::vector<Vec2i> votePixels;  // accumulator cell per vote
    std::vector<RoutedPixel> routed;
    ImageF accumulator;
    double castWeight = 0;       // total weight of cast votes
    double discardedWeight = 0;  // out-of-frame or non-projectable votes
};

/// Routes a jittered patch grid through the tree subset and accumulates
/// vote weights in the 2D image-space accumulator.
VoteRound castVotes(const SceneFeatureMap& scene, const ForestModel& model,
                    const LeafState& state, const std::vector<int>& bagTrees,
                    const InferConfig& cfg, const Vec2i& jitter);

/// Smoothed copy of the accumulator used for peak reading. The raw
/// accumulator keeps exact vote mass; peaks are located on this.
ImageF peakHeat(const ImageF& accumulator);

/// Fraction of the model's surface sample that the observed depth does
/// not see through under the pose (observed >= predicted - tol).
/// Flipped or misrotated poses predict structure protruding in front of
/// the measured surface and score low.
double depthConsistency(const Pose6D& pose, const SceneFeatureMap& scene,
                        const std::vector<Vec3d>& objectPoints, double tolMm = 30.0);

/// 3-stage localization: 2D accumulator peaks, 3D translation mean
/// shift, then rotation mode selection over the supporters (candidate
/// rotation clusters ranked by depth consistency), followed by a
/// translation polish over the rotation-consistent votes. Hypotheses
/// are sorted by score; validity is score > validThreshold.
std::vector<Hypothesis> localize(const VoteRound& round, const SceneFeatureMap& scene,
                                 const ForestModel& model, const InferConfig& cfg,
                                 double validThreshold);

struct ForegroundMask {
    MaskU8 binary;       // Eq-style indicator at sampled pixels, rasterized to grid cells
    ImageF probability;  // diagnostic: supporting weight per pixel
};

/// Consensus backprojection: pixels of supporting patches within one
/// object diameter of a valid hypothesis center become foreground.
ForegroundMask backprojectMask(const std::vector<Hypothesis>& hypotheses, const VoteRound& round,
                               double objectDiameter, int width, int height, int stride);

/// Leaf update: the foreground fraction of the pixels that reached each
/// touched leaf this round. Untouched leaves keep their value.
void updateLeaves(LeafState& state, const std::vector<RoutedPixel>& routed,
                  const MaskU8& foreground);

struct DetectionResult {
    std::vector<Hypothesis> hypotheses;  // final round
    ForegroundMask mask;
    MaskU8 segmentation;      // union over valid hypotheses of bbox ∩ mask
    ImageF accumulator;       // final round
    ImageF accumulatorInitial;
    double validThreshold = 0;
    bool diverged = false;
    int iterationsRun = 0;
};

/// Full detection: an initial full-forest pass, then `iterations`
/// bagged vote/update rounds, with a divergence guard returning the
/// initial result if all touched leaves collapse to zero.
DetectionResult detect(const RgbdFrame& frame, const ForestModel& model, const InferConfig& cfg);

/// Projected axis-aligned bounding box of the object under a pose.
void projectedBoundingBox(const ForestModel& model, const Pose6D& pose,
                          const CameraIntrinsics& intr, int& x0, int& y0, int& x1, int& y1);

}  // namespace hough6d
