#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hough6d/features/descriptor.hpp"
#include "hough6d/synth/render.hpp"

namespace hough6d {

struct TrainConfig {
    int treeCount = 10;
    double patchSizeFraction = 2.0 / 3.0;  // of the projected bounding box
    int maxDepth = 20;
    int minSamples = 20;
    int candidateTemplates = 20;  // split candidates per node
    int thresholdsPerTemplate = 10;
    double sampleFraction = 0.5;  // per-tree subsample, without replacement
    int patchesPerView = 40;
    uint64_t seed = 1;
};

struct VoteMode {
    Vec3d offset{0, 0, 0};  // patch center -> object center, mm
    Quatd rotation{1, 0, 0, 0};
    uint32_t support = 0;
};

struct Leaf {
    std::vector<uint32_t> patchIndices;
    std::vector<VoteMode> voteModes;
    double supportTotal = 0;  // sum of mode supports
    // Latent class state, mutated only by the inference update phase.
    double pFg = 1.0;
    uint64_t tallyFg = 0;
    uint64_t tallyTotal = 0;
};

struct TreeNode {
    bool isLeaf = false;
    // Split payload.
    PatchTemplate splitTemplate;
    double threshold = 0;
    int32_t left = -1;
    int32_t right = -1;
    // Leaf payload.
    Leaf leaf;
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0
};

/// One training view with everything patch sampling and routing needs.
/// Views are cropped to the object region (principal point adjusted) to
/// keep hundreds of them resident. Feature candidate bands stay clear
/// of the silhouette so templates survive depth rescaling: gradients
/// come from a two-pixel inner contour band, normals from the body
/// eroded past the normal-estimation support.
struct TrainingView {
    SceneFeatureMap features;
    MaskU8 body;        // full object mask (patch centers, bounding box)
    MaskU8 contour;     // two-pixel inner boundary band
    MaskU8 normalBand;  // eroded body for normal features
    Pose6D pose;        // object pose in camera frame
    int viewId = -1;
};

struct TrainStats {
    double balance = 0;       // mean fraction of samples to the smaller child
    int splitNodeCount = 0;
    int leafCount = 0;
    int maxDepthReached = 0;
};

struct ForestModel {
    std::vector<Tree> trees;
    std::string objectId;
    double objectDiameter = 0;
    Vec3d objectBoundsMin{0, 0, 0};  // object-frame AABB, mm
    Vec3d objectBoundsMax{0, 0, 0};
    std::vector<Vec3d> objectPoints;  // sparse surface sample, object frame
    bool objectSymmetric = false;
    DescriptorParams descriptor;
    TrainConfig config;
    TrainStats stats;

    int treeCount() const { return static_cast<int>(trees.size()); }
};

/// Builds the per-view feature maps and masks.
TrainingView makeTrainingView(const RenderedView& view, const DescriptorParams& params);

/// Rebuilds a training view from an archived frame: the object is the
/// only content, so the body mask is the valid-depth region.
TrainingView makeTrainingViewFromFrame(const RgbdFrame& frame, const Pose6D& pose, int viewId,
                                       const DescriptorParams& params);

/// Samples patch templates across all views. Patch side is
/// patchSizeFraction times the larger projected bounding-box side.
std::vector<PatchTemplate> samplePatches(const std::vector<TrainingView>& views,
                                         const TrainConfig& cfg, const DescriptorParams& params,
                                         std::mt19937_64& rng);

/// Evaluates the split template against a training patch at its home
/// location (the training-time similarity of two patches).
double patchSimilarity(const std::vector<TrainingView>& views,
                       const std::vector<PatchTemplate>& patches, uint32_t patchIdx,
                       const PatchTemplate& tmpl, const DescriptorParams& params);

/// Mean-shift vote clustering of a leaf's patches.
Leaf makeLeaf(const std::vector<uint32_t>& patchIndices, const std::vector<PatchTemplate>& patches,
              double translationBandwidthMm, double rotationBandwidthRad);

/// Trains a single tree on the given patch subset.
Tree trainTree(const std::vector<TrainingView>& views, const std::vector<PatchTemplate>& patches,
               std::vector<uint32_t> patchIndices, const TrainConfig& cfg,
               const DescriptorParams& params, double objectDiameter, std::mt19937_64& rng,
               TrainStats* stats = nullptr);

/// Routes a scene location down one tree; returns the leaf node index.
int32_t route(const Tree& tree, const SceneFeatureMap& scene, const Vec2i& at,
              const DescriptorParams& params);

/// One-class forest training: subsamples patches per tree, trains all
/// trees, and records the object geometry needed at inference time.
ForestModel trainForest(const std::vector<TrainingView>& views,
                        const std::vector<PatchTemplate>& patches, const ObjectModel& object,
                        const TrainConfig& cfg, const DescriptorParams& params);

inline double defaultTranslationBandwidth(double objectDiameter) { return 0.1 * objectDiameter; }
inline constexpr double kRotationBandwidthRad = 15.0 * 3.14159265358979323846 / 180.0;

}  // namespace hough6d
