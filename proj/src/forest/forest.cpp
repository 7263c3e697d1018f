#include "hough6d/forest/forest.hpp"

#include <algorithm>
#include <future>
#include <numeric>

#include "hough6d/forest/mean_shift.hpp"

namespace hough6d {

namespace {

struct BodyBounds {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    bool empty() const { return x1 < x0; }
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

BodyBounds maskBounds(const MaskU8& mask) {
    BodyBounds b;
    b.x0 = static_cast<int>(mask.cols());
    b.y0 = static_cast<int>(mask.rows());
    for (int y = 0; y < mask.rows(); ++y)
        for (int x = 0; x < mask.cols(); ++x)
            if (mask(y, x)) {
                b.x0 = std::min(b.x0, x);
                b.y0 = std::min(b.y0, y);
                b.x1 = std::max(b.x1, x);
                b.y1 = std::max(b.y1, y);
            }
    return b;
}

// Patch anchors must tolerate one-pixel registration error: reject
// centers sitting on a depth step, where D(X, c) would jump by more
// than the z-check tolerates.
bool depthLocallySmooth(const ImageU16& depth, int x, int y, double tolMm = 20.0) {
    const uint16_t c = depth(y, x);
    if (!depthValid(c)) return false;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const uint16_t n = depth(y + dy, x + dx);
            if (!depthValid(n) || std::abs(int(n) - int(c)) > tolMm) return false;
        }
    return true;
}

// Crop rectangle around the body with room for the largest patch.
BodyBounds cropRect(const BodyBounds& body, int frameW, int frameH) {
    const int margin = static_cast<int>(
        std::lround(0.8 * std::max(body.width(), body.height()))) + 8;
    BodyBounds r;
    r.x0 = std::max(0, body.x0 - margin);
    r.y0 = std::max(0, body.y0 - margin);
    r.x1 = std::min(frameW - 1, body.x1 + margin);
    r.y1 = std::min(frameH - 1, body.y1 + margin);
    return r;
}

TrainingView buildView(const RgbdFrame& frame, const MaskU8& body, const Pose6D& pose, int viewId,
                       const DescriptorParams& params) {
    const BodyBounds bodyBox = maskBounds(body);
    if (bodyBox.empty()) throw NoValidPatches("view has no object pixels");
    const BodyBounds crop = cropRect(bodyBox, frame.width(), frame.height());

    TrainingView tv;
    const RgbdFrame cropped =
        cropFrame(frame, crop.x0, crop.y0, crop.width(), crop.height());
    tv.features = extractOrientations(cropped, params.gradientThreshold, params.normalSmoothing);
    tv.body = body.block(crop.y0, crop.x0, crop.height(), crop.width());
    tv.contour = tv.body - erodeMask(tv.body, 2);  // two-pixel inner band
    tv.normalBand =
        erodeMask(tv.body, static_cast<int>(std::lround(params.normalSmoothing)) + 2);
    tv.pose = pose;
    tv.viewId = viewId;
    return tv;
}

}  // namespace

TrainingView makeTrainingView(const RenderedView& view, const DescriptorParams& params) {
    return buildView(view.frame, view.bodyMask, view.pose, view.viewId, params);
}

TrainingView makeTrainingViewFromFrame(const RgbdFrame& frame, const Pose6D& pose, int viewId,
                                       const DescriptorParams& params) {
    MaskU8 body = MaskU8::Zero(frame.height(), frame.width());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            if (depthValid(frame.depth(y, x))) body(y, x) = 1;
    return buildView(frame, body, pose, viewId, params);
}

std::vector<PatchTemplate> samplePatches(const std::vector<TrainingView>& views,
                                         const TrainConfig& cfg, const DescriptorParams& params,
                                         std::mt19937_64& rng) {
    std::vector<PatchTemplate> patches;
    for (const auto& view : views) {
        const BodyBounds bounds = maskBounds(view.body);
        if (bounds.empty()) continue;
        const int side = std::max(
            8, static_cast<int>(std::lround(cfg.patchSizeFraction *
                                            std::max(bounds.width(), bounds.height()))));
        const int half = side / 2;
        const int w = view.features.width(), h = view.features.height();

        std::vector<Vec2i> candidates;
        for (int y = std::max(bounds.y0, 1); y <= std::min(bounds.y1, h - 2); ++y)
            for (int x = std::max(bounds.x0, 1); x <= std::min(bounds.x1, w - 2); ++x)
                if (view.body(y, x) && depthLocallySmooth(view.features.depth, x, y) &&
                    x - half >= 0 && y - half >= 0 && x + half < w && y + half < h)
                    candidates.push_back({x, y});
        if (candidates.empty()) continue;
        std::shuffle(candidates.begin(), candidates.end(), rng);

        const Vec3d objectCenter = view.pose.translation();
        int taken = 0;
        for (const auto& center : candidates) {
            if (taken >= cfg.patchesPerView) break;
            try {
                PatchTemplate t = buildTemplate(view.features, view.normalBand, view.contour,
                                                center, side, objectCenter, view.pose, params);
                t.sourceViewId = view.viewId;
                patches.push_back(std::move(t));
                ++taken;
            } catch (const Error&) {
                // Not enough features here; try the next candidate.
            }
        }
    }
    if (patches.empty()) throw NoValidPatches();
    return patches;
}

double patchSimilarity(const std::vector<TrainingView>& views,
                       const std::vector<PatchTemplate>& patches, uint32_t patchIdx,
                       const PatchTemplate& tmpl, const DescriptorParams& params) {
    const PatchTemplate& p = patches[patchIdx];
    const TrainingView& view = views[p.sourceViewId];
    return similarity(view.features, p.centerPixel, tmpl, params.depthToleranceMm,
                      params.canonicalDepthMm);
}

namespace {

double offsetCovarianceTrace(const std::vector<uint32_t>& indices,
                             const std::vector<PatchTemplate>& patches) {
    if (indices.size() < 2) return 0;
    Vec3d mean = Vec3d::Zero();
    for (uint32_t i : indices) mean += patches[i].voteOffset;
    mean /= static_cast<double>(indices.size());
    double trace = 0;
    for (uint32_t i : indices) trace += (patches[i].voteOffset - mean).squaredNorm();
    return trace / static_cast<double>(indices.size());
}

// Rotation dispersion as R4 variance of sign-canonical quaternions.
// Without it the offset term alone favors degenerate groupings: patches
// near the object center share the same offset from every viewpoint, so
// zero-offset-variance children with arbitrary rotations look optimal.
double rotationVariance(const std::vector<uint32_t>& indices,
                        const std::vector<PatchTemplate>& patches) {
    if (indices.size() < 2) return 0;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (uint32_t i : indices) mean += patches[i].voteRotation.coeffs();
    mean /= static_cast<double>(indices.size());
    double var = 0;
    for (uint32_t i : indices) var += (patches[i].voteRotation.coeffs() - mean).squaredNorm();
    return var / static_cast<double>(indices.size());
}

struct SplitChoice {
    bool found = false;
    uint32_t templatePatch = 0;
    double threshold = 0;
    double gain = 0;
    std::vector<uint32_t> left, right;
};

}  // namespace

Leaf makeLeaf(const std::vector<uint32_t>& patchIndices, const std::vector<PatchTemplate>& patches,
              double translationBandwidthMm, double rotationBandwidthRad) {
    Leaf leaf;
    leaf.patchIndices = patchIndices;
    std::vector<Vec3d> offsets;
    std::vector<double> weights(patchIndices.size(), 1.0);
    offsets.reserve(patchIndices.size());
    for (uint32_t i : patchIndices) offsets.push_back(patches[i].voteOffset);

    const MeanShiftModes clusters = meanShift3d(offsets, weights, translationBandwidthMm);
    for (size_t m = 0; m < clusters.modes.size(); ++m) {
        std::vector<Quatd> rotations;
        for (size_t i = 0; i < patchIndices.size(); ++i)
            if (clusters.assignment[i] == static_cast<int>(m))
                rotations.push_back(patches[patchIndices[i]].voteRotation);
        if (rotations.empty()) continue;

        // Joint modes: a translation cluster may mix viewpoints whose
        // offsets coincide; emit one mode per rotation cluster so each
        // vote is rotation-coherent with its own support. Leftovers
        // beyond the mode cap stay counted in patchIndices only.
        const std::vector<double> w(rotations.size(), 1.0);
        const QuatClusters rc = clusterRotations(rotations, w, rotationBandwidthRad, 6);
        for (size_t r = 0; r < rc.modes.size(); ++r) {
            VoteMode mode;
            mode.offset = clusters.modes[m];
            mode.rotation = rc.modes[r];
            mode.support = static_cast<uint32_t>(rc.members[r].size());
            leaf.voteModes.push_back(mode);
        }
    }
    for (const auto& m : leaf.voteModes) leaf.supportTotal += m.support;
    leaf.pFg = 1.0;
    return leaf;
}

namespace {

struct NodeTask {
    int32_t nodeIndex;
    std::vector<uint32_t> samples;
    int depth;
};

SplitChoice findBestSplit(const std::vector<TrainingView>& views,
                          const std::vector<PatchTemplate>& patches,
                          const std::vector<uint32_t>& samples, const TrainConfig& cfg,
                          const DescriptorParams& params, std::mt19937_64& rng) {
    SplitChoice best;
    const size_t n = samples.size();
    const double parentTrace = offsetCovarianceTrace(samples, patches);
    const double parentRotVar = rotationVariance(samples, patches);

    std::vector<uint32_t> candidates = samples;
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const size_t k = std::min<size_t>(cfg.candidateTemplates, candidates.size());

    std::vector<double> sims(n);
    std::vector<double> sorted;
    for (size_t c = 0; c < k; ++c) {
        const PatchTemplate& tmpl = patches[candidates[c]];
        for (size_t i = 0; i < n; ++i)
            sims[i] = patchSimilarity(views, patches, samples[i], tmpl, params);

        sorted.assign(sims.begin(), sims.end());
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() == sorted.back()) continue;  // constant similarity, no split

        // Quantile threshold candidates, placed mid-gap so routing keeps a
        // margin against small similarity perturbations.
        std::vector<double> thresholds;
        const int t = std::max(1, cfg.thresholdsPerTemplate);
        for (int j = 1; j <= t; ++j) {
            const size_t pos =
                std::min(n - 2, static_cast<size_t>(j * (n - 1) / (t + 1)));
            const double tau = 0.5 * (sorted[pos] + sorted[pos + 1]);
            thresholds.push_back(tau);
        }
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

        for (double tau : thresholds) {
            std::vector<uint32_t> left, right;
            for (size_t i = 0; i < n; ++i)
                (sims[i] <= tau ? left : right).push_back(samples[i]);
            if (left.empty() || right.empty()) continue;
            const double wl = double(left.size()) / n, wr = double(right.size()) / n;
            // Relative reductions of the two dispersion terms of the 6D vote.
            const double gainTrans =
                parentTrace <= 1e-12
                    ? 0.0
                    : (parentTrace - wl * offsetCovarianceTrace(left, patches) -
                       wr * offsetCovarianceTrace(right, patches)) /
                          parentTrace;
            const double gainRot =
                parentRotVar <= 1e-12
                    ? 0.0
                    : (parentRotVar - wl * rotationVariance(left, patches) -
                       wr * rotationVariance(right, patches)) /
                          parentRotVar;
            const double gain = gainTrans + gainRot;
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.templatePatch = candidates[c];
                best.threshold = tau;
                best.gain = gain;
                best.left = std::move(left);
                best.right = std::move(right);
            }
        }
    }
    return best;
}

}  // namespace

Tree trainTree(const std::vector<TrainingView>& views, const std::vector<PatchTemplate>& patches,
               std::vector<uint32_t> patchIndices, const TrainConfig& cfg,
               const DescriptorParams& params, double objectDiameter, std::mt19937_64& rng,
               TrainStats* stats) {
    if (static_cast<int>(patchIndices.size()) < std::max(1, cfg.minSamples)) throw TooFewSamples();

    const double transBw = defaultTranslationBandwidth(objectDiameter);
    Tree tree;
    std::vector<NodeTask> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(patchIndices), 0});

    double balanceSum = 0;
    int splitCount = 0, leafCount = 0, maxDepth = 0;

    while (!stack.empty()) {
        NodeTask task = std::move(stack.back());
        stack.pop_back();
        maxDepth = std::max(maxDepth, task.depth);

        SplitChoice split;
        const bool canSplit = task.depth < cfg.maxDepth &&
                              static_cast<int>(task.samples.size()) >= cfg.minSamples;
        if (canSplit) split = findBestSplit(views, patches, task.samples, cfg, params, rng);

        TreeNode& node = tree.nodes[task.nodeIndex];
        if (!split.found || split.gain <= 0) {
            node.isLeaf = true;
            node.leaf = makeLeaf(task.samples, patches, transBw, kRotationBandwidthRad);
            ++leafCount;
            continue;
        }

        node.isLeaf = false;
        node.splitTemplate = patches[split.templatePatch];
        node.threshold = split.threshold;
        balanceSum += double(std::min(split.left.size(), split.right.size())) / task.samples.size();
        ++splitCount;

        const int32_t leftIdx = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int32_t rightIdx = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[task.nodeIndex].left = leftIdx;
        tree.nodes[task.nodeIndex].right = rightIdx;
        stack.push_back({leftIdx, std::move(split.left), task.depth + 1});
        stack.push_back({rightIdx, std::move(split.right), task.depth + 1});
    }

    if (stats) {
        stats->balance = splitCount > 0 ? balanceSum / splitCount : 0.0;
        stats->splitNodeCount = splitCount;
        stats->leafCount = leafCount;
        stats->maxDepthReached = maxDepth;
    }
    return tree;
}

int32_t route(const Tree& tree, const SceneFeatureMap& scene, const Vec2i& at,
              const DescriptorParams& params) {
    int32_t idx = 0;
    while (!tree.nodes[idx].isLeaf) {
        const TreeNode& node = tree.nodes[idx];
        const double s = similarity(scene, at, node.splitTemplate, params.depthToleranceMm,
                                    params.canonicalDepthMm);
        idx = (s <= node.threshold) ? node.left : node.right;
    }
    return idx;
}

ForestModel trainForest(const std::vector<TrainingView>& views,
                        const std::vector<PatchTemplate>& patches, const ObjectModel& object,
                        const TrainConfig& cfg, const DescriptorParams& params) {
    ForestModel model;
    model.objectId = object.id;
    model.objectDiameter = object.diameter;
    model.objectSymmetric = object.symmetric;
    model.descriptor = params;
    model.config = cfg;
    model.objectBoundsMin = Vec3d::Constant(std::numeric_limits<double>::infinity());
    model.objectBoundsMax = -model.objectBoundsMin;
    for (const auto& v : object.vertices) {
        model.objectBoundsMin = model.objectBoundsMin.cwiseMin(v);
        model.objectBoundsMax = model.objectBoundsMax.cwiseMax(v);
    }
    // Sparse surface sample for hypothesis depth-consistency checks.
    constexpr size_t kModelPointCap = 256;
    if (object.vertices.size() <= kModelPointCap) {
        model.objectPoints = object.vertices;
    } else {
        for (size_t i = 0; i < kModelPointCap; ++i)
            model.objectPoints.push_back(
                object.vertices[i * object.vertices.size() / kModelPointCap]);
    }

    const size_t total = patches.size();
    const size_t perTree = std::max<size_t>(
        1, static_cast<size_t>(std::lround(cfg.sampleFraction * static_cast<double>(total))));

    std::vector<TrainStats> treeStats(cfg.treeCount);
    model.trees.resize(cfg.treeCount);
    std::vector<std::future<void>> tasks;
    for (int t = 0; t < cfg.treeCount; ++t) {
        tasks.push_back(std::async(std::launch::async, [&, t] {
            std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL * (t + 1));
            std::vector<uint32_t> indices(total);
            std::iota(indices.begin(), indices.end(), 0);
            std::shuffle(indices.begin(), indices.end(), rng);
            indices.resize(std::min(perTree, indices.size()));
            model.trees[t] = trainTree(views, patches, std::move(indices), cfg, params,
                                       object.diameter, rng, &treeStats[t]);
        }));
    }
    for (auto& task : tasks) task.get();

    double balanceSum = 0;
    int balanceCount = 0;
    for (const auto& s : treeStats) {
        model.stats.splitNodeCount += s.splitNodeCount;
        model.stats.leafCount += s.leafCount;
        model.stats.maxDepthReached = std::max(model.stats.maxDepthReached, s.maxDepthReached);
        if (s.splitNodeCount > 0) {
            balanceSum += s.balance * s.splitNodeCount;
            balanceCount += s.splitNodeCount;
        }
    }
    model.stats.balance = balanceCount > 0 ? balanceSum / balanceCount : 0.0;
    return model;
}

}  // namespace hough6d
