#include "hough6d/inference/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "hough6d/forest/mean_shift.hpp"

namespace hough6d {

LeafState LeafState::fresh(const ForestModel& model) {
    LeafState state;
    state.pFg.resize(model.trees.size());
    state.tallyFg.resize(model.trees.size());
    state.tallyTotal.resize(model.trees.size());
    for (size_t t = 0; t < model.trees.size(); ++t) {
        state.pFg[t].assign(model.trees[t].nodes.size(), 1.0);
        state.tallyFg[t].assign(model.trees[t].nodes.size(), 0);
        state.tallyTotal[t].assign(model.trees[t].nodes.size(), 0);
    }
    return state;
}

void LeafState::resetAllForeground() {
    for (auto& tree : pFg) std::fill(tree.begin(), tree.end(), 1.0);
}

VoteRound castVotes(const SceneFeatureMap& scene, const ForestModel& model,
                    const LeafState& state, const std::vector<int>& bagTrees,
                    const InferConfig& cfg, const Vec2i& jitter) {
    VoteRound round;
    const int w = scene.width(), h = scene.height();
    round.accumulator = ImageF::Zero(h, w);
    const double bagCount = static_cast<double>(bagTrees.size());
    const double maxOffset = 2.0 * model.objectDiameter;
    const int stride = std::max(1, cfg.patchStride);

    for (int y = jitter.y() % stride; y < h; y += stride) {
        for (int x = jitter.x() % stride; x < w; x += stride) {
            if (!depthValid(scene.depth(y, x))) continue;
            const Vec3d patch3d = backproject(x, y, scene.depth(y, x), scene.intrinsics);
            for (int t : bagTrees) {
                const int32_t leafIdx = route(model.trees[t], scene, {x, y}, model.descriptor);
                round.routed.push_back({{t, leafIdx}, {x, y}});
                const Leaf& leaf = model.trees[t].nodes[leafIdx].leaf;
                const double pFg = state.pFg[t][leafIdx];
                if (pFg <= 0 || leaf.supportTotal <= 0) continue;
                for (size_t m = 0; m < leaf.voteModes.size(); ++m) {
                    const VoteMode& mode = leaf.voteModes[m];
                    if (mode.offset.norm() > maxOffset) continue;
                    const double weight =
                        pFg * mode.support / (leaf.supportTotal * bagCount);
                    if (weight <= 0) continue;
                    const Vec3d center = patch3d + mode.offset;
                    if (center.z() <= 0) {
                        round.discardedWeight += weight;
                        continue;
                    }
                    const int u = static_cast<int>(
                        std::lround(scene.intrinsics.fx * center.x() / center.z() +
                                    scene.intrinsics.cx));
                    const int v = static_cast<int>(
                        std::lround(scene.intrinsics.fy * center.y() / center.z() +
                                    scene.intrinsics.cy));
                    if (u < 0 || u >= w || v < 0 || v >= h) {
                        round.discardedWeight += weight;
                        continue;
                    }
                    PixelVote vote;
                    vote.pixel = {x, y};
                    vote.patchCenter3d = patch3d;
                    vote.offset = mode.offset;
                    vote.rotation = mode.rotation;
                    vote.weight = weight;
                    vote.leaf = {t, leafIdx};
                    vote.modeIndex = static_cast<int32_t>(m);
                    round.votes.push_back(vote);
                    round.votePixels.push_back({u, v});
                    round.accumulator(v, u) += weight;
                    round.castWeight += weight;
                }
            }
        }
    }
    return round;
}

namespace {

ImageF binomialPass(const ImageF& in) {
    static const double kKernel[5] = {1, 4, 6, 4, 1};
    const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
    ImageF tmp = ImageF::Zero(h, w), out = ImageF::Zero(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0, wsum = 0;
            for (int k = -2; k <= 2; ++k) {
                const int xx = x + k;
                if (xx < 0 || xx >= w) continue;
                acc += kKernel[k + 2] * in(y, xx);
                wsum += kKernel[k + 2];
            }
            tmp(y, x) = wsum > 0 ? acc / wsum : 0;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0, wsum = 0;
            for (int k = -2; k <= 2; ++k) {
                const int yy = y + k;
                if (yy < 0 || yy >= h) continue;
                acc += kKernel[k + 2] * tmp(yy, x);
                wsum += kKernel[k + 2];
            }
            out(y, x) = wsum > 0 ? acc / wsum : 0;
        }
    return out;
}

}  // namespace

ImageF peakHeat(const ImageF& accumulator) {
    // Repeated binomial passes approximate a Gaussian wide enough to
    // bridge the scatter of one object's votes.
    ImageF heat = binomialPass(accumulator);
    for (int i = 0; i < 3; ++i) heat = binomialPass(heat);
    return heat;
}

namespace {

std::vector<Vec2i> topPeaks(ImageF heat, int n, double radius) {
    std::vector<Vec2i> peaks;
    const int h = static_cast<int>(heat.rows()), w = static_cast<int>(heat.cols());
    const int r = static_cast<int>(std::ceil(radius));
    for (int k = 0; k < n; ++k) {
        int bestX = -1, bestY = -1;
        double bestVal = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (heat(y, x) > bestVal) {
                    bestVal = heat(y, x);
                    bestX = x;
                    bestY = y;
                }
        if (bestX < 0) break;
        peaks.push_back({bestX, bestY});
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > radius * radius) continue;
                const int yy = bestY + dy, xx = bestX + dx;
                if (yy >= 0 && yy < h && xx >= 0 && xx < w) heat(yy, xx) = 0;
            }
    }
    return peaks;
}

}  // namespace

double depthConsistency(const Pose6D& pose, const SceneFeatureMap& scene,
                        const std::vector<Vec3d>& objectPoints, double tolMm) {
    if (objectPoints.empty()) return 0.0;
    int valid = 0, consistent = 0;
    for (const auto& p : objectPoints) {
        const Vec3d cam = pose.apply(p);
        if (cam.z() <= 0) {
            ++valid;
            continue;  // behind the camera: inconsistent
        }
        const int u = static_cast<int>(
            std::lround(scene.intrinsics.fx * cam.x() / cam.z() + scene.intrinsics.cx));
        const int v = static_cast<int>(
            std::lround(scene.intrinsics.fy * cam.y() / cam.z() + scene.intrinsics.cy));
        if (!scene.intrinsics.inFrame(u, v)) continue;
        const uint16_t d = scene.depth(v, u);
        if (!depthValid(d)) continue;
        ++valid;
        if (static_cast<double>(d) > cam.z() - tolMm) ++consistent;
    }
    return valid > 0 ? static_cast<double>(consistent) / valid : 0.0;
}

std::vector<Hypothesis> localize(const VoteRound& round, const SceneFeatureMap& scene,
                                 const ForestModel& model, const InferConfig& cfg,
                                 double validThreshold) {
    std::vector<Hypothesis> hypotheses;
    if (round.votes.empty()) return hypotheses;

    const double bandwidth = cfg.translationBandwidthMm > 0
                                 ? cfg.translationBandwidthMm
                                 : defaultTranslationBandwidth(model.objectDiameter);
    const double rotBandwidth = cfg.rotationBandwidthDeg * 3.14159265358979323846 / 180.0;

    // Stage 1: top-N accumulator peaks after non-maximum suppression.
    const std::vector<Vec2i> peaks =
        topPeaks(peakHeat(round.accumulator), cfg.topN, cfg.nmsRadiusPx);

    std::vector<Vec3d> centers(round.votes.size());
    std::vector<double> weights(round.votes.size());
    for (size_t i = 0; i < round.votes.size(); ++i) {
        centers[i] = round.votes[i].predictedCenter();
        weights[i] = round.votes[i].weight;
    }

    std::vector<Vec3d> modes;
    const double r2 = cfg.nmsRadiusPx * cfg.nmsRadiusPx;
    for (const auto& peak : peaks) {
        // Seed: weighted mean of votes landing near the peak.
        Vec3d seed = Vec3d::Zero();
        double seedWeight = 0;
        for (size_t i = 0; i < round.votes.size(); ++i) {
            const Vec2i& vp = round.votePixels[i];
            const double dx = vp.x() - peak.x(), dy = vp.y() - peak.y();
            if (dx * dx + dy * dy > r2) continue;
            seed += weights[i] * centers[i];
            seedWeight += weights[i];
        }
        if (seedWeight <= 0) continue;
        seed /= seedWeight;

        // Stage 2: 3D translation mode. Peaks of the same instance
        // converge together; merge them at object scale.
        const Vec3d mode = meanShiftAscent(centers, weights, bandwidth, seed);
        const double mergeDist = std::max(bandwidth, 0.35 * model.objectDiameter);
        bool duplicate = false;
        for (const auto& m : modes)
            if ((m - mode).norm() < mergeDist) {
                duplicate = true;
                break;
            }
        if (duplicate) continue;
        modes.push_back(mode);

        std::vector<uint32_t> supporters;
        std::vector<Quatd> rotations;
        std::vector<double> rotWeights;
        double mass = 0;
        for (size_t i = 0; i < round.votes.size(); ++i) {
            if ((centers[i] - mode).norm() > bandwidth) continue;
            supporters.push_back(static_cast<uint32_t>(i));
            mass += weights[i];
            rotations.push_back(round.votes[i].rotation);
            rotWeights.push_back(weights[i]);
        }
        if (supporters.empty()) continue;

        // Stage 3: candidate rotation clusters among the supporters,
        // ranked by depth consistency (mass breaks near-ties). The
        // orientation-only descriptor leaves rotation multi-modal;
        // the depth image disambiguates.
        const QuatClusters clusters = clusterRotations(rotations, rotWeights, rotBandwidth, 6);
        double topMass = 0;
        std::vector<double> clusterMass(clusters.modes.size(), 0);
        for (size_t c = 0; c < clusters.modes.size(); ++c) {
            for (size_t m : clusters.members[c]) clusterMass[c] += rotWeights[m];
            topMass = std::max(topMass, clusterMass[c]);
        }
        Quatd rotation = Quatd::Identity();
        double bestSel = -1;
        size_t bestCluster = 0;
        for (size_t c = 0; c < clusters.modes.size(); ++c) {
            if (clusterMass[c] < 0.05 * mass) continue;
            const double consistency = depthConsistency(Pose6D(clusters.modes[c], mode), scene,
                                                        model.objectPoints);
            const double sel = consistency + 0.05 * clusterMass[c] / topMass;
            if (sel > bestSel) {
                bestSel = sel;
                rotation = clusters.modes[c];
                bestCluster = c;
            }
        }
        if (bestSel < 0) {
            rotation = clusters.modes.empty() ? Quatd::Identity() : clusters.modes[0];
            bestCluster = 0;
        }

        // Translation polish over the rotation-consistent votes.
        Vec3d polished = mode;
        if (!clusters.members.empty()) {
            std::vector<Vec3d> inlierCenters;
            std::vector<double> inlierWeights;
            for (size_t m : clusters.members[bestCluster]) {
                inlierCenters.push_back(centers[supporters[m]]);
                inlierWeights.push_back(rotWeights[m]);
            }
            if (!inlierCenters.empty())
                polished = meanShiftAscent(inlierCenters, inlierWeights, bandwidth, mode);
        }

        // Final supporter set and score from the polished center.
        Hypothesis hyp;
        for (size_t i = 0; i < round.votes.size(); ++i) {
            if ((centers[i] - polished).norm() > bandwidth) continue;
            hyp.supporters.push_back(static_cast<uint32_t>(i));
            hyp.score += weights[i];
        }
        if (hyp.supporters.empty()) continue;
        hyp.pose = Pose6D(rotation, polished);
        hypotheses.push_back(std::move(hyp));
    }

    std::stable_sort(hypotheses.begin(), hypotheses.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    if (static_cast<int>(hypotheses.size()) > cfg.topN) hypotheses.resize(cfg.topN);
    for (auto& h : hypotheses) h.valid = h.score > validThreshold;
    return hypotheses;
}

ForegroundMask backprojectMask(const std::vector<Hypothesis>& hypotheses, const VoteRound& round,
                               double objectDiameter, int width, int height, int stride) {
    ForegroundMask mask;
    mask.binary = MaskU8::Zero(height, width);
    mask.probability = ImageF::Zero(height, width);
    const int half = std::max(0, stride / 2);

    auto stamp = [&](const Vec2i& px, double weight) {
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
                const int x = px.x() + dx, y = px.y() + dy;
                if (x < 0 || x >= width || y < 0 || y >= height) continue;
                mask.binary(y, x) = 1;
                mask.probability(y, x) += weight;
            }
    };

    for (const auto& hyp : hypotheses) {
        if (!hyp.valid) continue;
        const Vec3d center = hyp.pose.translation();
        for (uint32_t i : hyp.supporters) {
            const PixelVote& vote = round.votes[i];
            if ((vote.patchCenter3d - center).norm() > objectDiameter) continue;
            stamp(vote.pixel, vote.weight);
        }
    }
    return mask;
}

void updateLeaves(LeafState& state, const std::vector<RoutedPixel>& routed,
                  const MaskU8& foreground) {
    struct Tally {
        uint64_t fg = 0, total = 0;
    };
    std::map<std::pair<int32_t, int32_t>, Tally> tallies;
    for (const auto& r : routed) {
        Tally& t = tallies[{r.leaf.tree, r.leaf.node}];
        ++t.total;
        if (foreground(r.pixel.y(), r.pixel.x())) ++t.fg;
    }
    for (const auto& [key, tally] : tallies) {
        state.pFg[key.first][key.second] =
            static_cast<double>(tally.fg) / static_cast<double>(tally.total);
        state.tallyFg[key.first][key.second] += tally.fg;
        state.tallyTotal[key.first][key.second] += tally.total;
    }
}

void projectedBoundingBox(const ForestModel& model, const Pose6D& pose,
                          const CameraIntrinsics& intr, int& x0, int& y0, int& x1, int& y1) {
    x0 = intr.width;
    y0 = intr.height;
    x1 = -1;
    y1 = -1;
    for (int corner = 0; corner < 8; ++corner) {
        Vec3d p((corner & 1) ? model.objectBoundsMax.x() : model.objectBoundsMin.x(),
                (corner & 2) ? model.objectBoundsMax.y() : model.objectBoundsMin.y(),
                (corner & 4) ? model.objectBoundsMax.z() : model.objectBoundsMin.z());
        const Vec3d cam = pose.apply(p);
        if (cam.z() <= 0) continue;
        const int u = static_cast<int>(std::lround(intr.fx * cam.x() / cam.z() + intr.cx));
        const int v = static_cast<int>(std::lround(intr.fy * cam.y() / cam.z() + intr.cy));
        x0 = std::min(x0, u);
        y0 = std::min(y0, v);
        x1 = std::max(x1, u);
        y1 = std::max(y1, v);
    }
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(intr.width - 1, x1);
    y1 = std::min(intr.height - 1, y1);
}

namespace {

MaskU8 segmentationMask(const std::vector<Hypothesis>& hypotheses, const ForegroundMask& mask,
                        const ForestModel& model, const CameraIntrinsics& intr) {
    MaskU8 seg = MaskU8::Zero(mask.binary.rows(), mask.binary.cols());
    for (const auto& hyp : hypotheses) {
        if (!hyp.valid) continue;
        int x0, y0, x1, y1;
        projectedBoundingBox(model, hyp.pose, intr, x0, y0, x1, y1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (mask.binary(y, x)) seg(y, x) = 1;
    }
    return seg;
}

std::vector<int> drawBag(int treeCount, int bagSize, std::mt19937_64& rng) {
    std::vector<int> all(treeCount);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(bagSize, treeCount));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

DetectionResult detect(const RgbdFrame& frame, const ForestModel& model, const InferConfig& cfg) {
    DetectionResult result;
    const SceneFeatureMap scene =
        extractOrientations(frame, model.descriptor.gradientThreshold,
                            model.descriptor.normalSmoothing);
    LeafState state = LeafState::fresh(model);
    std::mt19937_64 rng(cfg.seed);
    const int stride = std::max(1, cfg.patchStride);
    std::uniform_int_distribution<int> jitterDist(0, stride - 1);

    std::vector<int> allTrees(model.treeCount());
    std::iota(allTrees.begin(), allTrees.end(), 0);

    // Initial full-forest pass: all leaves foreground. This is both the
    // iterations = 0 output and the baseline the auto threshold and the
    // divergence guard refer to.
    const Vec2i jitter0(jitterDist(rng), jitterDist(rng));
    VoteRound initialRound = castVotes(scene, model, state, allTrees, cfg, jitter0);
    double validThreshold = cfg.validThreshold;
    if (validThreshold <= 0) {
        double best = 0;
        std::vector<Hypothesis> probe = localize(initialRound, scene, model, cfg, 0.0);
        if (!probe.empty()) best = probe.front().score;
        validThreshold = cfg.validFraction * best;
        result.hypotheses = std::move(probe);
        for (auto& h : result.hypotheses) h.valid = h.score > validThreshold;
    } else {
        result.hypotheses = localize(initialRound, scene, model, cfg, validThreshold);
    }
    result.validThreshold = validThreshold;
    result.accumulatorInitial = initialRound.accumulator;

    ForegroundMask initialMask =
        backprojectMask(result.hypotheses, initialRound, model.objectDiameter, frame.width(),
                        frame.height(), stride);

    if (cfg.iterations <= 0) {
        result.accumulator = initialRound.accumulator;
        result.mask = std::move(initialMask);
        result.segmentation = segmentationMask(result.hypotheses, result.mask, model,
                                               frame.intrinsics);
        return result;
    }

    const int bagSize = cfg.bagSize > 0
                            ? std::min(cfg.bagSize, model.treeCount())
                            : (model.treeCount() + 1) / 2;

    std::vector<Hypothesis> lastHypotheses = result.hypotheses;
    VoteRound lastRound = std::move(initialRound);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const std::vector<int> bag = drawBag(model.treeCount(), bagSize, rng);
        const Vec2i jitter(jitterDist(rng), jitterDist(rng));
        VoteRound round = castVotes(scene, model, state, bag, cfg, jitter);
        std::vector<Hypothesis> hyps = localize(round, scene, model, cfg, validThreshold);
        ForegroundMask mask = backprojectMask(hyps, round, model.objectDiameter, frame.width(),
                                              frame.height(), stride);
        updateLeaves(state, round.routed, mask.binary);
        ++result.iterationsRun;

        // Divergence guard: all touched leaves collapsed to zero. Stop
        // and fall back to the initial full-forest results.
        bool anyAlive = false;
        for (const auto& r : round.routed)
            if (state.pFg[r.leaf.tree][r.leaf.node] > 0) {
                anyAlive = true;
                break;
            }
        if (!anyAlive) {
            result.diverged = true;
            break;
        }
        lastHypotheses = std::move(hyps);
        lastRound = std::move(round);
    }

    if (result.diverged) {
        result.accumulator = result.accumulatorInitial;
        result.mask = std::move(initialMask);
        result.segmentation = segmentationMask(result.hypotheses, result.mask, model,
                                               frame.intrinsics);
        state.resetAllForeground();
        return result;
    }

    result.hypotheses = std::move(lastHypotheses);
    result.accumulator = lastRound.accumulator;
    result.mask = backprojectMask(result.hypotheses, lastRound, model.objectDiameter,
                                  frame.width(), frame.height(), stride);
    result.segmentation =
        segmentationMask(result.hypotheses, result.mask, model, frame.intrinsics);
    state.resetAllForeground();
    return result;
}

}  // namespace hough6d
