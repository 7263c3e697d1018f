#include "hough6d/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace hough6d {

namespace {

// Evenly spaced subsample keeping the metric O(n^2) bounded.
std::vector<Vec3d> cappedVertices(const ObjectModel& model) {
    if (model.vertices.empty()) throw EmptyModel();
    if (static_cast<int>(model.vertices.size()) <= kMetricVertexCap) return model.vertices;
    std::vector<Vec3d> out;
    out.reserve(kMetricVertexCap);
    for (int i = 0; i < kMetricVertexCap; ++i)
        out.push_back(model.vertices[static_cast<size_t>(i) * model.vertices.size() /
                                     kMetricVertexCap]);
    return out;
}

// Uniform voxel grid for exact nearest-neighbor queries.
class PointGrid {
public:
    PointGrid(const std::vector<Vec3d>& points, double cellSize)
        : points_(points), cell_(cellSize) {
        for (size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
    }

    double nearestDistance(const Vec3d& q) const {
        const Eigen::Vector3i base = cellOf(q);
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring <= kMaxRing; ++ring) {
            for (int dz = -ring; dz <= ring; ++dz) {
                for (int dy = -ring; dy <= ring; ++dy) {
                    for (int dx = -ring; dx <= ring; ++dx) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring)
                            continue;  // shell only
                        const Eigen::Vector3i cell = base + Eigen::Vector3i(dx, dy, dz);
                        const auto it = cells_.find(key(cell));
                        if (it == cells_.end()) continue;
                        for (size_t i : it->second)
                            best = std::min(best, (points_[i] - q).squaredNorm());
                    }
                }
            }
            // Shell ring+1 holds points at distance >= ring * cell; stop
            // once the best find cannot be beaten.
            if (std::isfinite(best) && std::sqrt(best) <= ring * cell_) return std::sqrt(best);
        }
        // Query far from every cell: plain scan stays exact.
        for (const auto& p : points_) best = std::min(best, (p - q).squaredNorm());
        return std::sqrt(best);
    }

private:
    Eigen::Vector3i cellOf(const Vec3d& p) const {
        return {static_cast<int>(std::floor(p.x() / cell_)),
                static_cast<int>(std::floor(p.y() / cell_)),
                static_cast<int>(std::floor(p.z() / cell_))};
    }
    int64_t key(const Vec3d& p) const { return key(cellOf(p)); }
    static int64_t key(const Eigen::Vector3i& c) {
        return (static_cast<int64_t>(c.x() & 0x1FFFFF) << 42) |
               (static_cast<int64_t>(c.y() & 0x1FFFFF) << 21) |
               static_cast<int64_t>(c.z() & 0x1FFFFF);
    }

    const std::vector<Vec3d>& points_;
    double cell_;
    std::unordered_map<int64_t, std::vector<size_t>> cells_;
    static constexpr int kMaxRing = 3;
};

}  // namespace

double matchScoreNonSym(const ObjectModel& model, const Pose6D& gt, const Pose6D& est) {
    const std::vector<Vec3d> verts = cappedVertices(model);
    double sum = 0;
    for (const auto& v : verts) sum += (gt.apply(v) - est.apply(v)).norm();
    return sum / static_cast<double>(verts.size());
}

double matchScoreSym(const ObjectModel& model, const Pose6D& gt, const Pose6D& est) {
    const std::vector<Vec3d> verts = cappedVertices(model);
    std::vector<Vec3d> estPoints;
    estPoints.reserve(verts.size());
    for (const auto& v : verts) estPoints.push_back(est.apply(v));

    const double cell = std::max(1e-6, model.diameter / 20.0);
    const PointGrid grid(estPoints, cell);
    double sum = 0;
    for (const auto& v : verts) sum += grid.nearestDistance(gt.apply(v));
    return sum / static_cast<double>(verts.size());
}

double matchScore(const ObjectModel& model, const Pose6D& gt, const Pose6D& est) {
    return model.symmetric ? matchScoreSym(model, gt, est) : matchScoreNonSym(model, gt, est);
}

double PrCurve::precisionAtRecall(double r) const {
    double best = 0;
    for (const auto& p : points)
        if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    return best;
}

PrCurve prSweep(const std::vector<DetectionRecord>& records, int gtCount) {
    if (gtCount <= 0) throw NoGroundTruth();
    std::vector<size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return records[a].score > records[b].score;
    });

    PrCurve curve;
    curve.gtCount = gtCount;
    int tp = 0, fp = 0;
    for (size_t k = 0; k < order.size(); ++k) {
        const DetectionRecord& rec = records[order[k]];
        if (rec.correct)
            ++tp;
        else
            ++fp;
        // Emit one point per distinct threshold (the lowest score kept).
        if (k + 1 < order.size() && records[order[k + 1]].score == rec.score) continue;
        PrPoint p;
        p.threshold = rec.score;
        p.precision = static_cast<double>(tp) / (tp + fp);
        p.recall = static_cast<double>(tp) / gtCount;
        curve.points.push_back(p);
        if (p.precision + p.recall > 0)
            curve.f1Best = std::max(curve.f1Best,
                                    2.0 * p.precision * p.recall / (p.precision + p.recall));
    }
    return curve;
}

EvalOutcome evaluateDetections(const std::vector<FrameEval>& frames, const ObjectModel& model,
                               double km) {
    EvalOutcome out;
    int gtCount = 0;
    for (const auto& frame : frames) {
        gtCount += static_cast<int>(frame.groundTruth.size());
        std::vector<size_t> order(frame.detections.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return frame.detections[a].second > frame.detections[b].second;
        });
        std::vector<char> consumed(frame.groundTruth.size(), 0);
        for (size_t idx : order) {
            DetectionRecord rec;
            rec.frameId = frame.frameId;
            rec.objectId = model.id;
            rec.pose = frame.detections[idx].first;
            rec.score = frame.detections[idx].second;
            int bestGt = -1;
            double bestM = std::numeric_limits<double>::infinity();
            for (size_t g = 0; g < frame.groundTruth.size(); ++g) {
                if (consumed[g]) continue;
                const double m = matchScore(model, frame.groundTruth[g], rec.pose);
                if (m < bestM) {
                    bestM = m;
                    bestGt = static_cast<int>(g);
                }
            }
            if (bestGt >= 0 && isCorrect(bestM, km, model.diameter)) {
                rec.matchedGt = bestGt;
                rec.matchScoreMm = bestM;
                rec.correct = true;
                consumed[bestGt] = 1;
            } else {
                rec.matchScoreMm = bestM;
            }
            out.records.push_back(std::move(rec));
        }
    }
    out.curve = prSweep(out.records, gtCount);
    return out;
}

}  // namespace hough6d
