#pragma once

#include <string>
#include <vector>

#include "hough6d/core/types.hpp"

namespace hough6d {

inline constexpr double kDefaultCorrectnessCoeff = 0.15;
inline constexpr int kMetricVertexCap = 2000;

/// Average vertex transfer error between two poses (identity pairing).
double matchScoreNonSym(const ObjectModel& model, const Pose6D& gt, const Pose6D& est);

/// Symmetric variant: average over gt-transformed vertices of the
/// nearest est-transformed vertex. Grid-accelerated; result equals the
/// brute-force double loop exactly.
double matchScoreSym(const ObjectModel& model, const Pose6D& gt, const Pose6D& est);

/// Picks the metric from the model's symmetry flag.
double matchScore(const ObjectModel& model, const Pose6D& gt, const Pose6D& est);

/// Correct when m <= km * d (inclusive).
inline bool isCorrect(double m, double km, double d) { return m <= km * d; }

struct DetectionRecord {
    std::string frameId;
    std::string objectId;
    Pose6D pose;
    double score = 0;
    int matchedGt = -1;      // index within the frame's ground truth
    double matchScoreMm = std::numeric_limits<double>::infinity();
    bool correct = false;
};

struct FrameEval {
    std::string frameId;
    std::vector<std::pair<Pose6D, double>> detections;  // pose, score
    std::vector<Pose6D> groundTruth;
};

struct PrPoint {
    double threshold = 0;
    double precision = 0;
    double recall = 0;
};

struct PrCurve {
    std::vector<PrPoint> points;  // descending threshold
    double f1Best = 0;
    int gtCount = 0;

    /// Max precision among points with recall >= r.
    double precisionAtRecall(double r) const;
};

struct EvalOutcome {
    std::vector<DetectionRecord> records;
    PrCurve curve;
};

/// Greedy per-frame matching (descending score, each ground truth
/// consumed once) followed by a threshold sweep over the scores.
EvalOutcome evaluateDetections(const std::vector<FrameEval>& frames, const ObjectModel& model,
                               double km = kDefaultCorrectnessCoeff);

/// Threshold sweep over pre-labeled records.
PrCurve prSweep(const std::vector<DetectionRecord>& records, int gtCount);

}  // namespace hough6d
