#pragma once

#include "hough6d/eval/metrics.hpp"
#include "hough6d/inference/detect.hpp"

namespace hough6d {

struct ExperimentScene {
    std::string id;
    RgbdFrame frame;
    std::vector<Pose6D> groundTruth;
};

enum class SweepKind { PatchFraction, TreeCount, Iterations, BagSize };

SweepKind sweepKindFromName(const std::string& name);
std::string sweepKindName(SweepKind kind);

struct ExperimentRow {
    double settingValue = 0;
    double precision = 0;  // at the best-F1 threshold
    double recall = 0;
    double f1 = 0;
    double meanDetectMs = 0;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<PrCurve> curves;  // one per setting
};

/// Runs detect over all scenes with per-frame seeds derived from the
/// config seed and the frame index; `jobs` frames in parallel, results
/// independent of the parallelism.
std::vector<DetectionResult> detectBatch(const std::vector<ExperimentScene>& scenes,
                                         const ForestModel& model, const InferConfig& cfg,
                                         int jobs);

/// Parameter sweep: trains per setting where the setting affects
/// training, detects over the scene set, and evaluates F1 per setting.
ExperimentResult runExperiment(SweepKind kind, const std::vector<double>& values,
                               const std::vector<TrainingView>& views, const ObjectModel& object,
                               const std::vector<ExperimentScene>& scenes,
                               const TrainConfig& baseTrain, const InferConfig& baseInfer,
                               const DescriptorParams& descriptor, double km, int jobs);

}  // namespace hough6d
