#include "hough6d/eval/experiment.hpp"

#include <atomic>
#include <chrono>
#include <future>

namespace hough6d {

SweepKind sweepKindFromName(const std::string& name) {
    if (name == "patch") return SweepKind::PatchFraction;
    if (name == "trees") return SweepKind::TreeCount;
    if (name == "iterations") return SweepKind::Iterations;
    if (name == "bag") return SweepKind::BagSize;
    throw ConfigError("unknown sweep: " + name + " (expected patch|trees|iterations|bag)");
}

std::string sweepKindName(SweepKind kind) {
    switch (kind) {
        case SweepKind::PatchFraction: return "patch";
        case SweepKind::TreeCount: return "trees";
        case SweepKind::Iterations: return "iterations";
        case SweepKind::BagSize: return "bag";
    }
    return "?";
}

std::vector<DetectionResult> detectBatch(const std::vector<ExperimentScene>& scenes,
                                         const ForestModel& model, const InferConfig& cfg,
                                         int jobs) {
    std::vector<DetectionResult> results(scenes.size());
    jobs = std::max(1, jobs);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= scenes.size()) return;
            InferConfig frameCfg = cfg;
            frameCfg.seed = cfg.seed + 0x9E3779B97F4A7C15ULL * (i + 1);
            results[i] = detect(scenes[i].frame, model, frameCfg);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::future<void>> tasks;
        for (int j = 0; j < jobs; ++j) tasks.push_back(std::async(std::launch::async, worker));
        for (auto& t : tasks) t.get();
    }
    return results;
}

namespace {

PrCurve evaluateRun(const std::vector<ExperimentScene>& scenes,
                    const std::vector<DetectionResult>& results, const ObjectModel& object,
                    double km) {
    std::vector<FrameEval> frames;
    frames.reserve(scenes.size());
    for (size_t i = 0; i < scenes.size(); ++i) {
        FrameEval fe;
        fe.frameId = scenes[i].id;
        fe.groundTruth = scenes[i].groundTruth;
        for (const auto& hyp : results[i].hypotheses)
            fe.detections.push_back({hyp.pose, hyp.score});
        frames.push_back(std::move(fe));
    }
    return evaluateDetections(frames, object, km).curve;
}

}  // namespace

ExperimentResult runExperiment(SweepKind kind, const std::vector<double>& values,
                               const std::vector<TrainingView>& views, const ObjectModel& object,
                               const std::vector<ExperimentScene>& scenes,
                               const TrainConfig& baseTrain, const InferConfig& baseInfer,
                               const DescriptorParams& descriptor, double km, int jobs) {
    ExperimentResult result;
    const bool retrainsPerSetting =
        kind == SweepKind::PatchFraction || kind == SweepKind::TreeCount;

    ForestModel sharedModel;
    bool haveShared = false;

    for (double value : values) {
        TrainConfig trainCfg = baseTrain;
        InferConfig inferCfg = baseInfer;
        switch (kind) {
            case SweepKind::PatchFraction:
                trainCfg.patchSizeFraction = value;
                break;
            case SweepKind::TreeCount:
                trainCfg.treeCount = std::max(1, static_cast<int>(std::lround(value)));
                break;
            case SweepKind::Iterations:
                inferCfg.iterations = std::max(0, static_cast<int>(std::lround(value)));
                break;
            case SweepKind::BagSize:
                inferCfg.bagSize = std::max(1, static_cast<int>(std::lround(value)));
                break;
        }

        const ForestModel* model = nullptr;
        ForestModel local;
        if (retrainsPerSetting || !haveShared) {
            std::mt19937_64 rng(trainCfg.seed);
            const std::vector<PatchTemplate> patches =
                samplePatches(views, trainCfg, descriptor, rng);
            local = trainForest(views, patches, object, trainCfg, descriptor);
            if (!retrainsPerSetting) {
                sharedModel = std::move(local);
                haveShared = true;
                model = &sharedModel;
            } else {
                model = &local;
            }
        } else {
            model = &sharedModel;
        }

        const auto start = std::chrono::steady_clock::now();
        const std::vector<DetectionResult> detections =
            detectBatch(scenes, *model, inferCfg, jobs);
        const auto stop = std::chrono::steady_clock::now();

        const PrCurve curve = evaluateRun(scenes, detections, object, km);
        ExperimentRow row;
        row.settingValue = value;
        row.f1 = curve.f1Best;
        for (const auto& p : curve.points) {
            const double f1 = p.precision + p.recall > 0
                                  ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
                                  : 0.0;
            if (std::abs(f1 - curve.f1Best) < 1e-12) {
                row.precision = p.precision;
                row.recall = p.recall;
                break;
            }
        }
        row.meanDetectMs =
            scenes.empty()
                ? 0.0
                : std::chrono::duration<double, std::milli>(stop - start).count() / scenes.size();
        result.rows.push_back(row);
        result.curves.push_back(curve);
    }
    return result;
}

}  // namespace hough6d
