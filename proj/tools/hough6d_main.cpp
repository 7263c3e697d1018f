// Batch front end for the detection pipeline: render synthetic data,
// train a forest, detect, evaluate, and run parameter sweeps.
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage/config error.

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "hough6d/cli/run_config.hpp"
#include "hough6d/eval/experiment.hpp"
#include "hough6d/io/detection_io.hpp"
#include "hough6d/io/frame_archive.hpp"
#include "hough6d/io/model_io.hpp"
#include "hough6d/io/png_io.hpp"
#include "hough6d/synth/scene_gen.hpp"

namespace fs = std::filesystem;
using namespace hough6d;

namespace {

uint64_t frameSeed(uint64_t base, size_t index) {
    return base + 0x9E3779B97F4A7C15ULL * (index + 1);
}

ImageU16 normalizeTo16(const ImageF& in) {
    ImageU16 out = ImageU16::Zero(in.rows(), in.cols());
    const double maxVal = in.maxCoeff();
    if (maxVal <= 0) return out;
    for (int y = 0; y < in.rows(); ++y)
        for (int x = 0; x < in.cols(); ++x)
            out(y, x) = static_cast<uint16_t>(std::lround(65535.0 * in(y, x) / maxVal));
    return out;
}

ImageU8 maskTo8(const MaskU8& mask) {
    ImageU8 out(mask.rows(), mask.cols());
    for (int y = 0; y < mask.rows(); ++y)
        for (int x = 0; x < mask.cols(); ++x) out(y, x) = mask(y, x) ? 255 : 0;
    return out;
}

void drawLine(std::array<ImageU8, 3>& rgb, Vec2d from, Vec2d to, const Vec3d& color) {
    const int w = static_cast<int>(rgb[0].cols()), h = static_cast<int>(rgb[0].rows());
    const double len = (to - from).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
        const Vec2d p = from + (to - from) * (static_cast<double>(i) / steps);
        const int x = static_cast<int>(std::lround(p.x()));
        const int y = static_cast<int>(std::lround(p.y()));
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        for (int c = 0; c < 3; ++c) rgb[c](y, x) = static_cast<uint8_t>(color[c]);
    }
}

// Projected axes of length diameter/2 for every valid hypothesis.
void drawOverlay(std::array<ImageU8, 3>& rgb, const std::vector<Hypothesis>& hypotheses,
                 const ForestModel& model, const CameraIntrinsics& intr) {
    const double axisLen = model.objectDiameter / 2.0;
    const Vec3d colors[3] = {{255, 64, 64}, {64, 255, 64}, {96, 96, 255}};
    for (const auto& hyp : hypotheses) {
        if (!hyp.valid) continue;
        if (hyp.pose.translation().z() <= 0) continue;
        const PixelCoord origin = project(hyp.pose.translation(), intr);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3d dir = Vec3d::Zero();
            dir[axis] = axisLen;
            const Vec3d tip = hyp.pose.apply(dir);
            if (tip.z() <= 0) continue;
            const PixelCoord end = project(tip, intr);
            drawLine(rgb, {origin.u, origin.v}, {end.u, end.v}, colors[axis]);
        }
    }
}

std::vector<TrainingView> loadTrainingViews(const FrameArchive& archive,
                                            const DescriptorParams& params, int jobs) {
    std::vector<TrainingView> views(archive.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= archive.size()) return;
            const auto& entry = archive.entries()[i];
            const RgbdFrame frame = archive.readFrame(entry);
            const std::vector<GtEntry> gts = archive.readGts(entry);
            if (gts.empty()) throw NoValidPatches("view " + entry.id + " has no pose");
            views[i] = makeTrainingViewFromFrame(frame, gts[0].pose, static_cast<int>(i), params);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::future<void>> tasks;
        for (int j = 0; j < jobs; ++j) tasks.push_back(std::async(std::launch::async, worker));
        for (auto& t : tasks) t.get();
    }
    return views;
}

std::vector<ExperimentScene> loadScenes(const FrameArchive& archive) {
    std::vector<ExperimentScene> scenes;
    for (const auto& entry : archive.entries()) {
        ExperimentScene s;
        s.id = entry.id;
        s.frame = archive.readFrame(entry);
        for (const auto& gt : archive.readGts(entry)) s.groundTruth.push_back(gt.pose);
        scenes.push_back(std::move(s));
    }
    return scenes;
}

ObjectModel archiveObject(const FrameArchive& archive) {
    bool symmetric = false;
    const ParametricShape shape = archive.readObjectShape(&symmetric);
    return makeObjectModel(shape, kMetricVertexCap, symmetric);
}

int cmdRender(const std::string& specPath, const std::string& outDir, RunConfig& cfg) {
    const RenderSpec spec = loadRenderSpec(specPath);
    FrameArchive archive = FrameArchive::create(outDir, spec.intrinsics);
    cfg.save((fs::path(outDir) / "run_config.txt").string());
    saveRenderSpec(spec, (fs::path(outDir) / "render_spec.txt").string());

    size_t count = 0;
    if (spec.mode == RenderSpec::Mode::ViewSet) {
        archive.writeObject(spec.views.target, spec.views.targetSymmetric);
        const std::vector<Pose6D> poses = viewSetPoses(spec.views);
        for (const auto& pose : poses) {
            const RenderedView view = renderView(spec.views.target, pose, spec.intrinsics);
            archive.writeFrame(view.frame, {{spec.views.target.id, pose, 1.0}});
            ++count;
        }
    } else {
        archive.writeObject(spec.scenes.target, spec.scenes.targetSymmetric);
        for (int i = 0; i < spec.scenes.sceneCount; ++i) {
            const SceneSpec sceneSpec = generateScene(spec.scenes, spec.intrinsics, i);
            const ComposedScene scene = composeScene(sceneSpec, spec.intrinsics);
            std::vector<GtEntry> gts;
            for (size_t t = 0; t < scene.targetPoses.size(); ++t)
                gts.push_back({spec.scenes.target.id, scene.targetPoses[t],
                               scene.visibility[t]});
            std::ostringstream id;
            id << std::setw(6) << std::setfill('0') << i;
            archive.writeFrameAs(id.str(), scene.frame, gts);
            saveSceneSpec(sceneSpec, (fs::path(outDir) / (id.str() + ".scene.txt")).string());
            ++count;
        }
    }
    std::cout << "rendered " << count << " frames to " << outDir << "\n";
    return 0;
}

int cmdTrain(const std::string& viewsDir, const std::string& modelPath, RunConfig& cfg) {
    const FrameArchive archive = FrameArchive::open(viewsDir);
    const ObjectModel object = archiveObject(archive);
    std::cout << "object " << object.id << " diameter " << object.diameter << " mm, "
              << archive.size() << " views\n";

    const std::vector<TrainingView> views = loadTrainingViews(archive, cfg.descriptor, cfg.jobs);
    std::mt19937_64 rng(cfg.train.seed);
    const std::vector<PatchTemplate> patches = samplePatches(views, cfg.train, cfg.descriptor, rng);
    std::cout << "sampled " << patches.size() << " patches\n";

    const ForestModel model = trainForest(views, patches, object, cfg.train, cfg.descriptor);
    const fs::path parent = fs::path(modelPath).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    saveModel(model, modelPath);
    cfg.save((parent.empty() ? fs::path("run_config.txt") : parent / "run_config.txt").string());

    std::cout << "trees " << model.treeCount() << ", leaves " << model.stats.leafCount
              << ", split nodes " << model.stats.splitNodeCount << ", max depth "
              << model.stats.maxDepthReached << "\n";
    std::cout << "balance " << model.stats.balance << " (fraction to smaller child)\n";
    std::cout << "saved " << modelPath << "\n";
    return 0;
}

int cmdDetect(const std::string& modelPath, const std::string& scenesDir,
              const std::string& outDir, RunConfig& cfg, bool descriptorTouched) {
    const ForestModel model = loadModel(modelPath);
    if (descriptorTouched && !(cfg.descriptor == model.descriptor))
        throw Error("descriptor parameters differ from the model's; the model file is "
                    "authoritative (drop the descriptor.* overrides)");
    const FrameArchive archive = FrameArchive::open(scenesDir);
    fs::create_directories(outDir);
    cfg.save((fs::path(outDir) / "run_config.txt").string());

    std::atomic<size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= archive.size()) return;
            const auto& entry = archive.entries()[i];
            try {
                const RgbdFrame frame = archive.readFrame(entry);
                InferConfig frameCfg = cfg.infer;
                frameCfg.seed = frameSeed(cfg.infer.seed, i);
                const DetectionResult result = detect(frame, model, frameCfg);

                const fs::path base = fs::path(outDir) / entry.id;
                saveHypotheses(result.hypotheses, base.string() + ".hyp.txt");
                writePngGray16(base.string() + ".accum.png", normalizeTo16(result.accumulator));
                writePngGray16(base.string() + ".prob.png",
                               normalizeTo16(result.mask.probability));
                writePngGray8(base.string() + ".mask.png", maskTo8(result.mask.binary));
                writePngGray8(base.string() + ".seg.png", maskTo8(result.segmentation));
                std::array<ImageU8, 3> overlay = frame.rgb;
                drawOverlay(overlay, result.hypotheses, model, frame.intrinsics);
                writePngRgb8(base.string() + ".overlay.png", overlay);
            } catch (const std::exception& e) {
                std::cerr << "frame " << entry.id << ": " << e.what() << "\n";
                ++failures;
            }
        }
    };
    if (cfg.jobs <= 1) {
        worker();
    } else {
        std::vector<std::future<void>> tasks;
        for (int j = 0; j < cfg.jobs; ++j)
            tasks.push_back(std::async(std::launch::async, worker));
        for (auto& t : tasks) t.get();
    }
    if (failures > 0) throw Error(std::to_string(failures.load()) + " frames failed");
    std::cout << "detected over " << archive.size() << " frames into " << outDir << "\n";
    return 0;
}

int cmdEvaluate(const std::string& detectionsDir, const std::string& scenesDir,
                const std::string& outDir, RunConfig& cfg) {
    const FrameArchive archive = FrameArchive::open(scenesDir);
    const ObjectModel object = archiveObject(archive);

    std::vector<FrameEval> frames;
    int gtCount = 0;
    for (const auto& entry : archive.entries()) {
        FrameEval fe;
        fe.frameId = entry.id;
        for (const auto& gt : archive.readGts(entry)) fe.groundTruth.push_back(gt.pose);
        gtCount += static_cast<int>(fe.groundTruth.size());
        const std::string hypPath =
            (fs::path(detectionsDir) / (entry.id + ".hyp.txt")).string();
        if (!fs::exists(hypPath)) throw IoFailure("missing detections for frame: " + hypPath);
        for (const auto& h : loadHypotheses(hypPath)) fe.detections.push_back({h.pose, h.score});
        frames.push_back(std::move(fe));
    }
    if (gtCount == 0) throw NoGroundTruth();

    const EvalOutcome outcome = evaluateDetections(frames, object, cfg.km);
    fs::create_directories(outDir);
    cfg.save((fs::path(outDir) / "run_config.txt").string());

    {
        std::ofstream os(fs::path(outDir) / "pr_curve.txt");
        os << "threshold\tprecision\trecall\n";
        for (const auto& p : outcome.curve.points)
            os << p.threshold << '\t' << p.precision << '\t' << p.recall << "\n";
    }
    {
        std::ofstream os(fs::path(outDir) / "records.txt");
        os << "frame\tscore\tmatch_mm\tcorrect\n";
        for (const auto& r : outcome.records)
            os << r.frameId << '\t' << r.score << '\t' << r.matchScoreMm << '\t'
               << (r.correct ? 1 : 0) << "\n";
    }
    double bestF1 = outcome.curve.f1Best, bestP = 0, bestR = 0;
    for (const auto& p : outcome.curve.points) {
        const double f1 = p.precision + p.recall > 0
                              ? 2 * p.precision * p.recall / (p.precision + p.recall)
                              : 0;
        if (std::abs(f1 - bestF1) < 1e-12) {
            bestP = p.precision;
            bestR = p.recall;
            break;
        }
    }
    {
        std::ofstream os(fs::path(outDir) / "metrics.txt");
        os << "frames " << frames.size() << "\n";
        os << "gt_count " << gtCount << "\n";
        os << "detections " << outcome.records.size() << "\n";
        os << "km " << cfg.km << "\n";
        os << "best_f1 " << bestF1 << "\n";
        os << "precision_at_best " << bestP << "\n";
        os << "recall_at_best " << bestR << "\n";
    }
    std::cout << "F1 " << bestF1 << " (precision " << bestP << ", recall " << bestR << ") over "
              << frames.size() << " frames\n";
    return 0;
}

int cmdExperiment(const std::string& sweepName, std::vector<double> values,
                  const std::string& viewsDir, const std::string& scenesDir,
                  const std::string& outDir, RunConfig& cfg) {
    const SweepKind kind = sweepKindFromName(sweepName);
    if (values.empty()) {
        switch (kind) {
            case SweepKind::PatchFraction:
                values = {0.2, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.8, 1.0};
                break;
            case SweepKind::TreeCount:
                values = {1, 5, 10};
                break;
            case SweepKind::Iterations:
                values = {0, 5, 10};
                break;
            case SweepKind::BagSize:
                values = {2, 5, 8};
                break;
        }
    }

    const FrameArchive viewArchive = FrameArchive::open(viewsDir);
    const FrameArchive sceneArchive = FrameArchive::open(scenesDir);
    const ObjectModel object = archiveObject(viewArchive);
    const std::vector<TrainingView> views =
        loadTrainingViews(viewArchive, cfg.descriptor, cfg.jobs);
    const std::vector<ExperimentScene> scenes = loadScenes(sceneArchive);

    const ExperimentResult result =
        runExperiment(kind, values, views, object, scenes, cfg.train, cfg.infer,
                      cfg.descriptor, cfg.km, cfg.jobs);

    fs::create_directories(outDir);
    cfg.save((fs::path(outDir) / "run_config.txt").string());
    {
        std::ofstream os(fs::path(outDir) / "results.txt");
        os << "sweep\t" << sweepKindName(kind) << "\n";
        os << "setting\tprecision\trecall\tf1\tmean_detect_ms\n";
        for (const auto& row : result.rows)
            os << row.settingValue << '\t' << row.precision << '\t' << row.recall << '\t'
               << row.f1 << '\t' << row.meanDetectMs << "\n";
    }
    for (size_t i = 0; i < result.curves.size(); ++i) {
        std::ostringstream name;
        name << "curve_" << sweepKindName(kind) << "_" << result.rows[i].settingValue << ".txt";
        std::ofstream os(fs::path(outDir) / name.str());
        os << "threshold\tprecision\trecall\n";
        for (const auto& p : result.curves[i].points)
            os << p.threshold << '\t' << p.precision << '\t' << p.recall << "\n";
    }
    for (const auto& row : result.rows)
        std::cout << sweepKindName(kind) << " " << row.settingValue << ": F1 " << row.f1
                  << " (P " << row.precision << ", R " << row.recall << "), "
                  << row.meanDetectMs << " ms/frame\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hough-forest 6-DoF object detection pipeline for RGB-D images"};
    app.require_subcommand(1);

    std::string configPath, outPath, specPath, viewsDir, scenesDir, modelPath, detectionsDir;
    std::string sweepName;
    std::vector<double> sweepValues;
    uint64_t seed = 0;
    bool seedSet = false;
    int jobs = 0;
    std::vector<std::string> overrides;

    app.add_option("--config", configPath, "key-value config file");
    app.add_option("--seed", seed, "global rng seed")->each([&](const std::string&) {
        seedSet = true;
    });
    app.add_option("--jobs", jobs, "worker threads for frame-level parallelism");
    app.add_option("--set", overrides, "config override key=value")->take_all();

    auto* render = app.add_subcommand("render", "render training views or test scenes");
    render->add_option("--spec", specPath, "render spec file")->required();
    render->add_option("--out", outPath, "output archive directory")->required();

    auto* train = app.add_subcommand("train", "train a forest from a view archive");
    train->add_option("--views", viewsDir, "training view archive")->required();
    train->add_option("--out", outPath, "output model file")->required();
    int treesOpt = 0;
    double patchFractionOpt = 0;
    train->add_option("--trees", treesOpt, "tree count");
    train->add_option("--patch-fraction", patchFractionOpt, "patch size fraction");

    auto* detectCmd = app.add_subcommand("detect", "detect over a scene archive");
    detectCmd->add_option("--model", modelPath, "forest model file")->required();
    detectCmd->add_option("--scenes", scenesDir, "scene archive")->required();
    detectCmd->add_option("--out", outPath, "output directory")->required();
    int iterationsOpt = -1, topNOpt = 0;
    detectCmd->add_option("--iterations", iterationsOpt, "leaf-update rounds");
    detectCmd->add_option("--top-n", topNOpt, "hypotheses per round");

    auto* evaluate = app.add_subcommand("evaluate", "score detections against ground truth");
    evaluate->add_option("--detections", detectionsDir, "detect output directory")->required();
    evaluate->add_option("--scenes", scenesDir, "scene archive with ground truth")->required();
    evaluate->add_option("--out", outPath, "output directory")->required();
    double kmOpt = 0;
    evaluate->add_option("--km", kmOpt, "correctness coefficient");

    auto* experiment = app.add_subcommand("experiment", "parameter sweep");
    experiment->add_option("--sweep", sweepName, "patch|trees|iterations|bag")->required();
    experiment->add_option("--values", sweepValues, "sweep settings")->delimiter(',');
    experiment->add_option("--views", viewsDir, "training view archive")->required();
    experiment->add_option("--scenes", scenesDir, "scene archive")->required();
    experiment->add_option("--out", outPath, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        bool descriptorTouched = false;
        if (!configPath.empty()) cfg = RunConfig::load(configPath);
        for (const auto& kv : overrides) {
            const size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("override must be key=value: " + kv);
            const std::string key = kv.substr(0, eq);
            cfg.set(key, kv.substr(eq + 1));
            if (key.rfind("descriptor.", 0) == 0) descriptorTouched = true;
        }
        if (!configPath.empty()) {
            std::ifstream is(configPath);
            std::string key;
            while (is >> key) {
                if (key.rfind("descriptor.", 0) == 0) descriptorTouched = true;
                std::string rest;
                std::getline(is, rest);
            }
        }
        if (seedSet) cfg.seed = seed;
        if (jobs > 0) cfg.jobs = jobs;
        if (treesOpt > 0) cfg.train.treeCount = treesOpt;
        if (patchFractionOpt > 0) cfg.train.patchSizeFraction = patchFractionOpt;
        if (iterationsOpt >= 0) cfg.infer.iterations = iterationsOpt;
        if (topNOpt > 0) cfg.infer.topN = topNOpt;
        if (kmOpt > 0) cfg.km = kmOpt;
        cfg.finalizeSeeds();

        if (render->parsed()) return cmdRender(specPath, outPath, cfg);
        if (train->parsed()) return cmdTrain(viewsDir, outPath, cfg);
        if (detectCmd->parsed())
            return cmdDetect(modelPath, scenesDir, outPath, cfg, descriptorTouched);
        if (evaluate->parsed()) return cmdEvaluate(detectionsDir, scenesDir, outPath, cfg);
        if (experiment->parsed())
            return cmdExperiment(sweepName, sweepValues, viewsDir, scenesDir, outPath, cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        // Input-spec problems on render are usage errors.
        if (render->parsed() && dynamic_cast<const IoFailure*>(&e) != nullptr) return 2;
        return 1;
    }
}
