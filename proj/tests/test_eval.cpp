#include <doctest.h>

#include <random>

#include "hough6d/eval/metrics.hpp"
#include "hough6d/synth/shapes.hpp"
#include "reference.hpp"

using namespace hough6d;

namespace {

ObjectModel randomModel(std::mt19937_64& rng, int vertexCount, double scale = 80.0) {
    std::uniform_real_distribution<double> coord(-scale, scale);
    std::vector<Vec3d> verts;
    for (int i = 0; i < vertexCount; ++i)
        verts.push_back({coord(rng), coord(rng), coord(rng)});
    return ObjectModel::fromVertices("random", verts);
}

Pose6D randomPose(std::mt19937_64& rng, double tRange = 300.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-tRange, tRange);
    Quatd q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return Pose6D(q, Vec3d(uni(rng), uni(rng), uni(rng)));
}

}  // namespace

TEST_CASE("identity and pure translation scores") {
    std::mt19937_64 rng(3);
    const ObjectModel model = randomModel(rng, 200);
    const Pose6D gt = randomPose(rng);
    CHECK(matchScoreNonSym(model, gt, gt) == 0.0);
    CHECK(matchScoreSym(model, gt, gt) == 0.0);

    Pose6D shifted = gt;
    shifted.translation() += gt.rotation() * Vec3d(0, 0, 0);  // no-op
    shifted = Pose6D(gt.rotation(), gt.translation() + Vec3d(10, 0, 0));
    CHECK(matchScoreNonSym(model, gt, shifted) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("rotation score matches the brute-force summation oracle") {
    std::mt19937_64 rng(7);
    const ObjectModel model = randomModel(rng, 150, 100.0);
    const Pose6D gt = randomPose(rng);
    const Pose6D est = compose(gt, Pose6D::fromEuler(0, 0, 10.0 * M_PI / 180.0, Vec3d::Zero()));
    const double lib = matchScoreNonSym(model, gt, est);
    const double oracle = testref::matchScoreNonSymRef(model.vertices, gt, est);
    CHECK(lib == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("grid-accelerated symmetric score equals brute force exactly") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const ObjectModel model = randomModel(rng, 120);
        const Pose6D gt = randomPose(rng, 150);
        Pose6D est = randomPose(rng, 150);
        if (trial % 3 == 0) est = Pose6D(gt.rotation(), gt.translation() + Vec3d(2, -3, 5));
        const double lib = matchScoreSym(model, gt, est);
        const double oracle = testref::matchScoreSymRef(model.vertices, gt, est);
        CHECK(lib == oracle);  // exact: same minima, same summation order
    }
}

TEST_CASE("symmetric score never exceeds the non-symmetric score") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const ObjectModel model = randomModel(rng, 40);
        const Pose6D gt = randomPose(rng);
        const Pose6D est = randomPose(rng);
        CHECK(matchScoreSym(model, gt, est) <= matchScoreNonSym(model, gt, est) + 1e-12);
    }
}

TEST_CASE("sphere rotated about its center scores near zero symmetrically") {
    const ParametricShape ball = ParametricShape::sphere("b", 50, Vec3d(1, 1, 1));
    const ObjectModel model = makeObjectModel(ball, 500);
    const Pose6D gt(Quatd::Identity(), Vec3d(10, 20, 800));
    const Pose6D est = compose(gt, Pose6D::fromEuler(0.4, 0.7, -1.1, Vec3d::Zero()));
    // Bounded by the surface sampling resolution.
    const double area = 4 * M_PI * 50 * 50;
    const double sampleSpacing = std::sqrt(area / model.vertices.size());
    CHECK(matchScoreSym(model, gt, est) < sampleSpacing);
    CHECK(matchScoreNonSym(model, gt, est) > 3 * sampleSpacing);  // non-sym is fooled
}

TEST_CASE("both scores are invariant under a global rigid transform") {
    std::mt19937_64 rng(17);
    const ObjectModel model = randomModel(rng, 80);
    for (int trial = 0; trial < 50; ++trial) {
        const Pose6D gt = randomPose(rng), est = randomPose(rng), g = randomPose(rng);
        const double nonSym = matchScoreNonSym(model, gt, est);
        const double nonSymMoved = matchScoreNonSym(model, compose(g, gt), compose(g, est));
        CHECK(nonSym == doctest::Approx(nonSymMoved).epsilon(1e-9));
        const double sym = matchScoreSym(model, gt, est);
        const double symMoved = matchScoreSym(model, compose(g, gt), compose(g, est));
        CHECK(sym == doctest::Approx(symMoved).epsilon(1e-9));
    }
}

TEST_CASE("empty model throws") {
    ObjectModel empty;
    CHECK_THROWS_AS(matchScoreNonSym(empty, Pose6D(), Pose6D()), EmptyModel);
    CHECK_THROWS_AS(matchScoreSym(empty, Pose6D(), Pose6D()), EmptyModel);
}

TEST_CASE("correctness rule is inclusive at the threshold") {
    CHECK(isCorrect(0.0, 0.15, 100.0));
    CHECK(isCorrect(15.0, 0.15, 100.0));       // m = 0.15 d exactly
    CHECK_FALSE(isCorrect(16.0, 0.15, 100.0)); // m = 0.16 d
    // Monotone in m.
    for (double m = 0; m < 30; m += 1.3)
        if (!isCorrect(m, 0.15, 100.0)) CHECK_FALSE(isCorrect(m + 1, 0.15, 100.0));
}

TEST_CASE("perfect and inverted detection sets bound the F1") {
    std::mt19937_64 rng(23);
    const ObjectModel model = randomModel(rng, 60);
    std::vector<FrameEval> frames;
    for (int i = 0; i < 5; ++i) {
        FrameEval fe;
        fe.frameId = "f" + std::to_string(i);
        const Pose6D gt = randomPose(rng);
        fe.groundTruth.push_back(gt);
        fe.detections.push_back({gt, 1.0 - i * 0.1});
        frames.push_back(fe);
    }
    const EvalOutcome perfect = evaluateDetections(frames, model);
    CHECK(perfect.curve.f1Best == doctest::Approx(1.0));

    // Shuffle poses so nothing matches.
    std::vector<FrameEval> wrong = frames;
    for (auto& fe : wrong)
        fe.detections[0].first =
            Pose6D(fe.detections[0].first.rotation(),
                   fe.detections[0].first.translation() + Vec3d(5000, 0, 0));
    const EvalOutcome failed = evaluateDetections(wrong, model);
    CHECK(failed.curve.f1Best == 0.0);
}

TEST_CASE("hand-built five-record sweep matches the hand-computed table") {
    // Five detections over four ground-truth instances; labels chosen by
    // construction: scores 0.9 (TP), 0.8 (FP), 0.7 (TP), 0.6 (FP), 0.5 (TP).
    std::vector<DetectionRecord> records(5);
    const double scores[5] = {0.9, 0.8, 0.7, 0.6, 0.5};
    const bool correct[5] = {true, false, true, false, true};
    for (int i = 0; i < 5; ++i) {
        records[i].score = scores[i];
        records[i].correct = correct[i];
    }
    const PrCurve curve = prSweep(records, 4);

    // Hand-computed: threshold 0.9: P=1/1, R=1/4; 0.8: P=1/2, R=1/4;
    // 0.7: P=2/3, R=2/4; 0.6: P=2/4, R=2/4; 0.5: P=3/5, R=3/4.
    REQUIRE(curve.points.size() == 5);
    CHECK(curve.points[0].precision == doctest::Approx(1.0));
    CHECK(curve.points[0].recall == doctest::Approx(0.25));
    CHECK(curve.points[1].precision == doctest::Approx(0.5));
    CHECK(curve.points[1].recall == doctest::Approx(0.25));
    CHECK(curve.points[2].precision == doctest::Approx(2.0 / 3.0));
    CHECK(curve.points[2].recall == doctest::Approx(0.5));
    CHECK(curve.points[3].precision == doctest::Approx(0.5));
    CHECK(curve.points[3].recall == doctest::Approx(0.5));
    CHECK(curve.points[4].precision == doctest::Approx(0.6));
    CHECK(curve.points[4].recall == doctest::Approx(0.75));

    // Best F1: max over the five points: F1(0.5 thresh) = 2*0.6*0.75/1.35.
    CHECK(curve.f1Best == doctest::Approx(2.0 * 0.6 * 0.75 / 1.35));

    // Monotonicity: recall never rises as the threshold rises.
    for (size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].recall >= curve.points[i - 1].recall - 1e-12);
}

TEST_CASE("harmonic mean sanity") {
    std::vector<DetectionRecord> records(2);
    records[0].score = 1.0;
    records[0].correct = true;
    records[1].score = 0.9;
    records[1].correct = false;
    // At threshold 0.9: P = 0.5, R = 0.5 (2 gt), F1 = 0.5.
    const PrCurve curve = prSweep(records, 2);
    const PrPoint& at09 = curve.points.back();
    CHECK(at09.precision == doctest::Approx(0.5));
    CHECK(at09.recall == doctest::Approx(0.5));
    CHECK(2 * at09.precision * at09.recall / (at09.precision + at09.recall) ==
          doctest::Approx(0.5));
}

TEST_CASE("each ground truth matches at most one detection") {
    std::mt19937_64 rng(29);
    const ObjectModel model = randomModel(rng, 60);
    FrameEval fe;
    fe.frameId = "f";
    const Pose6D gt = randomPose(rng);
    fe.groundTruth.push_back(gt);
    // Two detections on the same instance: only the higher-scored is a TP.
    fe.detections.push_back({gt, 0.9});
    fe.detections.push_back({gt, 0.8});
    const EvalOutcome out = evaluateDetections({fe}, model);
    int tp = 0, fp = 0;
    for (const auto& r : out.records) (r.correct ? tp : fp)++;
    CHECK(tp == 1);
    CHECK(fp == 1);
    CHECK_THROWS_AS(prSweep(out.records, 0), NoGroundTruth);
}
