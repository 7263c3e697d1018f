#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hough6d/io/frame_archive.hpp"
#include "hough6d/io/model_io.hpp"
#include "hough6d/io/png_io.hpp"
#include "hough6d/synth/scene_gen.hpp"

using namespace hough6d;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hough6d_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RgbdFrame randomFrame(std::mt19937_64& rng, const CameraIntrinsics& intr) {
    RgbdFrame f = RgbdFrame::blank(intr);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> depth(0, 4000);
    for (int y = 0; y < intr.height; ++y)
        for (int x = 0; x < intr.width; ++x) {
            for (int c = 0; c < 3; ++c) f.rgb[c](y, x) = static_cast<uint8_t>(byte(rng));
            f.depth(y, x) = static_cast<uint16_t>(depth(rng));
        }
    return f;
}

ForestModel tinyModel() {
    DescriptorParams params;
    const CameraIntrinsics intr = defaultIntrinsics();
    ParametricShape shape = ParametricShape::box("tiny", Vec3d(100, 70, 50), Vec3d(190, 80, 60));
    Primitive ball{PrimitiveKind::Sphere, Vec3d(30, 0, 0), Vec3d(60, 90, 190),
                   Pose6D(Quatd::Identity(), Vec3d(-30, 10, 40))};
    shape.addPart(ball);
    const ViewSphere sphere = subdivideIcosahedron(0, 1000);
    std::vector<TrainingView> views;
    const std::vector<Pose6D> poses = trainingViewPoses(sphere, {0.0, 0.6});
    for (size_t i = 0; i < poses.size(); ++i) {
        RenderedView rv = renderView(shape, poses[i], intr);
        rv.viewId = static_cast<int>(i);
        views.push_back(makeTrainingView(rv, params));
    }
    TrainConfig cfg;
    cfg.treeCount = 2;
    cfg.patchesPerView = 6;
    cfg.minSamples = 10;
    std::mt19937_64 rng(cfg.seed);
    const std::vector<PatchTemplate> patches = samplePatches(views, cfg, params, rng);
    return trainForest(views, patches, makeObjectModel(shape, 600), cfg, params);
}

std::vector<uint8_t> readAll(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("png round trips are bit exact") {
    TempDir tmp;
    std::mt19937_64 rng(3);
    const CameraIntrinsics intr{450, 450, 24, 18, 48, 36};
    const RgbdFrame f = randomFrame(rng, intr);

    const std::string rgbPath = (tmp.path / "c.png").string();
    const std::string depthPath = (tmp.path / "d.png").string();
    writePngRgb8(rgbPath, f.rgb);
    writePngGray16(depthPath, f.depth);

    const auto rgb = readPngRgb8(rgbPath);
    const ImageU16 depth = readPngGray16(depthPath);
    for (int c = 0; c < 3; ++c) CHECK(rgb[c] == f.rgb[c]);
    CHECK(depth == f.depth);
}

TEST_CASE("frame archive round trip with ground truth") {
    TempDir tmp;
    std::mt19937_64 rng(5);
    const CameraIntrinsics intr{450, 450, 24, 18, 48, 36};
    FrameArchive archive = FrameArchive::create((tmp.path / "set").string(), intr);
    const RgbdFrame f = randomFrame(rng, intr);

    std::vector<GtEntry> gts;
    gts.push_back({"widget", Pose6D::fromEuler(0.1, 0.2, 0.3, Vec3d(10, -20, 900)), 0.8});
    gts.push_back({"widget", Pose6D::fromEuler(-0.4, 0.0, 1.0, Vec3d(-5, 12, 1100)), 1.0});
    const std::string id = archive.writeFrame(f, gts);

    const FrameArchive reopened = FrameArchive::open((tmp.path / "set").string());
    REQUIRE(reopened.size() == 1);
    const RgbdFrame back = reopened.readFrame(reopened.entries()[0]);
    for (int c = 0; c < 3; ++c) CHECK(back.rgb[c] == f.rgb[c]);
    CHECK(back.depth == f.depth);

    const std::vector<GtEntry> parsed = reopened.readGts(reopened.entries()[0]);
    REQUIRE(parsed.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(parsed[i].objectId == "widget");
        CHECK((parsed[i].pose.rotationMatrix() - gts[i].pose.rotationMatrix()).norm() < 1e-9);
        CHECK((parsed[i].pose.translation() - gts[i].pose.translation()).norm() < 1e-9);
        CHECK(parsed[i].visibility == doctest::Approx(gts[i].visibility));
    }

    SUBCASE("empty gt list is a valid frame") {
        FrameArchive a2 = FrameArchive::create((tmp.path / "set2").string(), intr);
        a2.writeFrame(f, {});
        const FrameArchive r2 = FrameArchive::open((tmp.path / "set2").string());
        REQUIRE(r2.size() == 1);
        CHECK(r2.readGts(r2.entries()[0]).empty());
    }

    SUBCASE("partial writes are not indexed") {
        // Simulate a crash: rgb + depth present, gt missing.
        fs::copy(tmp.path / "set" / (id + ".rgb.png"), tmp.path / "set" / "zzz.rgb.png");
        fs::copy(tmp.path / "set" / (id + ".depth.png"), tmp.path / "set" / "zzz.depth.png");
        const FrameArchive r3 = FrameArchive::open((tmp.path / "set").string());
        CHECK(r3.size() == 1);
    }
}

TEST_CASE("archive object file round trips") {
    TempDir tmp;
    const CameraIntrinsics intr = defaultIntrinsics();
    FrameArchive archive = FrameArchive::create((tmp.path / "set").string(), intr);
    ParametricShape shape = ParametricShape::cylinder("cup", 35, 90, Vec3d(200, 40, 40));
    archive.writeObject(shape, true);

    CHECK(archive.hasObject());
    bool symmetric = false;
    const ParametricShape back = archive.readObjectShape(&symmetric);
    CHECK(symmetric);
    CHECK(back.id == "cup");
    REQUIRE(back.parts.size() == 1);
    CHECK(back.parts[0].kind == PrimitiveKind::Cylinder);
    CHECK(back.parts[0].dims.x() == 35.0);
    CHECK(back.parts[0].dims.y() == 90.0);
}

TEST_CASE("external layout loader") {
    const std::string root = "fixtures/linemod_mini";
    REQUIRE(fs::exists(root));  // run tests from the tests/ directory
    const FrameArchive archive = loadLinemodLayout(root);
    CHECK(archive.size() == 3);

    const RgbdFrame f = archive.readFrame(archive.entries()[0]);
    CHECK(f.width() == 32);
    CHECK(f.height() == 24);

    for (const auto& entry : archive.entries()) {
        const std::vector<GtEntry> gts = archive.readGts(entry);
        REQUIRE(gts.size() == 1);
        CHECK(gts[0].objectId == "widget");
        // Conversion preserves orthonormality and scales meters to mm.
        const Mat3d r = gts[0].pose.rotationMatrix();
        CHECK((r * r.transpose() - Mat3d::Identity()).norm() < 1e-6);
        CHECK(gts[0].pose.translation().norm() > 100.0);  // mm scale
        CHECK(gts[0].pose.translation().norm() < 3000.0);
    }

    SUBCASE("missing depth file raises LayoutMismatch naming it") {
        TempDir tmp;
        fs::create_directories(tmp.path / "bad" / "rgb");
        fs::create_directories(tmp.path / "bad" / "depth");
        fs::create_directories(tmp.path / "bad" / "gt");
        fs::copy(fs::path(root) / "camera.txt", tmp.path / "bad" / "camera.txt");
        fs::copy(fs::path(root) / "rgb" / "000000.png", tmp.path / "bad" / "rgb" / "000000.png");
        fs::copy(fs::path(root) / "gt" / "000000.txt", tmp.path / "bad" / "gt" / "000000.txt");
        try {
            loadLinemodLayout((tmp.path / "bad").string());
            FAIL("expected LayoutMismatch");
        } catch (const LayoutMismatch& e) {
            CHECK(std::string(e.what()).find("depth") != std::string::npos);
            CHECK(std::string(e.what()).find("000000") != std::string::npos);
        }
    }
}

TEST_CASE("model serialization") {
    static const ForestModel model = tinyModel();
    TempDir tmp;
    const std::string path = (tmp.path / "forest.bin").string();
    saveModel(model, path);

    SUBCASE("save-load-save is byte identical") {
        const ForestModel loaded = loadModel(path);
        const std::string path2 = (tmp.path / "forest2.bin").string();
        saveModel(loaded, path2);
        CHECK(readAll(path) == readAll(path2));
    }

    SUBCASE("loaded model routes 1000 probes identically") {
        const ForestModel loaded = loadModel(path);
        REQUIRE(loaded.trees.size() == model.trees.size());

        // Random synthetic scene maps as probes.
        std::mt19937_64 rng(17);
        const CameraIntrinsics intr = defaultIntrinsics();
        ParametricShape shape =
            ParametricShape::box("tiny", Vec3d(100, 70, 50), Vec3d(190, 80, 60));
        const RenderedView rv =
            renderView(shape, Pose6D::fromEuler(0.5, -0.3, 0.2, Vec3d(0, 0, 1000)), intr);
        const SceneFeatureMap scene = extractOrientations(rv.frame, 120, 2);
        std::uniform_int_distribution<int> px(0, intr.width - 1), py(0, intr.height - 1);
        int probes = 0;
        while (probes < 1000) {
            const Vec2i at(px(rng), py(rng));
            if (!scene.validDepthAt(at.x(), at.y())) continue;
            for (size_t t = 0; t < model.trees.size(); ++t)
                CHECK(route(model.trees[t], scene, at, model.descriptor) ==
                      route(loaded.trees[t], scene, at, loaded.descriptor));
            ++probes;
        }
    }

    SUBCASE("truncated file is corrupt") {
        const std::vector<uint8_t> bytes = readAll(path);
        const std::string cut = (tmp.path / "cut.bin").string();
        std::ofstream os(cut, std::ios::binary);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size() - 15));
        os.close();
        CHECK_THROWS_AS(loadModel(cut), CorruptModel);
    }

    SUBCASE("flipped payload byte fails the checksum") {
        std::vector<uint8_t> bytes = readAll(path);
        bytes[bytes.size() - 3] ^= 0x40;
        const std::string bad = (tmp.path / "bad.bin").string();
        std::ofstream os(bad, std::ios::binary);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
        os.close();
        CHECK_THROWS_AS(loadModel(bad), CorruptModel);
    }

    SUBCASE("future version is rejected cleanly") {
        std::vector<uint8_t> bytes = readAll(path);
        bytes[8] += 1;  // u32 version straight after the magic
        const std::string future = (tmp.path / "future.bin").string();
        std::ofstream os(future, std::ios::binary);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
        os.close();
        CHECK_THROWS_AS(loadModel(future), VersionMismatch);
    }

    SUBCASE("not a model file") {
        const std::string junk = (tmp.path / "junk.bin").string();
        std::ofstream os(junk, std::ios::binary);
        os << "definitely not a forest";
        os.close();
        CHECK_THROWS_AS(loadModel(junk), CorruptModel);
        CHECK_THROWS_AS(loadModel((tmp.path / "missing.bin").string()), IoFailure);
    }
}

TEST_CASE("fixed seed training yields identical model files") {
    TempDir tmp;
    const ForestModel a = tinyModel();
    const ForestModel b = tinyModel();
    const std::string pa = (tmp.path / "a.bin").string(), pb = (tmp.path / "b.bin").string();
    saveModel(a, pa);
    saveModel(b, pb);
    CHECK(readAll(pa) == readAll(pb));
}
