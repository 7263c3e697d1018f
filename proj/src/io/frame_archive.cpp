#include "hough6d/io/frame_archive.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hough6d/io/png_io.hpp"
#include "hough6d/synth/render.hpp"

namespace fs = std::filesystem;

namespace hough6d {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void atomicWriteText(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoFailure("cannot open for write: " + tmp);
        os << text;
        if (!os) throw IoFailure("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoFailure("rename failed: " + path);
}

std::string readTextFile(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoFailure("cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void writeCamera(const std::string& path, const CameraIntrinsics& intr) {
    std::ostringstream os;
    os << "camera_version 1\n"
       << fmt(intr.fx) << ' ' << fmt(intr.fy) << ' ' << fmt(intr.cx) << ' ' << fmt(intr.cy)
       << ' ' << intr.width << ' ' << intr.height << "\n";
    atomicWriteText(path, os.str());
}

CameraIntrinsics readCamera(const std::string& path) {
    std::istringstream is(readTextFile(path));
    std::string tok;
    int version = 0;
    is >> tok >> version;
    if (tok != "camera_version" || version != 1)
        throw LayoutMismatch("bad camera file: " + path);
    CameraIntrinsics intr;
    is >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.width >> intr.height;
    if (!is || !intr.valid()) throw LayoutMismatch("bad intrinsics in " + path);
    return intr;
}

}  // namespace

std::string writeGtText(const std::vector<GtEntry>& gts) {
    std::ostringstream os;
    os << "gt_version 1\n";
    for (const auto& gt : gts) {
        os << gt.objectId << ' ' << fmt(gt.visibility);
        const Mat3d r = gt.pose.rotationMatrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) os << ' ' << fmt(r(i, j));
        for (int i = 0; i < 3; ++i) os << ' ' << fmt(gt.pose.translation()[i]);
        os << "\n";
    }
    return os.str();
}

std::vector<GtEntry> parseGtText(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    int version = 0;
    is >> tok >> version;
    if (tok != "gt_version" || version != 1) throw IoFailure("bad gt header");
    std::vector<GtEntry> gts;
    GtEntry gt;
    while (is >> gt.objectId) {
        Mat3d r;
        Vec3d t;
        is >> gt.visibility;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) is >> r(i, j);
        for (int i = 0; i < 3; ++i) is >> t[i];
        if (!is) throw IoFailure("truncated gt entry");
        gt.pose = Pose6D(r, t);
        gts.push_back(gt);
    }
    return gts;
}

FrameArchive FrameArchive::create(const std::string& root, const CameraIntrinsics& intr) {
    fs::create_directories(root);
    FrameArchive archive;
    archive.root_ = root;
    archive.intrinsics_ = intr;
    writeCamera((fs::path(root) / "camera.txt").string(), intr);
    return archive;
}

FrameArchive FrameArchive::open(const std::string& root) {
    FrameArchive archive;
    archive.root_ = root;
    archive.intrinsics_ = readCamera((fs::path(root) / "camera.txt").string());

    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = ".rgb.png";
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
        Entry e;
        e.id = id;
        e.rgbPath = (fs::path(root) / (id + ".rgb.png")).string();
        e.depthPath = (fs::path(root) / (id + ".depth.png")).string();
        e.gtPath = (fs::path(root) / (id + ".gt.txt")).string();
        if (!fs::exists(e.depthPath) || !fs::exists(e.gtPath)) continue;  // partial write
        const std::string scenePath = (fs::path(root) / (id + ".scene.txt")).string();
        if (fs::exists(scenePath)) e.scenePath = scenePath;
        archive.entries_.push_back(std::move(e));
    }
    return archive;
}

std::string FrameArchive::writeFrame(const RgbdFrame& frame, const std::vector<GtEntry>& gts) {
    std::ostringstream id;
    id << std::setw(6) << std::setfill('0') << entries_.size();
    return writeFrameAs(id.str(), frame, gts);
}

std::string FrameArchive::writeFrameAs(const std::string& id, const RgbdFrame& frame,
                                       const std::vector<GtEntry>& gts) {
    Entry e;
    e.id = id;
    e.rgbPath = (fs::path(root_) / (id + ".rgb.png")).string();
    e.depthPath = (fs::path(root_) / (id + ".depth.png")).string();
    e.gtPath = (fs::path(root_) / (id + ".gt.txt")).string();
    writePngRgb8(e.rgbPath, frame.rgb);
    writePngGray16(e.depthPath, frame.depth);
    atomicWriteText(e.gtPath, writeGtText(gts));  // gt last: completes the frame
    entries_.push_back(e);
    return id;
}

RgbdFrame FrameArchive::readFrame(const Entry& entry) const {
    RgbdFrame frame;
    frame.rgb = readPngRgb8(entry.rgbPath);
    frame.depth = readPngGray16(entry.depthPath);
    frame.intrinsics = intrinsics_;
    if (frame.depth.rows() != intrinsics_.height || frame.depth.cols() != intrinsics_.width ||
        frame.rgb[0].rows() != frame.depth.rows() || frame.rgb[0].cols() != frame.depth.cols())
        throw IoFailure("frame size does not match intrinsics: " + entry.id);
    return frame;
}

std::vector<GtEntry> FrameArchive::readGts(const Entry& entry) const {
    if (!external_) return parseGtText(readTextFile(entry.gtPath));
    // External convention: no header, no visibility, translation in meters.
    std::istringstream is(readTextFile(entry.gtPath));
    std::vector<GtEntry> gts;
    GtEntry gt;
    while (is >> gt.objectId) {
        Mat3d r;
        Vec3d t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) is >> r(i, j);
        for (int i = 0; i < 3; ++i) is >> t[i];
        if (!is) throw LayoutMismatch("truncated gt entry in " + entry.gtPath);
        gt.pose = Pose6D(r, t * 1000.0);  // meters -> millimeters
        gt.visibility = 1.0;
        gts.push_back(gt);
    }
    return gts;
}

void FrameArchive::writeObject(const ParametricShape& shape, bool symmetric) {
    std::ostringstream os;
    os << "object_version 1\n";
    os << "symmetric " << (symmetric ? 1 : 0) << "\n";
    writeShapeBlock(os, shape);
    atomicWriteText((fs::path(root_) / "object.txt").string(), os.str());
}

bool FrameArchive::hasObject() const {
    return fs::exists(fs::path(root_) / "object.txt");
}

ParametricShape FrameArchive::readObjectShape(bool* symmetric) const {
    std::istringstream is(readTextFile((fs::path(root_) / "object.txt").string()));
    std::string tok;
    int version = 0, sym = 0;
    is >> tok >> version;
    if (tok != "object_version" || version != 1) throw IoFailure("bad object file");
    is >> tok >> sym;
    if (tok != "symmetric") throw IoFailure("bad object file");
    is >> tok;
    if (tok != "shape") throw IoFailure("bad object file");
    if (symmetric) *symmetric = sym != 0;
    return readShapeBlock(is);
}

FrameArchive loadLinemodLayout(const std::string& root) {
    const fs::path rootPath(root);
    if (!fs::exists(rootPath / "camera.txt"))
        throw LayoutMismatch("missing " + (rootPath / "camera.txt").string());
    FrameArchive archive;
    archive.root_ = root;
    archive.intrinsics_ = readCamera((rootPath / "camera.txt").string());
    archive.external_ = true;

    const fs::path rgbDir = rootPath / "rgb";
    if (!fs::is_directory(rgbDir)) throw LayoutMismatch("missing " + rgbDir.string());
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(rgbDir)) {
        if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
        FrameArchive::Entry e;
        e.id = id;
        e.rgbPath = (rgbDir / (id + ".png")).string();
        e.depthPath = (rootPath / "depth" / (id + ".png")).string();
        e.gtPath = (rootPath / "gt" / (id + ".txt")).string();
        if (!fs::exists(e.depthPath)) throw LayoutMismatch("missing " + e.depthPath);
        if (!fs::exists(e.gtPath)) throw LayoutMismatch("missing " + e.gtPath);
        archive.entries_.push_back(std::move(e));
    }
    return archive;
}

}  // namespace hough6d
