#include "hough6d/io/model_io.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

namespace hough6d {

namespace {

constexpr char kMagic[8] = {'H', '6', 'D', 'F', 'O', 'R', 'S', 'T'};

class Writer {
public:
    void u8(uint8_t v) { raw(&v, 1); }
    void u32(uint32_t v) { raw(&v, 4); }
    void i32(int32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void vec3(const Vec3d& v) {
        f64(v.x());
        f64(v.y());
        f64(v.z());
    }
    void quat(const Quatd& q) {
        f64(q.w());
        f64(q.x());
        f64(q.y());
        f64(q.z());
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<uint8_t> buf_;
};

class Reader {
public:
    Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint8_t u8() { return get<uint8_t>(); }
    uint32_t u32() { return get<uint32_t>(); }
    int32_t i32() { return get<int32_t>(); }
    uint64_t u64() { return get<uint64_t>(); }
    double f64() { return get<double>(); }
    Vec3d vec3() {
        Vec3d v;
        v.x() = f64();
        v.y() = f64();
        v.z() = f64();
        return v;
    }
    Quatd quat() {
        const double w = f64(), x = f64(), y = f64(), z = f64();
        return Quatd(w, x, y, z);
    }
    std::string str() {
        const uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    bool atEnd() const { return pos_ == size_; }

private:
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(size_t n) const {
        if (pos_ + n > size_) throw CorruptModel("truncated model payload");
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

void writeTemplate(Writer& w, const PatchTemplate& t) {
    w.u32(static_cast<uint32_t>(t.features.size()));
    for (const auto& f : t.features) {
        w.u8(static_cast<uint8_t>(f.modality));
        w.u8(f.bin);
        w.f64(f.offset.x());
        w.f64(f.offset.y());
        w.f64(f.depthDelta);
    }
    w.f64(t.centerDepth);
    w.vec3(t.voteOffset);
    w.quat(t.voteRotation);
    w.i32(t.sourceViewId);
    w.i32(t.centerPixel.x());
    w.i32(t.centerPixel.y());
}

PatchTemplate readTemplate(Reader& r) {
    PatchTemplate t;
    const uint32_t n = r.u32();
    t.features.resize(n);
    for (auto& f : t.features) {
        f.modality = static_cast<Modality>(r.u8());
        f.bin = r.u8();
        f.offset.x() = r.f64();
        f.offset.y() = r.f64();
        f.depthDelta = r.f64();
    }
    t.centerDepth = r.f64();
    t.voteOffset = r.vec3();
    t.voteRotation = r.quat();
    t.sourceViewId = r.i32();
    t.centerPixel.x() = r.i32();
    t.centerPixel.y() = r.i32();
    return t;
}

}  // namespace

std::vector<uint8_t> serializeModel(const ForestModel& model) {
    Writer w;
    // Descriptor parameters.
    w.f64(model.descriptor.gradientThreshold);
    w.f64(model.descriptor.normalSmoothing);
    w.i32(model.descriptor.featureBudget);
    w.f64(model.descriptor.canonicalDepthMm);
    w.f64(model.descriptor.depthToleranceMm);
    // Object geometry.
    w.str(model.objectId);
    w.f64(model.objectDiameter);
    w.u8(model.objectSymmetric ? 1 : 0);
    w.vec3(model.objectBoundsMin);
    w.vec3(model.objectBoundsMax);
    w.u32(static_cast<uint32_t>(model.objectPoints.size()));
    for (const auto& p : model.objectPoints) w.vec3(p);
    // Training configuration and stats.
    w.i32(model.config.treeCount);
    w.f64(model.config.patchSizeFraction);
    w.i32(model.config.maxDepth);
    w.i32(model.config.minSamples);
    w.i32(model.config.candidateTemplates);
    w.i32(model.config.thresholdsPerTemplate);
    w.f64(model.config.sampleFraction);
    w.i32(model.config.patchesPerView);
    w.u64(model.config.seed);
    w.f64(model.stats.balance);
    w.i32(model.stats.splitNodeCount);
    w.i32(model.stats.leafCount);
    w.i32(model.stats.maxDepthReached);
    // Trees in preorder (nodes are stored in construction order with
    // explicit child indices).
    w.u32(static_cast<uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        w.u32(static_cast<uint32_t>(tree.nodes.size()));
        for (const auto& node : tree.nodes) {
            w.u8(node.isLeaf ? 1 : 0);
            if (!node.isLeaf) {
                writeTemplate(w, node.splitTemplate);
                w.f64(node.threshold);
                w.i32(node.left);
                w.i32(node.right);
            } else {
                const Leaf& leaf = node.leaf;
                w.u32(static_cast<uint32_t>(leaf.patchIndices.size()));
                for (uint32_t idx : leaf.patchIndices) w.u32(idx);
                w.u32(static_cast<uint32_t>(leaf.voteModes.size()));
                for (const auto& mode : leaf.voteModes) {
                    w.vec3(mode.offset);
                    w.quat(mode.rotation);
                    w.u32(mode.support);
                }
                w.f64(leaf.supportTotal);
                w.f64(leaf.pFg);
                w.u64(leaf.tallyFg);
                w.u64(leaf.tallyTotal);
            }
        }
    }
    return w.take();
}

ForestModel deserializeModel(const std::vector<uint8_t>& bytes) {
    Reader r(bytes.data(), bytes.size());
    ForestModel model;
    model.descriptor.gradientThreshold = r.f64();
    model.descriptor.normalSmoothing = r.f64();
    model.descriptor.featureBudget = r.i32();
    model.descriptor.canonicalDepthMm = r.f64();
    model.descriptor.depthToleranceMm = r.f64();
    model.objectId = r.str();
    model.objectDiameter = r.f64();
    model.objectSymmetric = r.u8() != 0;
    model.objectBoundsMin = r.vec3();
    model.objectBoundsMax = r.vec3();
    model.objectPoints.resize(r.u32());
    for (auto& p : model.objectPoints) p = r.vec3();
    model.config.treeCount = r.i32();
    model.config.patchSizeFraction = r.f64();
    model.config.maxDepth = r.i32();
    model.config.minSamples = r.i32();
    model.config.candidateTemplates = r.i32();
    model.config.thresholdsPerTemplate = r.i32();
    model.config.sampleFraction = r.f64();
    model.config.patchesPerView = r.i32();
    model.config.seed = r.u64();
    model.stats.balance = r.f64();
    model.stats.splitNodeCount = r.i32();
    model.stats.leafCount = r.i32();
    model.stats.maxDepthReached = r.i32();
    const uint32_t treeCount = r.u32();
    model.trees.resize(treeCount);
    for (auto& tree : model.trees) {
        const uint32_t nodeCount = r.u32();
        tree.nodes.resize(nodeCount);
        for (auto& node : tree.nodes) {
            node.isLeaf = r.u8() != 0;
            if (!node.isLeaf) {
                node.splitTemplate = readTemplate(r);
                node.threshold = r.f64();
                node.left = r.i32();
                node.right = r.i32();
                if (node.left < 0 || node.right < 0 ||
                    node.left >= static_cast<int32_t>(nodeCount) ||
                    node.right >= static_cast<int32_t>(nodeCount))
                    throw CorruptModel("bad child index");
            } else {
                Leaf& leaf = node.leaf;
                leaf.patchIndices.resize(r.u32());
                for (auto& idx : leaf.patchIndices) idx = r.u32();
                leaf.voteModes.resize(r.u32());
                for (auto& mode : leaf.voteModes) {
                    mode.offset = r.vec3();
                    mode.rotation = r.quat();
                    mode.support = r.u32();
                }
                leaf.supportTotal = r.f64();
                leaf.pFg = r.f64();
                leaf.tallyFg = r.u64();
                leaf.tallyTotal = r.u64();
            }
        }
    }
    if (!r.atEnd()) throw CorruptModel("trailing bytes in model payload");
    return model;
}

void saveModel(const ForestModel& model, const std::string& path) {
    const std::vector<uint8_t> payload = serializeModel(model);
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
    const uint32_t version = kModelFormatVersion;
    const uint64_t length = payload.size();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoFailure("cannot open for write: " + tmp);
        os.write(kMagic, sizeof(kMagic));
        os.write(reinterpret_cast<const char*>(&version), 4);
        os.write(reinterpret_cast<const char*>(&crc), 4);
        os.write(reinterpret_cast<const char*>(&length), 8);
        os.write(reinterpret_cast<const char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size()));
        if (!os) throw IoFailure("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoFailure("rename failed: " + path);
}

ForestModel loadModel(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoFailure("cannot open: " + path);
    char magic[8];
    uint32_t version = 0, crc = 0;
    uint64_t length = 0;
    is.read(magic, sizeof(magic));
    is.read(reinterpret_cast<char*>(&version), 4);
    is.read(reinterpret_cast<char*>(&crc), 4);
    is.read(reinterpret_cast<char*>(&length), 8);
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CorruptModel("bad header: " + path);
    if (version != kModelFormatVersion)
        throw VersionMismatch("model version " + std::to_string(version));

    std::vector<uint8_t> payload(length);
    is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(length));
    if (static_cast<uint64_t>(is.gcount()) != length) throw CorruptModel("truncated: " + path);
    const uint32_t actual = static_cast<uint32_t>(
        crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
    if (actual != crc) throw CorruptModel("checksum mismatch: " + path);
    return deserializeModel(payload);
}

}  // namespace hough6d
