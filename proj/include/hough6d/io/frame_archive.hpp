#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hough6d/synth/shapes.hpp"

namespace hough6d {

struct GtEntry {
    std::string objectId;
    Pose6D pose;
    double visibility = 1.0;
};

/// Directory of frames: <id>.rgb.png, <id>.depth.png, <id>.gt.txt plus
/// camera.txt (intrinsics) and optionally object.txt (target shape).
/// A frame is indexed only when all three files are present, so a
/// crashed write never surfaces a partial frame.
class FrameArchive {
public:
    struct Entry {
        std::string id;
        std::string rgbPath, depthPath, gtPath;
        std::optional<std::string> scenePath;  // per-frame scene spec, if any
    };

    static FrameArchive create(const std::string& root, const CameraIntrinsics& intr);
    static FrameArchive open(const std::string& root);

    const std::string& root() const { return root_; }
    const CameraIntrinsics& intrinsics() const { return intrinsics_; }
    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    /// Writes a frame under an auto-incremented zero-padded id.
    std::string writeFrame(const RgbdFrame& frame, const std::vector<GtEntry>& gts);
    std::string writeFrameAs(const std::string& id, const RgbdFrame& frame,
                             const std::vector<GtEntry>& gts);

    RgbdFrame readFrame(const Entry& entry) const;
    std::vector<GtEntry> readGts(const Entry& entry) const;

    void writeObject(const ParametricShape& shape, bool symmetric);
    bool hasObject() const;
    ParametricShape readObjectShape(bool* symmetric = nullptr) const;

private:
    std::string root_;
    CameraIntrinsics intrinsics_;
    std::vector<Entry> entries_;
    bool external_ = false;  // entries use the external gt convention

    friend FrameArchive loadLinemodLayout(const std::string& root);
};

/// Ground-truth text grammar used inside archives: a `gt_version 1`
/// header, then one line per instance:
///   objectId visibility r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
/// with the rotation row-major and the translation in millimeters.
std::vector<GtEntry> parseGtText(const std::string& text);
std::string writeGtText(const std::vector<GtEntry>& gts);

/// Opens an external dataset in the documented layout:
///   root/camera.txt, root/rgb/<id>.png, root/depth/<id>.png,
///   root/gt/<id>.txt
/// External gt lines carry no visibility and translations in meters;
/// they are converted to this archive's conventions on read. Missing
/// companion files raise LayoutMismatch naming the first offender.
FrameArchive loadLinemodLayout(const std::string& root);

}  // namespace hough6d
