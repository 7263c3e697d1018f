#include "hough6d/io/detection_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hough6d {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string writeHypothesesText(const std::vector<Hypothesis>& hypotheses) {
    std::ostringstream os;
    os << "hyp_version 1\n";
    for (const auto& h : hypotheses) {
        os << fmt(h.score) << ' ' << (h.valid ? 1 : 0);
        const Mat3d r = h.pose.rotationMatrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) os << ' ' << fmt(r(i, j));
        for (int i = 0; i < 3; ++i) os << ' ' << fmt(h.pose.translation()[i]);
        os << "\n";
    }
    return os.str();
}

std::vector<Hypothesis> parseHypothesesText(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    int version = 0;
    is >> tok >> version;
    if (tok != "hyp_version" || version != 1) throw IoFailure("bad hypothesis header");
    std::vector<Hypothesis> out;
    double score;
    while (is >> score) {
        int valid;
        Mat3d r;
        Vec3d t;
        is >> valid;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) is >> r(i, j);
        for (int i = 0; i < 3; ++i) is >> t[i];
        if (!is) throw IoFailure("truncated hypothesis entry");
        Hypothesis h;
        h.score = score;
        h.valid = valid != 0;
        h.pose = Pose6D(r, t);
        out.push_back(std::move(h));
    }
    return out;
}

void saveHypotheses(const std::vector<Hypothesis>& hypotheses, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoFailure("cannot open for write: " + tmp);
        os << writeHypothesesText(hypotheses);
        if (!os) throw IoFailure("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoFailure("rename failed: " + path);
}

std::vector<Hypothesis> loadHypotheses(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoFailure("cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parseHypothesesText(buf.str());
}

}  // namespace hough6d
