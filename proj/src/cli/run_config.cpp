#include "hough6d/cli/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hough6d {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename T>
T parseNum(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T v{};
    is >> v;
    if (!is || !is.eof()) throw ConfigError("bad value for " + key + ": " + value);
    return v;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed")
        seed = parseNum<uint64_t>(key, value);
    else if (key == "jobs")
        jobs = parseNum<int>(key, value);
    else if (key == "eval.km")
        km = parseNum<double>(key, value);
    else if (key == "descriptor.gradient_threshold")
        descriptor.gradientThreshold = parseNum<double>(key, value);
    else if (key == "descriptor.normal_smoothing")
        descriptor.normalSmoothing = parseNum<double>(key, value);
    else if (key == "descriptor.feature_budget")
        descriptor.featureBudget = parseNum<int>(key, value);
    else if (key == "descriptor.canonical_depth_mm")
        descriptor.canonicalDepthMm = parseNum<double>(key, value);
    else if (key == "descriptor.depth_tolerance_mm")
        descriptor.depthToleranceMm = parseNum<double>(key, value);
    else if (key == "train.trees")
        train.treeCount = parseNum<int>(key, value);
    else if (key == "train.patch_fraction")
        train.patchSizeFraction = parseNum<double>(key, value);
    else if (key == "train.max_depth")
        train.maxDepth = parseNum<int>(key, value);
    else if (key == "train.min_samples")
        train.minSamples = parseNum<int>(key, value);
    else if (key == "train.candidate_templates")
        train.candidateTemplates = parseNum<int>(key, value);
    else if (key == "train.thresholds_per_template")
        train.thresholdsPerTemplate = parseNum<int>(key, value);
    else if (key == "train.sample_fraction")
        train.sampleFraction = parseNum<double>(key, value);
    else if (key == "train.patches_per_view")
        train.patchesPerView = parseNum<int>(key, value);
    else if (key == "infer.stride")
        infer.patchStride = parseNum<int>(key, value);
    else if (key == "infer.top_n")
        infer.topN = parseNum<int>(key, value);
    else if (key == "infer.iterations")
        infer.iterations = parseNum<int>(key, value);
    else if (key == "infer.bag_size")
        infer.bagSize = parseNum<int>(key, value);
    else if (key == "infer.valid_threshold")
        infer.validThreshold = parseNum<double>(key, value);
    else if (key == "infer.valid_fraction")
        infer.validFraction = parseNum<double>(key, value);
    else if (key == "infer.nms_radius")
        infer.nmsRadiusPx = parseNum<double>(key, value);
    else if (key == "infer.translation_bandwidth_mm")
        infer.translationBandwidthMm = parseNum<double>(key, value);
    else if (key == "infer.rotation_bandwidth_deg")
        infer.rotationBandwidthDeg = parseNum<double>(key, value);
    else
        throw ConfigError("unknown config key: " + key);
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    RunConfig cfg;
    std::string line;
    int lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;  // blank
        if (!(ls >> value))
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": missing value for " + key);
        cfg.set(key, value);
    }
    cfg.finalizeSeeds();
    return cfg;
}

std::string RunConfig::serialize() const {
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(seed);
    kv["jobs"] = std::to_string(jobs);
    kv["eval.km"] = fmt(km);
    kv["descriptor.gradient_threshold"] = fmt(descriptor.gradientThreshold);
    kv["descriptor.normal_smoothing"] = fmt(descriptor.normalSmoothing);
    kv["descriptor.feature_budget"] = std::to_string(descriptor.featureBudget);
    kv["descriptor.canonical_depth_mm"] = fmt(descriptor.canonicalDepthMm);
    kv["descriptor.depth_tolerance_mm"] = fmt(descriptor.depthToleranceMm);
    kv["train.trees"] = std::to_string(train.treeCount);
    kv["train.patch_fraction"] = fmt(train.patchSizeFraction);
    kv["train.max_depth"] = std::to_string(train.maxDepth);
    kv["train.min_samples"] = std::to_string(train.minSamples);
    kv["train.candidate_templates"] = std::to_string(train.candidateTemplates);
    kv["train.thresholds_per_template"] = std::to_string(train.thresholdsPerTemplate);
    kv["train.sample_fraction"] = fmt(train.sampleFraction);
    kv["train.patches_per_view"] = std::to_string(train.patchesPerView);
    kv["infer.stride"] = std::to_string(infer.patchStride);
    kv["infer.top_n"] = std::to_string(infer.topN);
    kv["infer.iterations"] = std::to_string(infer.iterations);
    kv["infer.bag_size"] = std::to_string(infer.bagSize);
    kv["infer.valid_threshold"] = fmt(infer.validThreshold);
    kv["infer.valid_fraction"] = fmt(infer.validFraction);
    kv["infer.nms_radius"] = fmt(infer.nmsRadiusPx);
    kv["infer.translation_bandwidth_mm"] = fmt(infer.translationBandwidthMm);
    kv["infer.rotation_bandwidth_deg"] = fmt(infer.rotationBandwidthDeg);

    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << ' ' << v << "\n";
    return os.str();
}

void RunConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoFailure("cannot write config: " + path);
    os << serialize();
}

}  // namespace hough6d
