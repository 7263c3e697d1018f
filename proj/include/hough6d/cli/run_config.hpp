#pragma once

#include <string>

#include "hough6d/eval/metrics.hpp"
#include "hough6d/inference/detect.hpp"

namespace hough6d {

/// Merged pipeline configuration: loaded from a key-value text file,
/// overridden from the command line, and written next to every output
/// directory for provenance.
struct RunConfig {
    DescriptorParams descriptor;
    TrainConfig train;
    InferConfig infer;
    double km = kDefaultCorrectnessCoeff;
    uint64_t seed = 1;
    int jobs = 1;

    static RunConfig load(const std::string& path);

    /// Applies one `key value` pair; throws ConfigError on unknown keys
    /// or bad values.
    void set(const std::string& key, const std::string& value);

    /// Canonical sorted `key value` listing of every setting.
    std::string serialize() const;
    void save(const std::string& path) const;

    /// Pushes the global seed into the per-stage seeds.
    void finalizeSeeds() {
        train.seed = seed;
        infer.seed = seed;
    }
};

}  // namespace hough6d
