#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mplan/geometry.hpp"
#include "mplan/replanner.hpp"
#include "mplan/vae.hpp"

namespace mplan {

/// All pipeline knobs, loadable from a plain-text key-value file with CLI
/// overrides. Defaults are the documented module defaults.
struct RunConfig {
    std::string robot_ref = "builtin:panda";
    std::string out_dir = "out";

    // dataset
    int dataset_count = 100000;
    Box3 workspace{Vec3(-0.85, -0.85, -0.35), Vec3(0.85, 0.85, 1.15)};
    double obstacle_radius = 0.02;
    double rebalance_fraction = 0.3;
    int max_samples = 0;  // 0 = keep everything
    double train_fraction = 0.8;
    std::uint64_t dataset_seed = 1;

    // vae
    VaeConfig vae;

    // roadmap
    int knn_k = 8;
    int grid_resolution = 100;
    double bounds_margin = 0.05;
    double bridge_cap_factor = 3.0;  // x median k-NN edge length

    // metrics
    int metrics_k = 12;
    std::vector<int> metric_bins{2000, 5000, 10000, 20000};
    std::uint64_t metrics_seed = 5;

    // safety / simulation
    SafetyConfig safety;
    int max_ticks = 20000;

    void validate() const;
    std::string canonical_text() const;
    /// Hash of the semantic knobs; robot identity and output paths excluded
    /// (the robot is pinned by its own content hash).
    std::uint64_t hash() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);
void save_config(const RunConfig& c, const std::string& path);

/// "builtin:panda" or a robot description file path.
RobotModel resolve_robot(const std::string& robot_ref);

}  // namespace mplan
