#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mplan/collision.hpp"
#include "mplan/geometry.hpp"
#include "mplan/robot.hpp"

namespace mplan {

inline constexpr int kSampleDim = 18;
inline constexpr int kFlagIndex = 17;

using SampleVec = Eigen::Matrix<double, kSampleDim, 1>;

/// One training record. Flattened order is fixed:
/// [theta0..theta6, ee_x, ee_y, ee_z, ee_qw, ee_qx, ee_qy, ee_qz, obs_x, obs_y, obs_z, flag]
struct Sample {
    JointVector joints;
    Pose ee_pose;
    Vec3 obstacle_pos = Vec3::Zero();
    int collision_flag = 0;

    SampleVec flatten() const;
    static Sample unflatten(const SampleVec& v);
};

/// Per-field affine normalization. The flag field passes through unscaled.
struct Normalization {
    std::array<double, kSampleDim> mean{};
    std::array<double, kSampleDim> scale{};
    int clamped_fields = 0;  // zero-variance fields whose scale was clamped to 1

    SampleVec normalize(const SampleVec& x) const;
    SampleVec denormalize(const SampleVec& x) const;
};

struct Dataset {
    std::vector<Sample> samples;
    std::optional<Normalization> norm;
    std::uint64_t seed = 0;
    std::uint64_t robot_hash = 0;
    double obstacle_radius = 0.02;
    Box3 workspace;

    std::size_t size() const { return samples.size(); }
    double colliding_fraction() const;
    std::size_t count_flag(int flag) const;
};

struct GenerateConfig {
    int count = 0;
    Box3 workspace;
    double obstacle_radius = 0.02;
    std::uint64_t seed = 0;
};

/// Random in-limit configurations with a uniformly placed small-sphere obstacle,
/// labeled by GJK contact (margin 0). Deterministic per seed.
Dataset generate(const RobotModel& model, const GenerateConfig& cfg);

/// Adjust the colliding fraction to `target` while keeping the sample count:
/// the minority class is duplicated cyclically, the majority subsampled.
Dataset rebalance(const Dataset& d, double target_fraction, std::uint64_t seed);

/// Deterministic stratified subsample of `count` samples.
Dataset subsample(const Dataset& d, std::size_t count, std::uint64_t seed);

/// Statistics over all samples of `d` (call on the training split only).
Normalization compute_normalization(const Dataset& d);

/// Disjoint, exhaustive, stratified split. Throws when a class would be emptied.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// CSV corpus plus key-value metadata sidecar. When `check_model` is given, the
/// loader re-runs forward kinematics on every row and rejects stale poses.
void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& meta_path);
Dataset load_dataset(const std::string& csv_path, const std::string& meta_path,
                     const RobotModel* check_model = nullptr);

}  // namespace mplan
