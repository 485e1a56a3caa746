#include "mplan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mplan/errors.hpp"
#include "mplan/textio.hpp"

namespace mplan {

SampleVec Sample::flatten() const {
    SampleVec v;
    for (int i = 0; i < kNumJoints; ++i) v[i] = joints[i];
    v[7] = ee_pose.position.x();
    v[8] = ee_pose.position.y();
    v[9] = ee_pose.position.z();
    v[10] = ee_pose.orientation.w();
    v[11] = ee_pose.orientation.x();
    v[12] = ee_pose.orientation.y();
    v[13] = ee_pose.orientation.z();
    v[14] = obstacle_pos.x();
    v[15] = obstacle_pos.y();
    v[16] = obstacle_pos.z();
    v[kFlagIndex] = static_cast<double>(collision_flag);
    return v;
}

Sample Sample::unflatten(const SampleVec& v) {
    Sample s;
    for (int i = 0; i < kNumJoints; ++i) s.joints[i] = v[i];
    s.ee_pose.position = Vec3(v[7], v[8], v[9]);
    s.ee_pose.orientation = Quat(v[10], v[11], v[12], v[13]);
    s.obstacle_pos = Vec3(v[14], v[15], v[16]);
    s.collision_flag = v[kFlagIndex] > 0.5 ? 1 : 0;
    return s;
}

SampleVec Normalization::normalize(const SampleVec& x) const {
    SampleVec out;
    for (int i = 0; i < kSampleDim; ++i) out[i] = (x[i] - mean[i]) / scale[i];
    return out;
}

SampleVec Normalization::denormalize(const SampleVec& x) const {
    SampleVec out;
    for (int i = 0; i < kSampleDim; ++i) out[i] = x[i] * scale[i] + mean[i];
    return out;
}

double Dataset::colliding_fraction() const {
    if (samples.empty()) return 0.0;
    return static_cast<double>(count_flag(1)) / static_cast<double>(samples.size());
}

std::size_t Dataset::count_flag(int flag) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.collision_flag == flag; }));
}

Dataset generate(const RobotModel& model, const GenerateConfig& cfg) {
    if (cfg.count < 1) throw DomainError("generate: count must be >= 1");
    if (cfg.workspace.degenerate()) throw DomainError("generate: workspace box is degenerate");
    model.validate();

    Dataset d;
    d.seed = cfg.seed;
    d.robot_hash = model.content_hash();
    d.obstacle_radius = cfg.obstacle_radius;
    d.workspace = cfg.workspace;
    d.samples.reserve(static_cast<std::size_t>(cfg.count));

    Rng rng(cfg.seed);
    for (int n = 0; n < cfg.count; ++n) {
        Sample s;
        s.joints = random_configuration(model, rng);
        s.ee_pose = forward_kinematics(model, s.joints);
        for (int k = 0; k < 3; ++k) s.obstacle_pos[k] = rng.uniform(cfg.workspace.lo[k], cfg.workspace.hi[k]);
        const auto obstacle = ConvexShape::sphere(cfg.obstacle_radius, s.obstacle_pos);
        s.collision_flag = is_collision(model, s.joints, obstacle, 0.0) ? 1 : 0;
        d.samples.push_back(s);
    }
    return d;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::vector<std::size_t> indices_of_flag(const Dataset& d, int flag) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d.samples.size(); ++i)
        if (d.samples[i].collision_flag == flag) out.push_back(i);
    return out;
}

Dataset with_samples(const Dataset& d, std::vector<Sample> samples) {
    Dataset out = d;
    out.samples = std::move(samples);
    out.norm.reset();
    return out;
}

}  // namespace

Dataset rebalance(const Dataset& d, double target_fraction, std::uint64_t seed) {
    if (!(target_fraction > 0.0 && target_fraction < 1.0))
        throw DomainError("rebalance: target fraction must be in (0, 1)");
    const auto coll = indices_of_flag(d, 1);
    const auto safe = indices_of_flag(d, 0);
    if (coll.empty() || safe.empty()) throw DomainError("rebalance: dataset must contain both classes");

    const std::size_t n = d.samples.size();
    const auto want_coll = static_cast<std::size_t>(std::llround(target_fraction * static_cast<double>(n)));
    const std::size_t n_coll = std::min(std::max<std::size_t>(want_coll, 1), n - 1);
    const std::size_t n_safe = n - n_coll;

    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto pick = [&](const std::vector<std::size_t>& pool, std::size_t count) {
        std::vector<std::size_t> chosen;
        chosen.reserve(count);
        const auto order = shuffled_indices(pool.size(), rng);
        for (std::size_t i = 0; i < count; ++i) chosen.push_back(pool[order[i % pool.size()]]);
        return chosen;
    };

    std::vector<Sample> samples;
    samples.reserve(n);
    for (const auto i : pick(coll, n_coll)) samples.push_back(d.samples[i]);
    for (const auto i : pick(safe, n_safe)) samples.push_back(d.samples[i]);
    // Interleave deterministically so batches see both classes.
    Dataset out = with_samples(d, std::move(samples));
    const auto order = shuffled_indices(out.samples.size(), rng);
    std::vector<Sample> mixed;
    mixed.reserve(out.samples.size());
    for (const auto i : order) mixed.push_back(out.samples[i]);
    out.samples = std::move(mixed);
    return out;
}

Dataset subsample(const Dataset& d, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > d.samples.size()) throw DomainError("subsample: count out of range");
    if (count == d.samples.size()) return d;
    const double frac = static_cast<double>(count) / static_cast<double>(d.samples.size());
    Rng rng(seed ^ 0x6a09e667f3bcc909ull);

    const auto coll = indices_of_flag(d, 1);
    const auto safe = indices_of_flag(d, 0);
    auto n_coll = std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(frac * static_cast<double>(coll.size()))), coll.size());
    n_coll = std::min(n_coll, count);
    std::size_t n_safe = std::min(count - n_coll, safe.size());
    n_coll = std::min(count - n_safe, coll.size());  // absorb rounding slack

    std::vector<Sample> samples;
    samples.reserve(count);
    const auto coll_order = shuffled_indices(coll.size(), rng);
    for (std::size_t i = 0; i < n_coll; ++i) samples.push_back(d.samples[coll[coll_order[i]]]);
    const auto safe_order = shuffled_indices(safe.size(), rng);
    for (std::size_t i = 0; i < n_safe; ++i) samples.push_back(d.samples[safe[safe_order[i]]]);

    const auto mix = shuffled_indices(samples.size(), rng);
    std::vector<Sample> mixed;
    mixed.reserve(samples.size());
    for (const auto i : mix) mixed.push_back(samples[i]);
    return with_samples(d, std::move(mixed));
}

Normalization compute_normalization(const Dataset& d) {
    if (d.samples.empty()) throw DomainError("compute_normalization: empty dataset");
    Normalization n;
    Eigen::Matrix<double, kSampleDim, 1> sum = Eigen::Matrix<double, kSampleDim, 1>::Zero();
    Eigen::Matrix<double, kSampleDim, 1> sq = sum;
    for (const auto& s : d.samples) {
        const SampleVec v = s.flatten();
        sum += v;
        sq += v.cwiseProduct(v);
    }
    const double count = static_cast<double>(d.samples.size());
    for (int i = 0; i < kSampleDim; ++i) {
        n.mean[i] = sum[i] / count;
        const double var = std::max(0.0, sq[i] / count - n.mean[i] * n.mean[i]);
        n.scale[i] = std::sqrt(var);
        if (n.scale[i] < 1e-12) {
            n.scale[i] = 1.0;
            if (i != kFlagIndex) ++n.clamped_fields;
        }
    }
    // The flag field passes through untouched.
    n.mean[kFlagIndex] = 0.0;
    n.scale[kFlagIndex] = 1.0;
    return n;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DomainError("split: train fraction must be in (0, 1)");
    Rng rng(seed ^ 0xbb67ae8584caa73bull);
    std::vector<Sample> train, test;
    for (int flag : {0, 1}) {
        const auto pool = indices_of_flag(d, flag);
        if (pool.empty()) continue;
        const auto order = shuffled_indices(pool.size(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pool.size())));
        if (n_train == 0 || n_train == pool.size())
            throw DomainError("split: fraction would empty class " + std::to_string(flag) + " in one part");
        for (std::size_t i = 0; i < pool.size(); ++i)
            (i < n_train ? train : test).push_back(d.samples[pool[order[i]]]);
    }
    auto dt = with_samples(d, std::move(train));
    auto dv = with_samples(d, std::move(test));
    const auto mix_t = shuffled_indices(dt.samples.size(), rng);
    const auto mix_v = shuffled_indices(dv.samples.size(), rng);
    std::vector<Sample> mt, mv;
    mt.reserve(dt.samples.size());
    mv.reserve(dv.samples.size());
    for (const auto i : mix_t) mt.push_back(dt.samples[i]);
    for (const auto i : mix_v) mv.push_back(dv.samples[i]);
    dt.samples = std::move(mt);
    dv.samples = std::move(mv);
    return {dt, dv};
}

namespace {

const char* kCsvHeader =
    "theta0,theta1,theta2,theta3,theta4,theta5,theta6,ee_x,ee_y,ee_z,ee_qw,ee_qx,ee_qy,ee_qz,obs_x,obs_y,obs_z,"
    "collision";

}  // namespace

void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& meta_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw InputError("cannot write dataset csv: " + csv_path);
    csv << kCsvHeader << "\n";
    for (const auto& s : d.samples) {
        const SampleVec v = s.flatten();
        for (int i = 0; i < kSampleDim; ++i) {
            if (i) csv << ",";
            if (i == kFlagIndex)
                csv << s.collision_flag;
            else
                csv << fmt_g17(v[i]);
        }
        csv << "\n";
    }

    std::ofstream meta(meta_path);
    if (!meta) throw InputError("cannot write dataset meta: " + meta_path);
    meta << "mplan-dataset 1\n";
    meta << "seed " << d.seed << "\n";
    meta << "count " << d.samples.size() << "\n";
    meta << "colliding_fraction " << fmt_g17(d.colliding_fraction()) << "\n";
    meta << "obstacle_radius " << fmt_g17(d.obstacle_radius) << "\n";
    meta << "workspace " << fmt_g17(d.workspace.lo.x()) << " " << fmt_g17(d.workspace.lo.y()) << " "
         << fmt_g17(d.workspace.lo.z()) << " " << fmt_g17(d.workspace.hi.x()) << " " << fmt_g17(d.workspace.hi.y())
         << " " << fmt_g17(d.workspace.hi.z()) << "\n";
    meta << "robot_hash " << hex64(d.robot_hash) << "\n";
    if (d.norm) {
        meta << "norm_mean";
        for (const auto v : d.norm->mean) meta << " " << fmt_g17(v);
        meta << "\nnorm_scale";
        for (const auto v : d.norm->scale) meta << " " << fmt_g17(v);
        meta << "\n";
    }
}

Dataset load_dataset(const std::string& csv_path, const std::string& meta_path, const RobotModel* check_model) {
    Dataset d;
    {
        std::ifstream meta(meta_path);
        if (!meta) throw InputError("cannot open dataset meta: " + meta_path);
        std::string line;
        int line_no = 0;
        bool saw_magic = false;
        while (std::getline(meta, line)) {
            ++line_no;
            const std::string s = strip_comment(line);
            if (s.empty()) continue;
            std::istringstream ls(s);
            std::string tag;
            ls >> tag;
            if (!saw_magic) {
                int version = 0;
                if (tag != "mplan-dataset" || !(ls >> version) || version != 1)
                    throw ParseError(meta_path, line_no, "expected header 'mplan-dataset 1'");
                saw_magic = true;
                continue;
            }
            if (tag == "seed") ls >> d.seed;
            else if (tag == "count") { /* informational */ }
            else if (tag == "colliding_fraction") { /* informational */ }
            else if (tag == "obstacle_radius") ls >> d.obstacle_radius;
            else if (tag == "workspace")
                ls >> d.workspace.lo.x() >> d.workspace.lo.y() >> d.workspace.lo.z() >> d.workspace.hi.x() >>
                    d.workspace.hi.y() >> d.workspace.hi.z();
            else if (tag == "robot_hash") { std::string h; ls >> h; d.robot_hash = std::stoull(h, nullptr, 16); }
            else if (tag == "norm_mean" || tag == "norm_scale") {
                if (!d.norm) d.norm = Normalization{};
                auto& arr = (tag == "norm_mean") ? d.norm->mean : d.norm->scale;
                for (int i = 0; i < kSampleDim; ++i)
                    if (!(ls >> arr[i])) throw ParseError(meta_path, line_no, tag + " needs 18 numbers");
            } else
                throw ParseError(meta_path, line_no, "unknown directive '" + tag + "'");
        }
        if (!saw_magic) throw ParseError(meta_path, 1, "missing header 'mplan-dataset 1'");
    }

    std::ifstream csv(csv_path);
    if (!csv) throw InputError("cannot open dataset csv: " + csv_path);
    std::string line;
    if (!std::getline(csv, line) || strip_comment(line) != kCsvHeader)
        throw ParseError(csv_path, 1, "bad or missing csv header");
    int line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        SampleVec v;
        std::istringstream ls(line);
        std::string cell;
        for (int i = 0; i < kSampleDim; ++i) {
            if (!std::getline(ls, cell, ',')) throw ParseError(csv_path, line_no, "expected 18 columns");
            try {
                v[i] = std::stod(cell);
            } catch (const std::exception&) {
                throw ParseError(csv_path, line_no, "bad number '" + cell + "'");
            }
        }
        if (v[kFlagIndex] != 0.0 && v[kFlagIndex] != 1.0)
            throw ParseError(csv_path, line_no, "collision flag must be 0 or 1");
        Sample s = Sample::unflatten(v);
        if (check_model) {
            const Pose fk = forward_kinematics(*check_model, s.joints);
            const double pos_err = (fk.position - s.ee_pose.position).norm();
            Quat qs = s.ee_pose.orientation;
            if (qs.w() < 0) qs.coeffs() = -qs.coeffs();
            const double quat_err = (fk.orientation.coeffs() - qs.coeffs()).cwiseAbs().maxCoeff();
            if (pos_err > 1e-6 || quat_err > 1e-6)
                throw ParseError(csv_path, line_no, "end-effector pose inconsistent with forward kinematics");
        }
        d.samples.push_back(s);
    }
    return d;
}

}  // namespace mplan
