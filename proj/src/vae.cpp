#include "mplan/vae.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mplan/errors.hpp"

namespace mplan {

namespace {

Eigen::MatrixXd tanh_m(const Eigen::MatrixXd& a) { return a.array().tanh().matrix(); }

LinearLayer xavier_layer(int in, int out, Rng& rng) {
    LinearLayer l;
    l.W.resize(out, in);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
        for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = rng.uniform(-limit, limit);
    l.b = Eigen::VectorXd::Zero(out);
    return l;
}

LinearLayer zeros_like(const LinearLayer& l) {
    LinearLayer g;
    g.W = Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols());
    g.b = Eigen::VectorXd::Zero(l.b.size());
    return g;
}

}  // namespace

VaeModel make_vae(const VaeConfig& cfg, const Normalization& norm, Rng& rng) {
    if (cfg.latent != 2) throw DomainError("latent dimension is fixed to 2");
    if (cfg.input != kSampleDim) throw DomainError("input dimension is fixed to 18");
    VaeModel m;
    m.encoder_sizes.push_back(cfg.input);
    for (const int h : cfg.hidden) m.encoder_sizes.push_back(h);
    for (std::size_t i = 0; i + 1 < m.encoder_sizes.size(); ++i)
        m.encoder.push_back(xavier_layer(m.encoder_sizes[i], m.encoder_sizes[i + 1], rng));
    m.mean_head = xavier_layer(m.encoder_sizes.back(), cfg.latent, rng);
    m.logvar_head = xavier_layer(m.encoder_sizes.back(), cfg.latent, rng);

    m.decoder_sizes.push_back(cfg.latent);
    for (auto it = cfg.hidden.rbegin(); it != cfg.hidden.rend(); ++it) m.decoder_sizes.push_back(*it);
    m.decoder_sizes.push_back(cfg.input);
    for (std::size_t i = 0; i + 1 < m.decoder_sizes.size(); ++i)
        m.decoder.push_back(xavier_layer(m.decoder_sizes[i], m.decoder_sizes[i + 1], rng));

    m.kl_weight = cfg.kl_weight;
    m.norm = norm;
    return m;
}

void VaeModel::encode(const SampleVec& x, Vec2& mean, Vec2& logvar) const {
    if (!x.allFinite()) throw DomainError("encode: non-finite input");
    Eigen::VectorXd h = x;
    for (const auto& l : encoder) h = (l.W * h + l.b).array().tanh().matrix();
    mean = mean_head.W * h + mean_head.b;
    logvar = logvar_head.W * h + logvar_head.b;
}

Vec2 VaeModel::encode_mean(const SampleVec& x) const {
    Vec2 mean, logvar;
    encode(x, mean, logvar);
    return mean;
}

SampleVec VaeModel::decode(const Vec2& z) const {
    if (!z.allFinite()) throw DomainError("decode: non-finite latent point");
    Eigen::VectorXd h = z;
    for (std::size_t i = 0; i + 1 < decoder.size(); ++i) h = (decoder[i].W * h + decoder[i].b).array().tanh().matrix();
    h = decoder.back().W * h + decoder.back().b;
    return SampleVec(h);
}

double VaeModel::flag_score(const SampleVec& decoded) const {
    return 1.0 / (1.0 + std::exp(-kFlagLogisticSteepness * (decoded[kFlagIndex] - 0.5)));
}

Eigen::MatrixXd VaeModel::encode_batch(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd h = x;
    for (const auto& l : encoder) h = ((l.W * h).colwise() + l.b).array().tanh().matrix();
    return (mean_head.W * h).colwise() + mean_head.b;
}

LossTerms vae_loss(const VaeModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double kl_weight,
                   VaeGradients* grads) {
    const auto batch = x.cols();
    if (batch == 0) throw DomainError("vae_loss: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch);

    // Encoder forward.
    std::vector<Eigen::MatrixXd> h;  // h[0] = x, h[i] = tanh activations
    h.reserve(m.encoder.size() + 1);
    h.push_back(x);
    for (const auto& l : m.encoder) h.push_back(tanh_m((l.W * h.back()).colwise() + l.b));
    const Eigen::MatrixXd mean = (m.mean_head.W * h.back()).colwise() + m.mean_head.b;
    const Eigen::MatrixXd logvar = (m.logvar_head.W * h.back()).colwise() + m.logvar_head.b;
    const Eigen::MatrixXd sigma = (0.5 * logvar).array().exp().matrix();
    const Eigen::MatrixXd z = mean + sigma.cwiseProduct(eps);

    // Decoder forward.
    std::vector<Eigen::MatrixXd> g;
    g.reserve(m.decoder.size());
    g.push_back(z);
    for (std::size_t i = 0; i + 1 < m.decoder.size(); ++i)
        g.push_back(tanh_m((m.decoder[i].W * g.back()).colwise() + m.decoder[i].b));
    const Eigen::MatrixXd xhat = (m.decoder.back().W * g.back()).colwise() + m.decoder.back().b;

    LossTerms terms;
    const Eigen::MatrixXd resid = xhat - x;
    terms.reconstruction = resid.squaredNorm() * inv_b;
    terms.kl = 0.5 * inv_b *
               (mean.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum();
    terms.total = terms.reconstruction + kl_weight * terms.kl;
    if (!grads) return terms;

    grads->encoder.clear();
    grads->decoder.clear();
    for (const auto& l : m.encoder) grads->encoder.push_back(zeros_like(l));
    for (const auto& l : m.decoder) grads->decoder.push_back(zeros_like(l));
    grads->mean_head = zeros_like(m.mean_head);
    grads->logvar_head = zeros_like(m.logvar_head);

    // Decoder backward.
    Eigen::MatrixXd delta = 2.0 * inv_b * resid;  // d total / d xhat
    {
        const auto last = m.decoder.size() - 1;
        grads->decoder[last].W = delta * g.back().transpose();
        grads->decoder[last].b = delta.rowwise().sum();
        Eigen::MatrixXd dg = m.decoder[last].W.transpose() * delta;
        for (std::size_t i = last; i-- > 0;) {
            const Eigen::MatrixXd da = dg.cwiseProduct((1.0 - g[i + 1].array().square()).matrix());
            grads->decoder[i].W = da * g[i].transpose();
            grads->decoder[i].b = da.rowwise().sum();
            dg = m.decoder[i].W.transpose() * da;
        }
        delta = dg;  // d total / d z
    }

    // Through the reparameterization and KL terms.
    const Eigen::MatrixXd dmean = delta + kl_weight * inv_b * mean;
    const Eigen::MatrixXd dlogvar =
        delta.cwiseProduct(0.5 * sigma.cwiseProduct(eps)) +
        0.5 * kl_weight * inv_b * (logvar.array().exp() - 1.0).matrix();

    grads->mean_head.W = dmean * h.back().transpose();
    grads->mean_head.b = dmean.rowwise().sum();
    grads->logvar_head.W = dlogvar * h.back().transpose();
    grads->logvar_head.b = dlogvar.rowwise().sum();

    // Encoder backward.
    Eigen::MatrixXd dh = m.mean_head.W.transpose() * dmean + m.logvar_head.W.transpose() * dlogvar;
    for (std::size_t i = m.encoder.size(); i-- > 0;) {
        const Eigen::MatrixXd da = dh.cwiseProduct((1.0 - h[i + 1].array().square()).matrix());
        grads->encoder[i].W = da * h[i].transpose();
        grads->encoder[i].b = da.rowwise().sum();
        if (i > 0) dh = m.encoder[i].W.transpose() * da;
    }
    return terms;
}

LossTerms vae_loss(const VaeModel& m, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(m.latent_dim(), x.cols());
    return vae_loss(m, x, eps, m.kl_weight, nullptr);
}

Eigen::MatrixXd normalized_matrix(const Dataset& d, const Normalization& norm) {
    Eigen::MatrixXd x(kSampleDim, static_cast<Eigen::Index>(d.samples.size()));
    for (std::size_t i = 0; i < d.samples.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = norm.normalize(d.samples[i].flatten());
    return x;
}

namespace {

struct Momentum {
    std::vector<LinearLayer> encoder;
    LinearLayer mean_head, logvar_head;
    std::vector<LinearLayer> decoder;

    explicit Momentum(const VaeModel& m) {
        for (const auto& l : m.encoder) encoder.push_back(zeros_like(l));
        for (const auto& l : m.decoder) decoder.push_back(zeros_like(l));
        mean_head = zeros_like(m.mean_head);
        logvar_head = zeros_like(m.logvar_head);
    }
};

void sgd_update(LinearLayer& param, LinearLayer& vel, const LinearLayer& grad, double lr, double mu) {
    vel.W = mu * vel.W - lr * grad.W;
    vel.b = mu * vel.b - lr * grad.b;
    param.W += vel.W;
    param.b += vel.b;
}

}  // namespace

std::pair<VaeModel, TrainReport> train_vae(const Dataset& train_set, const Dataset& heldout, const VaeConfig& cfg,
                                           std::uint64_t config_hash) {
    if (train_set.count_flag(0) == 0 || train_set.count_flag(1) == 0)
        throw DomainError("train_vae: training set must contain both collision classes");
    if (static_cast<int>(train_set.size()) < cfg.batch)
        throw DomainError("train_vae: need at least one full batch of samples");

    const Normalization norm = train_set.norm ? *train_set.norm : compute_normalization(train_set);
    Rng rng(cfg.seed);
    VaeModel model = make_vae(cfg, norm, rng);
    model.config_hash = config_hash;

    const Eigen::MatrixXd x_all = normalized_matrix(train_set, norm);
    const auto n = x_all.cols();

    Momentum vel(model);
    VaeGradients grads;
    TrainReport report;
    report.seed = cfg.seed;

    const int warmup_epochs = std::max(1, static_cast<int>(std::ceil(cfg.warmup_fraction * cfg.epochs)));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double kl_w = cfg.kl_weight * std::min(1.0, static_cast<double>(epoch + 1) / warmup_epochs);
        // Fisher-Yates with the model RNG keeps the whole run a single stream.
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        double ep_total = 0.0, ep_recon = 0.0, ep_kl = 0.0;
        Eigen::Index done = 0;
        while (done < n) {
            const auto bsz = std::min<Eigen::Index>(cfg.batch, n - done);
            Eigen::MatrixXd xb(kSampleDim, bsz);
            for (Eigen::Index c = 0; c < bsz; ++c) xb.col(c) = x_all.col(order[static_cast<std::size_t>(done + c)]);
            Eigen::MatrixXd eps(cfg.latent, bsz);
            for (Eigen::Index c = 0; c < bsz; ++c)
                for (int r = 0; r < cfg.latent; ++r) eps(r, c) = rng.normal();

            const LossTerms t = vae_loss(model, xb, eps, kl_w, &grads);
            if (!std::isfinite(t.total)) throw TrainingError(epoch, "training diverged (non-finite loss)");

            for (std::size_t i = 0; i < model.encoder.size(); ++i)
                sgd_update(model.encoder[i], vel.encoder[i], grads.encoder[i], cfg.learning_rate, cfg.momentum);
            sgd_update(model.mean_head, vel.mean_head, grads.mean_head, cfg.learning_rate, cfg.momentum);
            sgd_update(model.logvar_head, vel.logvar_head, grads.logvar_head, cfg.learning_rate, cfg.momentum);
            for (std::size_t i = 0; i < model.decoder.size(); ++i)
                sgd_update(model.decoder[i], vel.decoder[i], grads.decoder[i], cfg.learning_rate, cfg.momentum);

            const double w = static_cast<double>(bsz) / static_cast<double>(n);
            ep_total += w * t.total;
            ep_recon += w * t.reconstruction;
            ep_kl += w * t.kl;
            done += bsz;
        }
        report.epoch_total.push_back(ep_total);
        report.epoch_reconstruction.push_back(ep_recon);
        report.epoch_kl.push_back(ep_kl);
    }

    // Held-out evaluation at the mean (no sampling at inference).
    if (heldout.size() > 0) {
        const Eigen::MatrixXd xh = normalized_matrix(heldout, norm);
        const LossTerms t = vae_loss(model, xh);
        report.heldout_reconstruction = t.reconstruction;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < heldout.samples.size(); ++i) {
            const SampleVec xn = norm.normalize(heldout.samples[i].flatten());
            const SampleVec dec = model.decode(model.encode_mean(xn));
            const int pred = model.flag_score(dec) >= 0.5 ? 1 : 0;
            if (pred == heldout.samples[i].collision_flag) ++correct;
        }
        report.heldout_flag_accuracy = static_cast<double>(correct) / static_cast<double>(heldout.size());
    }
    return {std::move(model), std::move(report)};
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

void write_layer(std::ostream& os, const LinearLayer& l) {
    write_u32(os, static_cast<std::uint32_t>(l.W.rows()));
    write_u32(os, static_cast<std::uint32_t>(l.W.cols()));
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
        for (Eigen::Index j = 0; j < l.W.cols(); ++j) write_f64(os, l.W(i, j));
    for (Eigen::Index i = 0; i < l.b.size(); ++i) write_f64(os, l.b(i));
}

struct Reader {
    const std::string& buf;
    std::size_t off = 0;
    const std::string& origin;

    void need(std::size_t n) const {
        if (off + n > buf.size()) throw InputError("corrupt model file (truncated): " + origin);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + off, 4);
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + off, 8);
        off += 8;
        return v;
    }
    double f64() {
        need(8);
        double v;
        std::memcpy(&v, buf.data() + off, 8);
        off += 8;
        return v;
    }
    LinearLayer layer() {
        LinearLayer l;
        const auto rows = u32();
        const auto cols = u32();
        if (rows > 1u << 20 || cols > 1u << 20) throw InputError("corrupt model file (bad layer size): " + origin);
        l.W.resize(rows, cols);
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = f64();
        l.b.resize(rows);
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = f64();
        return l;
    }
};

constexpr char kVaeMagic[8] = {'M', 'P', 'L', 'N', 'V', 'A', 'E', '1'};

}  // namespace

void save_vae(const VaeModel& m, const std::string& path) {
    std::ostringstream os(std::ios::binary);
    os.write(kVaeMagic, 8);
    write_u32(os, 1);  // version
    write_u64(os, m.config_hash);
    write_u32(os, static_cast<std::uint32_t>(m.encoder_sizes.size()));
    for (const int s : m.encoder_sizes) write_u32(os, static_cast<std::uint32_t>(s));
    for (const auto& l : m.encoder) write_layer(os, l);
    write_layer(os, m.mean_head);
    write_layer(os, m.logvar_head);
    write_u32(os, static_cast<std::uint32_t>(m.decoder_sizes.size()));
    for (const int s : m.decoder_sizes) write_u32(os, static_cast<std::uint32_t>(s));
    for (const auto& l : m.decoder) write_layer(os, l);
    write_f64(os, m.kl_weight);
    for (const double v : m.norm.mean) write_f64(os, v);
    for (const double v : m.norm.scale) write_f64(os, v);
    write_u32(os, static_cast<std::uint32_t>(m.norm.clamped_fields));
    const std::string body = os.str();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write model file: " + path);
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    const std::uint64_t h = fnv1a64(body.data(), body.size());
    f.write(reinterpret_cast<const char*>(&h), 8);
}

VaeModel load_vae(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open model file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string all = ss.str();
    if (all.size() < 16) throw InputError("corrupt model file (too short): " + path);
    const std::string body = all.substr(0, all.size() - 8);
    std::uint64_t stored;
    std::memcpy(&stored, all.data() + all.size() - 8, 8);
    if (fnv1a64(body.data(), body.size()) != stored)
        throw InputError("corrupt model file (checksum mismatch): " + path);

    Reader r{body, 0, path};
    char magic[8];
    r.need(8);
    std::memcpy(magic, body.data(), 8);
    r.off = 8;
    if (std::memcmp(magic, kVaeMagic, 8) != 0) throw InputError("not a model file: " + path);
    if (r.u32() != 1) throw InputError("unsupported model file version: " + path);

    VaeModel m;
    m.config_hash = r.u64();
    const auto n_enc = r.u32();
    if (n_enc < 2 || n_enc > 64) throw InputError("corrupt model file (encoder sizes): " + path);
    for (std::uint32_t i = 0; i < n_enc; ++i) m.encoder_sizes.push_back(static_cast<int>(r.u32()));
    if (m.encoder_sizes.front() != kSampleDim)
        throw InputError("model architecture mismatch: encoder input dim != 18 in " + path);
    for (std::uint32_t i = 0; i + 1 < n_enc; ++i) m.encoder.push_back(r.layer());
    m.mean_head = r.layer();
    m.logvar_head = r.layer();
    if (m.mean_head.W.rows() != 2)
        throw InputError("model architecture mismatch: latent dim != 2 in " + path);
    const auto n_dec = r.u32();
    if (n_dec < 2 || n_dec > 64) throw InputError("corrupt model file (decoder sizes): " + path);
    for (std::uint32_t i = 0; i < n_dec; ++i) m.decoder_sizes.push_back(static_cast<int>(r.u32()));
    if (m.decoder_sizes.back() != kSampleDim)
        throw InputError("model architecture mismatch: decoder output dim != 18 in " + path);
    for (std::uint32_t i = 0; i + 1 < n_dec; ++i) m.decoder.push_back(r.layer());
    m.kl_weight = r.f64();
    for (auto& v : m.norm.mean) v = r.f64();
    for (auto& v : m.norm.scale) v = r.f64();
    m.norm.clamped_fields = static_cast<int>(r.u32());

    // Shape consistency between the size table and the stored layers.
    for (std::size_t i = 0; i < m.encoder.size(); ++i)
        if (m.encoder[i].W.rows() != m.encoder_sizes[i + 1] || m.encoder[i].W.cols() != m.encoder_sizes[i])
            throw InputError("model architecture mismatch in encoder layer " + std::to_string(i) + ": " + path);
    for (std::size_t i = 0; i < m.decoder.size(); ++i)
        if (m.decoder[i].W.rows() != m.decoder_sizes[i + 1] || m.decoder[i].W.cols() != m.decoder_sizes[i])
            throw InputError("model architecture mismatch in decoder layer " + std::to_string(i) + ": " + path);
    return m;
}

std::uint64_t VaeModel::content_hash() const {
    std::ostringstream os(std::ios::binary);
    os.write(kVaeMagic, 8);
    for (const auto& l : encoder) write_layer(os, l);
    write_layer(os, mean_head);
    write_layer(os, logvar_head);
    for (const auto& l : decoder) write_layer(os, l);
    for (const double v : norm.mean) write_f64(os, v);
    for (const double v : norm.scale) write_f64(os, v);
    const std::string s = os.str();
    return fnv1a64(s.data(), s.size());
}

void save_train_report(const TrainReport& r, const std::string& path) {
    nlohmann::json j;
    j["epoch_total"] = r.epoch_total;
    j["epoch_reconstruction"] = r.epoch_reconstruction;
    j["epoch_kl"] = r.epoch_kl;
    j["heldout_reconstruction"] = r.heldout_reconstruction;
    j["heldout_flag_accuracy"] = r.heldout_flag_accuracy;
    j["seed"] = r.seed;
    std::ofstream f(path);
    if (!f) throw InputError("cannot write train report: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace mplan
