#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mplan/dataset.hpp"

namespace mplan {

/// Steepness of the logistic read-out on the decoded collision flag.
/// score = 1 / (1 + exp(-k (xhat_17 - 0.5))), so score 0.5 sits exactly
/// between the 0/1 training targets.
inline constexpr double kFlagLogisticSteepness = 12.0;

struct LinearLayer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

struct VaeConfig {
    std::vector<int> hidden{300, 200, 75};
    int latent = 2;
    int input = kSampleDim;
    int epochs = 120;
    int batch = 256;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double kl_weight = 1e-3;
    double warmup_fraction = 0.1;  // of epochs, linear KL warm-up
    std::uint64_t seed = 2;
};

/// Variational autoencoder over normalized 18-vectors with a 2D latent.
/// Encoder trunk and decoder use tanh hidden layers; the two heads and the
/// decoder output layer are linear. Inference is deterministic (z = mean).
struct VaeModel {
    std::vector<int> encoder_sizes;  // e.g. [18, 300, 200, 75]
    std::vector<LinearLayer> encoder;
    LinearLayer mean_head, logvar_head;
    std::vector<int> decoder_sizes;  // e.g. [2, 75, 200, 300, 18]
    std::vector<LinearLayer> decoder;
    double kl_weight = 1e-3;
    Normalization norm;
    std::uint64_t config_hash = 0;

    int latent_dim() const { return static_cast<int>(mean_head.W.rows()); }
    int input_dim() const { return encoder_sizes.front(); }

    /// Deterministic forward pass; throws DomainError on non-finite input.
    void encode(const SampleVec& x_normalized, Vec2& mean, Vec2& logvar) const;
    Vec2 encode_mean(const SampleVec& x_normalized) const;
    /// Decoder output in normalized space; caller denormalizes.
    SampleVec decode(const Vec2& z) const;

    double flag_score(const SampleVec& decoded_normalized) const;

    /// Batched encode of many samples (columns), mean head only.
    Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& x_normalized) const;

    std::uint64_t content_hash() const;
};

VaeModel make_vae(const VaeConfig& cfg, const Normalization& norm, Rng& rng);

struct LossTerms {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

struct VaeGradients {
    std::vector<LinearLayer> encoder;
    LinearLayer mean_head, logvar_head;
    std::vector<LinearLayer> decoder;
};

/// Loss over a batch (columns of x, already normalized) at the given latent
/// noise eps (latent_dim x batch; pass zeros for inference-mode loss).
/// reconstruction = mean over batch of squared error, kl = closed-form
/// Gaussian KL to the unit normal, total = reconstruction + kl_weight * kl.
LossTerms vae_loss(const VaeModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double kl_weight,
                   VaeGradients* grads = nullptr);

/// Inference-mode loss at the model's own KL weight (eps = 0).
LossTerms vae_loss(const VaeModel& m, const Eigen::MatrixXd& x);

struct TrainReport {
    std::vector<double> epoch_total, epoch_reconstruction, epoch_kl;
    double heldout_reconstruction = 0.0;
    double heldout_flag_accuracy = 0.0;
    std::uint64_t seed = 0;
};

/// Train on `train_set` (normalization is computed from it when absent) and
/// evaluate on `heldout`. Deterministic per config seed. Throws TrainingError
/// when the loss goes non-finite.
std::pair<VaeModel, TrainReport> train_vae(const Dataset& train_set, const Dataset& heldout, const VaeConfig& cfg,
                                           std::uint64_t config_hash = 0);

/// Versioned binary container; load(save(m)) reproduces forward passes bit-exactly.
void save_vae(const VaeModel& m, const std::string& path);
VaeModel load_vae(const std::string& path);

void save_train_report(const TrainReport& r, const std::string& path);

/// Normalized sample matrix (18 x N) of a dataset under `norm`.
Eigen::MatrixXd normalized_matrix(const Dataset& d, const Normalization& norm);

}  // namespace mplan
