#pragma once

#include "survsynth/common.hpp"
#include "survsynth/preprocess.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace survsynth {

// Mask convention: 1 = visible, 0 = masked (withheld from the network).
using Mask = Matrix;

class TrainingError : public Error {
public:
    using Error::Error;
};

inline constexpr double kLayerNormEps = 1e-5;

// Learnable tensors of the two-block attention-MLP. Bias and layer-norm
// vectors are stored as 1 x n matrices so every tensor shares one type.
struct McmParams {
    // block 1
    Matrix att1;     // D x D, no bias
    Matrix w1, b1;   // D x H, 1 x H
    Matrix g1, o1;   // layer norm after mlp1_hidden
    Matrix w2, b2;   // H x H, 1 x H
    Matrix g2, o2;   // layer norm after mlp1_output
    Matrix w_res;    // D x H residual projection, no bias
    // block 2
    Matrix att2;     // H x H, all-ones mask
    Matrix w3, b3;   // H x H, 1 x H
    Matrix g3, o3;   // layer norm after mlp2_hidden
    Matrix w4, b4;   // H x D, 1 x D (sigmoid output)

    static constexpr std::size_t kTensorCount = 17;
    std::array<Matrix*, kTensorCount> tensors();
    std::array<const Matrix*, kTensorCount> tensors() const;
    static const std::array<const char*, kTensorCount>& tensor_names();

    static McmParams zeros_like(const McmParams& p);
    bool operator==(const McmParams& other) const;
};

struct McmModel {
    std::size_t input_dim = 0;   // D
    std::size_t hidden_dim = 0;  // H
    std::uint64_t schema_hash = 0;
    std::uint64_t seed = 0;
    McmParams params;

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; layer norm
    // gains 1, offsets 0.
    static McmModel initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);
};

struct TrainConfig {
    int epochs = 500;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t hidden_dim = 64;
    double mask_min = 0.10;
    double mask_max = 0.95;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AttentionOutput {
    Matrix weights;   // N x d, exact zeros at masked positions
    Matrix weighted;  // weights (.) X
};

// Scores X * W masked to -inf where mask == 0, softmax per row, then the
// Hadamard product with X. Throws if a row has no visible entry.
AttentionOutput attention_forward(const Matrix& w_att, const Matrix& x, const Mask& mask);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    Matrix x, mask;
    Matrix a1, y1;
    Matrix pre1, xhat1, inv1, h1;
    Matrix pre2, xhat2, inv2, hmlp;
    Matrix res_pre, z;
    Matrix a2, y2;
    Matrix pre3, xhat3, inv3, h3;
    Matrix v;
};

// X must already have its masked entries zeroed by the caller.
Matrix mcm_forward(const McmModel& model, const Matrix& x, const Mask& mask);
Matrix mcm_forward(const McmModel& model, const Matrix& x, const Mask& mask, ForwardCache& cache);

// Mean over rows of the squared error summed over masked positions.
double masked_loss(const Matrix& v, const Matrix& target, const Mask& mask);

// Loss and exact gradient for one batch: the input is target (.) mask.
double loss_and_gradient(const McmModel& model, const Matrix& target, const Mask& mask, McmParams& grad);

class AdamOptimizer {
public:
    AdamOptimizer(const McmParams& like, double lr, double beta1, double beta2, double eps);
    void step(McmParams& params, const McmParams& grad);

private:
    McmParams m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

// Per row, exactly k distinct columns set to 0 (masked), chosen uniformly.
Mask random_mask(std::size_t rows, std::size_t cols, std::size_t masked_per_row, Rng& rng);

struct TrainResult {
    McmModel model;
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

TrainResult train(const Matrix& preprocessed, const TrainConfig& cfg, std::uint64_t schema_hash = 0);

// Model file: preprocessing parameters plus every network tensor, as JSON.
struct McmBundle {
    PreprocessModel preprocess;
    McmModel network;
    std::uint64_t content_hash() const;
};

std::string bundle_to_json_text(const McmBundle& bundle);
McmBundle bundle_from_json_text(const std::string& text);
void save_bundle(const std::filesystem::path& path, const McmBundle& bundle);
McmBundle load_bundle(const std::filesystem::path& path);
// Throws DataError when the bundle was trained on a different schema.
void check_schema(const McmBundle& bundle, const FeatureSchema& schema);

}  // namespace survsynth
