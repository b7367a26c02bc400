#include "survsynth/mcm_net.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace survsynth {

namespace {

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& upstream, const Matrix& pre) {
    return upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
}

Matrix add_row(const Matrix& m, const Matrix& row) { return m.rowwise() + row.row(0); }

// Row-wise layer norm with elementwise affine. Keeps xhat and 1/std per row.
Matrix layer_norm(const Matrix& in, const Matrix& gain, const Matrix& offset, Matrix& xhat, Matrix& inv) {
    const auto n = static_cast<double>(in.cols());
    const Vector mean = in.rowwise().mean();
    xhat = in.colwise() - mean;
    const Vector var = xhat.array().square().rowwise().sum() / n;
    inv = (var.array() + kLayerNormEps).rsqrt().matrix();
    xhat = xhat.array().colwise() * inv.col(0).array();
    Matrix out = xhat.array().rowwise() * gain.row(0).array();
    return out.rowwise() + offset.row(0);
}

Matrix layer_norm_backward(const Matrix& dout, const Matrix& xhat, const Matrix& inv, const Matrix& gain,
                           Matrix& dgain, Matrix& doffset) {
    const auto n = static_cast<double>(dout.cols());
    dgain = dout.cwiseProduct(xhat).colwise().sum();
    doffset = dout.colwise().sum();
    const Matrix dxhat = dout.array().rowwise() * gain.row(0).array();
    const Vector sum_d = dxhat.rowwise().sum();
    const Vector sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
    Matrix dx = (n * dxhat).colwise() - sum_d;
    dx -= (xhat.array().colwise() * sum_dx.array()).matrix();
    dx = dx.array().colwise() * (inv.col(0).array() / n);
    return dx;
}

Matrix softmax_backward(const Matrix& weights, const Matrix& dweights) {
    const Vector dot = dweights.cwiseProduct(weights).rowwise().sum();
    return weights.cwiseProduct(dweights.colwise() - dot);
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

std::array<Matrix*, McmParams::kTensorCount> McmParams::tensors() {
    return {&att1, &w1, &b1, &g1, &o1, &w2, &b2, &g2, &o2, &w_res, &att2, &w3, &b3, &g3, &o3, &w4, &b4};
}

std::array<const Matrix*, McmParams::kTensorCount> McmParams::tensors() const {
    return {&att1, &w1, &b1, &g1, &o1, &w2, &b2, &g2, &o2, &w_res, &att2, &w3, &b3, &g3, &o3, &w4, &b4};
}

const std::array<const char*, McmParams::kTensorCount>& McmParams::tensor_names() {
    static const std::array<const char*, kTensorCount> names = {
        "attention1.weight", "mlp1_hidden.weight", "mlp1_hidden.bias", "mlp1_hidden.norm.gain",
        "mlp1_hidden.norm.offset", "mlp1_output.weight", "mlp1_output.bias", "mlp1_output.norm.gain",
        "mlp1_output.norm.offset", "residual.weight", "attention2.weight", "mlp2_hidden.weight",
        "mlp2_hidden.bias", "mlp2_hidden.norm.gain", "mlp2_hidden.norm.offset", "mlp2_output.weight",
        "mlp2_output.bias"};
    return names;
}

McmParams McmParams::zeros_like(const McmParams& p) {
    McmParams z;
    auto dst = z.tensors();
    auto src = p.tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i) *dst[i] = Matrix::Zero(src[i]->rows(), src[i]->cols());
    return z;
}

bool McmParams::operator==(const McmParams& other) const {
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i)
        if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
    return true;
}

McmModel McmModel::initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    if (input_dim < 2 || hidden_dim < 1) throw TrainingError("model dimensions must be D >= 2, H >= 1");
    McmModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.seed = seed;
    const auto D = static_cast<Eigen::Index>(input_dim);
    const auto H = static_cast<Eigen::Index>(hidden_dim);
    auto rng = make_rng(seed, "mcm.init");
    const double bd = 1.0 / std::sqrt(static_cast<double>(D));
    const double bh = 1.0 / std::sqrt(static_cast<double>(H));
    auto& p = m.params;
    p.att1 = uniform_matrix(D, D, bd, rng);
    p.w1 = uniform_matrix(D, H, bd, rng);
    p.b1 = uniform_matrix(1, H, bd, rng);
    p.g1 = Matrix::Ones(1, H);
    p.o1 = Matrix::Zero(1, H);
    p.w2 = uniform_matrix(H, H, bh, rng);
    p.b2 = uniform_matrix(1, H, bh, rng);
    p.g2 = Matrix::Ones(1, H);
    p.o2 = Matrix::Zero(1, H);
    p.w_res = uniform_matrix(D, H, bd, rng);
    p.att2 = uniform_matrix(H, H, bh, rng);
    p.w3 = uniform_matrix(H, H, bh, rng);
    p.b3 = uniform_matrix(1, H, bh, rng);
    p.g3 = Matrix::Ones(1, H);
    p.o3 = Matrix::Zero(1, H);
    p.w4 = uniform_matrix(H, D, bh, rng);
    p.b4 = uniform_matrix(1, D, bh, rng);
    return m;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw TrainingError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw TrainingError("train: learning rate must be positive");
    if (batch_size < 1) throw TrainingError("train: batch size must be >= 1");
    if (hidden_dim < 1) throw TrainingError("train: hidden dimension must be >= 1");
    if (!(mask_min > 0.0 && mask_min <= mask_max && mask_max < 1.0))
        throw TrainingError("train: mask range must satisfy 0 < r_min <= r_max < 1");
}

// ---------------------------------------------------------------------------
// Forward

AttentionOutput attention_forward(const Matrix& w_att, const Matrix& x, const Mask& mask) {
    if (w_att.rows() != x.cols() || w_att.cols() != x.cols() || mask.rows() != x.rows() || mask.cols() != x.cols())
        throw Error("attention_forward: shape mismatch");
    const Matrix scores = x * w_att;
    AttentionOutput out;
    out.weights = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            if (mask(r, c) != 0.0) mx = std::max(mx, scores(r, c));
        if (mx == -std::numeric_limits<double>::infinity())
            throw Error("attention_forward: row " + std::to_string(r) + " has every feature masked");
        double sum = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (mask(r, c) != 0.0) {
                const double e = std::exp(scores(r, c) - mx);
                out.weights(r, c) = e;
                sum += e;
            }
        }
        out.weights.row(r) /= sum;
    }
    out.weighted = out.weights.cwiseProduct(x);
    return out;
}

Matrix mcm_forward(const McmModel& model, const Matrix& x, const Mask& mask, ForwardCache& c) {
    const auto D = static_cast<Eigen::Index>(model.input_dim);
    if (x.cols() != D || mask.rows() != x.rows() || mask.cols() != D)
        throw Error("mcm_forward: expected N x " + std::to_string(D) + " input and mask");
    const auto& p = model.params;
    c.x = x;
    c.mask = mask;
    auto att = attention_forward(p.att1, x, mask);
    c.a1 = std::move(att.weights);
    c.y1 = std::move(att.weighted);

    c.pre1 = add_row(c.y1 * p.w1, p.b1);
    c.h1 = layer_norm(relu(c.pre1), p.g1, p.o1, c.xhat1, c.inv1);
    c.pre2 = add_row(c.h1 * p.w2, p.b2);
    c.hmlp = layer_norm(relu(c.pre2), p.g2, p.o2, c.xhat2, c.inv2);

    c.res_pre = x * p.w_res;
    c.z = c.hmlp + relu(c.res_pre);

    auto att2 = attention_forward(p.att2, c.z, Matrix::Ones(c.z.rows(), c.z.cols()));
    c.a2 = std::move(att2.weights);
    c.y2 = std::move(att2.weighted);

    c.pre3 = add_row(c.y2 * p.w3, p.b3);
    c.h3 = layer_norm(relu(c.pre3), p.g3, p.o3, c.xhat3, c.inv3);
    const Matrix pre4 = add_row(c.h3 * p.w4, p.b4);
    c.v = (1.0 / (1.0 + (-pre4.array()).exp())).matrix();
    return c.v;
}

Matrix mcm_forward(const McmModel& model, const Matrix& x, const Mask& mask) {
    ForwardCache cache;
    return mcm_forward(model, x, mask, cache);
}

double masked_loss(const Matrix& v, const Matrix& target, const Mask& mask) {
    if (v.rows() != target.rows() || v.cols() != target.cols() || mask.rows() != v.rows() || mask.cols() != v.cols())
        throw Error("masked_loss: shape mismatch");
    if (v.rows() == 0) return 0.0;
    const Matrix hidden = (1.0 - mask.array()).matrix();
    return (v - target).array().square().cwiseProduct(hidden.array()).sum() / static_cast<double>(v.rows());
}

// ---------------------------------------------------------------------------
// Backward

double loss_and_gradient(const McmModel& model, const Matrix& target, const Mask& mask, McmParams& g) {
    const Matrix x = target.cwiseProduct(mask);
    ForwardCache c;
    mcm_forward(model, x, mask, c);
    const double loss = masked_loss(c.v, target, mask);
    const auto& p = model.params;
    const double n = static_cast<double>(target.rows());

    const Matrix dv = (2.0 / n) * (c.v - target).cwiseProduct((1.0 - mask.array()).matrix());
    const Matrix dpre4 = dv.cwiseProduct(c.v.cwiseProduct((1.0 - c.v.array()).matrix()));
    g.w4 = c.h3.transpose() * dpre4;
    g.b4 = dpre4.colwise().sum();
    const Matrix dh3 = dpre4 * p.w4.transpose();

    const Matrix dr3 = layer_norm_backward(dh3, c.xhat3, c.inv3, p.g3, g.g3, g.o3);
    const Matrix dpre3 = relu_grad(dr3, c.pre3);
    g.w3 = c.y2.transpose() * dpre3;
    g.b3 = dpre3.colwise().sum();
    const Matrix dy2 = dpre3 * p.w3.transpose();

    Matrix dz = dy2.cwiseProduct(c.a2);
    const Matrix ds2 = softmax_backward(c.a2, dy2.cwiseProduct(c.z));
    g.att2 = c.z.transpose() * ds2;
    dz += ds2 * p.att2.transpose();

    const Matrix dres = relu_grad(dz, c.res_pre);
    g.w_res = c.x.transpose() * dres;

    const Matrix dr2 = layer_norm_backward(dz, c.xhat2, c.inv2, p.g2, g.g2, g.o2);
    const Matrix dpre2 = relu_grad(dr2, c.pre2);
    g.w2 = c.h1.transpose() * dpre2;
    g.b2 = dpre2.colwise().sum();
    const Matrix dh1 = dpre2 * p.w2.transpose();

    const Matrix dr1 = layer_norm_backward(dh1, c.xhat1, c.inv1, p.g1, g.g1, g.o1);
    const Matrix dpre1 = relu_grad(dr1, c.pre1);
    g.w1 = c.y1.transpose() * dpre1;
    g.b1 = dpre1.colwise().sum();
    const Matrix dy1 = dpre1 * p.w1.transpose();

    const Matrix ds1 = softmax_backward(c.a1, dy1.cwiseProduct(c.x));
    g.att1 = c.x.transpose() * ds1;
    return loss;
}

// ---------------------------------------------------------------------------
// Adam

AdamOptimizer::AdamOptimizer(const McmParams& like, double lr, double beta1, double beta2, double eps)
    : m_(McmParams::zeros_like(like)), v_(McmParams::zeros_like(like)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {}

void AdamOptimizer::step(McmParams& params, const McmParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto ps = params.tensors();
    auto gs = grad.tensors();
    auto ms = m_.tensors();
    auto vs = v_.tensors();
    for (std::size_t i = 0; i < McmParams::kTensorCount; ++i) {
        *ms[i] = beta1_ * *ms[i] + (1.0 - beta1_) * *gs[i];
        *vs[i] = beta2_ * *vs[i] + (1.0 - beta2_) * gs[i]->cwiseProduct(*gs[i]);
        const auto mhat = ms[i]->array() / c1;
        const auto vhat = vs[i]->array() / c2;
        ps[i]->array() -= lr_ * mhat / (vhat.sqrt() + eps_);
    }
}

// ---------------------------------------------------------------------------
// Training

Mask random_mask(std::size_t rows, std::size_t cols, std::size_t masked_per_row, Rng& rng) {
    if (masked_per_row > cols) throw Error("random_mask: more masked entries than columns");
    Mask m = Mask::Ones(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<std::size_t> idx(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t k = 0; k < masked_per_row; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, cols - 1);
            std::swap(idx[k], idx[pick(rng)]);
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx[k])) = 0.0;
        }
    }
    return m;
}

TrainResult train(const Matrix& data, const TrainConfig& cfg, std::uint64_t schema_hash) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(data.rows());
    const auto d = static_cast<std::size_t>(data.cols());
    if (d < 2) throw TrainingError("train: need at least 2 features");
    if (n == 0) throw TrainingError("train: empty training matrix");
    if (!data.allFinite() || data.minCoeff() < 0.0 || data.maxCoeff() > 1.0)
        throw TrainingError("train: input must be preprocessed to [0,1]");

    TrainResult result;
    result.model = McmModel::initialize(d, cfg.hidden_dim, cfg.seed);
    result.model.schema_hash = schema_hash;
    AdamOptimizer adam(result.model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    McmParams grad = McmParams::zeros_like(result.model.params);

    const std::size_t batch = std::min(cfg.batch_size, n);
    auto shuffle_rng = make_rng(cfg.seed, "train.shuffle");
    auto mask_rng = make_rng(cfg.seed, "train.mask");
    std::uniform_real_distribution<double> ratio(cfg.mask_min, cfg.mask_max);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            Matrix target(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < len; ++i)
                target.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(order[start + i]));
            const double r = ratio(mask_rng);
            const auto k = static_cast<std::size_t>(std::floor(r * static_cast<double>(d)));
            const Mask mask = random_mask(len, d, k, mask_rng);
            const double loss = loss_and_gradient(result.model, target, mask, grad);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch + 1 << ", batch " << batches + 1
                    << " (mask ratio " << r << ", last epoch loss "
                    << (result.epoch_loss.empty() ? std::nan("") : result.epoch_loss.back()) << ")";
                throw TrainingError(msg.str());
            }
            adam.step(result.model.params, grad);
            total += loss;
            ++batches;
        }
        result.epoch_loss.push_back(total / static_cast<double>(batches));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json tensor_to_json(const Matrix& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return {{"shape", {m.rows(), m.cols()}}, {"data", flat}};
}

Matrix tensor_from_json(const nlohmann::json& j) {
    const auto rows = j.at("shape").at(0).get<Eigen::Index>();
    const auto cols = j.at("shape").at(1).get<Eigen::Index>();
    const auto flat = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw DataError("model file: tensor size mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    return m;
}

}  // namespace

std::string bundle_to_json_text(const McmBundle& b) {
    nlohmann::json tensors = nlohmann::json::object();
    const auto ts = b.network.params.tensors();
    for (std::size_t i = 0; i < McmParams::kTensorCount; ++i)
        tensors[McmParams::tensor_names()[i]] = tensor_to_json(*ts[i]);
    nlohmann::json j{{"format", "survivalsynth-mcm"},
                     {"version", 1},
                     {"input_dim", b.network.input_dim},
                     {"hidden_dim", b.network.hidden_dim},
                     {"schema_hash", hex64(b.network.schema_hash)},
                     {"seed", b.network.seed},
                     {"preprocess", nlohmann::json::parse(preprocess_to_json_text(b.preprocess))},
                     {"tensors", tensors}};
    return j.dump() + "\n";
}

std::uint64_t McmBundle::content_hash() const { return fnv1a(bundle_to_json_text(*this)); }

McmBundle bundle_from_json_text(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format").get<std::string>() != "survivalsynth-mcm") throw DataError("model file: unknown format");
        McmBundle b;
        b.preprocess = preprocess_from_json_text(j.at("preprocess").dump());
        b.network.input_dim = j.at("input_dim").get<std::size_t>();
        b.network.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        b.network.seed = j.at("seed").get<std::uint64_t>();
        b.network.schema_hash = std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
        auto ts = b.network.params.tensors();
        for (std::size_t i = 0; i < McmParams::kTensorCount; ++i)
            *ts[i] = tensor_from_json(j.at("tensors").at(McmParams::tensor_names()[i]));
        if (b.network.schema_hash != b.preprocess.schema().hash())
            throw DataError("model file: schema hash does not match the embedded schema");
        if (b.network.input_dim != b.preprocess.schema().size())
            throw DataError("model file: input dimension does not match the schema");
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void save_bundle(const std::filesystem::path& path, const McmBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out << bundle_to_json_text(bundle);
}

McmBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return bundle_from_json_text(ss.str());
}

void check_schema(const McmBundle& bundle, const FeatureSchema& schema) {
    if (bundle.network.schema_hash != schema.hash())
        throw DataError("schema hash mismatch: model " + hex64(bundle.network.schema_hash) + ", data " +
                        hex64(schema.hash()));
}

}  // namespace survsynth
