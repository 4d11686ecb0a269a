#include "epidhgnn/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

using nlohmann::json;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::MatrixXd rectifier(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

// Rows scaled by a per-row factor.
Eigen::MatrixXd scaleRows(const Eigen::VectorXd& scale, const Eigen::MatrixXd& x) {
    return scale.asDiagonal() * x;
}

}  // namespace

void ModelConfig::validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be at least 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
    if (num_layers < 1) throw ConfigError("num_layers must be at least 1");
    if (kernel_width < 1) throw ConfigError("kernel_width must be at least 1");
    if (mlp_hidden < 1) throw ConfigError("mlp_hidden must be at least 1");
}

ParamLayout::ParamLayout(const ModelConfig& config) {
    config.validate();
    const Eigen::Index d = config.hidden_dim;
    const Eigen::Index m = config.mlp_hidden;

    auto add = [this](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        tensors_.push_back(Tensor{name, rows, cols, total_});
        total_ += rows * cols;
    };

    for (int l = 0; l < config.num_layers; ++l) {
        const Eigen::Index in = l == 0 ? config.input_dim : d;
        add("theta_" + std::to_string(l), in, d);
    }
    for (int tap = 0; tap < config.kernel_width; ++tap) {
        add("phi_temporal_" + std::to_string(tap), d, d);
    }
    for (int tap = 0; tap < config.kernel_width; ++tap) {
        add("phi_pattern_" + std::to_string(tap), d, d);
    }
    add("mlp_w1", m, d);
    add("mlp_b1", m, 1);
    add("mlp_w2", m, 1);
    add("mlp_b2", 1, 1);
    add("detect_w", d, 1);
    add("detect_b", 1, 1);
    add("detect_r", 1, 1);
    add("forecast_w", d, 1);
    add("forecast_b", 1, 1);
}

const ParamLayout::Tensor& ParamLayout::tensor(const std::string& name) const {
    for (const Tensor& t : tensors_) {
        if (t.name == name) return t;
    }
    throw RuntimeError("unknown parameter tensor '" + name + "'");
}

ModelParams::ModelParams(const ModelConfig& config)
    : config_(config), layout_(config), values_(Eigen::VectorXd::Zero(layout_.totalSize())) {}

void ModelParams::initialize(Rng rng) {
    auto xavier = [&rng](double* data, Eigen::Index count, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < count; ++i) data[i] = rng.uniform(-limit, limit);
    };

    values_.setZero();
    const double d = config_.hidden_dim;
    for (int l = 0; l < config_.num_layers; ++l) {
        auto t = theta(l);
        xavier(t.data(), t.size(), static_cast<double>(t.rows()), static_cast<double>(t.cols()));
    }
    for (int tap = 0; tap < config_.kernel_width; ++tap) {
        auto p = phiTemporal(tap);
        xavier(p.data(), p.size(), d * config_.kernel_width, d);
    }
    for (int tap = 0; tap < config_.kernel_width; ++tap) {
        auto p = phiPattern(tap);
        xavier(p.data(), p.size(), d * config_.kernel_width, d);
    }
    {
        auto w = mlpW1();
        xavier(w.data(), w.size(), d, static_cast<double>(config_.mlp_hidden));
    }
    {
        auto w = mlpW2();
        xavier(w.data(), w.size(), static_cast<double>(config_.mlp_hidden), 1.0);
    }
    {
        auto w = detectW();
        xavier(w.data(), w.size(), d, 1.0);
    }
    {
        auto w = forecastW();
        xavier(w.data(), w.size(), d, 1.0);
    }
    // Biases and the detection residual weight start at zero.
}

namespace {

ModelParams::Map mapTensor(Eigen::VectorXd& values, const ParamLayout::Tensor& t) {
    return ModelParams::Map(values.data() + t.offset, t.rows, t.cols);
}
ModelParams::ConstMap mapTensor(const Eigen::VectorXd& values, const ParamLayout::Tensor& t) {
    return ModelParams::ConstMap(values.data() + t.offset, t.rows, t.cols);
}

}  // namespace

ModelParams::Map ModelParams::theta(int layer) {
    return mapTensor(values_, layout_.tensor("theta_" + std::to_string(layer)));
}
ModelParams::ConstMap ModelParams::theta(int layer) const {
    return mapTensor(values_, layout_.tensor("theta_" + std::to_string(layer)));
}
ModelParams::Map ModelParams::phiTemporal(int tap) {
    return mapTensor(values_, layout_.tensor("phi_temporal_" + std::to_string(tap)));
}
ModelParams::ConstMap ModelParams::phiTemporal(int tap) const {
    return mapTensor(values_, layout_.tensor("phi_temporal_" + std::to_string(tap)));
}
ModelParams::Map ModelParams::phiPattern(int tap) {
    return mapTensor(values_, layout_.tensor("phi_pattern_" + std::to_string(tap)));
}
ModelParams::ConstMap ModelParams::phiPattern(int tap) const {
    return mapTensor(values_, layout_.tensor("phi_pattern_" + std::to_string(tap)));
}
ModelParams::Map ModelParams::mlpW1() { return mapTensor(values_, layout_.tensor("mlp_w1")); }
ModelParams::ConstMap ModelParams::mlpW1() const {
    return mapTensor(values_, layout_.tensor("mlp_w1"));
}
ModelParams::VecMap ModelParams::mlpB1() {
    const auto& t = layout_.tensor("mlp_b1");
    return VecMap(values_.data() + t.offset, t.rows);
}
ModelParams::ConstVecMap ModelParams::mlpB1() const {
    const auto& t = layout_.tensor("mlp_b1");
    return ConstVecMap(values_.data() + t.offset, t.rows);
}
ModelParams::VecMap ModelParams::mlpW2() {
    const auto& t = layout_.tensor("mlp_w2");
    return VecMap(values_.data() + t.offset, t.rows);
}
ModelParams::ConstVecMap ModelParams::mlpW2() const {
    const auto& t = layout_.tensor("mlp_w2");
    return ConstVecMap(values_.data() + t.offset, t.rows);
}
double& ModelParams::mlpB2() { return values_[layout_.tensor("mlp_b2").offset]; }
double ModelParams::mlpB2() const { return values_[layout_.tensor("mlp_b2").offset]; }
ModelParams::VecMap ModelParams::detectW() {
    const auto& t = layout_.tensor("detect_w");
    return VecMap(values_.data() + t.offset, t.rows);
}
ModelParams::ConstVecMap ModelParams::detectW() const {
    const auto& t = layout_.tensor("detect_w");
    return ConstVecMap(values_.data() + t.offset, t.rows);
}
double& ModelParams::detectB() { return values_[layout_.tensor("detect_b").offset]; }
double ModelParams::detectB() const { return values_[layout_.tensor("detect_b").offset]; }
double& ModelParams::detectResidual() { return values_[layout_.tensor("detect_r").offset]; }
double ModelParams::detectResidual() const { return values_[layout_.tensor("detect_r").offset]; }
ModelParams::VecMap ModelParams::forecastW() {
    const auto& t = layout_.tensor("forecast_w");
    return VecMap(values_.data() + t.offset, t.rows);
}
ModelParams::ConstVecMap ModelParams::forecastW() const {
    const auto& t = layout_.tensor("forecast_w");
    return ConstVecMap(values_.data() + t.offset, t.rows);
}
double& ModelParams::forecastB() { return values_[layout_.tensor("forecast_b").offset]; }
double ModelParams::forecastB() const { return values_[layout_.tensor("forecast_b").offset]; }

void ModelParams::saveCheckpoint(const std::filesystem::path& path) const {
    json j;
    j["format"] = "epidhgnn-checkpoint-v1";
    j["config"] = {{"input_dim", config_.input_dim},
                   {"hidden_dim", config_.hidden_dim},
                   {"num_layers", config_.num_layers},
                   {"kernel_width", config_.kernel_width},
                   {"mlp_hidden", config_.mlp_hidden}};
    json tensors = json::array();
    for (const auto& t : layout_.tensors()) {
        json entry;
        entry["name"] = t.name;
        entry["rows"] = t.rows;
        entry["cols"] = t.cols;
        std::vector<double> data(values_.data() + t.offset, values_.data() + t.offset + t.rows * t.cols);
        entry["data"] = data;
        tensors.push_back(entry);
    }
    j["tensors"] = tensors;

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeError("cannot write " + tmp.string());
        out << j.dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

ModelParams ModelParams::loadCheckpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "epidhgnn-checkpoint-v1") {
        throw ConfigError(path.string() + ": unrecognized checkpoint format");
    }

    ModelConfig config;
    try {
        const json& c = j.at("config");
        config.input_dim = c.at("input_dim").get<int>();
        config.hidden_dim = c.at("hidden_dim").get<int>();
        config.num_layers = c.at("num_layers").get<int>();
        config.kernel_width = c.at("kernel_width").get<int>();
        config.mlp_hidden = c.at("mlp_hidden").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": bad config block: " + e.what());
    }

    ModelParams params(config);
    const auto& tensors = j.at("tensors");
    if (!tensors.is_array() || tensors.size() != params.layout_.tensors().size()) {
        throw ConfigError(path.string() + ": tensor list does not match the stated config");
    }
    for (std::size_t i = 0; i < params.layout_.tensors().size(); ++i) {
        const auto& spec = params.layout_.tensors()[i];
        const json& entry = tensors[i];
        if (entry.value("name", "") != spec.name ||
            entry.value("rows", Eigen::Index{-1}) != spec.rows ||
            entry.value("cols", Eigen::Index{-1}) != spec.cols) {
            throw ConfigError(path.string() + ": tensor '" + spec.name +
                              "' shape mismatch against the stated config");
        }
        const auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != static_cast<std::size_t>(spec.rows * spec.cols)) {
            throw ConfigError(path.string() + ": tensor '" + spec.name + "' data length mismatch");
        }
        std::copy(data.begin(), data.end(), params.values_.data() + spec.offset);
    }
    return params;
}

TimestepStructure TimestepStructure::from(const IncidenceMatrix& incidence) {
    return from(incidence, Eigen::VectorXd::Ones(incidence.numLocations()));
}

TimestepStructure TimestepStructure::from(const IncidenceMatrix& incidence,
                                          const Eigen::VectorXd& edge_weights) {
    const DegreeOperators ops = degreeOperators(incidence, edge_weights);
    TimestepStructure s;
    s.incidence = incidence.matrix();
    s.dv_inv_sqrt = ops.nodeInvSqrt();
    s.de_inv = ops.edgeInv();
    s.edge_weights = edge_weights;
    return s;
}

Eigen::MatrixXd TimestepStructure::edgeAggregate(const Eigen::MatrixXd& x) const {
    if (x.rows() != incidence.rows()) {
        throw ConfigError("edgeAggregate: feature rows " + std::to_string(x.rows()) +
                          " do not match " + std::to_string(incidence.rows()) + " individuals");
    }
    const Eigen::MatrixXd scaled = scaleRows(dv_inv_sqrt, x);
    return scaleRows(de_inv, incidence.transpose() * scaled);
}

Eigen::MatrixXd TimestepStructure::edgeAggregateAdjoint(const Eigen::MatrixXd& g) const {
    const Eigen::MatrixXd scaled = scaleRows(de_inv, g);
    return scaleRows(dv_inv_sqrt, incidence * scaled);
}

Eigen::MatrixXd TimestepStructure::nodeAggregate(const Eigen::MatrixXd& x) const {
    if (x.rows() != incidence.rows()) {
        throw ConfigError("nodeAggregate: feature rows " + std::to_string(x.rows()) +
                          " do not match " + std::to_string(incidence.rows()) + " individuals");
    }
    const Eigen::MatrixXd at_edges = incidence.transpose() * scaleRows(dv_inv_sqrt, x);
    const Eigen::VectorXd w_de_inv = edge_weights.cwiseProduct(de_inv);
    return scaleRows(dv_inv_sqrt, incidence * scaleRows(w_de_inv, at_edges));
}

Eigen::MatrixXd TimestepStructure::nodeAggregateAdjoint(const Eigen::MatrixXd& g) const {
    // W and D_e^-1 are diagonal, so the operator is symmetric.
    return nodeAggregate(g);
}

HgnnLayerOutput hgnnLayer(const TimestepStructure& structure, const Eigen::MatrixXd& node_features,
                          const Eigen::MatrixXd& theta, bool rectify) {
    if (node_features.cols() != theta.rows()) {
        throw ConfigError("hgnnLayer: feature dim " + std::to_string(node_features.cols()) +
                          " does not match theta rows " + std::to_string(theta.rows()));
    }
    HgnnLayerOutput out;
    out.edge = structure.edgeAggregate(node_features) * theta;
    out.node = structure.nodeAggregate(node_features) * theta;
    if (rectify) {
        out.edge = rectifier(out.edge);
        out.node = rectifier(out.node);
    }
    return out;
}

std::vector<Eigen::MatrixXd> temporalStack(std::vector<Eigen::MatrixXd> frames) {
    for (std::size_t t = 1; t < frames.size(); ++t) {
        if (frames[t].rows() != frames[0].rows() || frames[t].cols() != frames[0].cols()) {
            throw ConfigError("temporalStack: ragged frame shapes at position " + std::to_string(t));
        }
    }
    return frames;
}

std::vector<Eigen::MatrixXd> temporalConv(std::span<const Eigen::MatrixXd> sequence,
                                          std::span<const Eigen::MatrixXd> phi,
                                          Activation activation) {
    if (phi.empty()) throw ConfigError("temporalConv: kernel width must be at least 1");
    if (sequence.empty()) throw ConfigError("temporalConv: empty sequence");
    for (const auto& tap : phi) {
        if (tap.rows() != sequence[0].cols()) {
            throw ConfigError("temporalConv: kernel input channels do not match sequence channels");
        }
    }

    std::vector<Eigen::MatrixXd> out(sequence.size());
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(sequence[0].rows(), phi[0].cols());
        for (std::size_t tap = 0; tap < phi.size(); ++tap) {
            if (tap > t) break;  // causal left zero-padding
            acc.noalias() += sequence[t - tap] * phi[tap];
        }
        out[t] = activation == Activation::Rectifier ? rectifier(acc) : std::move(acc);
    }
    return out;
}

namespace {

// Final-position output of the causal pattern convolution: only the last
// window frame is consumed downstream, so earlier positions are never formed.
Eigen::MatrixXd patternConvFinal(std::span<const Eigen::MatrixXd> window,
                                 const ModelParams& params) {
    const int k = params.config().kernel_width;
    const auto last = static_cast<std::ptrdiff_t>(window.size()) - 1;
    Eigen::MatrixXd acc =
        Eigen::MatrixXd::Zero(window[static_cast<std::size_t>(last)].rows(), params.config().hidden_dim);
    for (int tap = 0; tap < k; ++tap) {
        if (tap > last) break;
        acc.noalias() += window[static_cast<std::size_t>(last - tap)] * params.phiPattern(tap);
    }
    return acc;
}

}  // namespace

Eigen::VectorXd contactScore(std::span<const Eigen::MatrixXd> node_sequence,
                             std::span<const Eigen::MatrixXd> edge_sequence,
                             std::span<const Eigen::MatrixXd> phi_pattern,
                             const Eigen::MatrixXd& mlp_w1, const Eigen::VectorXd& mlp_b1,
                             const Eigen::VectorXd& mlp_w2, double mlp_b2,
                             std::span<const std::pair<int, int>> pairs) {
    if (node_sequence.empty() || node_sequence.size() != edge_sequence.size()) {
        throw ConfigError("contactScore: node and edge sequences must share the time axis");
    }
    const auto node_conv = temporalConv(node_sequence, phi_pattern, Activation::Identity);
    const auto edge_conv = temporalConv(edge_sequence, phi_pattern, Activation::Identity);
    const Eigen::MatrixXd& u = node_conv.back();
    const Eigen::MatrixXd& v = edge_conv.back();

    Eigen::VectorXd scores(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [node, edge] = pairs[i];
        if (node < 0 || node >= u.rows() || edge < 0 || edge >= v.rows()) {
            throw ConfigError("contactScore: candidate pair (" + std::to_string(node) + ", " +
                              std::to_string(edge) + ") out of range");
        }
        const Eigen::VectorXd h = u.row(node).cwiseProduct(v.row(edge)).transpose();
        const Eigen::VectorXd hidden = (mlp_w1 * h + mlp_b1).cwiseMax(0.0);
        scores[static_cast<Eigen::Index>(i)] = sigmoid(mlp_w2.dot(hidden) + mlp_b2);
    }
    return scores;
}

Eigen::VectorXd decodeDetection(const Eigen::MatrixXd& final_embedding, const Eigen::VectorXd& w,
                                double b, double residual_weight,
                                const Eigen::VectorXd& infected_flags) {
    if (final_embedding.cols() != w.size()) {
        throw ConfigError("decodeDetection: embedding dim does not match head weights");
    }
    Eigen::VectorXd logits = final_embedding * w;
    logits.array() += b;
    logits += residual_weight * infected_flags;
    return logits.unaryExpr([](double x) { return sigmoid(x); });
}

Eigen::VectorXd decodeForecast(const Eigen::MatrixXd& final_embedding, const Eigen::VectorXd& w,
                               double b) {
    if (final_embedding.cols() != w.size()) {
        throw ConfigError("decodeForecast: embedding dim does not match head weights");
    }
    Eigen::VectorXd logits = final_embedding * w;
    logits.array() += b;
    return logits.unaryExpr([](double x) { return sigmoid(x); });
}

ForwardResult forward(std::span<const TimestepStructure> frames, const StateSequence& masked_states,
                      int first_observed, const ModelParams& params, const ForwardOptions& options) {
    const auto& config = params.config();
    const int num_frames = static_cast<int>(frames.size());
    if (num_frames == 0) throw ConfigError("forward: empty observation window");
    if (masked_states.numTimesteps() != num_frames) {
        throw ConfigError("forward: " + std::to_string(num_frames) + " structures but " +
                          std::to_string(masked_states.numTimesteps()) + " state frames");
    }
    if (first_observed < 0 || first_observed >= num_frames) {
        throw ConfigError("forward: first observed frame out of range");
    }
    const int n = frames[0].numIndividuals();
    if (masked_states.numIndividuals() != n) {
        throw ConfigError("forward: state and structure disagree on the number of individuals");
    }

    const int num_layers = config.num_layers;
    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.z.resize(static_cast<std::size_t>(num_layers) + 1);
    cache.a.resize(static_cast<std::size_t>(num_layers));

    auto& z0 = cache.z[0];
    z0.resize(static_cast<std::size_t>(num_frames));
    for (int t = 0; t < num_frames; ++t) z0[static_cast<std::size_t>(t)] = masked_states.onehot(t);

    for (int l = 0; l < num_layers; ++l) {
        const auto theta = params.theta(l);
        auto& zin = cache.z[static_cast<std::size_t>(l)];
        auto& agg = cache.a[static_cast<std::size_t>(l)];
        auto& zout = cache.z[static_cast<std::size_t>(l) + 1];
        agg.resize(static_cast<std::size_t>(num_frames));
        zout.resize(static_cast<std::size_t>(num_frames));
        const bool last_layer = l == num_layers - 1;
        for (int t = 0; t < num_frames; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            agg[ts] = frames[static_cast<std::size_t>(t)].nodeAggregate(zin[ts]);
            Eigen::MatrixXd raw = agg[ts] * theta;
            zout[ts] = last_layer ? std::move(raw) : rectifier(raw);
        }
    }
    const auto& node_embed = cache.z[static_cast<std::size_t>(num_layers)];

    cache.infected_flags = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
        if (masked_states.at(first_observed, v) == SirState::Infected) cache.infected_flags[v] = 1.0;
    }

    if (options.detect || options.forecast) {
        std::vector<Eigen::MatrixXd> phi(static_cast<std::size_t>(config.kernel_width));
        for (int tap = 0; tap < config.kernel_width; ++tap) {
            phi[static_cast<std::size_t>(tap)] = params.phiTemporal(tap);
        }
        cache.conv_out = temporalConv(node_embed, phi, Activation::Rectifier);
        const Eigen::MatrixXd& final_embed = cache.conv_out.back();
        if (options.detect) {
            cache.detect_scores = decodeDetection(final_embed, params.detectW(), params.detectB(),
                                                  params.detectResidual(), cache.infected_flags);
            result.detect_scores = cache.detect_scores;
        }
        if (options.forecast) {
            cache.forecast_probs = decodeForecast(final_embed, params.forecastW(), params.forecastB());
            result.forecast_probs = cache.forecast_probs;
        }
    }

    if (options.pattern != nullptr) {
        const PatternQuery& query = *options.pattern;
        const int k = config.kernel_width;
        if (k < 2) {
            throw ConfigError("contact-pattern module requires kernel_width >= 2 (window of k-1 frames)");
        }
        const int window_len = k - 1;
        const int window_last = query.window_begin + window_len - 1;
        if (query.window_begin < 0 || window_last >= num_frames) {
            throw ConfigError("pattern window [" + std::to_string(query.window_begin) + ", " +
                              std::to_string(window_last) + "] outside the observation window");
        }

        cache.pattern_begin = query.window_begin;
        cache.pattern_len = window_len;
        cache.pairs = query.pairs;
        cache.edge_pre.resize(static_cast<std::size_t>(window_len));
        cache.edge_embed.resize(static_cast<std::size_t>(window_len));
        const auto theta_last = params.theta(num_layers - 1);
        const auto& z_prev = cache.z[static_cast<std::size_t>(num_layers) - 1];
        for (int j = 0; j < window_len; ++j) {
            const int t = query.window_begin + j;
            const auto& frame = frames[static_cast<std::size_t>(t)];
            cache.edge_pre[static_cast<std::size_t>(j)] =
                frame.edgeAggregate(z_prev[static_cast<std::size_t>(t)]);
            cache.edge_embed[static_cast<std::size_t>(j)] =
                cache.edge_pre[static_cast<std::size_t>(j)] * theta_last;
        }

        std::span<const Eigen::MatrixXd> node_window(node_embed.data() + query.window_begin,
                                                     static_cast<std::size_t>(window_len));
        cache.pattern_node_final = patternConvFinal(node_window, params);
        cache.pattern_edge_final = patternConvFinal(cache.edge_embed, params);

        const auto num_pairs = static_cast<Eigen::Index>(query.pairs.size());
        const int e_count = frames[0].numLocations();
        cache.pair_product.resize(num_pairs, config.hidden_dim);
        cache.pair_hidden.resize(num_pairs, config.mlp_hidden);
        cache.pattern_scores.resize(num_pairs);
        const auto w1 = params.mlpW1();
        const auto b1 = params.mlpB1();
        const auto w2 = params.mlpW2();
        const double b2 = params.mlpB2();
        for (Eigen::Index i = 0; i < num_pairs; ++i) {
            const auto [node, edge] = query.pairs[static_cast<std::size_t>(i)];
            if (node < 0 || node >= n || edge < 0 || edge >= e_count) {
                throw ConfigError("pattern candidate pair (" + std::to_string(node) + ", " +
                                  std::to_string(edge) + ") out of range");
            }
            cache.pair_product.row(i) =
                cache.pattern_node_final.row(node).cwiseProduct(cache.pattern_edge_final.row(edge));
            const Eigen::VectorXd hidden =
                (w1 * cache.pair_product.row(i).transpose() + b1).cwiseMax(0.0);
            cache.pair_hidden.row(i) = hidden.transpose();
            cache.pattern_scores[i] = sigmoid(w2.dot(hidden) + b2);
        }
        result.pattern_scores = cache.pattern_scores;
    }

    return result;
}

Eigen::VectorXd backward(const ForwardResult& result, std::span<const TimestepStructure> frames,
                         const ModelParams& params, const BackwardSignal& signal) {
    const ForwardCache& cache = result.cache;
    const auto& config = params.config();
    const int num_layers = config.num_layers;
    if (cache.z.empty()) throw RuntimeError("backward: forward cache missing");
    const int num_frames = static_cast<int>(cache.z[0].size());
    const auto& node_embed = cache.z[static_cast<std::size_t>(num_layers)];

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.values().size());
    const ParamLayout& layout = params.layout();
    auto gmat = [&](const std::string& name) {
        const auto& t = layout.tensor(name);
        return ModelParams::Map(grad.data() + t.offset, t.rows, t.cols);
    };
    auto gvec = [&](const std::string& name) {
        const auto& t = layout.tensor(name);
        return ModelParams::VecMap(grad.data() + t.offset, t.rows);
    };
    auto gscalar = [&](const std::string& name) -> double& {
        return grad[layout.tensor(name).offset];
    };

    // Gradients flowing into the final node embeddings, per frame.
    std::vector<Eigen::MatrixXd> d_embed(static_cast<std::size_t>(num_frames));
    for (auto& m : d_embed) {
        m = Eigen::MatrixXd::Zero(node_embed[0].rows(), node_embed[0].cols());
    }

    // ---- task decoders and temporal convolution ----
    const bool detect_active = signal.d_detect_scores.size() > 0;
    const bool forecast_active = signal.d_forecast_probs.size() > 0;
    if (detect_active || forecast_active) {
        if (cache.conv_out.empty()) {
            throw RuntimeError("backward: task gradients supplied but forward ran without a task branch");
        }
        const Eigen::MatrixXd& final_embed = cache.conv_out.back();
        Eigen::MatrixXd d_final = Eigen::MatrixXd::Zero(final_embed.rows(), final_embed.cols());

        if (detect_active) {
            const Eigen::VectorXd& s = cache.detect_scores;
            const Eigen::VectorXd d_logit =
                signal.d_detect_scores.cwiseProduct(s.cwiseProduct(Eigen::VectorXd::Ones(s.size()) - s));
            gvec("detect_w") += final_embed.transpose() * d_logit;
            gscalar("detect_b") += d_logit.sum();
            gscalar("detect_r") += d_logit.dot(cache.infected_flags);
            d_final.noalias() += d_logit * params.detectW().transpose();
        }
        if (forecast_active) {
            const Eigen::VectorXd& s = cache.forecast_probs;
            const Eigen::VectorXd d_logit =
                signal.d_forecast_probs.cwiseProduct(s.cwiseProduct(Eigen::VectorXd::Ones(s.size()) - s));
            gvec("forecast_w") += final_embed.transpose() * d_logit;
            gscalar("forecast_b") += d_logit.sum();
            d_final.noalias() += d_logit * params.forecastW().transpose();
        }

        // Only the final conv position feeds the decoders.
        const Eigen::MatrixXd d_pre =
            d_final.cwiseProduct((final_embed.array() > 0.0).cast<double>().matrix());
        for (int tap = 0; tap < config.kernel_width; ++tap) {
            const int t_in = num_frames - 1 - tap;
            if (t_in < 0) break;
            gmat("phi_temporal_" + std::to_string(tap)) +=
                node_embed[static_cast<std::size_t>(t_in)].transpose() * d_pre;
            d_embed[static_cast<std::size_t>(t_in)].noalias() +=
                d_pre * params.phiTemporal(tap).transpose();
        }
    }

    // ---- contact-pattern branch ----
    std::vector<Eigen::MatrixXd> d_edge_embed;
    const bool pattern_active = signal.d_pattern_scores.size() > 0;
    if (pattern_active) {
        if (cache.pattern_begin < 0) {
            throw RuntimeError("backward: pattern gradients supplied but forward ran without a pattern query");
        }
        const auto w1 = params.mlpW1();
        const auto w2 = params.mlpW2();
        Eigen::MatrixXd d_u =
            Eigen::MatrixXd::Zero(cache.pattern_node_final.rows(), cache.pattern_node_final.cols());
        Eigen::MatrixXd d_v =
            Eigen::MatrixXd::Zero(cache.pattern_edge_final.rows(), cache.pattern_edge_final.cols());

        auto g_w1 = gmat("mlp_w1");
        auto g_b1 = gvec("mlp_b1");
        auto g_w2 = gvec("mlp_w2");
        for (Eigen::Index i = 0; i < signal.d_pattern_scores.size(); ++i) {
            const double s = cache.pattern_scores[i];
            const double d_logit = signal.d_pattern_scores[i] * s * (1.0 - s);
            const Eigen::VectorXd hidden = cache.pair_hidden.row(i).transpose();
            gscalar("mlp_b2") += d_logit;
            g_w2 += d_logit * hidden;
            Eigen::VectorXd d_hidden = d_logit * w2;
            for (Eigen::Index h = 0; h < d_hidden.size(); ++h) {
                if (hidden[h] <= 0.0) d_hidden[h] = 0.0;
            }
            const Eigen::VectorXd h_in = cache.pair_product.row(i).transpose();
            g_w1 += d_hidden * h_in.transpose();
            g_b1 += d_hidden;
            const Eigen::VectorXd d_h = w1.transpose() * d_hidden;
            const auto [node, edge] = cache.pairs[static_cast<std::size_t>(i)];
            d_u.row(node) += d_h.transpose().cwiseProduct(cache.pattern_edge_final.row(edge));
            d_v.row(edge) += d_h.transpose().cwiseProduct(cache.pattern_node_final.row(node));
        }

        // Back through the two shared-kernel pattern convolutions (final
        // position only, matching the forward).
        d_edge_embed.assign(static_cast<std::size_t>(cache.pattern_len),
                            Eigen::MatrixXd::Zero(d_v.rows(), d_v.cols()));
        const int last = cache.pattern_len - 1;
        for (int tap = 0; tap < config.kernel_width; ++tap) {
            const int j = last - tap;
            if (j < 0) break;
            const int t = cache.pattern_begin + j;
            auto g_phi = gmat("phi_pattern_" + std::to_string(tap));
            g_phi += node_embed[static_cast<std::size_t>(t)].transpose() * d_u;
            d_embed[static_cast<std::size_t>(t)].noalias() += d_u * params.phiPattern(tap).transpose();
            g_phi += cache.edge_embed[static_cast<std::size_t>(j)].transpose() * d_v;
            d_edge_embed[static_cast<std::size_t>(j)].noalias() +=
                d_v * params.phiPattern(tap).transpose();
        }
    }

    // ---- hypergraph convolution stack ----
    std::vector<Eigen::MatrixXd> d_cur = std::move(d_embed);
    for (int l = num_layers - 1; l >= 0; --l) {
        const auto theta = params.theta(l);
        auto g_theta = gmat("theta_" + std::to_string(l));
        const auto& agg = cache.a[static_cast<std::size_t>(l)];
        const auto& zout = cache.z[static_cast<std::size_t>(l) + 1];
        const bool last_layer = l == num_layers - 1;

        std::vector<Eigen::MatrixXd> d_prev;
        if (l > 0) {
            d_prev.assign(static_cast<std::size_t>(num_frames),
                          Eigen::MatrixXd::Zero(cache.z[static_cast<std::size_t>(l)][0].rows(),
                                                cache.z[static_cast<std::size_t>(l)][0].cols()));
        }
        for (int t = 0; t < num_frames; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            Eigen::MatrixXd d_raw = last_layer
                                        ? d_cur[ts]
                                        : d_cur[ts]
                                              .cwiseProduct((zout[ts].array() > 0.0).cast<double>().matrix())
                                              .eval();
            if (d_raw.size() == 0) continue;
            g_theta += agg[ts].transpose() * d_raw;
            if (l > 0) {
                d_prev[ts] = frames[ts].nodeAggregateAdjoint(d_raw * theta.transpose());
            }
        }

        // The final layer's Eq. 1 branch feeds the pattern module.
        if (last_layer && pattern_active) {
            for (int j = 0; j < cache.pattern_len; ++j) {
                const int t = cache.pattern_begin + j;
                const auto js = static_cast<std::size_t>(j);
                g_theta += cache.edge_pre[js].transpose() * d_edge_embed[js];
                if (l > 0) {
                    d_prev[static_cast<std::size_t>(t)] += frames[static_cast<std::size_t>(t)]
                        .edgeAggregateAdjoint(d_edge_embed[js] * theta.transpose());
                }
            }
        }
        d_cur = std::move(d_prev);
    }

    return grad;
}

}  // namespace epidhgnn
