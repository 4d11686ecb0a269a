#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epidhgnn/hypergraph.hpp"
#include "epidhgnn/rng.hpp"

namespace epidhgnn {

struct ModelConfig {
    int input_dim = 3;    // one-hot SIR states
    int hidden_dim = 32;
    int num_layers = 2;
    int kernel_width = 3;
    int mlp_hidden = 32;  // contact-pattern MLP width

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Offsets of every learnable tensor inside one flat parameter vector. Keeping
/// parameters flat makes gradient clipping, the optimizer, finite-difference
/// checks, and serialization uniform.
class ParamLayout {
public:
    struct Tensor {
        std::string name;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;  // 1 for vectors and scalars
        Eigen::Index offset = 0;
    };

    explicit ParamLayout(const ModelConfig& config);

    Eigen::Index totalSize() const { return total_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }
    const Tensor& tensor(const std::string& name) const;

private:
    std::vector<Tensor> tensors_;
    Eigen::Index total_ = 0;
};

/// All learnable tensors, stored flat. Accessors hand out Eigen maps over the
/// flat storage (column-major within each tensor).
class ModelParams {
public:
    using Map = Eigen::Map<Eigen::MatrixXd>;
    using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
    using VecMap = Eigen::Map<Eigen::VectorXd>;
    using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

    explicit ModelParams(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const ParamLayout& layout() const { return layout_; }

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }

    /// Xavier-uniform weights, zero biases, zero residual weight.
    void initialize(Rng rng);

    Map theta(int layer);
    ConstMap theta(int layer) const;
    Map phiTemporal(int tap);
    ConstMap phiTemporal(int tap) const;
    Map phiPattern(int tap);
    ConstMap phiPattern(int tap) const;
    Map mlpW1();
    ConstMap mlpW1() const;
    VecMap mlpB1();
    ConstVecMap mlpB1() const;
    VecMap mlpW2();
    ConstVecMap mlpW2() const;
    double& mlpB2();
    double mlpB2() const;
    VecMap detectW();
    ConstVecMap detectW() const;
    double& detectB();
    double detectB() const;
    double& detectResidual();
    double detectResidual() const;
    VecMap forecastW();
    ConstVecMap forecastW() const;
    double& forecastB();
    double forecastB() const;

    void saveCheckpoint(const std::filesystem::path& path) const;
    /// Rejects checkpoints whose tensor shapes disagree with their config.
    static ModelParams loadCheckpoint(const std::filesystem::path& path);

private:
    ModelConfig config_;
    ParamLayout layout_;
    Eigen::VectorXd values_;
};

/// Precomputed structural operators for one timestep: the incidence matrix
/// plus the diagonal scalings of the convolution, with 1/0 = 0 throughout.
struct TimestepStructure {
    Eigen::SparseMatrix<double> incidence;  // N x E
    Eigen::VectorXd dv_inv_sqrt;            // N
    Eigen::VectorXd de_inv;                 // E
    Eigen::VectorXd edge_weights;           // E

    static TimestepStructure from(const IncidenceMatrix& incidence);
    static TimestepStructure from(const IncidenceMatrix& incidence,
                                  const Eigen::VectorXd& edge_weights);

    int numIndividuals() const { return static_cast<int>(incidence.rows()); }
    int numLocations() const { return static_cast<int>(incidence.cols()); }

    /// D_e^-1 H^T D_v^-1/2 X  (node features to hyperedges).
    Eigen::MatrixXd edgeAggregate(const Eigen::MatrixXd& x) const;
    /// Adjoint of edgeAggregate.
    Eigen::MatrixXd edgeAggregateAdjoint(const Eigen::MatrixXd& g) const;
    /// D_v^-1/2 H W D_e^-1 H^T D_v^-1/2 X  (node-edge-node aggregation).
    Eigen::MatrixXd nodeAggregate(const Eigen::MatrixXd& x) const;
    /// Adjoint of nodeAggregate (equal to it: diagonal scalings commute).
    Eigen::MatrixXd nodeAggregateAdjoint(const Eigen::MatrixXd& g) const;
};

/// One hypergraph convolution layer.
///   edge = D_e^-1 H^T D_v^-1/2 X Theta
///   node = D_v^-1/2 H W D_e^-1 H^T D_v^-1/2 X Theta
/// With `rectify` both outputs pass through a rectifier (used between layers;
/// the final layer stays linear).
struct HgnnLayerOutput {
    Eigen::MatrixXd node;
    Eigen::MatrixXd edge;
};
HgnnLayerOutput hgnnLayer(const TimestepStructure& structure, const Eigen::MatrixXd& node_features,
                          const Eigen::MatrixXd& theta, bool rectify);

/// Stacks per-timestep frames into one sequence, rejecting ragged shapes.
std::vector<Eigen::MatrixXd> temporalStack(std::vector<Eigen::MatrixXd> frames);

enum class Activation { Identity, Rectifier };

/// Causal 1-D convolution along the time axis, per entity per channel:
/// out[t] = act(sum_tap seq[t - tap] * phi[tap]) with zero padding on the
/// left; output length equals input length.
std::vector<Eigen::MatrixXd> temporalConv(std::span<const Eigen::MatrixXd> sequence,
                                          std::span<const Eigen::MatrixXd> phi,
                                          Activation activation);

/// Contact-pattern confidence scores for candidate (individual, location)
/// pairs: both sequences pass through the pattern temporal convolution, the
/// final-time embeddings of the pair are multiplied element-wise, fed to the
/// MLP, and squashed by the logistic function.
Eigen::VectorXd contactScore(std::span<const Eigen::MatrixXd> node_sequence,
                             std::span<const Eigen::MatrixXd> edge_sequence,
                             std::span<const Eigen::MatrixXd> phi_pattern,
                             const Eigen::MatrixXd& mlp_w1, const Eigen::VectorXd& mlp_b1,
                             const Eigen::VectorXd& mlp_w2, double mlp_b2,
                             std::span<const std::pair<int, int>> pairs);

/// Source scores: logistic(head(embedding_v) + r * first_observed_infected_v).
Eigen::VectorXd decodeDetection(const Eigen::MatrixXd& final_embedding, const Eigen::VectorXd& w,
                                double b, double residual_weight,
                                const Eigen::VectorXd& infected_flags);

/// Infection probabilities: logistic of an affine head per node.
Eigen::VectorXd decodeForecast(const Eigen::MatrixXd& final_embedding, const Eigen::VectorXd& w,
                               double b);

/// Contact-pattern reconstruction query: the window frames
/// [window_begin, window_begin + kernel_width - 2] predict incidence at frame
/// window_begin + kernel_width - 1.
struct PatternQuery {
    int window_begin = 0;
    std::vector<std::pair<int, int>> pairs;  // (individual, location)
};

struct ForwardOptions {
    bool detect = false;
    bool forecast = false;
    const PatternQuery* pattern = nullptr;
};

struct ForwardCache {
    // Per layer l: inputs z[l][t] and aggregates a[l][t] = M_t z[l][t];
    // z[num_layers] holds the final (linear) node embeddings.
    std::vector<std::vector<Eigen::MatrixXd>> z;
    std::vector<std::vector<Eigen::MatrixXd>> a;
    std::vector<Eigen::MatrixXd> conv_out;  // task branch, post-activation
    Eigen::VectorXd infected_flags;         // N; earliest observed frame
    Eigen::VectorXd detect_scores;
    Eigen::VectorXd forecast_probs;

    // Pattern branch (window frames only).
    int pattern_begin = -1;
    int pattern_len = 0;
    std::vector<Eigen::MatrixXd> edge_pre;    // q[t] = B_t z[L-1][t], per window frame
    std::vector<Eigen::MatrixXd> edge_embed;  // q[t] * Theta_{L-1}
    Eigen::MatrixXd pattern_node_final;       // N x d
    Eigen::MatrixXd pattern_edge_final;       // E x d
    Eigen::MatrixXd pair_product;             // pairs x d
    Eigen::MatrixXd pair_hidden;              // pairs x m, post-rectifier
    Eigen::VectorXd pattern_scores;
    std::vector<std::pair<int, int>> pairs;
};

struct ForwardResult {
    Eigen::VectorXd detect_scores;
    Eigen::VectorXd forecast_probs;
    Eigen::VectorXd pattern_scores;
    ForwardCache cache;
};

/// Full forward pass over an observation window. `masked_states` must have
/// one frame per structure; `first_observed` is the earliest frame whose
/// states are visible (tsh).
ForwardResult forward(std::span<const TimestepStructure> frames, const StateSequence& masked_states,
                      int first_observed, const ModelParams& params, const ForwardOptions& options);

/// Upstream gradients with respect to the forward outputs. Empty vectors mean
/// the corresponding branch contributes nothing.
struct BackwardSignal {
    Eigen::VectorXd d_detect_scores;
    Eigen::VectorXd d_forecast_probs;
    Eigen::VectorXd d_pattern_scores;
};

/// Exact analytic gradients of the loss with respect to every parameter,
/// using the cached intermediates of a forward pass.
Eigen::VectorXd backward(const ForwardResult& result, std::span<const TimestepStructure> frames,
                         const ModelParams& params, const BackwardSignal& signal);

}  // namespace epidhgnn
