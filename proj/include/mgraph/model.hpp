#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mgraph/checkpoint.hpp"
#include "mgraph/scene_graph.hpp"
#include "mgraph/tensor.hpp"

namespace mgraph {

// Architecture variants. G: relational graph encoder, L: LSTM,
// MA/SA: multi-/single-head attention, plain L/L+MA: positional-feature
// baselines.
enum class Variant { GLMA, GLSA, GL, GSA, L, LMA };

const std::string& variant_name(Variant v);        // "G+L+MA", ...
Variant variant_from_name(const std::string& name);
const std::vector<Variant>& all_variants();

struct ModelConfig {
    Variant variant = Variant::GLMA;
    int embed_dim = 128;
    std::vector<int> mrgcn_dims = {128, 32};
    int T = 10;
    int heads = 16;
    int d_k = 2;
    int d_v = 2;
    int n_max = 24;  // baseline feature padding: F = (n_max - 1) * 4
    uint64_t seed = 0;

    // Variant-dependent defaults: MA -> 16 heads of d_k = d_v = 2,
    // SA -> 1 head of d_k = d_v = 32.
    static ModelConfig defaults(Variant v, uint64_t seed = 0);

    bool uses_graph() const;
    bool uses_lstm() const;
    bool uses_attention() const;
    int lstm_input_dim() const;
    int feature_dim() const { return (n_max - 1) * 4; }
    // width of the vectors entering pooling / the classifier head
    int temporal_dim() const;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

struct MrGcnLayerParams {
    std::array<Tensor, kNumRelations> W_r;
    Tensor W_s;
};

struct LstmParams {
    Tensor W_xi, W_hi, b_i;
    Tensor W_xf, W_hf, b_f;
    Tensor W_xg, W_hg, b_g;  // candidate
    Tensor W_xo, W_ho, b_o;
};

struct AttentionHeadParams {
    Tensor W_q, W_k, W_v;
};

struct AttentionParams {
    std::vector<AttentionHeadParams> heads;
    int d_k = 8;
};

// ReLU( sum_r Ahat_r H W_r + H W_s )
Tensor mrgcn_layer(const SceneGraph& graph, const Tensor& H,
                   const MrGcnLayerParams& params);

// One step of the standard gate equations, applied rowwise per node.
// Returns (h_t, c_t).
std::pair<Tensor, Tensor> lstm_step(const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmParams& params);

// Scaled dot-product self-attention over the time axis of one node's
// T x d embedding matrix; heads are concatenated.
Tensor attend_time(const Tensor& C_i, const AttentionParams& params);

// Per-vehicle positional features: for each frame, concatenation over the
// other nodes (ascending node_id, zero-padded to n_max - 1) of
// [distance, angle, one-hot type]. Returned in node order.
std::vector<Matrix> baseline_features(const SceneSequence& seq, int n_max);

class Model {
public:
    explicit Model(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    NamedParams named_params() const;
    std::vector<Tensor> param_tensors() const;

    std::vector<Matrix> snapshot() const;
    void restore(const std::vector<Matrix>& values);

    struct ForwardResult {
        Tensor logits;           // one row per node (graph) or per vehicle
        std::vector<int> labels;
        std::vector<bool> mask;  // rows contributing to the loss
        std::vector<int> node_ids;
    };

    ForwardResult forward(const SceneSequence& seq) const;
    Tensor loss(const ForwardResult& fwd) const;

    // embedding table per node type, stacked to n x d
    Tensor embed_nodes(const std::vector<NodeType>& types) const;
    Tensor spatial_encode(const SceneGraph& graph) const;

private:
    ModelConfig config_;
    Tensor embedding_;  // |O| x embed_dim
    std::vector<MrGcnLayerParams> mrgcn_;
    std::optional<LstmParams> lstm_;
    std::optional<AttentionParams> attention_;
    Tensor W_l_, b_l_;

    ForwardResult forward_graph(const SceneSequence& seq) const;
    ForwardResult forward_baseline(const SceneSequence& seq) const;
};

}  // namespace mgraph
