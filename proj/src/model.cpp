#include "mgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mgraph/rng.hpp"

namespace mgraph {

namespace {

const std::vector<std::pair<Variant, std::string>> kVariantNames = {
    {Variant::GLMA, "G+L+MA"}, {Variant::GLSA, "G+L+SA"}, {Variant::GL, "G+L"},
    {Variant::GSA, "G+SA"},    {Variant::L, "L"},         {Variant::LMA, "L+MA"},
};

const std::array<std::string, kNumRelations> kRelationNames = {
    "top_left", "top_right", "bottom_left", "bottom_right"};

}  // namespace

const std::string& variant_name(Variant v) {
    for (const auto& [var, name] : kVariantNames)
        if (var == v) return name;
    throw DomainError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
    for (const auto& [var, n] : kVariantNames)
        if (n == name) return var;
    throw ConfigError("unknown architecture variant: " + name);
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {Variant::GLMA, Variant::GLSA, Variant::GL,
                                           Variant::GSA,  Variant::L,    Variant::LMA};
    return v;
}

ModelConfig ModelConfig::defaults(Variant v, uint64_t seed) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.seed = seed;
    if (v == Variant::GLSA || v == Variant::GSA) {
        cfg.heads = 1;
        cfg.d_k = 32;
        cfg.d_v = 32;
    }
    return cfg;
}

bool ModelConfig::uses_graph() const {
    return variant == Variant::GLMA || variant == Variant::GLSA ||
           variant == Variant::GL || variant == Variant::GSA;
}

bool ModelConfig::uses_lstm() const { return variant != Variant::GSA; }

bool ModelConfig::uses_attention() const {
    return variant != Variant::GL && variant != Variant::L;
}

int ModelConfig::temporal_dim() const { return mrgcn_dims.back(); }

int ModelConfig::lstm_input_dim() const {
    return uses_graph() ? mrgcn_dims.back() : feature_dim();
}

void ModelConfig::validate() const {
    if (T <= 0) throw ConfigError("model config: T must be positive");
    if (embed_dim <= 0 || mrgcn_dims.empty())
        throw ConfigError("model config: bad layer dimensions");
    if (n_max < 2) throw ConfigError("model config: n_max must be at least 2");
    if (uses_attention()) {
        if (heads <= 0 || d_k <= 0 || d_v <= 0)
            throw ConfigError("model config: bad attention dimensions");
        if (heads * d_v != temporal_dim())
            throw ConfigError("model config: heads * d_v must equal the temporal dim");
    }
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["variant"] = variant_name(variant);
    j["embed_dim"] = embed_dim;
    j["mrgcn_dims"] = mrgcn_dims;
    j["T"] = T;
    j["heads"] = heads;
    j["d_k"] = d_k;
    j["d_v"] = d_v;
    j["n_max"] = n_max;
    j["seed"] = seed;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
    ModelConfig cfg = defaults(variant_from_name(j.at("variant").get<std::string>()));
    if (j.contains("embed_dim")) cfg.embed_dim = j["embed_dim"].get<int>();
    if (j.contains("mrgcn_dims")) cfg.mrgcn_dims = j["mrgcn_dims"].get<std::vector<int>>();
    if (j.contains("T")) cfg.T = j["T"].get<int>();
    if (j.contains("heads")) cfg.heads = j["heads"].get<int>();
    if (j.contains("d_k")) cfg.d_k = j["d_k"].get<int>();
    if (j.contains("d_v")) cfg.d_v = j["d_v"].get<int>();
    if (j.contains("n_max")) cfg.n_max = j["n_max"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    cfg.validate();
    return cfg;
}

// --- layer primitives ---------------------------------------------------

Tensor mrgcn_layer(const SceneGraph& graph, const Tensor& H,
                   const MrGcnLayerParams& params) {
    if (H.rows() != graph.n)
        throw DimensionError("mrgcn_layer: feature rows must equal node count");
    Tensor acc = matmul(H, params.W_s);
    for (int r = 0; r < kNumRelations; ++r) {
        Tensor ahat(degree_normalize(graph.adjacency[static_cast<size_t>(r)]));
        acc = add(acc, matmul(ahat, matmul(H, params.W_r[static_cast<size_t>(r)])));
    }
    return relu(acc);
}

std::pair<Tensor, Tensor> lstm_step(const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmParams& p) {
    if (x.rows() != h.rows() || h.rows() != c.rows())
        throw DimensionError("lstm_step: row counts of x/h/c must match");
    Tensor i = sigmoid(add_rowvec(add(matmul(x, p.W_xi), matmul(h, p.W_hi)), p.b_i));
    Tensor f = sigmoid(add_rowvec(add(matmul(x, p.W_xf), matmul(h, p.W_hf)), p.b_f));
    Tensor g = tanh_op(add_rowvec(add(matmul(x, p.W_xg), matmul(h, p.W_hg)), p.b_g));
    Tensor o = sigmoid(add_rowvec(add(matmul(x, p.W_xo), matmul(h, p.W_ho)), p.b_o));
    Tensor c_new = add(cmul(f, c), cmul(i, g));
    Tensor h_new = cmul(o, tanh_op(c_new));
    return {h_new, c_new};
}

Tensor attend_time(const Tensor& C_i, const AttentionParams& params) {
    std::vector<Tensor> heads;
    heads.reserve(params.heads.size());
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.d_k));
    for (const auto& head : params.heads) {
        Tensor q = matmul(C_i, head.W_q);
        Tensor k = matmul(C_i, head.W_k);
        Tensor v = matmul(C_i, head.W_v);
        Tensor weights = softmax(scale(matmul_nt(q, k), inv_sqrt_dk), 1);
        heads.push_back(matmul(weights, v));
    }
    return heads.size() == 1 ? heads[0] : concat(std::span<const Tensor>(heads), 1);
}

std::vector<Matrix> baseline_features(const SceneSequence& seq, int n_max) {
    const int n = seq.n();
    const int F = (n_max - 1) * 4;
    // other nodes in ascending node_id order
    std::vector<size_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return seq.node_ids[a] < seq.node_ids[b];
    });

    std::vector<Matrix> out;
    for (size_t i = 0; i < static_cast<size_t>(n); ++i) {
        if (seq.node_types[i] != NodeType::Vehicle) continue;
        Matrix feat = Matrix::Zero(seq.T, F);
        for (int t = 0; t < seq.T; ++t) {
            const auto& pos = seq.positions[static_cast<size_t>(t)];
            int slot = 0;
            for (size_t j : order) {
                if (j == i) continue;
                if (slot >= n_max - 1) break;
                const Vec2 d = pos[j] - pos[i];
                feat(t, 4 * slot + 0) = d.norm();
                feat(t, 4 * slot + 1) = std::atan2(d.y(), d.x());
                feat(t, 4 * slot + 2) = seq.node_types[j] == NodeType::Vehicle ? 1.0 : 0.0;
                feat(t, 4 * slot + 3) = seq.node_types[j] == NodeType::Landmark ? 1.0 : 0.0;
                ++slot;
            }
        }
        out.push_back(std::move(feat));
    }
    return out;
}

// --- model --------------------------------------------------------------

namespace {

Tensor glorot(std::mt19937_64& rng, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix m(fan_in, fan_out);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    return Tensor(std::move(m), true);
}

Tensor bias_row(int dim, double fill = 0.0) {
    return Tensor(Matrix::Constant(1, dim, fill), true);
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(derive_seed(config_.seed, "model-init"));
    const int d_t = config_.temporal_dim();

    if (config_.uses_graph()) {
        std::normal_distribution<double> emb(0.0, 0.02);
        Matrix e(2, config_.embed_dim);
        for (Eigen::Index r = 0; r < e.rows(); ++r)
            for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) = emb(rng);
        embedding_ = Tensor(std::move(e), true);

        int d_in = config_.embed_dim;
        for (int d_out : config_.mrgcn_dims) {
            MrGcnLayerParams layer;
            for (int r = 0; r < kNumRelations; ++r)
                layer.W_r[static_cast<size_t>(r)] = glorot(rng, d_in, d_out);
            layer.W_s = glorot(rng, d_in, d_out);
            mrgcn_.push_back(std::move(layer));
            d_in = d_out;
        }
    }

    if (config_.uses_lstm()) {
        const int d_in = config_.lstm_input_dim();
        LstmParams p;
        p.W_xi = glorot(rng, d_in, d_t); p.W_hi = glorot(rng, d_t, d_t); p.b_i = bias_row(d_t);
        p.W_xf = glorot(rng, d_in, d_t); p.W_hf = glorot(rng, d_t, d_t); p.b_f = bias_row(d_t, 1.0);
        p.W_xg = glorot(rng, d_in, d_t); p.W_hg = glorot(rng, d_t, d_t); p.b_g = bias_row(d_t);
        p.W_xo = glorot(rng, d_in, d_t); p.W_ho = glorot(rng, d_t, d_t); p.b_o = bias_row(d_t);
        lstm_ = std::move(p);
    }

    if (config_.uses_attention()) {
        AttentionParams p;
        p.d_k = config_.d_k;
        for (int m = 0; m < config_.heads; ++m) {
            AttentionHeadParams head;
            head.W_q = glorot(rng, d_t, config_.d_k);
            head.W_k = glorot(rng, d_t, config_.d_k);
            head.W_v = glorot(rng, d_t, config_.d_v);
            p.heads.push_back(std::move(head));
        }
        attention_ = std::move(p);
    }

    W_l_ = glorot(rng, d_t, kNumClasses);
    b_l_ = bias_row(kNumClasses);
}

NamedParams Model::named_params() const {
    NamedParams out;
    if (config_.uses_graph()) {
        out.emplace_back("embedding.E_o", embedding_);
        for (size_t k = 0; k < mrgcn_.size(); ++k) {
            for (int r = 0; r < kNumRelations; ++r)
                out.emplace_back("mrgcn." + std::to_string(k) + ".W_r." +
                                     kRelationNames[static_cast<size_t>(r)],
                                 mrgcn_[k].W_r[static_cast<size_t>(r)]);
            out.emplace_back("mrgcn." + std::to_string(k) + ".W_s", mrgcn_[k].W_s);
        }
    }
    if (lstm_) {
        const LstmParams& p = *lstm_;
        out.emplace_back("lstm.W_xi", p.W_xi); out.emplace_back("lstm.W_hi", p.W_hi);
        out.emplace_back("lstm.b_i", p.b_i);
        out.emplace_back("lstm.W_xf", p.W_xf); out.emplace_back("lstm.W_hf", p.W_hf);
        out.emplace_back("lstm.b_f", p.b_f);
        out.emplace_back("lstm.W_xg", p.W_xg); out.emplace_back("lstm.W_hg", p.W_hg);
        out.emplace_back("lstm.b_g", p.b_g);
        out.emplace_back("lstm.W_xo", p.W_xo); out.emplace_back("lstm.W_ho", p.W_ho);
        out.emplace_back("lstm.b_o", p.b_o);
    }
    if (attention_) {
        for (size_t m = 0; m < attention_->heads.size(); ++m) {
            const auto& h = attention_->heads[m];
            out.emplace_back("attn." + std::to_string(m) + ".W_q", h.W_q);
            out.emplace_back("attn." + std::to_string(m) + ".W_k", h.W_k);
            out.emplace_back("attn." + std::to_string(m) + ".W_v", h.W_v);
        }
    }
    out.emplace_back("head.W_l", W_l_);
    out.emplace_back("head.b_l", b_l_);
    return out;
}

std::vector<Tensor> Model::param_tensors() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
}

std::vector<Matrix> Model::snapshot() const {
    std::vector<Matrix> out;
    for (const auto& t : param_tensors()) out.push_back(t.value());
    return out;
}

void Model::restore(const std::vector<Matrix>& values) {
    auto params = param_tensors();
    if (values.size() != params.size())
        throw StateError("model restore: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i].update_value(values[i]);
}

Tensor Model::embed_nodes(const std::vector<NodeType>& types) const {
    std::vector<Tensor> rows;
    rows.reserve(types.size());
    for (NodeType t : types)
        rows.push_back(row(embedding_, t == NodeType::Vehicle ? 0 : 1));
    return concat(std::span<const Tensor>(rows), 0);
}

Tensor Model::spatial_encode(const SceneGraph& graph) const {
    Tensor h = embed_nodes(graph.node_types);
    for (const auto& layer : mrgcn_) h = mrgcn_layer(graph, h, layer);
    return h;
}

Model::ForwardResult Model::forward(const SceneSequence& seq) const {
    if (seq.T != config_.T)
        throw DimensionError("forward: sequence length does not match config T");
    // Run the network with nodes in ascending-id order so that every
    // floating-point reduction sees the same operand order regardless of how
    // the input happens to be stored, then map rows back to input order.
    // Row extraction is arithmetic-free, so forward is exactly equivariant.
    std::vector<size_t> order(static_cast<size_t>(seq.n()));
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return seq.node_ids[a] < seq.node_ids[b];
    });
    const bool sorted = std::is_sorted(seq.node_ids.begin(), seq.node_ids.end());

    ForwardResult canon;
    if (sorted) {
        canon = config_.uses_graph() ? forward_graph(seq) : forward_baseline(seq);
    } else {
        SceneSequence c;
        c.T = seq.T;
        for (size_t k : order) {
            c.node_ids.push_back(seq.node_ids[k]);
            c.node_types.push_back(seq.node_types[k]);
        }
        c.positions.resize(seq.positions.size());
        for (size_t t = 0; t < seq.positions.size(); ++t)
            for (size_t k : order) c.positions[t].push_back(seq.positions[t][k]);
        c.labels = seq.labels;
        if (config_.uses_graph()) c.rebuild_frames();
        canon = config_.uses_graph() ? forward_graph(c) : forward_baseline(c);
    }
    if (sorted) return canon;

    ForwardResult res;
    std::vector<Tensor> rows;
    for (size_t i = 0; i < static_cast<size_t>(seq.n()); ++i) {
        if (!config_.uses_graph() &&
            seq.node_types[i] != NodeType::Vehicle)
            continue;
        const auto it = std::find(canon.node_ids.begin(), canon.node_ids.end(),
                                  seq.node_ids[i]);
        const size_t k = static_cast<size_t>(it - canon.node_ids.begin());
        rows.push_back(row(canon.logits, static_cast<int>(k)));
        res.labels.push_back(canon.labels[k]);
        res.mask.push_back(canon.mask[k]);
        res.node_ids.push_back(canon.node_ids[k]);
    }
    res.logits = concat(std::span<const Tensor>(rows), 0);
    return res;
}

Model::ForwardResult Model::forward_graph(const SceneSequence& seq) const {
    const int n = seq.n();
    const int d_t = config_.temporal_dim();

    Tensor h0 = embed_nodes(seq.node_types);
    std::vector<Tensor> spatial;
    spatial.reserve(static_cast<size_t>(seq.T));
    for (const auto& graph : seq.frames) {
        Tensor h = h0;
        for (const auto& layer : mrgcn_) h = mrgcn_layer(graph, h, layer);
        spatial.push_back(std::move(h));
    }

    std::vector<Tensor> temporal;
    if (config_.uses_lstm()) {
        Tensor h = Tensor::zeros(n, d_t), c = Tensor::zeros(n, d_t);
        for (const auto& e : spatial) {
            auto [h_new, c_new] = lstm_step(e, h, c, *lstm_);
            h = h_new;
            c = c_new;
            temporal.push_back(h);
        }
    } else {
        temporal = spatial;
    }

    std::vector<Tensor> logit_rows;
    logit_rows.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<Tensor> steps;
        steps.reserve(temporal.size());
        for (const auto& s : temporal) steps.push_back(row(s, i));
        Tensor c_i = concat(std::span<const Tensor>(steps), 0);  // T x d
        Tensor u = config_.uses_attention()
                       ? mean_pool(attend_time(c_i, *attention_), 0)
                       : mean_pool(c_i, 0);
        logit_rows.push_back(add(matmul(u, W_l_), b_l_));
    }

    ForwardResult res;
    res.logits = concat(std::span<const Tensor>(logit_rows), 0);
    res.node_ids = seq.node_ids;
    for (int i = 0; i < n; ++i) {
        const bool vehicle = seq.node_types[static_cast<size_t>(i)] == NodeType::Vehicle;
        res.mask.push_back(vehicle);
        res.labels.push_back(
            vehicle ? static_cast<int>(seq.labels.at(seq.node_ids[static_cast<size_t>(i)]))
                    : 0);
    }
    return res;
}

Model::ForwardResult Model::forward_baseline(const SceneSequence& seq) const {
    const int d_t = config_.temporal_dim();
    auto features = baseline_features(seq, config_.n_max);

    ForwardResult res;
    std::vector<Tensor> logit_rows;
    size_t v = 0;
    for (size_t i = 0; i < static_cast<size_t>(seq.n()); ++i) {
        if (seq.node_types[i] != NodeType::Vehicle) continue;
        const Matrix& feat = features[v++];
        Tensor h = Tensor::zeros(1, d_t), c = Tensor::zeros(1, d_t);
        std::vector<Tensor> steps;
        steps.reserve(static_cast<size_t>(seq.T));
        for (int t = 0; t < seq.T; ++t) {
            Tensor x(Matrix(feat.row(t)));
            auto [h_new, c_new] = lstm_step(x, h, c, *lstm_);
            h = h_new;
            c = c_new;
            steps.push_back(h);
        }
        Tensor stacked = concat(std::span<const Tensor>(steps), 0);  // T x d
        Tensor u = config_.uses_attention()
                       ? mean_pool(attend_time(stacked, *attention_), 0)
                       : mean_pool(stacked, 0);
        logit_rows.push_back(add(matmul(u, W_l_), b_l_));
        res.mask.push_back(true);
        res.labels.push_back(static_cast<int>(seq.labels.at(seq.node_ids[i])));
        res.node_ids.push_back(seq.node_ids[i]);
    }
    res.logits = concat(std::span<const Tensor>(logit_rows), 0);
    return res;
}

Tensor Model::loss(const ForwardResult& fwd) const {
    return cross_entropy(fwd.logits, fwd.labels, fwd.mask);
}

}  // namespace mgraph
