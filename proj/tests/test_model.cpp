#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mgraph/model.hpp"
#include "mgraph/train.hpp"

using namespace mgraph;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                     double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
}

SceneGraph random_graph(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> d(-20.0, 20.0);
    std::vector<Vec2> pos;
    for (int i = 0; i < n; ++i) pos.emplace_back(d(rng), d(rng));
    std::vector<NodeType> types(static_cast<size_t>(n), NodeType::Landmark);
    types[0] = NodeType::Vehicle;
    std::vector<int> ids(static_cast<size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return build_scene_graph(pos, types, ids);
}

SceneSequence permuted(const SceneSequence& seq, const std::vector<size_t>& p) {
    SceneSequence out;
    out.T = seq.T;
    for (size_t k : p) {
        out.node_ids.push_back(seq.node_ids[k]);
        out.node_types.push_back(seq.node_types[k]);
    }
    out.positions.resize(seq.positions.size());
    for (size_t t = 0; t < seq.positions.size(); ++t)
        for (size_t k : p) out.positions[t].push_back(seq.positions[t][k]);
    out.labels = seq.labels;
    out.rebuild_frames();
    return out;
}

}  // namespace

TEST_CASE("mrgcn_layer matches a per-node loop oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6, d_in = 5, d_out = 4;
        SceneGraph g = random_graph(rng, n);
        Tensor H(random_matrix(rng, n, d_in));
        MrGcnLayerParams p;
        for (int r = 0; r < kNumRelations; ++r)
            p.W_r[static_cast<size_t>(r)] = Tensor(random_matrix(rng, d_in, d_out));
        p.W_s = Tensor(random_matrix(rng, d_in, d_out));

        Matrix got = mrgcn_layer(g, H, p).value();

        for (int i = 0; i < n; ++i) {
            Eigen::RowVectorXd acc = H.value().row(i) * p.W_s.value();
            for (int r = 0; r < kNumRelations; ++r) {
                const Matrix& A = g.adjacency[static_cast<size_t>(r)];
                const double deg = A.row(i).sum();
                if (deg == 0.0) continue;
                for (int j = 0; j < n; ++j)
                    if (A(i, j) != 0.0)
                        acc += (A(i, j) / deg) *
                               (H.value().row(j) * p.W_r[static_cast<size_t>(r)].value());
            }
            for (int c = 0; c < d_out; ++c) {
                const double want = std::max(0.0, acc(c));
                CHECK(std::abs(got(i, c) - want) < 1e-9);
            }
        }
    }
}

TEST_CASE("lstm_step matches a scalar loop oracle") {
    std::mt19937_64 rng(37);
    const int n = 3, d_in = 4, d_h = 5;
    Tensor x(random_matrix(rng, n, d_in));
    Tensor h(random_matrix(rng, n, d_h));
    Tensor c(random_matrix(rng, n, d_h));
    LstmParams p;
    p.W_xi = Tensor(random_matrix(rng, d_in, d_h)); p.W_hi = Tensor(random_matrix(rng, d_h, d_h));
    p.b_i = Tensor(random_matrix(rng, 1, d_h));
    p.W_xf = Tensor(random_matrix(rng, d_in, d_h)); p.W_hf = Tensor(random_matrix(rng, d_h, d_h));
    p.b_f = Tensor(random_matrix(rng, 1, d_h));
    p.W_xg = Tensor(random_matrix(rng, d_in, d_h)); p.W_hg = Tensor(random_matrix(rng, d_h, d_h));
    p.b_g = Tensor(random_matrix(rng, 1, d_h));
    p.W_xo = Tensor(random_matrix(rng, d_in, d_h)); p.W_ho = Tensor(random_matrix(rng, d_h, d_h));
    p.b_o = Tensor(random_matrix(rng, 1, d_h));

    auto [h_new, c_new] = lstm_step(x, h, c, p);

    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    auto gate = [&](const Tensor& Wx, const Tensor& Wh, const Tensor& b, int i, int k) {
        double s = b.value()(0, k);
        for (int j = 0; j < d_in; ++j) s += x.value()(i, j) * Wx.value()(j, k);
        for (int j = 0; j < d_h; ++j) s += h.value()(i, j) * Wh.value()(j, k);
        return s;
    };
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d_h; ++k) {
            const double gi = sig(gate(p.W_xi, p.W_hi, p.b_i, i, k));
            const double gf = sig(gate(p.W_xf, p.W_hf, p.b_f, i, k));
            const double gg = std::tanh(gate(p.W_xg, p.W_hg, p.b_g, i, k));
            const double go = sig(gate(p.W_xo, p.W_ho, p.b_o, i, k));
            const double cc = gf * c.value()(i, k) + gi * gg;
            CHECK(std::abs(c_new.value()(i, k) - cc) < 1e-9);
            CHECK(std::abs(h_new.value()(i, k) - go * std::tanh(cc)) < 1e-9);
        }
}

TEST_CASE("attend_time matches a loop oracle and weights are distributions") {
    std::mt19937_64 rng(41);
    const int T = 6, d = 8, d_k = 3, d_v = 4;
    Tensor C(random_matrix(rng, T, d));
    AttentionParams p;
    p.d_k = d_k;
    for (int m = 0; m < 2; ++m)
        p.heads.push_back({Tensor(random_matrix(rng, d, d_k)),
                           Tensor(random_matrix(rng, d, d_k)),
                           Tensor(random_matrix(rng, d, d_v))});

    Matrix got = attend_time(C, p).value();
    REQUIRE(got.rows() == T);
    REQUIRE(got.cols() == 2 * d_v);

    for (size_t m = 0; m < p.heads.size(); ++m) {
        Matrix q = C.value() * p.heads[m].W_q.value();
        Matrix k = C.value() * p.heads[m].W_k.value();
        Matrix v = C.value() * p.heads[m].W_v.value();
        Matrix scores = q * k.transpose() / std::sqrt(static_cast<double>(d_k));
        for (int i = 0; i < T; ++i) {
            Eigen::RowVectorXd w(T);
            const double mx = scores.row(i).maxCoeff();
            for (int j = 0; j < T; ++j) w(j) = std::exp(scores(i, j) - mx);
            w /= w.sum();
            CHECK(std::abs(w.sum() - 1.0) < 1e-9);
            Eigen::RowVectorXd o = w * v;
            for (int c = 0; c < d_v; ++c)
                CHECK(std::abs(got(i, static_cast<int>(m) * d_v + c) - o(c)) < 1e-9);
        }
    }
}

TEST_CASE("T=1 attention reduces to the value projection") {
    std::mt19937_64 rng(43);
    Tensor C(random_matrix(rng, 1, 6));
    AttentionParams p;
    p.d_k = 4;
    p.heads.push_back({Tensor(random_matrix(rng, 6, 4)),
                       Tensor(random_matrix(rng, 6, 4)),
                       Tensor(random_matrix(rng, 6, 5))});
    Matrix got = attend_time(C, p).value();
    Matrix want = C.value() * p.heads[0].W_v.value();
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spatial encoding symmetry") {
    ModelConfig cfg = ModelConfig::defaults(Variant::GSA, 5);
    cfg.embed_dim = 16;
    cfg.mrgcn_dims = {16, 32};
    Model model(cfg);

    SUBCASE("same-type nodes with identical neighborhoods embed identically") {
        // coincident landmarks see the vehicle in the same quadrant and each
        // other under the tie-break rule, so their rows must match exactly
        std::vector<Vec2> pos = {{0, 0}, {1, 1}, {1, 1}};
        std::vector<NodeType> types = {NodeType::Vehicle, NodeType::Landmark,
                                       NodeType::Landmark};
        SceneGraph g = build_scene_graph(pos, types, {0, 1, 2});
        Matrix h = model.spatial_encode(g).value();
        CHECK(h.allFinite());
        CHECK((h.row(1) - h.row(2)).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("landmark-only graph still yields finite embeddings") {
        std::vector<Vec2> pos = {{0, 0}, {1, 3}};
        std::vector<NodeType> types = {NodeType::Landmark, NodeType::Landmark};
        SceneGraph g = build_scene_graph(pos, types, {0, 1});
        CHECK(model.spatial_encode(g).value().allFinite());
    }
}

TEST_CASE("forward is deterministic and permutation-equivariant") {
    SceneSequence seq = make_toy_sequence(3, 5, 4, 17);
    ModelConfig cfg = ModelConfig::defaults(Variant::GLMA, 2);
    cfg.embed_dim = 16;
    cfg.mrgcn_dims = {16, 32};
    cfg.T = 4;
    Model model(cfg);

    Matrix base = model.forward(seq).logits.value();
    CHECK(model.forward(seq).logits.value() == base);

    std::mt19937_64 rng(55);
    std::vector<size_t> p(static_cast<size_t>(seq.n()));
    std::iota(p.begin(), p.end(), 0u);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(p.begin(), p.end(), rng);
        SceneSequence ps = permuted(seq, p);
        Model::ForwardResult out = model.forward(ps);
        const Matrix& got = out.logits.value();
        for (int r = 0; r < got.rows(); ++r) {
            const size_t orig = p[static_cast<size_t>(r)];
            CHECK(got.row(r) == base.row(static_cast<Eigen::Index>(orig)));
            CHECK(out.node_ids[static_cast<size_t>(r)] == seq.node_ids[orig]);
        }
    }
}

TEST_CASE("baseline forward is permutation-equivariant over vehicles") {
    SceneSequence seq = make_toy_sequence(3, 4, 4, 19);
    ModelConfig cfg = ModelConfig::defaults(Variant::LMA, 7);
    cfg.T = 4;
    cfg.n_max = seq.n();
    Model model(cfg);

    Model::ForwardResult base = model.forward(seq);
    std::mt19937_64 rng(60);
    std::vector<size_t> p(static_cast<size_t>(seq.n()));
    std::iota(p.begin(), p.end(), 0u);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(p.begin(), p.end(), rng);
        Model::ForwardResult out = model.forward(permuted(seq, p));
        REQUIRE(out.node_ids.size() == base.node_ids.size());
        for (size_t r = 0; r < out.node_ids.size(); ++r) {
            const auto it = std::find(base.node_ids.begin(), base.node_ids.end(),
                                      out.node_ids[r]);
            const Eigen::Index k = it - base.node_ids.begin();
            CHECK(out.logits.value().row(static_cast<Eigen::Index>(r)) ==
                  base.logits.value().row(k));
        }
    }
}

TEST_CASE("single-head multi-head attention equals single-head variant bit-for-bit") {
    SceneSequence seq = make_toy_sequence(2, 4, 5, 23);

    ModelConfig sa = ModelConfig::defaults(Variant::GLSA, 11);
    sa.embed_dim = 16;
    sa.mrgcn_dims = {16, 32};
    sa.T = 5;

    ModelConfig ma = sa;
    ma.variant = Variant::GLMA;  // keep heads = 1, d_k = d_v = 32

    Model m_sa(sa), m_ma(ma);
    CHECK(m_ma.forward(seq).logits.value() == m_sa.forward(seq).logits.value());
}

TEST_CASE("loss ignores landmark logits") {
    std::mt19937_64 rng(67);
    Matrix a = random_matrix(rng, 5, kNumClasses);
    Matrix b = a;
    b.row(1) = random_matrix(rng, 1, kNumClasses, -9.0, 9.0);
    b.row(4).setConstant(123.0);
    std::vector<int> labels = {2, 0, 1, 3, 0};
    std::vector<bool> mask = {true, false, true, true, false};
    CHECK(cross_entropy(Tensor(a), labels, mask).value() ==
          cross_entropy(Tensor(b), labels, mask).value());
}

TEST_CASE("baseline feature construction") {
    SceneSequence seq;
    seq.T = 1;
    seq.node_ids = {0, 1, 2};
    seq.node_types = {NodeType::Vehicle, NodeType::Vehicle, NodeType::Landmark};
    seq.positions = {{{0, 0}, {3, 4}, {-1, 0}}};
    seq.labels = {{0, Behavior::MVA}, {1, Behavior::MVA}};
    seq.rebuild_frames();

    const int n_max = 5;
    auto feats = baseline_features(seq, n_max);
    REQUIRE(feats.size() == 2);
    REQUIRE(feats[0].rows() == 1);
    REQUIRE(feats[0].cols() == (n_max - 1) * 4);

    // vehicle 0 sees vehicle 1 at delta (3,4), then the landmark
    CHECK(feats[0](0, 0) == doctest::Approx(5.0));
    CHECK(feats[0](0, 1) == doctest::Approx(std::atan2(4.0, 3.0)));
    CHECK(feats[0](0, 2) == 1.0);
    CHECK(feats[0](0, 3) == 0.0);
    CHECK(feats[0](0, 4) == doctest::Approx(1.0));
    CHECK(feats[0](0, 6) == 0.0);
    CHECK(feats[0](0, 7) == 1.0);
    // padding slots stay zero
    CHECK(feats[0].rightCols(8).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("lone vehicle yields all-zero features") {
        SceneSequence solo;
        solo.T = 2;
        solo.node_ids = {4};
        solo.node_types = {NodeType::Vehicle};
        solo.positions = {{{1, 1}}, {{1, 2}}};
        solo.labels = {{4, Behavior::PRK}};
        auto f = baseline_features(solo, n_max);
        REQUIRE(f.size() == 1);
        CHECK(f[0].cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("config validation and serialization") {
    ModelConfig cfg = ModelConfig::defaults(Variant::GLMA, 9);
    ModelConfig back = ModelConfig::from_json(cfg.to_json());
    CHECK(back.variant == cfg.variant);
    CHECK(back.heads == cfg.heads);
    CHECK(back.seed == cfg.seed);

    ModelConfig bad = cfg;
    bad.heads = 3;  // 3 * d_v != 32
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(ModelConfig::from_json("{\"variant\":\"bogus\"}"), ConfigError);
    CHECK_THROWS_AS(variant_from_name("nope"), ConfigError);
    CHECK(variant_name(Variant::GLMA) == "G+L+MA");
    CHECK(variant_from_name("L+MA") == Variant::LMA);
}

TEST_CASE("model snapshot round trip") {
    ModelConfig cfg = ModelConfig::defaults(Variant::GL, 3);
    cfg.embed_dim = 8;
    cfg.mrgcn_dims = {8, 32};
    cfg.T = 3;
    Model model(cfg);
    SceneSequence seq = make_toy_sequence(2, 2, 3, 5);
    Matrix before = model.forward(seq).logits.value();

    auto snap = model.snapshot();
    auto params = model.param_tensors();
    params[0].update_value(params[0].value() * 2.0 + Matrix::Ones(params[0].rows(), params[0].cols()));
    CHECK(model.forward(seq).logits.value() != before);
    model.restore(snap);
    CHECK(model.forward(seq).logits.value() == before);
}

TEST_CASE("gradient check per variant on the toy problem") {
    for (Variant v : all_variants()) {
        CAPTURE(variant_name(v));
        GradCheckReport rep = gradcheck_variant(v, 123, 6, 1e-5, 1e-4);
        CHECK(rep.passed);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("gradient check fails under corrupted gradients") {
    auto corrupt = [](NamedParams& params) {
        for (auto& [name, t] : params) {
            if (!t.has_grad()) continue;
            Matrix g = t.grad();
            g.array() += 0.05;
            t.zero_grad();
            t.node()->accumulate(g);
            break;
        }
    };
    GradCheckReport rep = gradcheck_variant(Variant::GL, 123, 6, 1e-5, 1e-4, corrupt);
    CHECK_FALSE(rep.passed);
}
