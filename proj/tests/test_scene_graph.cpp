#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mgraph/scene_graph.hpp"
#include "mgraph/sim.hpp"

using namespace mgraph;

namespace {

// independent double-loop oracle over raw sign comparisons
std::array<Eigen::MatrixXd, kNumRelations> brute_force_adjacency(
    const std::vector<Vec2>& pos) {
    const int n = static_cast<int>(pos.size());
    std::array<Eigen::MatrixXd, kNumRelations> A;
    for (auto& m : A) m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = pos[static_cast<size_t>(j)].x() - pos[static_cast<size_t>(i)].x();
            const double dy = pos[static_cast<size_t>(j)].y() - pos[static_cast<size_t>(i)].y();
            int r;
            if (dy >= 0)
                r = dx >= 0 ? 1 : 0;  // top right : top left
            else
                r = dx >= 0 ? 3 : 2;  // bottom right : bottom left
            A[static_cast<size_t>(r)](i, j) = 1.0;
        }
    return A;
}

std::vector<Vec2> random_positions(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> d(-30.0, 30.0);
    std::vector<Vec2> out;
    for (int i = 0; i < n; ++i) out.emplace_back(d(rng), d(rng));
    return out;
}

SceneSequence small_sequence(uint64_t seed = 3) {
    Scenario sc = generate_scenario(kUniformMix, WorldConfig::preset("apollo_like"),
                                    seed);
    return simulate(sc);
}

}  // namespace

TEST_CASE("quadrant relation definition and tie-breaks") {
    CHECK(quadrant_relation({0, 0}, {1, 1}) == Relation::TopRight);
    CHECK(quadrant_relation({0, 0}, {-2, -3}) == Relation::BottomLeft);
    CHECK(quadrant_relation({0, 0}, {0, 5}) == Relation::TopRight);
    CHECK(quadrant_relation({0, 0}, {-1, 2}) == Relation::TopLeft);
    CHECK(quadrant_relation({0, 0}, {3, -1}) == Relation::BottomRight);
    CHECK_THROWS_AS(quadrant_relation({0, 0}, {std::nan(""), 0}), DomainError);
}

TEST_CASE("build_scene_graph small cases") {
    SUBCASE("single node has empty relations") {
        SceneGraph g = build_scene_graph({{0, 0}}, {NodeType::Vehicle}, {0});
        for (const auto& A : g.adjacency) CHECK(A == Eigen::MatrixXd::Zero(1, 1));
    }

    SUBCASE("two nodes are antisymmetric") {
        SceneGraph g = build_scene_graph({{0, 0}, {1, 1}},
                                         {NodeType::Vehicle, NodeType::Vehicle},
                                         {0, 1});
        CHECK(g.adjacency[static_cast<size_t>(Relation::TopRight)](0, 1) == 1.0);
        CHECK(g.adjacency[static_cast<size_t>(Relation::BottomLeft)](1, 0) == 1.0);
        double total = 0;
        for (const auto& A : g.adjacency) total += A.sum();
        CHECK(total == 2.0);
    }
}

TEST_CASE("scene graph matches brute-force oracle on random configurations") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> nn(2, 20);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = nn(rng);
        auto pos = random_positions(rng, n);
        std::vector<NodeType> types(static_cast<size_t>(n), NodeType::Landmark);
        types[0] = NodeType::Vehicle;
        std::vector<int> ids(static_cast<size_t>(n));
        std::iota(ids.begin(), ids.end(), 0);

        SceneGraph g = build_scene_graph(pos, types, ids);
        auto oracle = brute_force_adjacency(pos);
        for (int r = 0; r < kNumRelations; ++r)
            CHECK(g.adjacency[static_cast<size_t>(r)] == oracle[static_cast<size_t>(r)]);

        // partition property, exact
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
        for (const auto& A : g.adjacency) s += A;
        CHECK(s == Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n));
    }
}

TEST_CASE("quadrant antisymmetry and translation invariance") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        auto pos = random_positions(rng, 8);
        std::vector<NodeType> types(8, NodeType::Landmark);
        types[0] = NodeType::Vehicle;
        std::vector<int> ids = {0, 1, 2, 3, 4, 5, 6, 7};
        SceneGraph g = build_scene_graph(pos, types, ids);
        const auto& TR = g.adjacency[static_cast<size_t>(Relation::TopRight)];
        const auto& BL = g.adjacency[static_cast<size_t>(Relation::BottomLeft)];
        const auto& TL = g.adjacency[static_cast<size_t>(Relation::TopLeft)];
        const auto& BR = g.adjacency[static_cast<size_t>(Relation::BottomRight)];
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                if (TR(i, j) == 1.0) CHECK(BL(j, i) == 1.0);
                if (TL(i, j) == 1.0) CHECK(BR(j, i) == 1.0);
            }

        auto shifted = pos;
        for (auto& p : shifted) p += Vec2(13.5, -2.25);
        SceneGraph g2 = build_scene_graph(shifted, types, ids);
        for (int r = 0; r < kNumRelations; ++r)
            CHECK(g.adjacency[static_cast<size_t>(r)] ==
                  g2.adjacency[static_cast<size_t>(r)]);
    }
}

TEST_CASE("degree_normalize") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 0, 0;
    CHECK(degree_normalize(a) == a);

    Eigen::MatrixXd b(2, 3);
    b.setZero();
    b(0, 1) = 1;
    b(0, 2) = 1;
    Eigen::MatrixXd nb = degree_normalize(b);
    CHECK(nb(0, 1) == 0.5);
    CHECK(nb(0, 2) == 0.5);

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    CHECK(degree_normalize(z) == z);

    // rows sum to 1 or 0 exactly on random binary matrices
    std::mt19937_64 rng(1);
    std::bernoulli_distribution bit(0.4);
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd m(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = bit(rng) ? 1.0 : 0.0;
        Eigen::MatrixXd nm = degree_normalize(m);
        for (int i = 0; i < 6; ++i) {
            const double s = nm.row(i).sum();
            CHECK((s == 0.0 || std::abs(s - 1.0) < 1e-12));
        }
    }
}

TEST_CASE("landmark dropout") {
    SceneSequence seq = small_sequence();
    const int vehicles = seq.vehicle_count();
    const int landmarks = seq.n() - vehicles;
    REQUIRE(landmarks >= 4);

    SUBCASE("keep fraction 1 is the identity") {
        SceneSequence out = landmark_dropout(seq, 1.0, 5);
        CHECK(out.node_ids == seq.node_ids);
        CHECK(out.positions == seq.positions);
    }

    SUBCASE("keeps floor(fraction * count), constant across frames") {
        SceneSequence out = landmark_dropout(seq, 0.5, 5);
        CHECK(out.n() - out.vehicle_count() == landmarks / 2);
        CHECK(out.vehicle_count() == vehicles);
        out.validate();
        // same subset in every frame: ids fixed per sequence by construction
        SceneSequence again = landmark_dropout(seq, 0.5, 5);
        CHECK(again.node_ids == out.node_ids);
    }

    SUBCASE("vehicle count unchanged for any fraction") {
        for (double f : {0.25, 0.5, 0.75, 1.0})
            CHECK(landmark_dropout(seq, f, 9).vehicle_count() == vehicles);
    }

    SUBCASE("out-of-range fraction rejected") {
        CHECK_THROWS_AS(landmark_dropout(seq, 0.0, 1), DomainError);
        CHECK_THROWS_AS(landmark_dropout(seq, 1.5, 1), DomainError);
    }
}

TEST_CASE("sequence serialization") {
    SceneSequence seq = small_sequence();

    SUBCASE("round trip is bit-exact") {
        SceneSequence back = sequence_from_json(sequence_to_json(seq));
        CHECK(back.T == seq.T);
        CHECK(back.node_ids == seq.node_ids);
        CHECK(back.labels == seq.labels);
        for (int t = 0; t < seq.T; ++t)
            for (int i = 0; i < seq.n(); ++i)
                CHECK(back.positions[static_cast<size_t>(t)][static_cast<size_t>(i)] ==
                      seq.positions[static_cast<size_t>(t)][static_cast<size_t>(i)]);
    }

    SUBCASE("sequence without vehicles is rejected") {
        // strip the labels and mark all nodes as landmarks
        SceneSequence no_vehicles = seq;
        no_vehicles.labels.clear();
        for (auto& t : no_vehicles.node_types) t = NodeType::Landmark;
        CHECK_THROWS_AS(sequence_from_json(sequence_to_json(no_vehicles)),
                        DomainError);
    }

    SUBCASE("truncated record is a parse error") {
        std::string text = sequence_to_json(seq);
        CHECK_THROWS_AS(sequence_from_json(text.substr(0, text.size() / 2)),
                        ParseError);
    }

    SUBCASE("dataset file round trip") {
        const std::string path =
            (std::filesystem::temp_directory_path() / "mgraph_ds_test.jsonl").string();
        save_dataset(path, {seq, seq});
        auto back = load_dataset(path);
        REQUIRE(back.size() == 2);
        CHECK(back[0].positions == seq.positions);
        std::remove(path.c_str());
    }
}
