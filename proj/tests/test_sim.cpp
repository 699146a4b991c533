#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mgraph/sim.hpp"

using namespace mgraph;

namespace {

std::array<double, kNumClasses> one_hot(Behavior b) {
    std::array<double, kNumClasses> mix{};
    mix[static_cast<size_t>(b)] = 1.0;
    return mix;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("simulation is bit-deterministic in the seed") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    Scenario a = generate_scenario(kUniformMix, cfg, 101);
    Scenario b = generate_scenario(kUniformMix, cfg, 101);
    CHECK(sequence_to_json(simulate(a)) == sequence_to_json(simulate(b)));

    Scenario c = generate_scenario(kUniformMix, cfg, 102);
    CHECK(sequence_to_json(simulate(a)) != sequence_to_json(simulate(c)));
}

TEST_CASE("simulated sequences satisfy the structural validator") {
    const WorldConfig cfg = WorldConfig::preset("indian_like");
    for (uint64_t seed = 0; seed < 10; ++seed) {
        SceneSequence seq = simulate(generate_scenario(kUniformMix, cfg, seed));
        seq.validate();
        CHECK(seq.T == cfg.T);
        CHECK(seq.vehicle_count() >= 1);
        CHECK(seq.n() - seq.vehicle_count() >= 2);
    }
}

TEST_CASE("lane-change scripts cross exactly one boundary") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    for (uint64_t seed = 0; seed < 20; ++seed) {
        for (Behavior b : {Behavior::LCL, Behavior::LCR}) {
            Scenario sc = generate_scenario(one_hot(b), cfg, seed);
            REQUIRE(sc.vehicles.size() == 1);
            const VehicleScript& v = sc.vehicles[0];
            CHECK(v.behavior == b);

            const double target = b == Behavior::LCL ? cfg.lane_width : -cfg.lane_width;
            CHECK(v.lateral.front() == doctest::Approx(0.0));
            CHECK(v.lateral.back() == doctest::Approx(target));
            // monotone toward the target, crossing the boundary once
            int crossings = 0;
            for (size_t t = 1; t < v.lateral.size(); ++t) {
                const double prev = v.lateral[t - 1] / target;
                const double cur = v.lateral[t] / target;
                CHECK(cur >= prev - 1e-12);
                if (prev < 0.5 && cur >= 0.5) ++crossings;
            }
            CHECK(crossings == 1);
            // stays inside the road envelope
            const double x0 = cfg.lane_center(v.initial_lane);
            for (double l : v.lateral) {
                CHECK(x0 + l > -0.5 * cfg.lane_width);
                CHECK(x0 + l < cfg.road_right() + 0.5 * cfg.lane_width);
            }
        }
    }
}

TEST_CASE("parked vehicles do not move in the world frame") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Scenario sc = generate_scenario(one_hot(Behavior::PRK), cfg, seed);
        REQUIRE(sc.vehicles.size() == 1);
        CHECK(sc.vehicles[0].behavior == Behavior::PRK);
        for (double s : sc.vehicles[0].speed) CHECK(s == 0.0);
        CHECK(sc.vehicles[0].initial_lane == cfg.lane_count);

        // in the moving camera frame the parked car recedes by the ego speed
        auto frames = camera_frame_positions(sc);
        const double ego_step = sc.ego_pose[1].y() - sc.ego_pose[0].y();
        CHECK(ego_step > 0.0);
        for (int t = 1; t < cfg.T; ++t) {
            const Vec2 d = frames[static_cast<size_t>(t)][0] -
                           frames[static_cast<size_t>(t - 1)][0];
            CHECK(d.x() == doctest::Approx(0.0));
            CHECK(d.y() == doctest::Approx(-ego_step));
        }
    }
}

TEST_CASE("oncoming traffic drives the opposing lane backwards") {
    const WorldConfig cfg = WorldConfig::preset("kitti_like");
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Scenario sc = generate_scenario(one_hot(Behavior::MTU), cfg, seed);
        REQUIRE(sc.vehicles.size() == 1);
        CHECK(sc.vehicles[0].behavior == Behavior::MTU);
        CHECK(sc.vehicles[0].initial_lane == -1);
        for (double s : sc.vehicles[0].speed) CHECK(s < 0.0);
    }
}

TEST_CASE("moving-away vehicles pull ahead of the ego") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Scenario sc = generate_scenario(one_hot(Behavior::MVA), cfg, seed);
        auto frames = camera_frame_positions(sc);
        for (int t = 1; t < cfg.T; ++t)
            CHECK(frames[static_cast<size_t>(t)][0].y() >
                  frames[static_cast<size_t>(t - 1)][0].y());
    }
}

TEST_CASE("overtake scenes flip the longitudinal order") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Scenario sc = generate_scenario(one_hot(Behavior::OVT), cfg, seed);
        REQUIRE(sc.vehicles.size() == 2);
        CHECK(sc.vehicles[0].behavior == Behavior::MVA);
        CHECK(sc.vehicles[1].behavior == Behavior::OVT);
        for (const auto& v : sc.vehicles)
            for (double s : v.speed) CHECK(s > 0.5);

        auto frames = camera_frame_positions(sc);
        const double first = frames.front()[1].y() - frames.front()[0].y();
        const double last = frames.back()[1].y() - frames.back()[0].y();
        CHECK(first < 0.0);  // overtaker starts behind the reference
        CHECK(last > 0.0);   // and ends ahead of it
        CHECK(sc.vehicles[1].initial_lane == sc.vehicles[0].initial_lane + 1);
    }
}

TEST_CASE("landmarks recede with ego motion") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    Scenario sc = generate_scenario(one_hot(Behavior::MVA), cfg, 3);
    auto frames = camera_frame_positions(sc);
    const size_t lm = sc.vehicles.size();  // first landmark node
    for (int t = 1; t < cfg.T; ++t) {
        CHECK(frames[static_cast<size_t>(t)][lm].y() <
              frames[static_cast<size_t>(t - 1)][lm].y());
        CHECK(frames[static_cast<size_t>(t)][lm].x() ==
              doctest::Approx(frames[0][lm].x()));
    }
}

TEST_CASE("image-space view round-trips through the ground-plane projection") {
    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    Scenario sc = generate_scenario(kUniformMix, cfg, 8);
    ImageSpaceView view = image_space_view(sc);
    auto frames = camera_frame_positions(sc);
    REQUIRE(view.frames.size() == frames.size());

    int checked = 0;
    for (size_t t = 0; t < frames.size(); ++t)
        for (size_t i = 0; i < frames[t].size(); ++i) {
            if (!view.frames[t][i].has_value()) {
                CHECK(frames[t][i].y() <= 0.0);
                continue;
            }
            BevPoint back = birdseye_project(*view.frames[t][i], view.camera);
            CHECK(std::abs(back.B.x() - frames[t][i].x()) < 1e-6);
            CHECK(std::abs(back.B.z() - frames[t][i].y()) < 1e-6);
            ++checked;
        }
    CHECK(checked > 0);
}

TEST_CASE("world config presets and serialization") {
    for (const char* id : {"apollo_like", "kitti_like", "indian_like"}) {
        WorldConfig cfg = WorldConfig::preset(id);
        cfg.validate();
        WorldConfig back = WorldConfig::from_json(cfg.to_json());
        CHECK(back.to_json() == cfg.to_json());
    }
    CHECK_THROWS_AS(WorldConfig::preset("waymo_like"), ConfigError);

    WorldConfig bad = WorldConfig::preset("apollo_like");
    bad.lane_count = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(WorldConfig::from_json("not json"), ParseError);
}

TEST_CASE("dataset generation") {
    const auto dir = std::filesystem::temp_directory_path() / "mgraph_sim_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "ds.jsonl").string();

    const WorldConfig cfg = WorldConfig::preset("apollo_like");
    DatasetManifest m = generate_dataset(30, cfg, 77, path);

    SUBCASE("split is contiguous 80/10/10") {
        CHECK(m.train.size() == 24);
        CHECK(m.val.size() == 3);
        CHECK(m.test.size() == 3);
        CHECK(m.train.front() == 0);
        CHECK(m.val.front() == 24);
        CHECK(m.test.back() == 29);
    }

    SUBCASE("every class is represented with near-balanced counts") {
        auto seqs = load_dataset(path);
        REQUIRE(seqs.size() == 30);
        std::array<int, kNumClasses> counts{};
        for (const auto& s : seqs)
            for (const auto& [id, b] : s.labels) ++counts[static_cast<size_t>(b)];
        for (int c = 0; c < kNumClasses; ++c) CHECK(counts[static_cast<size_t>(c)] >= 3);
    }

    SUBCASE("manifest round-trips and matches the config") {
        DatasetManifest back = DatasetManifest::from_file(path + ".manifest.json");
        CHECK(back.seed == 77);
        CHECK(back.train == m.train);
        CHECK(WorldConfig::from_json(back.config_json).distribution_id == "apollo_like");
    }

    SUBCASE("regeneration is byte-identical") {
        const std::string path2 = (dir / "ds2.jsonl").string();
        generate_dataset(30, cfg, 77, path2);
        CHECK(slurp(path) == slurp(path2));
        const std::string path3 = (dir / "ds3.jsonl").string();
        generate_dataset(30, cfg, 78, path3);
        CHECK(slurp(path) != slurp(path3));
    }

    std::filesystem::remove_all(dir);
}
