#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mgraph/geometry.hpp"
#include "mgraph/scene_graph.hpp"

namespace mgraph {

struct SpeedRange {
    double lo = 0.0, hi = 0.0;
};

// World-frame axes: x lateral (right), y longitudinal (forward). Lanes run
// along +y; lane i covers x in [i, i+1) * lane_width. An opposing lane sits
// at x < 0 and a parking shoulder to the right of the road.
struct WorldConfig {
    int lane_count = 3;
    double lane_width = 3.5;
    double landmark_density = 0.18;  // landmarks per meter of populated road
    double road_window = 60.0;       // meters of road populated with landmarks
    double pole_fraction = 0.3;      // remainder are lane-marking dashes
    SpeedRange ego_speed{8.0, 11.0};
    // Per-class speed parameters, m/s. MVA/LCL/LCR/OVT are offsets relative
    // to the ego speed; MTU is the absolute opposing speed.
    SpeedRange mva_offset{1.5, 4.0};
    SpeedRange mtu_speed{8.0, 14.0};
    SpeedRange lc_offset{-1.0, 1.0};
    SpeedRange ovt_offset{2.5, 5.0};       // overtaker above ego
    SpeedRange ovt_lead_offset{0.5, 1.5};  // overtaken vehicle above ego
    int T = 10;
    double frame_dt = 0.4;
    double noise_sigma = 0.15;  // position jitter, meters
    std::string distribution_id = "apollo_like";

    void validate() const;
    std::string to_json() const;
    static WorldConfig from_json(const std::string& text);
    static WorldConfig from_file(const std::string& path);
    // Named presets: apollo_like, kitti_like, indian_like.
    static WorldConfig preset(const std::string& distribution_id);

    double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
    double road_right() const { return lane_count * lane_width; }
};

struct VehicleScript {
    Behavior behavior = Behavior::MVA;
    int initial_lane = 0;
    double initial_offset = 0.0;  // world y at frame 0
    std::vector<double> speed;    // per-frame world forward speed, signed
    std::vector<double> lateral;  // per-frame offset from initial lane center
};

struct Landmark {
    Vec2 position;  // world frame
    std::string kind;  // "dash" or "pole"
};

struct Scenario {
    WorldConfig config;
    std::vector<Vec2> ego_pose;  // per-frame world position, heading +y
    std::vector<VehicleScript> vehicles;
    std::vector<Landmark> landmarks;
    CameraModel camera;
    uint64_t noise_seed = 0;
};

CameraModel default_camera();

// Seeded, reproducible scenario whose scripts satisfy the per-class
// invariants by construction. class_mix must sum to 1.
Scenario generate_scenario(const std::array<double, kNumClasses>& class_mix,
                           const WorldConfig& config, uint64_t seed);

// World positions per frame in the ego/camera frame, before noise.
// Vehicles first (node order), then landmarks.
std::vector<std::vector<Vec2>> camera_frame_positions(const Scenario& scenario);

SceneSequence simulate(const Scenario& scenario);

struct ImageSpaceView {
    CameraModel camera;
    // frames[t][node]: image point, or nullopt if the point fell behind
    // the camera and was dropped.
    std::vector<std::vector<std::optional<ImagePoint>>> frames;
    int dropped = 0;
};

ImageSpaceView image_space_view(const Scenario& scenario);

struct DatasetManifest {
    int schema_version = 1;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
    std::string config_json;
    std::vector<int> train, val, test;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
    static DatasetManifest from_file(const std::string& path);
};

inline constexpr std::array<double, kNumClasses> kUniformMix = {
    1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};

// Writes a JSON Lines dataset plus <path>.manifest.json with an 80/10/10
// split; labeled-vehicle class counts track class_mix.
DatasetManifest generate_dataset(int n_sequences, const WorldConfig& config,
                                 uint64_t seed, const std::string& out_path,
                                 const std::array<double, kNumClasses>& class_mix =
                                     kUniformMix);

}  // namespace mgraph
