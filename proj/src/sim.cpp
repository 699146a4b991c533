#include "mgraph/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mgraph/rng.hpp"

namespace mgraph {

namespace {

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

nlohmann::json range_json(const SpeedRange& r) { return {r.lo, r.hi}; }

SpeedRange range_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ParseError("world config: speed range must be [lo, hi]");
    return SpeedRange{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void WorldConfig::validate() const {
    if (lane_count < 2) throw ConfigError("world config: lane_count must be >= 2");
    if (lane_width <= 0 || landmark_density <= 0 || road_window <= 0 ||
        frame_dt <= 0)
        throw ConfigError("world config: physical quantities must be positive");
    if (pole_fraction < 0 || pole_fraction > 1)
        throw ConfigError("world config: pole_fraction must be in [0, 1]");
    if (T < 4) throw ConfigError("world config: T must be at least 4");
    if (noise_sigma < 0) throw ConfigError("world config: noise_sigma must be >= 0");
    if (ego_speed.lo <= 0 || ego_speed.hi < ego_speed.lo)
        throw ConfigError("world config: bad ego speed range");
}

std::string WorldConfig::to_json() const {
    nlohmann::json j;
    j["lane_count"] = lane_count;
    j["lane_width"] = lane_width;
    j["landmark_density"] = landmark_density;
    j["road_window"] = road_window;
    j["pole_fraction"] = pole_fraction;
    j["ego_speed"] = range_json(ego_speed);
    j["mva_offset"] = range_json(mva_offset);
    j["mtu_speed"] = range_json(mtu_speed);
    j["lc_offset"] = range_json(lc_offset);
    j["ovt_offset"] = range_json(ovt_offset);
    j["ovt_lead_offset"] = range_json(ovt_lead_offset);
    j["T"] = T;
    j["frame_dt"] = frame_dt;
    j["noise_sigma"] = noise_sigma;
    j["distribution_id"] = distribution_id;
    return j.dump();
}

WorldConfig WorldConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("world config: ") + e.what());
    }
    WorldConfig cfg;
    if (j.contains("distribution_id"))
        cfg = preset(j["distribution_id"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("lane_count", cfg.lane_count);
    get("lane_width", cfg.lane_width);
    get("landmark_density", cfg.landmark_density);
    get("road_window", cfg.road_window);
    get("pole_fraction", cfg.pole_fraction);
    get("T", cfg.T);
    get("frame_dt", cfg.frame_dt);
    get("noise_sigma", cfg.noise_sigma);
    if (j.contains("ego_speed")) cfg.ego_speed = range_from_json(j["ego_speed"]);
    if (j.contains("mva_offset")) cfg.mva_offset = range_from_json(j["mva_offset"]);
    if (j.contains("mtu_speed")) cfg.mtu_speed = range_from_json(j["mtu_speed"]);
    if (j.contains("lc_offset")) cfg.lc_offset = range_from_json(j["lc_offset"]);
    if (j.contains("ovt_offset")) cfg.ovt_offset = range_from_json(j["ovt_offset"]);
    if (j.contains("ovt_lead_offset"))
        cfg.ovt_lead_offset = range_from_json(j["ovt_lead_offset"]);
    cfg.validate();
    return cfg;
}

WorldConfig WorldConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open world config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

WorldConfig WorldConfig::preset(const std::string& id) {
    WorldConfig cfg;
    cfg.distribution_id = id;
    if (id == "apollo_like") {
        // defaults
    } else if (id == "kitti_like") {
        cfg.lane_count = 2;
        cfg.lane_width = 3.2;
        cfg.landmark_density = 0.13;
        cfg.ego_speed = {9.0, 13.0};
        cfg.mva_offset = {2.0, 5.0};
        cfg.mtu_speed = {10.0, 16.0};
        cfg.pole_fraction = 0.4;
    } else if (id == "indian_like") {
        cfg.lane_count = 2;
        cfg.lane_width = 2.8;
        cfg.landmark_density = 0.25;
        cfg.ego_speed = {5.0, 8.0};
        cfg.mva_offset = {1.0, 3.0};
        cfg.mtu_speed = {5.0, 10.0};
        cfg.noise_sigma = 0.2;
        cfg.pole_fraction = 0.5;
    } else {
        throw ConfigError("unknown distribution preset: " + id);
    }
    return cfg;
}

CameraModel default_camera() {
    CameraModel cam;
    cam.K << 800, 0, 640, 0, 800, 360, 0, 0, 1;
    cam.eta = Eigen::Vector3d(0.0, -1.0, 0.0);
    cam.h = 1.5;
    return cam;
}

namespace {

double uniform(std::mt19937_64& rng, const SpeedRange& r) {
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

VehicleScript constant_script(Behavior b, int lane, double y0, double speed, int T) {
    VehicleScript s;
    s.behavior = b;
    s.initial_lane = lane;
    s.initial_offset = y0;
    s.speed.assign(static_cast<size_t>(T), speed);
    s.lateral.assign(static_cast<size_t>(T), 0.0);
    return s;
}

VehicleScript lane_change_script(Behavior b, const WorldConfig& cfg,
                                 std::mt19937_64& rng, double ego_speed) {
    const bool to_right = b == Behavior::LCL;  // LCL crosses left -> right
    int lane;
    if (to_right)
        lane = uniform_int(rng, 0, cfg.lane_count - 2);
    else
        lane = uniform_int(rng, 1, cfg.lane_count - 1);
    const double speed = ego_speed + uniform(rng, cfg.lc_offset);
    VehicleScript s = constant_script(b, lane, uniform(rng, 8.0, 25.0), speed, cfg.T);
    // smooth monotone crossing of exactly one boundary within a
    // 40-80% sub-window of the frames
    const int dur = std::clamp(
        static_cast<int>(std::lround(uniform(rng, 0.4, 0.8) * cfg.T)), 3, cfg.T - 1);
    const int t0 = uniform_int(rng, 0, cfg.T - 1 - dur);
    const double target = to_right ? cfg.lane_width : -cfg.lane_width;
    for (int t = 0; t < cfg.T; ++t) {
        const double u = (static_cast<double>(t) - t0) / dur;
        s.lateral[static_cast<size_t>(t)] = target * smoothstep(u);
    }
    return s;
}

}  // namespace

Scenario generate_scenario(const std::array<double, kNumClasses>& class_mix,
                           const WorldConfig& config, uint64_t seed) {
    config.validate();
    double mix_sum = 0.0;
    for (double m : class_mix) {
        if (m < 0) throw ConfigError("class mix: negative weight");
        mix_sum += m;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9)
        throw ConfigError("class mix: weights must sum to 1");

    std::mt19937_64 rng(derive_seed(seed, "scenario"));
    Scenario sc;
    sc.config = config;
    sc.camera = default_camera();
    sc.noise_seed = derive_seed(seed, "noise");

    const double ego_v = uniform(rng, config.ego_speed);
    const int ego_lane = config.lane_count / 2;
    sc.ego_pose.reserve(static_cast<size_t>(config.T));
    for (int t = 0; t < config.T; ++t)
        sc.ego_pose.emplace_back(config.lane_center(ego_lane),
                                 ego_v * t * config.frame_dt);

    // primary maneuver class
    const double u = uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    int cls = -1;
    for (int c = 0; c < kNumClasses; ++c) {
        if (class_mix[static_cast<size_t>(c)] <= 0.0) continue;
        acc += class_mix[static_cast<size_t>(c)];
        if (u <= acc) {
            cls = c;
            break;
        }
    }
    if (cls < 0)
        for (int c = kNumClasses - 1; c >= 0; --c)
            if (class_mix[static_cast<size_t>(c)] > 0.0) {
                cls = c;
                break;
            }

    switch (static_cast<Behavior>(cls)) {
        case Behavior::MVA: {
            const int lane = uniform_int(rng, 0, config.lane_count - 1);
            sc.vehicles.push_back(constant_script(
                Behavior::MVA, lane, uniform(rng, 5.0, 25.0),
                ego_v + uniform(rng, config.mva_offset), config.T));
            break;
        }
        case Behavior::MTU: {
            // opposing lane is one lane width to the left of the road
            sc.vehicles.push_back(constant_script(
                Behavior::MTU, -1,
                uniform(rng, 0.6 * config.road_window, config.road_window),
                -uniform(rng, config.mtu_speed), config.T));
            break;
        }
        case Behavior::PRK: {
            // parked on the right shoulder
            sc.vehicles.push_back(constant_script(
                Behavior::PRK, config.lane_count, uniform(rng, 8.0, 45.0), 0.0,
                config.T));
            break;
        }
        case Behavior::LCL:
        case Behavior::LCR:
            sc.vehicles.push_back(
                lane_change_script(static_cast<Behavior>(cls), config, rng, ego_v));
            break;
        case Behavior::OVT: {
            const int ref_lane = uniform_int(rng, 0, config.lane_count - 2);
            const double v_ref = ego_v + uniform(rng, config.ovt_lead_offset);
            double v_ovt = ego_v + uniform(rng, config.ovt_offset);
            v_ovt = std::max(v_ovt, v_ref + 0.8);
            const double ref_y0 = uniform(rng, 12.0, 22.0);
            const double window = (config.T - 1) * config.frame_dt;
            const double pass_time = uniform(rng, 0.35, 0.65) * window;
            const double ovt_y0 = ref_y0 - (v_ovt - v_ref) * pass_time;
            sc.vehicles.push_back(
                constant_script(Behavior::MVA, ref_lane, ref_y0, v_ref, config.T));
            sc.vehicles.push_back(constant_script(Behavior::OVT, ref_lane + 1,
                                                  ovt_y0, v_ovt, config.T));
            break;
        }
    }

    // landmarks: lane-marking dashes plus roadside poles
    const int n_lm = std::max(
        2, static_cast<int>(std::lround(config.landmark_density * config.road_window)));
    const int n_pole = static_cast<int>(std::lround(config.pole_fraction * n_lm));
    const int n_dash = n_lm - n_pole;
    const double y_lo = 2.0;
    for (int k = 0; k < n_dash; ++k) {
        const int boundary = k % (config.lane_count + 1);
        Landmark lm;
        lm.kind = "dash";
        lm.position = Vec2(boundary * config.lane_width,
                           y_lo + (k + 0.5) * config.road_window / n_dash);
        sc.landmarks.push_back(lm);
    }
    for (int k = 0; k < n_pole; ++k) {
        Landmark lm;
        lm.kind = "pole";
        const bool left = uniform_int(rng, 0, 1) == 0;
        lm.position = Vec2(left ? -1.2 * config.lane_width : config.road_right() + 1.5,
                           uniform(rng, y_lo, y_lo + config.road_window));
        sc.landmarks.push_back(lm);
    }

    if (sc.vehicles.empty() || sc.landmarks.size() < 2)
        throw ConfigError("generated scenario is degenerate");
    return sc;
}

std::vector<std::vector<Vec2>> camera_frame_positions(const Scenario& sc) {
    const int T = sc.config.T;
    const size_t n = sc.vehicles.size() + sc.landmarks.size();
    std::vector<std::vector<Vec2>> out(static_cast<size_t>(T));

    // world trajectories per vehicle (prefix-summed speeds)
    std::vector<std::vector<Vec2>> world(sc.vehicles.size());
    for (size_t v = 0; v < sc.vehicles.size(); ++v) {
        const VehicleScript& s = sc.vehicles[v];
        double y = s.initial_offset;
        for (int t = 0; t < T; ++t) {
            world[v].emplace_back(
                sc.config.lane_center(s.initial_lane) + s.lateral[static_cast<size_t>(t)],
                y);
            y += s.speed[static_cast<size_t>(t)] * sc.config.frame_dt;
        }
    }

    for (int t = 0; t < T; ++t) {
        auto& frame = out[static_cast<size_t>(t)];
        frame.reserve(n);
        const Vec2& ego = sc.ego_pose[static_cast<size_t>(t)];
        for (size_t v = 0; v < sc.vehicles.size(); ++v)
            frame.push_back(world[v][static_cast<size_t>(t)] - ego);
        for (const auto& lm : sc.landmarks) frame.push_back(lm.position - ego);
    }
    return out;
}

SceneSequence simulate(const Scenario& sc) {
    auto clean = camera_frame_positions(sc);
    std::mt19937_64 rng(sc.noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    SceneSequence seq;
    seq.T = sc.config.T;
    const int n = static_cast<int>(sc.vehicles.size() + sc.landmarks.size());
    // Tracker-style ids: arbitrary per sequence, stable across frames. A
    // seeded shuffle keeps generation deterministic without giving ids any
    // semantic meaning (e.g. "id 0 is always a vehicle").
    std::vector<int> ids(static_cast<size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    {
        std::mt19937_64 id_rng(sc.noise_seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(ids.begin(), ids.end(), id_rng);
    }
    for (int i = 0; i < n; ++i) {
        seq.node_ids.push_back(ids[static_cast<size_t>(i)]);
        seq.node_types.push_back(i < static_cast<int>(sc.vehicles.size())
                                     ? NodeType::Vehicle
                                     : NodeType::Landmark);
    }
    seq.positions = std::move(clean);
    if (sc.config.noise_sigma > 0.0)
        for (auto& frame : seq.positions)
            for (auto& p : frame) {
                p.x() += sc.config.noise_sigma * noise(rng);
                p.y() += sc.config.noise_sigma * noise(rng);
            }
    for (size_t v = 0; v < sc.vehicles.size(); ++v)
        seq.labels[ids[v]] = sc.vehicles[v].behavior;
    seq.rebuild_frames();
    seq.validate();
    return seq;
}

ImageSpaceView image_space_view(const Scenario& sc) {
    ImageSpaceView view;
    view.camera = sc.camera;
    auto positions = camera_frame_positions(sc);
    for (const auto& frame : positions) {
        std::vector<std::optional<ImagePoint>> proj;
        proj.reserve(frame.size());
        for (const auto& p : frame) {
            BevPoint B{Eigen::Vector3d(p.x(), sc.camera.h, p.y())};
            if (p.y() <= 0.0) {
                proj.push_back(std::nullopt);
                ++view.dropped;
                continue;
            }
            proj.push_back(project_to_image(B, sc.camera));
        }
        view.frames.push_back(std::move(proj));
    }
    if (view.dropped > 0)
        std::cerr << "warning: image_space_view dropped " << view.dropped
                  << " point(s) behind the camera\n";
    return view;
}

std::string DatasetManifest::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["config"] = nlohmann::json::parse(config_json);
    j["split"] = {{"train", train}, {"val", val}, {"test", test}};
    return j.dump();
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dataset manifest: ") + e.what());
    }
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.config_hash = j.at("config_hash").get<uint64_t>();
    m.config_json = j.at("config").dump();
    m.train = j.at("split").at("train").get<std::vector<int>>();
    m.val = j.at("split").at("val").get<std::vector<int>>();
    m.test = j.at("split").at("test").get<std::vector<int>>();
    return m;
}

DatasetManifest DatasetManifest::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

DatasetManifest generate_dataset(int n_sequences, const WorldConfig& config,
                                 uint64_t seed, const std::string& out_path,
                                 const std::array<double, kNumClasses>& class_mix) {
    config.validate();
    if (n_sequences < 10) throw ConfigError("generate_dataset: need >= 10 sequences");

    // greedy class assignment keeping labeled-vehicle counts on the mix;
    // an overtake scene also contributes one moving-away reference vehicle
    std::array<long, kNumClasses> counts{};
    long total = 0;
    std::vector<SceneSequence> seqs;
    seqs.reserve(static_cast<size_t>(n_sequences));
    for (int i = 0; i < n_sequences; ++i) {
        int best = -1;
        double best_deficit = -1e300;
        for (int c = 0; c < kNumClasses; ++c) {
            if (class_mix[static_cast<size_t>(c)] <= 0.0) continue;
            const long added = c == static_cast<int>(Behavior::OVT) ? 2 : 1;
            const double target =
                class_mix[static_cast<size_t>(c)] * static_cast<double>(total + added);
            const double deficit = target - static_cast<double>(counts[static_cast<size_t>(c)]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = c;
            }
        }
        std::array<double, kNumClasses> one_hot{};
        one_hot[static_cast<size_t>(best)] = 1.0;
        Scenario sc = generate_scenario(one_hot, config,
                                        derive_seed(seed, "sequence", static_cast<uint64_t>(i)));
        SceneSequence seq = simulate(sc);
        for (const auto& [id, b] : seq.labels) {
            ++counts[static_cast<size_t>(b)];
            ++total;
        }
        seqs.push_back(std::move(seq));
    }

    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    save_dataset(out_path, seqs);

    DatasetManifest m;
    m.seed = seed;
    m.config_json = config.to_json();
    m.config_hash = derive_seed(0, m.config_json);
    const int n_val = n_sequences / 10;
    const int n_test = n_sequences / 10;
    const int n_train = n_sequences - n_val - n_test;
    for (int i = 0; i < n_train; ++i) m.train.push_back(i);
    for (int i = n_train; i < n_train + n_val; ++i) m.val.push_back(i);
    for (int i = n_train + n_val; i < n_sequences; ++i) m.test.push_back(i);
    std::ofstream mf(out_path + ".manifest.json");
    if (!mf) throw Error("cannot write manifest for " + out_path);
    mf << m.to_json() << '\n';
    return m;
}

}  // namespace mgraph
