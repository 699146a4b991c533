#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mgraph/errors.hpp"

namespace mgraph {

enum class NodeType { Vehicle, Landmark };

// Quadrant of the object relative to the subject in bird's-eye view.
// "Top" = greater longitudinal (forward) coordinate, "Right" = greater
// lateral coordinate; zero deltas count as Top/Right.
enum class Relation { TopLeft = 0, TopRight = 1, BottomLeft = 2, BottomRight = 3 };
inline constexpr int kNumRelations = 4;

enum class Behavior { MVA = 0, MTU = 1, PRK = 2, LCL = 3, LCR = 4, OVT = 5 };
inline constexpr int kNumClasses = 6;

const std::string& behavior_name(Behavior b);
Behavior behavior_from_name(const std::string& name);

using Vec2 = Eigen::Vector2d;  // (lateral, longitudinal) meters

Relation quadrant_relation(const Vec2& subject, const Vec2& object);

// Per-frame multi-relational spatial graph. The four adjacency matrices
// partition the off-diagonal entries: sum_r A_r = ones - I.
struct SceneGraph {
    int n = 0;
    std::vector<NodeType> node_types;
    std::vector<int> node_ids;
    std::array<Eigen::MatrixXd, kNumRelations> adjacency;
};

SceneGraph build_scene_graph(const std::vector<Vec2>& positions,
                             const std::vector<NodeType>& node_types,
                             const std::vector<int>& node_ids);

// Row-normalizes by out-degree; zero-degree rows stay zero.
Eigen::MatrixXd degree_normalize(const Eigen::MatrixXd& A);

// T frames over a fixed node set with per-vehicle behavior labels.
struct SceneSequence {
    int T = 0;
    std::vector<int> node_ids;
    std::vector<NodeType> node_types;
    std::vector<std::vector<Vec2>> positions;  // [T][n]
    std::map<int, Behavior> labels;            // vehicle node_id -> class
    std::vector<SceneGraph> frames;

    int n() const { return static_cast<int>(node_ids.size()); }
    int vehicle_count() const;
    void rebuild_frames();
    // Checks all structural invariants; throws on violation.
    void validate() const;
};

// Keeps floor(keep_fraction * L) landmarks, chosen once per sequence,
// and every vehicle; graphs are rebuilt from the remaining positions.
SceneSequence landmark_dropout(const SceneSequence& seq, double keep_fraction,
                               uint64_t seed);

// --- dataset I/O (JSON Lines, one record per sequence) ------------------

std::string sequence_to_json(const SceneSequence& seq);
SceneSequence sequence_from_json(const std::string& line);

void save_dataset(const std::string& path, const std::vector<SceneSequence>& seqs);
std::vector<SceneSequence> load_dataset(const std::string& path);

}  // namespace mgraph
