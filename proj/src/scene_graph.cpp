#include "mgraph/scene_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace mgraph {

namespace {
const std::array<std::string, kNumClasses> kBehaviorNames = {
    "MVA", "MTU", "PRK", "LCL", "LCR", "OVT"};
}

const std::string& behavior_name(Behavior b) {
    return kBehaviorNames[static_cast<size_t>(b)];
}

Behavior behavior_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (kBehaviorNames[static_cast<size_t>(i)] == name)
            return static_cast<Behavior>(i);
    throw ParseError("unknown behavior class: " + name);
}

Relation quadrant_relation(const Vec2& subject, const Vec2& object) {
    if (!subject.allFinite() || !object.allFinite())
        throw DomainError("quadrant_relation: non-finite position");
    const double dlat = object.x() - subject.x();
    const double dlon = object.y() - subject.y();
    if (dlon >= 0.0)
        return dlat >= 0.0 ? Relation::TopRight : Relation::TopLeft;
    return dlat >= 0.0 ? Relation::BottomRight : Relation::BottomLeft;
}

SceneGraph build_scene_graph(const std::vector<Vec2>& positions,
                             const std::vector<NodeType>& node_types,
                             const std::vector<int>& node_ids) {
    const int n = static_cast<int>(positions.size());
    if (n < 1) throw DomainError("build_scene_graph: need at least one node");
    if (node_types.size() != positions.size() || node_ids.size() != positions.size())
        throw DimensionError("build_scene_graph: inconsistent lengths");
    SceneGraph g;
    g.n = n;
    g.node_types = node_types;
    g.node_ids = node_ids;
    for (auto& A : g.adjacency) A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            Relation r = quadrant_relation(positions[static_cast<size_t>(i)],
                                           positions[static_cast<size_t>(j)]);
            g.adjacency[static_cast<size_t>(r)](i, j) = 1.0;
        }
    return g;
}

Eigen::MatrixXd degree_normalize(const Eigen::MatrixXd& A) {
    Eigen::MatrixXd out = A;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double deg = A.row(i).sum();
        if (deg > 0.0) out.row(i) /= deg;
    }
    return out;
}

int SceneSequence::vehicle_count() const {
    return static_cast<int>(
        std::count(node_types.begin(), node_types.end(), NodeType::Vehicle));
}

void SceneSequence::rebuild_frames() {
    frames.clear();
    frames.reserve(positions.size());
    for (const auto& pos : positions)
        frames.push_back(build_scene_graph(pos, node_types, node_ids));
}

void SceneSequence::validate() const {
    const size_t n = node_ids.size();
    if (T <= 0) throw DomainError("sequence: T must be positive");
    if (positions.size() != static_cast<size_t>(T))
        throw DomainError("sequence: positions frame count != T");
    if (node_types.size() != n)
        throw DomainError("sequence: node_types length mismatch");
    for (const auto& pos : positions)
        if (pos.size() != n) throw DomainError("sequence: frame node count mismatch");
    if (vehicle_count() < 1) throw DomainError("sequence: needs at least one vehicle");
    for (size_t i = 0; i < n; ++i) {
        const bool is_vehicle = node_types[i] == NodeType::Vehicle;
        const bool labeled = labels.count(node_ids[i]) > 0;
        if (is_vehicle && !labeled)
            throw DomainError("sequence: vehicle node without label");
        if (!is_vehicle && labeled)
            throw DomainError("sequence: landmark node with label");
    }
    if (frames.size() != static_cast<size_t>(T))
        throw DomainError("sequence: frames not built");
    for (const auto& f : frames) {
        if (f.node_ids != node_ids || f.node_types != node_types)
            throw DomainError("sequence: frame node set mismatch");
        // partition: sum_r A_r == ones - I, exactly
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(f.n, f.n);
        for (const auto& A : f.adjacency) s += A;
        Eigen::MatrixXd expect =
            Eigen::MatrixXd::Ones(f.n, f.n) - Eigen::MatrixXd::Identity(f.n, f.n);
        if (s != expect) throw DomainError("sequence: relation partition violated");
    }
}

SceneSequence landmark_dropout(const SceneSequence& seq, double keep_fraction,
                               uint64_t seed) {
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
        throw DomainError("landmark_dropout: keep_fraction must be in (0, 1]");
    std::vector<size_t> landmark_idx;
    for (size_t i = 0; i < seq.node_types.size(); ++i)
        if (seq.node_types[i] == NodeType::Landmark) landmark_idx.push_back(i);

    const size_t keep = static_cast<size_t>(
        std::floor(keep_fraction * static_cast<double>(landmark_idx.size())));
    std::mt19937_64 rng(seed);
    std::shuffle(landmark_idx.begin(), landmark_idx.end(), rng);
    landmark_idx.resize(keep);

    std::vector<bool> keep_node(seq.node_types.size(), false);
    for (size_t i = 0; i < seq.node_types.size(); ++i)
        if (seq.node_types[i] == NodeType::Vehicle) keep_node[i] = true;
    for (size_t i : landmark_idx) keep_node[i] = true;

    SceneSequence out;
    out.T = seq.T;
    out.labels = seq.labels;
    for (size_t i = 0; i < keep_node.size(); ++i) {
        if (!keep_node[i]) continue;
        out.node_ids.push_back(seq.node_ids[i]);
        out.node_types.push_back(seq.node_types[i]);
    }
    out.positions.resize(static_cast<size_t>(seq.T));
    for (int t = 0; t < seq.T; ++t)
        for (size_t i = 0; i < keep_node.size(); ++i)
            if (keep_node[i])
                out.positions[static_cast<size_t>(t)].push_back(
                    seq.positions[static_cast<size_t>(t)][i]);
    out.rebuild_frames();
    return out;
}

// --- I/O ----------------------------------------------------------------

std::string sequence_to_json(const SceneSequence& seq) {
    nlohmann::json j;
    j["T"] = seq.T;
    j["node_ids"] = seq.node_ids;
    std::vector<std::string> types;
    for (NodeType t : seq.node_types)
        types.push_back(t == NodeType::Vehicle ? "vehicle" : "landmark");
    j["node_types"] = types;
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& frame : seq.positions) {
        nlohmann::json fr = nlohmann::json::array();
        for (const auto& p : frame) fr.push_back({p.x(), p.y()});
        pos.push_back(std::move(fr));
    }
    j["positions"] = std::move(pos);
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [id, b] : seq.labels)
        labels[std::to_string(id)] = static_cast<int>(b);
    j["labels"] = std::move(labels);
    return j.dump();
}

SceneSequence sequence_from_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sequence record: ") + e.what());
    }
    SceneSequence seq;
    try {
        seq.T = j.at("T").get<int>();
        seq.node_ids = j.at("node_ids").get<std::vector<int>>();
        for (const auto& t : j.at("node_types")) {
            const std::string s = t.get<std::string>();
            if (s == "vehicle")
                seq.node_types.push_back(NodeType::Vehicle);
            else if (s == "landmark")
                seq.node_types.push_back(NodeType::Landmark);
            else
                throw ParseError("sequence record: bad node type '" + s + "'");
        }
        for (const auto& frame : j.at("positions")) {
            std::vector<Vec2> fr;
            for (const auto& p : frame) {
                if (p.size() != 2)
                    throw ParseError("sequence record: position must have 2 coords");
                fr.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            seq.positions.push_back(std::move(fr));
        }
        for (const auto& [key, val] : j.at("labels").items()) {
            const int cls = val.get<int>();
            if (cls < 0 || cls >= kNumClasses)
                throw ParseError("sequence record: class index out of range");
            seq.labels[std::stoi(key)] = static_cast<Behavior>(cls);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sequence record: ") + e.what());
    }
    seq.rebuild_frames();
    seq.validate();
    return seq;
}

void save_dataset(const std::string& path, const std::vector<SceneSequence>& seqs) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open dataset for writing: " + path);
    for (const auto& s : seqs) out << sequence_to_json(s) << '\n';
    if (!out) throw Error("write failed: " + path);
}

std::vector<SceneSequence> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset: " + path);
    std::vector<SceneSequence> seqs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            seqs.push_back(sequence_from_json(line));
        } catch (const Error& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return seqs;
}

}  // namespace mgraph
