#include "mgraph/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace mgraph {

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const std::string& path, const NamedParams& params) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    nlohmann::json jp = nlohmann::json::object();
    for (const auto& [name, t] : params) {
        nlohmann::json entry;
        entry["shape"] = {t.rows(), t.cols()};
        std::vector<double> data;
        data.reserve(static_cast<size_t>(t.rows() * t.cols()));
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c)
                data.push_back(t.value()(r, c));
        entry["data"] = std::move(data);
        jp[name] = std::move(entry);
    }
    j["params"] = std::move(jp);
    std::ofstream out(path);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    out << j.dump() << '\n';
}

void load_checkpoint(const std::string& path, NamedParams& params) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion)
        throw ParseError("checkpoint " + path + ": unsupported format version");
    const auto& jp = j.at("params");
    for (auto& [name, t] : params) {
        if (!jp.contains(name))
            throw ParseError("checkpoint " + path + ": missing parameter " + name);
        const auto& entry = jp.at(name);
        auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
            throw DimensionError("checkpoint " + path + ": shape mismatch for " + name);
        auto data = entry.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != t.rows() * t.cols())
            throw ParseError("checkpoint " + path + ": data length mismatch for " + name);
        Matrix v(t.rows(), t.cols());
        size_t k = 0;
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) v(r, c) = data[k++];
        t.update_value(v);
    }
}

}  // namespace mgraph
