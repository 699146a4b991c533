#include "mgraph/geometry.hpp"

#include <cmath>

#include <json.hpp>

namespace mgraph {

void CameraModel::validate() const {
    if (std::abs(eta.norm() - 1.0) > 1e-9)
        throw ConfigError("camera: eta must be unit length");
    if (!(h > 0.0)) throw ConfigError("camera: h must be positive");
    if (std::abs(K.determinant()) < 1e-12)
        throw ConfigError("camera: K is not invertible");
}

std::string CameraModel::to_json() const {
    nlohmann::json j;
    std::vector<double> k;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) k.push_back(K(r, c));
    j["K"] = k;
    j["eta"] = {eta(0), eta(1), eta(2)};
    j["h"] = h;
    return j.dump();
}

CameraModel CameraModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("camera json: ") + e.what());
    }
    CameraModel cam;
    auto k = j.at("K").get<std::vector<double>>();
    if (k.size() != 9) throw ParseError("camera json: K must have 9 entries");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cam.K(r, c) = k[static_cast<size_t>(3 * r + c)];
    auto e = j.at("eta").get<std::vector<double>>();
    if (e.size() != 3) throw ParseError("camera json: eta must have 3 entries");
    cam.eta = Eigen::Vector3d(e[0], e[1], e[2]);
    cam.h = j.at("h").get<double>();
    cam.validate();
    return cam;
}

BevPoint birdseye_project(const ImagePoint& b, const CameraModel& cam) {
    Eigen::Vector3d ray = cam.K.inverse() * b.b;
    const double denom = cam.eta.dot(ray);
    if (std::abs(denom) < 1e-9)
        throw HorizonDegenerateError("pixel ray is parallel to the ground plane");
    return BevPoint{-cam.h * ray / denom};
}

ImagePoint project_to_image(const BevPoint& B, const CameraModel& cam) {
    Eigen::Vector3d p = cam.K * B.B;
    if (p(2) <= 0.0)
        throw DomainError("project_to_image: point is behind the camera");
    return ImagePoint(p(0) / p(2), p(1) / p(2));
}

}  // namespace mgraph
