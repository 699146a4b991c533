#pragma once

#include <Eigen/Dense>
#include <string>

#include "mgraph/errors.hpp"

namespace mgraph {

// Camera frame convention: x right, y down, z forward. For a level camera
// the ground-plane normal is eta ~ (0, -1, 0) and h > 0 is the height of
// the optical center above the plane.
struct CameraModel {
    Eigen::Matrix3d K;
    Eigen::Vector3d eta;
    double h = 0.0;

    // K invertible, |eta| = 1 within 1e-9, h > 0.
    void validate() const;

    std::string to_json() const;
    static CameraModel from_json(const std::string& text);
};

struct ImagePoint {
    Eigen::Vector3d b;  // homogeneous (x, y, 1)

    ImagePoint(double x, double y) : b(x, y, 1.0) {}
};

struct BevPoint {
    Eigen::Vector3d B;  // camera-frame meters on the ground plane
};

// B = -h K^{-1} b / (eta^T K^{-1} b). Rays nearly parallel to the plane
// (|eta^T K^{-1} b| < 1e-9) raise HorizonDegenerateError.
BevPoint birdseye_project(const ImagePoint& b, const CameraModel& cam);

// Perspective projection back to the image; points with z <= 0 raise
// DomainError.
ImagePoint project_to_image(const BevPoint& B, const CameraModel& cam);

}  // namespace mgraph
