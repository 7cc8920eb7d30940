#include "hri/geometry.hpp"

#include <algorithm>

namespace hri {

namespace {
// Frustum edges are inclusive; tan() round-off would otherwise push a point
// exactly on the edge a few ulps outside.
constexpr double kEdgeTolerancePx = 1e-6;
} // namespace

double angle_between_deg(Vec3 a, Vec3 b)
{
    const double c = a.cross(b).norm();
    const double d = a.dot(b);
    return rad2deg(std::atan2(c, d));
}

bool CameraModel::valid() const
{
    return h_fov > 0.0 && h_fov < 180.0 && v_fov > 0.0 && v_fov < 180.0 && width > 0 && height > 0 &&
        position.finite() && std::isfinite(yaw) && std::isfinite(pitch);
}

Vec3 CameraModel::forward() const
{
    const double y = deg2rad(yaw);
    const double p = deg2rad(pitch);
    return {std::cos(p) * std::cos(y), std::cos(p) * std::sin(y), std::sin(p)};
}

Vec3 CameraModel::right() const
{
    const double y = deg2rad(yaw);
    return {std::sin(y), -std::cos(y), 0.0};
}

Vec3 CameraModel::up() const
{
    return right().cross(forward());
}

double CameraModel::focal_x() const
{
    return (width / 2.0) / std::tan(deg2rad(h_fov) / 2.0);
}

double CameraModel::focal_y() const
{
    return (height / 2.0) / std::tan(deg2rad(v_fov) / 2.0);
}

double camera_depth(const CameraModel& camera, Vec3 p)
{
    return (p - camera.position).dot(camera.forward());
}

std::optional<PixelPoint> project_unclipped(const CameraModel& camera, Vec3 p)
{
    const Vec3 d = p - camera.position;
    const double zc = d.dot(camera.forward());
    if (zc <= 0.0)
        return std::nullopt;
    const double xc = d.dot(camera.right());
    const double yc = d.dot(camera.up());
    return PixelPoint{camera.width / 2.0 + camera.focal_x() * xc / zc,
                      camera.height / 2.0 - camera.focal_y() * yc / zc};
}

std::optional<PixelPoint> project(const CameraModel& camera, Vec3 p)
{
    auto px = project_unclipped(camera, p);
    if (!px)
        return std::nullopt;
    if (px->u < -kEdgeTolerancePx || px->u > camera.width + kEdgeTolerancePx || px->v < -kEdgeTolerancePx ||
        px->v > camera.height + kEdgeTolerancePx)
        return std::nullopt;
    px->u = std::clamp(px->u, 0.0, static_cast<double>(camera.width));
    px->v = std::clamp(px->v, 0.0, static_cast<double>(camera.height));
    return px;
}

Vec3 unproject(const CameraModel& camera, PixelPoint px, double depth)
{
    const double xc = (px.u - camera.width / 2.0) / camera.focal_x() * depth;
    const double yc = -(px.v - camera.height / 2.0) / camera.focal_y() * depth;
    return camera.position + camera.forward() * depth + camera.right() * xc + camera.up() * yc;
}

Vec3 view_ray(const CameraModel& camera, double nu, double nv)
{
    const double xn = (nu - 0.5) * 2.0 * std::tan(deg2rad(camera.h_fov) / 2.0);
    const double yn = -(nv - 0.5) * 2.0 * std::tan(deg2rad(camera.v_fov) / 2.0);
    return (camera.forward() + camera.right() * xn + camera.up() * yn).normalized();
}

} // namespace hri
