#pragma once

#include <cmath>
#include <optional>
#include <string>

namespace hri {

/// World-frame point or direction in meters; z points up.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend Vec3 operator*(double s, Vec3 a) { return a * s; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(Vec3 o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const
    {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Horizontal (xy-plane) distance.
inline double planar_distance(Vec3 a, Vec3 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Angle between two directions in degrees, numerically stable for small angles.
double angle_between_deg(Vec3 a, Vec3 b);

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
};

/// Symmetric pinhole camera. Yaw is measured counter-clockwise from +x,
/// pitch is positive upwards. Pixel v grows downwards.
struct CameraModel {
    std::string id;
    Vec3 position;
    double yaw = 0.0;
    double pitch = 0.0;
    double h_fov = 90.0;
    double v_fov = 60.0;
    int width = 640;
    int height = 480;

    bool valid() const;

    Vec3 forward() const;
    Vec3 right() const;
    Vec3 up() const;
    double focal_x() const;
    double focal_y() const;
};

/// Depth of p along the optical axis (negative when behind).
double camera_depth(const CameraModel& camera, Vec3 p);

/// Projection without frustum clipping; none only when p is on or behind the
/// camera plane.
std::optional<PixelPoint> project_unclipped(const CameraModel& camera, Vec3 p);

/// Pinhole projection; none when p is behind the camera or outside the frustum.
std::optional<PixelPoint> project(const CameraModel& camera, Vec3 p);

/// Point at the given optical-axis depth on the view ray through a pixel.
Vec3 unproject(const CameraModel& camera, PixelPoint px, double depth);

/// Unit world-frame direction of the view ray through a normalized image
/// point ([0,1]^2).
Vec3 view_ray(const CameraModel& camera, double nu, double nv);

} // namespace hri
