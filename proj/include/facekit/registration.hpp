#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facekit/imaging.hpp"

namespace facekit {

struct Point2d {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2d&, const Point2d&) = default;
};

struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel& a, const Pixel& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
};

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// Pinhole pair with identity rotation. `t*` is the depth-camera origin
/// expressed in the color-camera frame, in millimeters.
struct CalibrationPair {
    Intrinsics depth;
    Intrinsics color;
    double tx = 0.0;
    double ty = 0.0;
    double tz = 0.0;

    /// Both cameras share `intr` and there is no baseline.
    static CalibrationPair identity(const Intrinsics& intr);

    friend bool operator==(const CalibrationPair&, const CalibrationPair&) = default;
};

/// Throws InvalidArgument unless fx, fy > 0 for both cameras and all values
/// are finite.
void validate(const CalibrationPair& cal);

CalibrationPair load_calibration(const std::filesystem::path& path);
CalibrationPair parse_calibration(const std::string& text);
void save_calibration(const CalibrationPair& cal, const std::filesystem::path& path);

/// Continuous color-image coordinates of depth pixel `p` observed at `z_mm`.
Point2d depth_to_color(Point2d p, double z_mm, const CalibrationPair& cal);

/// Round half up, the convention used for every projected coordinate.
int round_half_up(double v);

/// Frame for an affine space: p' = x*u + y*v + t.
class AffineMap2D {
public:
    AffineMap2D(Point2d u, Point2d v, Point2d t);

    static AffineMap2D identity() { return AffineMap2D({1, 0}, {0, 1}, {0, 0}); }

    Point2d apply(Point2d p) const { return {p.x * u_.x + p.y * v_.x + t_.x, p.x * u_.y + p.y * v_.y + t_.y}; }

    Point2d u() const { return u_; }
    Point2d v() const { return v_; }
    Point2d t() const { return t_; }

private:
    Point2d u_, v_, t_;
};

inline Point2d apply_affine(const AffineMap2D& map, Point2d p) { return map.apply(p); }

/// Depth-space mask of pixels whose projection lands on a set color-mask
/// pixel. Projected coordinates must satisfy 0 < x < cols and 0 < y < rows,
/// so color column 0 and row 0 never contribute.
MaskFrame reproject_mask(const MaskFrame& color_mask, const DepthFrame& depth, const CalibrationPair& cal);

/// Pixels of the largest 8-connected component of set mask pixels, in
/// row-major order. Equal sizes go to the component whose first pixel comes
/// first in row-major order. Empty when the mask has no set pixels.
std::vector<Pixel> largest_component(const MaskFrame& mask);

Rect bounding_rect(const std::vector<Pixel>& points);

/// Full color-rect to depth-rect path: rasterize the (clamped) rect as a
/// color mask, reproject it, keep the largest component, and bound it.
/// Throws NoDepthSupport when nothing reprojects.
Rect face_depth_roi(const Rect& color_rect, int color_width, int color_height, const DepthFrame& depth,
                    const CalibrationPair& cal);

}  // namespace facekit
