#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "facekit/error.hpp"

namespace facekit {

struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int right() const { return x + w; }   // exclusive
    int bottom() const { return y + h; }  // exclusive
    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Intersection of `r` with [0,width) x [0,height). Returns false when empty.
bool clamp_rect(const Rect& r, int width, int height, Rect& out);

/// Single-channel raster. `Tag` keeps semantically different planes with the
/// same sample type (gray luma, binary masks) from mixing silently.
template <typename T, typename Tag>
struct Plane {
    using sample_type = T;

    int width = 0;
    int height = 0;
    std::vector<T> data;

    Plane() = default;
    Plane(int w, int h, T fill = T{}) : width(w), height(h), data(checked_size(w, h), fill) {}
    Plane(int w, int h, std::vector<T> samples) : width(w), height(h), data(std::move(samples)) {
        if (data.size() != checked_size(w, h))
            throw Error(ErrorCode::DimensionMismatch, "sample count does not match dimensions");
    }

    T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 1 || h < 1) throw Error(ErrorCode::InvalidArgument, "raster dimensions must be >= 1");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }
};

struct GrayTag {};
struct DepthTag {};
struct MaskTag {};

using GrayFrame = Plane<std::uint8_t, GrayTag>;
/// Depth in millimeters; 0 means no reading.
using DepthFrame = Plane<std::uint16_t, DepthTag>;
/// Binary occupancy, samples are 0 or 255.
using MaskFrame = Plane<std::uint8_t, MaskTag>;

/// Interleaved 8-bit RGB.
struct ColorFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    ColorFrame() = default;
    ColorFrame(int w, int h);
    ColorFrame(int w, int h, std::vector<std::uint8_t> rgb);

    std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* pixel(int x, int y) const {
        return &data[(static_cast<std::size_t>(y) * width + x) * 3];
    }

    friend bool operator==(const ColorFrame&, const ColorFrame&) = default;
};

ColorFrame load_color(const std::filesystem::path& path);
DepthFrame load_depth(const std::filesystem::path& path);
void save_color(const ColorFrame& frame, const std::filesystem::path& path);
void save_depth(const DepthFrame& frame, const std::filesystem::path& path);

/// Integer BT.601 luma, round half up.
GrayFrame to_gray(const ColorFrame& frame);

GrayFrame crop(const GrayFrame& frame, const Rect& r);
DepthFrame crop(const DepthFrame& frame, const Rect& r);

/// Bilinear, half-pixel centers, rounded half up. Computed exactly in integers.
GrayFrame resize(const GrayFrame& frame, int out_w, int out_h);
/// Nearest neighbor, half-pixel centers, ties resolve to the smaller index.
/// Never blends the 0 sentinel into neighbouring depths.
DepthFrame resize(const DepthFrame& frame, int out_w, int out_h);

}  // namespace facekit
