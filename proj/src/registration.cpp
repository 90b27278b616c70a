#include "facekit/registration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace facekit {

namespace {

constexpr const char* kCalibrationKeys[] = {"depth.fx", "depth.fy", "depth.cx", "depth.cy",
                                            "color.fx", "color.fy", "color.cx", "color.cy",
                                            "t.x",      "t.y",      "t.z"};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double* field(CalibrationPair& cal, std::string_view key) {
    if (key == "depth.fx") return &cal.depth.fx;
    if (key == "depth.fy") return &cal.depth.fy;
    if (key == "depth.cx") return &cal.depth.cx;
    if (key == "depth.cy") return &cal.depth.cy;
    if (key == "color.fx") return &cal.color.fx;
    if (key == "color.fy") return &cal.color.fy;
    if (key == "color.cx") return &cal.color.cx;
    if (key == "color.cy") return &cal.color.cy;
    if (key == "t.x") return &cal.tx;
    if (key == "t.y") return &cal.ty;
    if (key == "t.z") return &cal.tz;
    return nullptr;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Returns false when the point is behind the color camera.
bool project(double u, double v, double z, const CalibrationPair& cal, Point2d& out) {
    const double x = (u - cal.depth.cx) * z / cal.depth.fx + cal.tx;
    const double y = (v - cal.depth.cy) * z / cal.depth.fy + cal.ty;
    const double zc = z + cal.tz;
    if (zc <= 0.0) return false;
    out = {cal.color.fx * x / zc + cal.color.cx, cal.color.fy * y / zc + cal.color.cy};
    return true;
}

}  // namespace

CalibrationPair CalibrationPair::identity(const Intrinsics& intr) {
    CalibrationPair cal;
    cal.depth = intr;
    cal.color = intr;
    return cal;
}

void validate(const CalibrationPair& cal) {
    for (const Intrinsics* in : {&cal.depth, &cal.color}) {
        if (!(in->fx > 0.0) || !(in->fy > 0.0))
            throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
        if (!std::isfinite(in->fx) || !std::isfinite(in->fy) || !std::isfinite(in->cx) || !std::isfinite(in->cy))
            throw Error(ErrorCode::InvalidArgument, "intrinsics must be finite");
    }
    if (!std::isfinite(cal.tx) || !std::isfinite(cal.ty) || !std::isfinite(cal.tz))
        throw Error(ErrorCode::InvalidArgument, "translation must be finite");
}

CalibrationPair parse_calibration(const std::string& text) {
    CalibrationPair cal;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::MalformedRow, "calibration line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        double* slot = field(cal, key);
        if (!slot) throw Error(ErrorCode::MalformedRow, "calibration: unknown key '" + key + "'");
        if (seen[key]) throw Error(ErrorCode::MalformedRow, "calibration: duplicate key '" + key + "'");
        const auto parsed = parse_double(value);
        if (!parsed) throw Error(ErrorCode::MalformedRow, "calibration: bad value for '" + key + "'");
        *slot = *parsed;
        seen[key] = true;
    }
    for (const char* key : kCalibrationKeys)
        if (!seen[key]) throw Error(ErrorCode::MalformedRow, std::string("calibration: missing key '") + key + "'");
    validate(cal);
    return cal;
}

CalibrationPair load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_calibration(buf.str());
}

void save_calibration(const CalibrationPair& cal, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    CalibrationPair copy = cal;
    for (const char* key : kCalibrationKeys) out << key << " = " << format_double(*field(copy, key)) << "\n";
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Point2d depth_to_color(Point2d p, double z_mm, const CalibrationPair& cal) {
    if (!(z_mm > 0.0)) throw Error(ErrorCode::InvalidDepth, "depth must be > 0");
    Point2d out;
    if (!project(p.x, p.y, z_mm, cal, out))
        throw Error(ErrorCode::InvalidDepth, "point lies behind the color camera after translation");
    return out;
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

AffineMap2D::AffineMap2D(Point2d u, Point2d v, Point2d t) : u_(u), v_(v), t_(t) {
    if (std::abs(u.x * v.y - u.y * v.x) <= 1e-9)
        throw Error(ErrorCode::InvalidArgument, "affine basis vectors are linearly dependent");
}

MaskFrame reproject_mask(const MaskFrame& color_mask, const DepthFrame& depth, const CalibrationPair& cal) {
    for (auto v : color_mask.data)
        if (v != 0 && v != 255) throw Error(ErrorCode::InvalidArgument, "mask samples must be 0 or 255");
    MaskFrame out(depth.width, depth.height, std::uint8_t{0});
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const std::uint16_t z = depth.at(u, v);
            if (z == 0) continue;
            Point2d c;
            if (!project(u, v, z, cal, c)) continue;
            const int x = round_half_up(c.x);
            const int y = round_half_up(c.y);
            if (x > 0 && y > 0 && x < color_mask.width && y < color_mask.height && color_mask.at(x, y) == 255)
                out.at(u, v) = 255;
        }
    }
    return out;
}

std::vector<Pixel> largest_component(const MaskFrame& mask) {
    std::vector<std::uint8_t> visited(mask.data.size(), 0);
    std::vector<Pixel> best, current, stack;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            if (mask.data[idx] != 255 || visited[idx]) continue;
            current.clear();
            stack.assign(1, Pixel{x, y});
            visited[idx] = 1;
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                current.push_back(p);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                        const std::size_t n = static_cast<std::size_t>(ny) * mask.width + nx;
                        if (mask.data[n] == 255 && !visited[n]) {
                            visited[n] = 1;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
            if (current.size() > best.size()) best.swap(current);
        }
    }
    std::sort(best.begin(), best.end());
    return best;
}

Rect bounding_rect(const std::vector<Pixel>& points) {
    if (points.empty()) throw Error(ErrorCode::EmptyInput, "bounding_rect of an empty point set");
    int x0 = points.front().x, x1 = x0, y0 = points.front().y, y1 = y0;
    for (const Pixel& p : points) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

Rect face_depth_roi(const Rect& color_rect, int color_width, int color_height, const DepthFrame& depth,
                    const CalibrationPair& cal) {
    Rect r;
    if (!clamp_rect(color_rect, color_width, color_height, r))
        throw Error(ErrorCode::EmptyIntersection, "face rectangle lies outside the color frame");
    MaskFrame mask(color_width, color_height, std::uint8_t{0});
    for (int y = r.y; y < r.bottom(); ++y) std::fill_n(&mask.at(r.x, y), r.w, std::uint8_t{255});
    const auto component = largest_component(reproject_mask(mask, depth, cal));
    if (component.empty()) throw Error(ErrorCode::NoDepthSupport, "no valid depth reprojects into the face");
    return bounding_rect(component);
}

}  // namespace facekit
