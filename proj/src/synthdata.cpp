#include "facekit/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <type_traits>

namespace facekit::synth {

namespace {

std::uint32_t mix(std::uint32_t x) {
    x ^= x >> 16;
    x *= 0x7feb352dU;
    x ^= x >> 15;
    x *= 0x846ca68bU;
    x ^= x >> 16;
    return x;
}

std::uint32_t hash3(std::uint32_t seed, std::int32_t a, std::int32_t b) {
    return mix(seed ^ mix(static_cast<std::uint32_t>(a) * 0x9e3779b1U ^ mix(static_cast<std::uint32_t>(b) + 0x632be5abU)));
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

int texture_cell(std::uint32_t seed) { return 4 + static_cast<int>(seed % 5); }

// Gray level of subject texture at patch-local (i, j), before illumination.
int subject_gray(const SubjectSpec& s, int i, int j) {
    const int cell = texture_cell(s.texture_seed);
    const int coarse = value_noise(s.texture_seed, i, j, cell);
    const int fine = value_noise(s.texture_seed ^ 0x5bd1e995U, i, j, std::max(2, cell / 2));
    return 40 + (2 * coarse + fine) * 175 / (3 * 255);
}

int subject_relief(const SubjectSpec& s, int i, int j) {
    return value_noise(s.relief_seed, i, j, 8) * s.relief_amplitude / 255;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_spec(const std::string& why) { throw Error(ErrorCode::InvalidArgument, "scene spec: " + why); }

long to_long(const std::string& key, const std::string& value) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_spec("'" + key + "' is not an integer");
    return v;
}

std::vector<long> to_longs(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    std::vector<long> out;
    for (std::string tok; in >> tok;) out.push_back(to_long(key, tok));
    return out;
}

// Position along one axis, reflecting off [lo, hi].
int bounce(long start, long step, long t, int lo, int hi) {
    if (hi <= lo) return lo;
    const long span = hi - lo;
    long p = ((start - lo + step * t) % (2 * span) + 2 * span) % (2 * span);
    if (p > span) p = 2 * span - p;
    return static_cast<int>(lo + p);
}

std::vector<Pixel> make_path(const std::string& key, const std::string& value, int frames, int size, int width,
                             int height) {
    std::istringstream in(value);
    std::string kind;
    in >> kind;
    std::string rest;
    std::getline(in, rest);
    const auto args = to_longs(key, rest);
    std::vector<Pixel> path(static_cast<std::size_t>(frames));
    if (kind == "static") {
        if (args.size() != 2) bad_spec("'" + key + "': static takes x y");
        std::fill(path.begin(), path.end(), Pixel{static_cast<int>(args[0]), static_cast<int>(args[1])});
    } else if (kind == "linear") {
        if (args.size() != 4) bad_spec("'" + key + "': linear takes x y dx dy");
        for (int t = 0; t < frames; ++t)
            path[static_cast<std::size_t>(t)] = {static_cast<int>(args[0] + args[2] * t),
                                                 static_cast<int>(args[1] + args[3] * t)};
    } else if (kind == "bounce") {
        if (args.size() != 4) bad_spec("'" + key + "': bounce takes x y dx dy");
        const int half = size / 2;
        for (int t = 0; t < frames; ++t)
            path[static_cast<std::size_t>(t)] = {bounce(args[0], args[2], t, half, width - size + half),
                                                 bounce(args[1], args[3], t, half, height - size + half)};
    } else {
        bad_spec("'" + key + "': unknown path kind '" + kind + "'");
    }
    return path;
}

void write_frame(const std::filesystem::path& dir, const char* prefix, std::size_t frame, const char* ext,
                 const auto& image, auto saver) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.%s", prefix, frame, ext);
    saver(image, dir / name);
}

}  // namespace

std::uint8_t value_noise(std::uint32_t seed, int x, int y, int cell) {
    const int gx = floor_div(x, cell), gy = floor_div(y, cell);
    const int fx = x - gx * cell, fy = y - gy * cell;
    const int v00 = hash3(seed, gx, gy) & 0xff;
    const int v10 = hash3(seed, gx + 1, gy) & 0xff;
    const int v01 = hash3(seed, gx, gy + 1) & 0xff;
    const int v11 = hash3(seed, gx + 1, gy + 1) & 0xff;
    const int top = v00 * (cell - fx) + v10 * fx;
    const int bottom = v01 * (cell - fx) + v11 * fx;
    return static_cast<std::uint8_t>((top * (cell - fy) + bottom * fy) / (cell * cell));
}

void validate(const SceneSpec& scene) {
    if (scene.frames < 1) bad_spec("frames must be >= 1");
    if (scene.color_width < 1 || scene.color_height < 1 || scene.depth_width < 1 || scene.depth_height < 1)
        bad_spec("frame dimensions must be >= 1");
    if (scene.background_depth == 0) bad_spec("background depth must be > 0");
    if (scene.jitter_amplitude < 0) bad_spec("jitter amplitude must be >= 0");
    facekit::validate(scene.calibration);
    if (scene.paths.size() != scene.subjects.size()) bad_spec("every subject needs a path");
    std::set<std::string> labels;
    std::set<std::uint32_t> seeds;
    for (std::size_t s = 0; s < scene.subjects.size(); ++s) {
        const SubjectSpec& subj = scene.subjects[s];
        if (subj.label.empty() || subj.label.find_first_of(",\r\n") != std::string::npos)
            bad_spec("subject labels must be non-empty and free of commas");
        if (!labels.insert(subj.label).second) bad_spec("duplicate subject label '" + subj.label + "'");
        if (!seeds.insert(subj.texture_seed).second || !seeds.insert(subj.relief_seed).second)
            bad_spec("subjects must use distinct seeds");
        if (subj.size < 16) bad_spec("subject size must be >= 16");
        if (subj.distance == 0) bad_spec("subject distance must be > 0");
        if (subj.relief_amplitude < 0 || subj.relief_amplitude >= subj.distance)
            bad_spec("relief amplitude must be in [0, distance)");
        if (scene.paths[s].size() != static_cast<std::size_t>(scene.frames))
            bad_spec("path length does not match frame count");
        for (std::size_t f = 0; f < scene.paths[s].size(); ++f) {
            const Rect r = subject_rect(scene, s, f);
            if (r.x < 0 || r.y < 0 || r.right() > scene.color_width || r.bottom() > scene.color_height)
                bad_spec("path of '" + subj.label + "' leaves the frame at frame " + std::to_string(f));
        }
    }
}

Rect subject_rect(const SceneSpec& scene, std::size_t s, std::size_t f) {
    const int size = scene.subjects[s].size;
    const Pixel c = scene.paths[s][f];
    return {c.x - size / 2, c.y - size / 2, size, size};
}

ColorFrame render_color(const SceneSpec& scene, std::size_t frame) {
    ColorFrame img(scene.color_width, scene.color_height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int g = 90 + value_noise(scene.background_seed, x, y, 16) / 4;
            std::uint8_t* px = img.pixel(x, y);
            px[0] = static_cast<std::uint8_t>(g + 10);
            px[1] = static_cast<std::uint8_t>(g);
            px[2] = static_cast<std::uint8_t>(g - 10);
        }
    }
    for (std::size_t s = 0; s < scene.subjects.size(); ++s) {
        const SubjectSpec& subj = scene.subjects[s];
        const Rect r = subject_rect(scene, s, frame);
        for (int j = 0; j < r.h; ++j) {
            for (int i = 0; i < r.w; ++i) {
                int g = subject_gray(subj, i, j);
                if (scene.illumination) g += scene.illumination_slope * (i - r.w / 2);
                const auto v = static_cast<std::uint8_t>(std::clamp(g, 0, 255));
                std::uint8_t* px = img.pixel(r.x + i, r.y + j);
                px[0] = px[1] = px[2] = v;
            }
        }
    }
    return img;
}

DepthFrame render_depth(const SceneSpec& scene, std::size_t frame) {
    DepthFrame img(scene.depth_width, scene.depth_height, scene.background_depth);
    std::vector<Rect> rects;
    for (std::size_t s = 0; s < scene.subjects.size(); ++s) rects.push_back(subject_rect(scene, s, frame));
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            std::uint16_t nearest = img.at(u, v);
            for (std::size_t s = 0; s < scene.subjects.size(); ++s) {
                const SubjectSpec& subj = scene.subjects[s];
                const Point2d c = depth_to_color({static_cast<double>(u), static_cast<double>(v)}, subj.distance,
                                                 scene.calibration);
                const int i = round_half_up(c.x) - rects[s].x;
                const int j = round_half_up(c.y) - rects[s].y;
                if (i < 0 || j < 0 || i >= rects[s].w || j >= rects[s].h) continue;
                const auto z = static_cast<std::uint16_t>(subj.distance - subject_relief(subj, i, j));
                nearest = std::min(nearest, z);
            }
            img.at(u, v) = nearest;
        }
    }
    if (scene.jitter_amplitude > 0) {
        const auto a = static_cast<std::uint32_t>(scene.jitter_amplitude);
        for (int v = 0; v < img.height; ++v) {
            for (int u = 0; u < img.width; ++u) {
                const std::uint32_t h = hash3(scene.jitter_seed + static_cast<std::uint32_t>(frame) * 0x27d4eb2dU, u, v);
                const int noise = static_cast<int>(h % (2 * a + 1)) - scene.jitter_amplitude;
                img.at(u, v) = static_cast<std::uint16_t>(std::clamp(img.at(u, v) + noise, 1, 65535));
            }
        }
    }
    return img;
}

AnnotationSet annotations(const SceneSpec& scene) {
    AnnotationSet set;
    for (std::size_t f = 0; f < static_cast<std::size_t>(scene.frames); ++f)
        for (std::size_t s = 0; s < scene.subjects.size(); ++s)
            set.frames[f].push_back({subject_rect(scene, s, f), scene.subjects[s].label});
    return set;
}

void generate(const SceneSpec& scene, const std::filesystem::path& out_dir) {
    validate(scene);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
    for (std::size_t f = 0; f < static_cast<std::size_t>(scene.frames); ++f) {
        write_frame(out_dir, "color", f, "ppm", render_color(scene, f),
                    [](const ColorFrame& c, const std::filesystem::path& p) { save_color(c, p); });
        write_frame(out_dir, "depth", f, "pgm", render_depth(scene, f),
                    [](const DepthFrame& d, const std::filesystem::path& p) { save_depth(d, p); });
    }
    save_calibration(scene.calibration, out_dir / "calib.txt");
    save_annotations(annotations(scene), out_dir / "annotations.csv");
}

SceneSpec parse_scene(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) bad_spec("expected key = value in '" + body + "'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (!kv.emplace(key, trim(std::string_view(body).substr(eq + 1))).second) bad_spec("duplicate key '" + key + "'");
    }

    SceneSpec scene;
    std::set<std::string> used;
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        used.insert(key);
        return it->second;
    };
    auto take_int = [&](const std::string& key, auto& slot) {
        using T = std::remove_reference_t<decltype(slot)>;
        if (auto v = take(key)) {
            const long n = to_long(key, *v);
            if (n < static_cast<long>(std::numeric_limits<T>::min()) || n > static_cast<long>(std::numeric_limits<T>::max()))
                bad_spec("'" + key + "' is out of range");
            slot = static_cast<T>(n);
        }
    };

    take_int("frames", scene.frames);
    if (scene.frames < 1) bad_spec("frames must be >= 1");
    take_int("color.width", scene.color_width);
    take_int("color.height", scene.color_height);
    take_int("depth.width", scene.depth_width);
    take_int("depth.height", scene.depth_height);
    take_int("background.depth", scene.background_depth);
    take_int("background.seed", scene.background_seed);
    if (auto v = take("illumination")) {
        if (*v == "on") scene.illumination = true;
        else if (*v == "off") scene.illumination = false;
        else bad_spec("illumination must be on or off");
    }
    take_int("illumination.slope", scene.illumination_slope);
    take_int("jitter.amplitude", scene.jitter_amplitude);
    take_int("jitter.seed", scene.jitter_seed);

    std::string calib_text;
    for (const auto& [key, value] : kv)
        if (key.rfind("calib.", 0) == 0) {
            calib_text += key.substr(6) + " = " + value + "\n";
            used.insert(key);
        }
    if (!calib_text.empty()) {
        scene.calibration = parse_calibration(calib_text);
    } else {
        scene.calibration = CalibrationPair::identity(
            {525.0, 525.0, scene.depth_width / 2.0, scene.depth_height / 2.0});
    }

    for (int s = 0;; ++s) {
        const std::string prefix = "subject." + std::to_string(s) + ".";
        auto label = take(prefix + "label");
        if (!label) break;
        SubjectSpec subj;
        subj.label = *label;
        take_int(prefix + "texture_seed", subj.texture_seed);
        take_int(prefix + "relief_seed", subj.relief_seed);
        take_int(prefix + "size", subj.size);
        take_int(prefix + "distance", subj.distance);
        take_int(prefix + "relief", subj.relief_amplitude);
        const auto path = take(prefix + "path");
        if (!path) bad_spec(prefix + "path is required");
        scene.subjects.push_back(subj);
        scene.paths.push_back(make_path(prefix + "path", *path, scene.frames, subj.size, scene.color_width,
                                        scene.color_height));
    }
    for (const auto& [key, _] : kv)
        if (!used.count(key)) bad_spec("unknown key '" + key + "'");
    validate(scene);
    return scene;
}

SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

}  // namespace facekit::synth
