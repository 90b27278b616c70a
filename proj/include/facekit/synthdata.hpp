#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facekit/detection.hpp"
#include "facekit/imaging.hpp"
#include "facekit/registration.hpp"

namespace facekit::synth {

struct SubjectSpec {
    std::string label;
    std::uint32_t texture_seed = 1;
    std::uint32_t relief_seed = 2;
    int size = 64;                  // square patch side, pixels (>= 16)
    std::uint16_t distance = 1000;  // face plane, millimeters
    int relief_amplitude = 60;      // millimeters
};

struct SceneSpec {
    int frames = 30;
    int color_width = 320;
    int color_height = 240;
    int depth_width = 320;
    int depth_height = 240;
    std::uint16_t background_depth = 2000;
    std::uint32_t background_seed = 99;
    bool illumination = false;
    int illumination_slope = 2;  // gray levels per pixel, horizontal ramp across each subject
    int jitter_amplitude = 0;    // uniform depth noise, +/- millimeters
    std::uint32_t jitter_seed = 7;
    CalibrationPair calibration;
    std::vector<SubjectSpec> subjects;
    std::vector<std::vector<Pixel>> paths;  // per subject, one centre per frame
};

/// Throws InvalidArgument for inconsistent specs and for paths that take a
/// patch outside the color frame.
void validate(const SceneSpec& scene);

/// Plain-text "key = value" scene description; see README for the keys.
SceneSpec parse_scene(const std::string& text);
SceneSpec load_scene(const std::filesystem::path& path);

/// Color-space rect of subject `s` in frame `f`.
Rect subject_rect(const SceneSpec& scene, std::size_t s, std::size_t f);

ColorFrame render_color(const SceneSpec& scene, std::size_t frame);
DepthFrame render_depth(const SceneSpec& scene, std::size_t frame);
AnnotationSet annotations(const SceneSpec& scene);

/// Writes color_####.ppm, depth_####.pgm, calib.txt and annotations.csv.
void generate(const SceneSpec& scene, const std::filesystem::path& out_dir);

/// Deterministic value noise in [0,255] with the given lattice cell size.
std::uint8_t value_noise(std::uint32_t seed, int x, int y, int cell);

}  // namespace facekit::synth
