#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "facekit/imaging.hpp"

namespace facekit {

/// Block grid for the concatenated histogram. The operator itself is fixed
/// to 8 neighbours at radius 1.
struct LbpParams {
    int grid_x = 1;
    int grid_y = 1;

    int block_count() const { return grid_x * grid_y; }
    std::size_t feature_length() const { return static_cast<std::size_t>(block_count()) * 256; }

    friend bool operator==(const LbpParams&, const LbpParams&) = default;
};

/// Neighbour weights, row-major over the 3x3 window (centre weight unused):
///     1   2   4
///   128   .   8
///    64  32  16
inline constexpr std::array<std::uint8_t, 9> kLbpWeights = {1, 2, 4, 128, 0, 8, 64, 32, 16};

/// Row-major 3x3 window; neighbour p sets its bit when g_p >= g_c.
template <typename T>
std::uint8_t lbp_code(const std::array<T, 9>& window) {
    const T centre = window[4];
    unsigned code = 0;
    for (std::size_t i = 0; i < 9; ++i)
        if (i != 4 && window[i] >= centre) code |= kLbpWeights[i];
    return static_cast<std::uint8_t>(code);
}

struct LbpCodeMap {
    int width = 0;   // input width - 2
    int height = 0;  // input height - 2
    std::vector<std::uint8_t> codes;

    std::uint8_t at(int x, int y) const { return codes[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const LbpCodeMap&, const LbpCodeMap&) = default;
};

LbpCodeMap lbp_map(const GrayFrame& roi);
LbpCodeMap lbp_map(const DepthFrame& roi);

/// Kx*Ky concatenated 256-bin count blocks, blocks in row-major order.
struct LbpHistogram {
    LbpParams grid;
    std::vector<std::uint32_t> bins;

    std::uint64_t total() const;
    std::uint64_t block_total(int block) const;

    friend bool operator==(const LbpHistogram&, const LbpHistogram&) = default;
};

/// Block b along an axis of length n spans [floor(b*n/K), floor((b+1)*n/K)).
LbpHistogram histogram(const LbpCodeMap& map, const LbpParams& grid);

/// Per-block L1-normalized histogram.
struct FeatureVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

FeatureVector normalize(const LbpHistogram& h);

struct Engine {
    enum class Kind { Serial, Parallel };

    Kind kind = Kind::Serial;
    int workers = 1;

    static Engine serial() { return {}; }
    static Engine parallel(int workers) { return {Kind::Parallel, workers}; }
};

/// Histogram of the interior LBP codes. The parallel engine splits interior
/// rows into contiguous bands with private counts that are summed afterwards,
/// so the result is identical to the serial engine for any worker count.
LbpHistogram extract_histogram(const GrayFrame& roi, const LbpParams& params, Engine engine = Engine::serial());
LbpHistogram extract_histogram(const DepthFrame& roi, const LbpParams& params, Engine engine = Engine::serial());

FeatureVector extract(const GrayFrame& roi, const LbpParams& params, Engine engine = Engine::serial());
FeatureVector extract(const DepthFrame& roi, const LbpParams& params, Engine engine = Engine::serial());

struct BenchRow {
    int size = 0;  // square ROI side, pixels
    Engine engine;
    double median_ms = 0.0;
    double speedup_vs_serial = 1.0;
};

struct BenchOptions {
    std::vector<int> sizes{100, 200, 400};
    std::vector<int> workers{1, 2, 4, 8};
    int repetitions = 5;
    LbpParams params;
    std::uint64_t seed = 42;
    /// Override for the parallel path; tests use it to inject a faulty engine.
    std::function<FeatureVector(const GrayFrame&, const LbpParams&, Engine)> parallel_extract;
};

/// Times serial and parallel extraction on seeded random ROIs. Every
/// parallel result is compared with serial before timing; a mismatch throws
/// ConsistencyFailure and no rows are returned.
std::vector<BenchRow> bench_extract(const BenchOptions& options);

}  // namespace facekit
