#include "facekit/features.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <thread>

namespace facekit {

namespace {

template <typename PlaneT>
LbpCodeMap lbp_map_impl(const PlaneT& roi) {
    if (roi.width < 3 || roi.height < 3) throw Error(ErrorCode::InvalidArgument, "LBP needs an ROI of at least 3x3");
    LbpCodeMap map{roi.width - 2, roi.height - 2, {}};
    map.codes.resize(static_cast<std::size_t>(map.width) * map.height);
    std::array<typename PlaneT::sample_type, 9> window{};
    for (int y = 1; y < roi.height - 1; ++y) {
        for (int x = 1; x < roi.width - 1; ++x) {
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) window[(dy + 1) * 3 + (dx + 1)] = roi.at(x + dx, y + dy);
            map.codes[static_cast<std::size_t>(y - 1) * map.width + (x - 1)] = lbp_code(window);
        }
    }
    return map;
}

void check_grid(const LbpParams& grid, int width, int height) {
    if (grid.grid_x < 1 || grid.grid_y < 1) throw Error(ErrorCode::InvalidArgument, "grid must be at least 1x1");
    if (grid.grid_x > width || grid.grid_y > height)
        throw Error(ErrorCode::InvalidArgument, "grid is larger than the code map");
}

std::vector<int> block_lookup(int length, int blocks) {
    std::vector<int> lut(static_cast<std::size_t>(length));
    for (int b = 0; b < blocks; ++b) {
        const long long lo = static_cast<long long>(b) * length / blocks;
        const long long hi = static_cast<long long>(b + 1) * length / blocks;
        for (long long i = lo; i < hi; ++i) lut[static_cast<std::size_t>(i)] = b;
    }
    return lut;
}

// Counts codes of interior rows [row_begin, row_end) (code-map coordinates)
// into `counts`, computing each code directly from the raster.
template <typename PlaneT>
void count_band(const PlaneT& roi, const LbpParams& grid, const std::vector<int>& col_block,
                const std::vector<int>& row_block, int row_begin, int row_end, std::vector<std::uint32_t>& counts) {
    const int w = roi.width;
    const auto* base = roi.data.data();
    for (int r = row_begin; r < row_end; ++r) {
        const auto* up = base + static_cast<std::size_t>(r) * w;
        const auto* mid = up + w;
        const auto* down = mid + w;
        std::uint32_t* row_bins = counts.data() + static_cast<std::size_t>(row_block[r]) * grid.grid_x * 256;
        for (int c = 0; c < w - 2; ++c) {
            const auto g = mid[c + 1];
            const unsigned code = (up[c] >= g ? 1u : 0u) | (up[c + 1] >= g ? 2u : 0u) | (up[c + 2] >= g ? 4u : 0u) |
                                  (mid[c + 2] >= g ? 8u : 0u) | (down[c + 2] >= g ? 16u : 0u) |
                                  (down[c + 1] >= g ? 32u : 0u) | (down[c] >= g ? 64u : 0u) |
                                  (mid[c] >= g ? 128u : 0u);
            ++row_bins[static_cast<std::size_t>(col_block[c]) * 256 + code];
        }
    }
}

template <typename PlaneT>
LbpHistogram extract_histogram_impl(const PlaneT& roi, const LbpParams& params, Engine engine) {
    if (roi.width < 3 || roi.height < 3) throw Error(ErrorCode::InvalidArgument, "LBP needs an ROI of at least 3x3");
    const int map_w = roi.width - 2;
    const int map_h = roi.height - 2;
    check_grid(params, map_w, map_h);
    // Serial is the reference composition; the banded path below is checked against it.
    if (engine.kind == Engine::Kind::Serial) return histogram(lbp_map_impl(roi), params);
    if (engine.workers < 1) throw Error(ErrorCode::InvalidArgument, "worker count must be >= 1");

    const auto col_block = block_lookup(map_w, params.grid_x);
    const auto row_block = block_lookup(map_h, params.grid_y);
    LbpHistogram hist{params, std::vector<std::uint32_t>(params.feature_length(), 0)};
    const int bands = std::min(engine.workers, map_h);
    std::vector<std::vector<std::uint32_t>> partial(static_cast<std::size_t>(bands),
                                                    std::vector<std::uint32_t>(hist.bins.size(), 0));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(bands));
        for (int b = 0; b < bands; ++b) {
            const int begin = static_cast<int>(static_cast<long long>(b) * map_h / bands);
            const int end = static_cast<int>(static_cast<long long>(b + 1) * map_h / bands);
            pool.emplace_back([&, b, begin, end] {
                count_band(roi, params, col_block, row_block, begin, end, partial[static_cast<std::size_t>(b)]);
            });
        }
    }
    for (const auto& p : partial)
        std::transform(hist.bins.begin(), hist.bins.end(), p.begin(), hist.bins.begin(), std::plus<>());
    return hist;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LbpCodeMap lbp_map(const GrayFrame& roi) { return lbp_map_impl(roi); }
LbpCodeMap lbp_map(const DepthFrame& roi) { return lbp_map_impl(roi); }

std::uint64_t LbpHistogram::total() const { return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0}); }

std::uint64_t LbpHistogram::block_total(int block) const {
    const auto first = bins.begin() + static_cast<std::ptrdiff_t>(block) * 256;
    return std::accumulate(first, first + 256, std::uint64_t{0});
}

LbpHistogram histogram(const LbpCodeMap& map, const LbpParams& grid) {
    check_grid(grid, map.width, map.height);
    const auto col_block = block_lookup(map.width, grid.grid_x);
    const auto row_block = block_lookup(map.height, grid.grid_y);
    LbpHistogram h{grid, std::vector<std::uint32_t>(grid.feature_length(), 0)};
    for (int y = 0; y < map.height; ++y) {
        const std::size_t row_base = static_cast<std::size_t>(row_block[static_cast<std::size_t>(y)]) * grid.grid_x;
        for (int x = 0; x < map.width; ++x)
            ++h.bins[(row_base + static_cast<std::size_t>(col_block[static_cast<std::size_t>(x)])) * 256 + map.at(x, y)];
    }
    return h;
}

FeatureVector normalize(const LbpHistogram& h) {
    FeatureVector f{std::vector<double>(h.bins.size(), 0.0)};
    for (int b = 0; b < h.grid.block_count(); ++b) {
        const std::uint64_t sum = h.block_total(b);
        if (sum == 0) continue;
        const double total = static_cast<double>(sum);
        for (std::size_t i = 0; i < 256; ++i) {
            const std::size_t k = static_cast<std::size_t>(b) * 256 + i;
            f.values[k] = h.bins[k] / total;
        }
    }
    return f;
}

LbpHistogram extract_histogram(const GrayFrame& roi, const LbpParams& params, Engine engine) {
    return extract_histogram_impl(roi, params, engine);
}
LbpHistogram extract_histogram(const DepthFrame& roi, const LbpParams& params, Engine engine) {
    return extract_histogram_impl(roi, params, engine);
}

FeatureVector extract(const GrayFrame& roi, const LbpParams& params, Engine engine) {
    return normalize(extract_histogram(roi, params, engine));
}
FeatureVector extract(const DepthFrame& roi, const LbpParams& params, Engine engine) {
    return normalize(extract_histogram(roi, params, engine));
}

std::vector<BenchRow> bench_extract(const BenchOptions& options) {
    if (options.repetitions < 3) throw Error(ErrorCode::InvalidArgument, "benchmark needs at least 3 repetitions");
    auto parallel = options.parallel_extract;
    if (!parallel)
        parallel = [](const GrayFrame& roi, const LbpParams& p, Engine e) { return extract(roi, p, e); };

    using clock = std::chrono::steady_clock;
    auto time_ms = [&](auto&& fn) {
        std::vector<double> samples;
        for (int r = 0; r < options.repetitions; ++r) {
            const auto t0 = clock::now();
            fn();
            samples.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
        }
        return median(std::move(samples));
    };

    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<int> sample(0, 255);
    std::vector<GrayFrame> inputs;
    for (int size : options.sizes) {
        GrayFrame roi(size, size);
        for (auto& v : roi.data) v = static_cast<std::uint8_t>(sample(rng));
        inputs.push_back(std::move(roi));
    }

    // Gate: nothing is timed until every engine agrees with serial.
    for (const GrayFrame& roi : inputs) {
        const FeatureVector reference = extract(roi, options.params, Engine::serial());
        for (int w : options.workers)
            if (parallel(roi, options.params, Engine::parallel(w)) != reference)
                throw Error(ErrorCode::ConsistencyFailure,
                            "parallel extraction with " + std::to_string(w) + " workers differs from serial on " +
                                std::to_string(roi.width) + "x" + std::to_string(roi.height));
    }

    std::vector<BenchRow> rows;
    for (const GrayFrame& roi : inputs) {
        const double serial_ms = time_ms([&] { (void)extract(roi, options.params, Engine::serial()); });
        rows.push_back({roi.width, Engine::serial(), serial_ms, 1.0});
        for (int w : options.workers) {
            const double ms = time_ms([&] { (void)parallel(roi, options.params, Engine::parallel(w)); });
            rows.push_back({roi.width, Engine::parallel(w), ms, ms > 0.0 ? serial_ms / ms : 0.0});
        }
    }
    return rows;
}

}  // namespace facekit
