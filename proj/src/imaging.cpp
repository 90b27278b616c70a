#include "facekit/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace facekit {

bool clamp_rect(const Rect& r, int width, int height, Rect& out) {
    const int x0 = std::max(r.x, 0);
    const int y0 = std::max(r.y, 0);
    const int x1 = std::min(r.right(), width);
    const int y1 = std::min(r.bottom(), height);
    if (x1 <= x0 || y1 <= y0) return false;
    out = Rect{x0, y0, x1 - x0, y1 - y0};
    return true;
}

ColorFrame::ColorFrame(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw Error(ErrorCode::InvalidArgument, "raster dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

ColorFrame::ColorFrame(int w, int h, std::vector<std::uint8_t> rgb) : ColorFrame(w, h) {
    if (rgb.size() != data.size())
        throw Error(ErrorCode::DimensionMismatch, "sample count does not match dimensions");
    data = std::move(rgb);
}

namespace {

struct NetpbmHeader {
    int width = 0;
    int height = 0;
    long maxval = 0;
    std::size_t payload_offset = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::uint8_t>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

class HeaderReader {
public:
    HeaderReader(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
        : bytes_(bytes), path_(path) {}

    std::string magic() {
        if (bytes_.size() < 2) fail("missing magic");
        pos_ = 2;
        return {static_cast<char>(bytes_[0]), static_cast<char>(bytes_[1])};
    }

    long number() {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > std::numeric_limits<int>::max()) fail("header value out of range");
            ++pos_;
            ++digits;
        }
        if (digits == 0) fail("expected a decimal number");
        return value;
    }

    // Exactly one whitespace byte separates maxval from the payload.
    std::size_t payload_start() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing separator before payload");
        return pos_ + 1;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::MalformedHeader, path_.string() + ": " + why);
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

NetpbmHeader parse_header(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path,
                          const char* expected_magic, long required_maxval) {
    HeaderReader reader(bytes, path);
    if (reader.magic() != expected_magic) reader.fail(std::string("expected magic ") + expected_magic);
    NetpbmHeader h;
    h.width = static_cast<int>(reader.number());
    h.height = static_cast<int>(reader.number());
    h.maxval = reader.number();
    if (h.width < 1 || h.height < 1) reader.fail("zero dimension");
    if (h.maxval < 1 || h.maxval > 65535) reader.fail("maxval out of range");
    h.payload_offset = reader.payload_start();
    if (h.maxval != required_maxval)
        throw Error(ErrorCode::UnsupportedMaxval,
                    path.string() + ": maxval " + std::to_string(h.maxval) + " (need " +
                        std::to_string(required_maxval) + ")");
    return h;
}

void require_payload(const std::vector<std::uint8_t>& bytes, const NetpbmHeader& h, std::size_t needed,
                     const std::filesystem::path& path) {
    if (bytes.size() - h.payload_offset < needed)
        throw Error(ErrorCode::Truncated, path.string() + ": expected " + std::to_string(needed) +
                                              " payload bytes, found " +
                                              std::to_string(bytes.size() - h.payload_offset));
}

template <typename PlaneT>
PlaneT crop_plane(const PlaneT& frame, const Rect& r) {
    Rect c;
    if (!clamp_rect(r, frame.width, frame.height, c))
        throw Error(ErrorCode::EmptyIntersection, "crop rectangle does not intersect the frame");
    PlaneT out(c.w, c.h);
    for (int y = 0; y < c.h; ++y) {
        const auto* src = &frame.at(c.x, c.y + y);
        std::copy(src, src + c.w, &out.at(0, y));
    }
    return out;
}

void require_output_dims(int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1x1");
}

// Index of the source sample nearest to the centre of output sample `i`.
// Centre in source units is (2i+1)*in/(2*out); an exact boundary k belongs
// equally to samples k-1 and k and resolves to k-1.
int nearest_index(int i, int in, int out) {
    const long long num = (2LL * i + 1) * in;
    const long long den = 2LL * out;
    const long long idx = (num + den - 1) / den - 1;
    return static_cast<int>(std::clamp<long long>(idx, 0, in - 1));
}

}  // namespace

ColorFrame load_color(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto h = parse_header(bytes, path, "P6", 255);
    const std::size_t needed = static_cast<std::size_t>(h.width) * h.height * 3;
    require_payload(bytes, h, needed, path);
    const auto first = bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset);
    return ColorFrame(h.width, h.height, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(needed)));
}

DepthFrame load_depth(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto h = parse_header(bytes, path, "P5", 65535);
    const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
    require_payload(bytes, h, count * 2, path);
    std::vector<std::uint16_t> samples(count);
    const std::uint8_t* p = bytes.data() + h.payload_offset;
    for (std::size_t i = 0; i < count; ++i)
        samples[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    return DepthFrame(h.width, h.height, std::move(samples));
}

void save_color(const ColorFrame& frame, const std::filesystem::path& path) {
    const std::string header =
        "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    write_file(path, header, frame.data);
}

void save_depth(const DepthFrame& frame, const std::filesystem::path& path) {
    const std::string header =
        "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n65535\n";
    std::vector<std::uint8_t> payload(frame.data.size() * 2);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        payload[2 * i] = static_cast<std::uint8_t>(frame.data[i] >> 8);
        payload[2 * i + 1] = static_cast<std::uint8_t>(frame.data[i] & 0xff);
    }
    write_file(path, header, payload);
}

GrayFrame to_gray(const ColorFrame& frame) {
    GrayFrame out(frame.width, frame.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const std::uint8_t* px = &frame.data[i * 3];
        const unsigned luma = (299u * px[0] + 587u * px[1] + 114u * px[2] + 500u) / 1000u;
        out.data[i] = static_cast<std::uint8_t>(luma);
    }
    return out;
}

GrayFrame crop(const GrayFrame& frame, const Rect& r) { return crop_plane(frame, r); }
DepthFrame crop(const DepthFrame& frame, const Rect& r) { return crop_plane(frame, r); }

GrayFrame resize(const GrayFrame& frame, int out_w, int out_h) {
    require_output_dims(out_w, out_h);
    if (out_w == frame.width && out_h == frame.height) return frame;

    // Source positions are exact rationals n / (2*out), so the blend and the
    // round-half-up are done in integers.
    struct Tap {
        int i0, i1;
        std::int64_t f, d;
    };
    auto taps = [](int out, int in) {
        std::vector<Tap> t(static_cast<std::size_t>(out));
        const std::int64_t d = 2 * static_cast<std::int64_t>(out);
        for (int i = 0; i < out; ++i) {
            std::int64_t n = (2 * static_cast<std::int64_t>(i) + 1) * in - out;
            n = std::clamp<std::int64_t>(n, 0, (in - 1) * d);
            const int i0 = static_cast<int>(n / d);
            t[static_cast<std::size_t>(i)] = {i0, std::min(i0 + 1, in - 1), n - i0 * d, d};
        }
        return t;
    };
    const auto tx = taps(out_w, frame.width);
    const auto ty = taps(out_h, frame.height);

    GrayFrame out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const Tap& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& vx = tx[static_cast<std::size_t>(x)];
            const std::int64_t top = frame.at(vx.i0, vy.i0) * (vx.d - vx.f) + frame.at(vx.i1, vy.i0) * vx.f;
            const std::int64_t bot = frame.at(vx.i0, vy.i1) * (vx.d - vx.f) + frame.at(vx.i1, vy.i1) * vx.f;
            const std::int64_t den = vx.d * vy.d;
            const std::int64_t num = top * (vy.d - vy.f) + bot * vy.f;
            out.at(x, y) = static_cast<std::uint8_t>((num + den / 2) / den);
        }
    }
    return out;
}

DepthFrame resize(const DepthFrame& frame, int out_w, int out_h) {
    require_output_dims(out_w, out_h);
    if (out_w == frame.width && out_h == frame.height) return frame;
    std::vector<int> xs(static_cast<std::size_t>(out_w));
    for (int x = 0; x < out_w; ++x) xs[static_cast<std::size_t>(x)] = nearest_index(x, frame.width, out_w);
    DepthFrame out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const int sy = nearest_index(y, frame.height, out_h);
        for (int x = 0; x < out_w; ++x) out.at(x, y) = frame.at(xs[static_cast<std::size_t>(x)], sy);
    }
    return out;
}

}  // namespace facekit
