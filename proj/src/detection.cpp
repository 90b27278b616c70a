#include "facekit/detection.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace facekit {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

long parse_int(const std::string& s, int line_no) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::MalformedRow, "annotations line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    return v;
}

}  // namespace

std::size_t AnnotationSet::row_count() const {
    std::size_t n = 0;
    for (const auto& [_, rows] : frames) n += rows.size();
    return n;
}

AnnotationSet parse_annotations(const std::string& text) {
    AnnotationSet set;
    std::set<std::size_t> closed;
    std::optional<std::size_t> open;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && (line == "frame,x,y,w,h,label" || line == "frame,x,y,w,h")) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5 && cells.size() != 6)
            throw Error(ErrorCode::MalformedRow, "annotations line " + std::to_string(line_no) + ": expected 5 or 6 columns");
        const long frame = parse_int(cells[0], line_no);
        const long x = parse_int(cells[1], line_no);
        const long y = parse_int(cells[2], line_no);
        const long w = parse_int(cells[3], line_no);
        const long h = parse_int(cells[4], line_no);
        if (frame < 0)
            throw Error(ErrorCode::MalformedRow, "annotations line " + std::to_string(line_no) + ": negative frame index");
        if (w <= 0 || h <= 0)
            throw Error(ErrorCode::MalformedRow,
                        "annotations line " + std::to_string(line_no) + ": negative or zero dimension");
        const auto index = static_cast<std::size_t>(frame);
        if (open != index) {
            if (closed.count(index))
                throw Error(ErrorCode::MalformedRow,
                            "annotations line " + std::to_string(line_no) + ": rows for frame " +
                                std::to_string(index) + " are not contiguous");
            if (open) closed.insert(*open);
            open = index;
        }
        Annotation a{Rect{static_cast<int>(x), static_cast<int>(y), static_cast<int>(w), static_cast<int>(h)},
                     std::nullopt};
        if (cells.size() == 6 && !cells[5].empty()) a.label = cells[5];
        set.frames[index].push_back(std::move(a));
    }
    return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_annotations(buf.str());
}

std::string format_annotations(const AnnotationSet& set) {
    std::ostringstream out;
    out << "frame,x,y,w,h,label\n";
    for (const auto& [frame, rows] : set.frames) {
        for (const Annotation& a : rows) {
            out << frame << ',' << a.rect.x << ',' << a.rect.y << ',' << a.rect.w << ',' << a.rect.h;
            if (a.label) out << ',' << *a.label;
            out << '\n';
        }
    }
    return out.str();
}

void save_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << format_annotations(set);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<Detection> AnnotationDetector::detect(std::size_t frame_index, const ColorFrame& frame) const {
    return facekit::detect(frame_index, frame, source_);
}

std::vector<Detection> detect(std::size_t frame_index, const ColorFrame& frame, const AnnotationSet& source) {
    std::vector<Detection> out;
    const auto it = source.frames.find(frame_index);
    if (it == source.frames.end()) return out;
    for (const Annotation& a : it->second) {
        Rect clamped;
        if (!clamp_rect(a.rect, frame.width, frame.height, clamped)) continue;
        out.push_back(Detection{clamped, frame_index, 1.0, a.label});
    }
    return out;
}

}  // namespace facekit
