#include "facekit/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

namespace facekit {

namespace {

constexpr const char* kModelMagic = "rgbd-facekit-model";
constexpr const char* kModelVersion = "v1";

// splitmix64; the shuffle is spelled out so visit order does not depend on
// the standard library's distribution implementations.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

void shuffle(std::vector<std::size_t>& order, SplitMix64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_samples(const std::vector<FeatureVector>& samples, std::size_t dim) {
    for (const FeatureVector& x : samples) {
        if (x.size() != dim) throw Error(ErrorCode::DimensionMismatch, "training samples have different lengths");
        for (double v : x.values)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "training sample contains a non-finite value");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class ModelReader {
public:
    explicit ModelReader(const std::string& text) : in_(text) {}

    std::string line(const char* what) {
        std::string l;
        if (!std::getline(in_, l)) corrupt(std::string("missing ") + what);
        return l;
    }

    std::vector<std::string> fields(const char* what) {
        std::istringstream ls(line(what));
        std::vector<std::string> out;
        for (std::string tok; ls >> tok;) out.push_back(tok);
        return out;
    }

    template <typename T>
    static T number(const std::string& s, const char* what) {
        T v{};
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) corrupt(std::string("bad ") + what);
        return v;
    }

    bool at_end() {
        std::string rest;
        while (std::getline(in_, rest))
            if (!rest.empty()) return false;
        return true;
    }

    [[noreturn]] static void corrupt(const std::string& why) { throw Error(ErrorCode::CorruptedPayload, why); }

private:
    std::istringstream in_;
};

}  // namespace

void validate(const TrainConfig& cfg) {
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
    if (cfg.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
}

double LinearSvm::decision(const std::vector<double>& x) const { return dot(w, x) + b; }

double svm_objective(const LinearSvm& svm, const std::vector<FeatureVector>& positives,
                     const std::vector<FeatureVector>& negatives) {
    double loss = 0.0;
    for (const auto& x : positives) loss += std::max(0.0, 1.0 - svm.decision(x.values));
    for (const auto& x : negatives) loss += std::max(0.0, 1.0 + svm.decision(x.values));
    const double n = static_cast<double>(positives.size() + negatives.size());
    return 0.5 * svm.lambda * dot(svm.w, svm.w) + loss / n;
}

LinearSvm train_binary(const std::vector<FeatureVector>& positives, const std::vector<FeatureVector>& negatives,
                       const TrainConfig& cfg) {
    validate(cfg);
    if (positives.empty() || negatives.empty())
        throw Error(ErrorCode::EmptyInput, "each class needs at least one sample");
    const std::size_t dim = positives.front().size();
    check_samples(positives, dim);
    check_samples(negatives, dim);

    std::vector<const FeatureVector*> xs;
    std::vector<double> ys;
    for (const auto& x : positives) xs.push_back(&x), ys.push_back(+1.0);
    for (const auto& x : negatives) xs.push_back(&x), ys.push_back(-1.0);

    // The bias rides along as a weight on a constant-1 input, so it shrinks
    // with the same 1/t schedule as w.
    LinearSvm svm{std::vector<double>(dim, 0.0), 0.0, cfg.lambda};
    LinearSvm average = svm;  // uniform average of all iterates so far
    LinearSvm best = svm;
    double best_objective = svm_objective(svm, positives, negatives);
    const double radius2 = 1.0 / cfg.lambda;

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng{cfg.seed};
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
            const auto& x = xs[i]->values;
            const double y = ys[i];
            const double margin = y * svm.decision(x);
            const double shrink = 1.0 - eta * cfg.lambda;
            for (double& wj : svm.w) wj *= shrink;
            svm.b *= shrink;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) svm.w[j] += eta * y * x[j];
                svm.b += eta * y;
            }
            const double norm2 = dot(svm.w, svm.w) + svm.b * svm.b;
            if (norm2 > radius2) {
                const double scale = std::sqrt(radius2 / norm2);
                for (double& wj : svm.w) wj *= scale;
                svm.b *= scale;
            }
            const double k = 1.0 / static_cast<double>(t);
            for (std::size_t j = 0; j < dim; ++j) average.w[j] += (svm.w[j] - average.w[j]) * k;
            average.b += (svm.b - average.b) * k;
        }
        for (const LinearSvm* candidate : {&svm, &average}) {
            const double objective = svm_objective(*candidate, positives, negatives);
            if (objective < best_objective) {
                best_objective = objective;
                best = *candidate;
            }
        }
    }
    return best;
}

OvrModel train_ovr(const SampleDatabase& database, const LbpParams& grid, const TrainConfig& cfg) {
    validate(cfg);
    if (database.size() < 2) throw Error(ErrorCode::EmptyInput, "one-vs-rest training needs at least 2 labels");
    for (const auto& [label, samples] : database)
        if (samples.empty()) throw Error(ErrorCode::EmptyInput, "label '" + label + "' has no samples");

    OvrModel model;
    model.grid = grid;
    model.feature_length = database.begin()->second.front().size();

    std::vector<std::future<LinearSvm>> jobs;
    for (const auto& [label, positives] : database) {
        model.labels.push_back(label);
        jobs.push_back(std::async(std::launch::async, [&, label = label] {
            std::vector<FeatureVector> negatives;
            for (const auto& [other, samples] : database)
                if (other != label) negatives.insert(negatives.end(), samples.begin(), samples.end());
            return train_binary(database.at(label), negatives, cfg);
        }));
    }
    for (auto& job : jobs) model.machines.push_back(job.get());
    return model;
}

Prediction predict(const OvrModel& model, const FeatureVector& x, double reject_threshold) {
    if (x.size() != model.feature_length)
        throw Error(ErrorCode::DimensionMismatch, "feature length " + std::to_string(x.size()) +
                                                      " does not match model length " +
                                                      std::to_string(model.feature_length));
    if (model.machines.empty()) throw Error(ErrorCode::EmptyInput, "model has no machines");
    std::size_t best = 0;
    double best_score = model.machines[0].decision(x.values);
    for (std::size_t i = 1; i < model.machines.size(); ++i) {
        const double s = model.machines[i].decision(x.values);
        if (s > best_score) best = i, best_score = s;
    }
    if (best_score < reject_threshold || std::isnan(best_score)) return {kUnknownLabel, best_score};
    return {model.labels[best], best_score};
}

std::string serialize_model(const OvrModel& model) {
    std::ostringstream out;
    out << kModelMagic << ' ' << kModelVersion << '\n';
    out << "grid " << model.grid.grid_x << ' ' << model.grid.grid_y << '\n';
    out << "feature_length " << model.feature_length << '\n';
    out << "classes " << model.labels.size() << '\n';
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        const std::string& label = model.labels[i];
        if (label.empty() || label.find_first_of("\r\n") != std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "labels must be non-empty single-line strings");
        const LinearSvm& m = model.machines[i];
        out << label << '\n';
        out << format_double(m.b) << ' ' << format_double(m.lambda) << '\n';
        for (std::size_t j = 0; j < m.w.size(); ++j) out << (j ? " " : "") << format_double(m.w[j]);
        out << '\n';
    }
    out << "end\n";
    return out.str();
}

OvrModel deserialize_model(const std::string& text) {
    ModelReader r(text);
    const auto header = r.fields("header");
    if (header.size() != 2 || header[0] != kModelMagic) ModelReader::corrupt("not a model file");
    if (header[1] != kModelVersion)
        throw Error(ErrorCode::VersionMismatch, "model version '" + header[1] + "', expected " + kModelVersion);

    OvrModel model;
    const auto grid = r.fields("grid");
    if (grid.size() != 3 || grid[0] != "grid") ModelReader::corrupt("bad grid line");
    model.grid = {ModelReader::number<int>(grid[1], "grid"), ModelReader::number<int>(grid[2], "grid")};
    const auto length = r.fields("feature_length");
    if (length.size() != 2 || length[0] != "feature_length") ModelReader::corrupt("bad feature_length line");
    model.feature_length = ModelReader::number<std::size_t>(length[1], "feature_length");
    const auto classes = r.fields("classes");
    if (classes.size() != 2 || classes[0] != "classes") ModelReader::corrupt("bad classes line");
    const auto count = ModelReader::number<std::size_t>(classes[1], "classes");
    if (model.grid.grid_x < 1 || model.grid.grid_y < 1 || model.feature_length != model.grid.feature_length())
        ModelReader::corrupt("grid and feature_length disagree");

    for (std::size_t i = 0; i < count; ++i) {
        std::string label = r.line("label");
        if (label.empty()) ModelReader::corrupt("empty label");
        const auto bias = r.fields("bias");
        if (bias.size() != 2) ModelReader::corrupt("bad bias line");
        LinearSvm m;
        m.b = ModelReader::number<double>(bias[0], "bias");
        m.lambda = ModelReader::number<double>(bias[1], "lambda");
        const auto weights = r.fields("weights");
        if (weights.size() != model.feature_length) ModelReader::corrupt("weight count does not match feature_length");
        m.w.reserve(weights.size());
        for (const auto& w : weights) m.w.push_back(ModelReader::number<double>(w, "weight"));
        if (!model.labels.empty() && !(model.labels.back() < label))
            ModelReader::corrupt("labels are not unique and sorted");
        model.labels.push_back(std::move(label));
        model.machines.push_back(std::move(m));
    }
    if (r.line("end marker") != "end") ModelReader::corrupt("missing end marker");
    if (!r.at_end()) ModelReader::corrupt("trailing data after end marker");
    return model;
}

void save_model(const OvrModel& model, const std::filesystem::path& path) {
    const std::string text = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

OvrModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace facekit
