#pragma once

#include "skelsc/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace skelsc {

/// One action sample: T frames, each the stacked 3D positions of J joints.
///
/// Frames are stored as rows of a T x 3J matrix; row t holds
/// (x_0, y_0, z_0, x_1, ...) at timestamp t.
class SkeletonSequence {
public:
    SkeletonSequence() = default;

    SkeletonSequence(Index joints, Matrix frames) : joints_(joints), frames_(std::move(frames)) {
        if (joints_ < 1) throw ParameterError("SkeletonSequence: joints must be positive");
        if (frames_.rows() < 1) throw ParameterError("SkeletonSequence: at least one frame required");
        if (frames_.cols() != 3 * joints_)
            throw ParameterError("SkeletonSequence: frame width " + std::to_string(frames_.cols()) +
                                 " does not match 3*J = " + std::to_string(3 * joints_));
        if (!frames_.allFinite()) throw ParameterError("SkeletonSequence: non-finite position");
    }

    Index joints() const { return joints_; }
    Index timestamps() const { return frames_.rows(); }
    Index frame_dim() const { return frames_.cols(); }
    const Matrix& frames() const { return frames_; }
    auto frame(Index t) const { return frames_.row(t); }

    bool operator==(const SkeletonSequence& other) const {
        return joints_ == other.joints_ && frames_.rows() == other.frames_.rows() &&
               frames_.cols() == other.frames_.cols() && frames_ == other.frames_;
    }

private:
    Index joints_ = 0;
    Matrix frames_;
};

/// Ordered samples plus optional ground truth.
///
/// Labels are only for evaluation; pipeline stages operate on `samples`
/// and never look at `labels`.
struct Dataset {
    std::vector<SkeletonSequence> samples;
    std::optional<std::vector<int>> labels;
    int num_classes = 1;

    std::size_t size() const { return samples.size(); }

    Dataset without_labels() const {
        Dataset d;
        d.samples = samples;
        d.num_classes = num_classes;
        return d;
    }

    void validate() const {
        if (num_classes < 1) throw ParameterError("Dataset: num_classes must be positive");
        if (!labels) return;
        if (labels->size() != samples.size())
            throw ParameterError("Dataset: labels and samples differ in length");
        for (int l : *labels)
            if (l < 0 || l >= num_classes)
                throw ParameterError("Dataset: label " + std::to_string(l) + " outside [0, num_classes)");
    }

    Index min_length() const {
        Index m = samples.front().timestamps();
        for (const auto& s : samples) m = std::min(m, s.timestamps());
        return m;
    }

    Index max_length() const {
        Index m = 0;
        for (const auto& s : samples) m = std::max(m, s.timestamps());
        return m;
    }

    bool operator==(const Dataset& other) const = default;
};

struct SyntheticSpec {
    int num_classes = 3;
    int samples_per_class = 20;
    int joints = 6;
    int mean_duration = 40;
    int duration_jitter = 8;
    double noise_std = 0.01;
    // Maximum random phase offset of a sample along its class template,
    // as a fraction of the template period.
    double time_warp = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (num_classes < 1 || samples_per_class < 1 || joints < 1 || mean_duration < 1)
            throw ParameterError("SyntheticSpec: counts must be positive");
        if (duration_jitter < 0 || noise_std < 0 || time_warp < 0)
            throw ParameterError("SyntheticSpec: jitter, noise_std and time_warp must be non-negative");
    }
};

enum class DatasetFormat { json, csv };

/// Replace absolute joint positions by displacements from `root_joint`,
/// dropping the root itself. Output has J-1 joints.
inline SkeletonSequence to_relative_displacements(const SkeletonSequence& seq, Index root_joint = 0) {
    const Index J = seq.joints();
    if (J < 2) throw ParameterError("to_relative_displacements: no non-root joints");
    if (root_joint < 0 || root_joint >= J)
        throw ParameterError("to_relative_displacements: root joint " + std::to_string(root_joint) +
                             " out of range");
    const Index T = seq.timestamps();
    Matrix out(T, 3 * (J - 1));
    for (Index t = 0; t < T; ++t) {
        const auto root = seq.frames().row(t).segment<3>(3 * root_joint);
        Index k = 0;
        for (Index j = 0; j < J; ++j) {
            if (j == root_joint) continue;
            out.row(t).segment<3>(3 * k) = seq.frames().row(t).segment<3>(3 * j) - root;
            ++k;
        }
    }
    return {J - 1, std::move(out)};
}

inline Dataset to_relative_displacements(const Dataset& data, Index root_joint = 0) {
    Dataset out;
    out.samples.reserve(data.size());
    for (const auto& s : data.samples) out.samples.push_back(to_relative_displacements(s, root_joint));
    out.labels = data.labels;
    out.num_classes = data.num_classes;
    return out;
}

/// Deterministic synthetic action dataset.
///
/// Each class owns a smooth periodic template per coordinate (random Fourier
/// series, amplitude decaying as 1/h). A sample evaluates its class template
/// on a jittered duration, optionally offset in phase and mildly warped, then
/// adds a random global translation (removed by root-relative preprocessing)
/// and i.i.d. Gaussian noise.
inline Dataset generate_synthetic_dataset(const SyntheticSpec& spec) {
    spec.validate();
    constexpr int harmonics = 3;
    const Index dim = 3 * static_cast<Index>(spec.joints);
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Template {
        Vector offset;
        Matrix cos_coef, sin_coef;  // dim x harmonics
    };
    std::vector<Template> templates;
    for (int c = 0; c < spec.num_classes; ++c) {
        Template tpl{Vector(dim), Matrix(dim, harmonics), Matrix(dim, harmonics)};
        for (Index i = 0; i < dim; ++i) {
            tpl.offset(i) = gauss(rng);
            for (int h = 0; h < harmonics; ++h) {
                tpl.cos_coef(i, h) = gauss(rng) / (h + 1);
                tpl.sin_coef(i, h) = gauss(rng) / (h + 1);
            }
        }
        templates.push_back(std::move(tpl));
    }

    Dataset data;
    data.num_classes = spec.num_classes;
    data.labels.emplace();
    const double warp_strength =
        spec.mean_duration > 0 ? static_cast<double>(spec.duration_jitter) / spec.mean_duration : 0.0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int s = 0; s < spec.samples_per_class; ++s) {
            std::uniform_int_distribution<int> dur(-spec.duration_jitter, spec.duration_jitter);
            const int T = std::max(2, spec.mean_duration + dur(rng));
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            const double phase = spec.time_warp * unit(rng);
            const double warp = 0.5 * warp_strength * unit(rng);
            Eigen::Vector3d shift(gauss(rng), gauss(rng), gauss(rng));

            const Template& tpl = templates[static_cast<std::size_t>(c)];
            Matrix frames(T, dim);
            for (int t = 0; t < T; ++t) {
                const double u0 = (T > 1) ? static_cast<double>(t) / (T - 1) : 0.0;
                const double u = u0 + warp * std::sin(std::numbers::pi * u0) / std::numbers::pi + phase;
                for (Index i = 0; i < dim; ++i) {
                    double v = tpl.offset(i);
                    for (int h = 0; h < harmonics; ++h) {
                        const double arg = 2.0 * std::numbers::pi * (h + 1) * u;
                        v += tpl.cos_coef(i, h) * std::cos(arg) + tpl.sin_coef(i, h) * std::sin(arg);
                    }
                    frames(t, i) = v + shift(i % 3);
                }
            }
            if (spec.noise_std > 0)
                for (Index k = 0; k < frames.size(); ++k) frames.data()[k] += spec.noise_std * gauss(rng);
            data.samples.emplace_back(spec.joints, std::move(frames));
            data.labels->push_back(c);
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t sample, std::string_view field, const std::string& what) {
    throw ParseError("sample " + std::to_string(sample) + ": field '" + std::string(field) + "': " + what);
}

inline Dataset finalize_labels(std::vector<SkeletonSequence> samples, std::vector<std::optional<int>> raw,
                               std::optional<int> declared_classes) {
    if (samples.empty()) throw ParseError("empty dataset");
    Dataset d;
    d.samples = std::move(samples);
    const bool any = std::any_of(raw.begin(), raw.end(), [](auto& l) { return l.has_value(); });
    const bool all = std::all_of(raw.begin(), raw.end(), [](auto& l) { return l.has_value(); });
    if (any && !all) {
        const auto it = std::find_if(raw.begin(), raw.end(), [](auto& l) { return !l.has_value(); });
        parse_fail(static_cast<std::size_t>(it - raw.begin()), "label", "labels must be all present or all null");
    }
    int max_label = -1;
    if (all) {
        d.labels.emplace();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (*raw[i] < 0) parse_fail(i, "label", "negative label");
            d.labels->push_back(*raw[i]);
            max_label = std::max(max_label, *raw[i]);
        }
    }
    d.num_classes = declared_classes.value_or(std::max(1, max_label + 1));
    if (d.num_classes <= max_label) throw ParseError("num_classes smaller than largest label");
    d.validate();
    return d;
}

}  // namespace detail

inline Dataset dataset_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("joints") || !doc["joints"].is_number_integer())
        throw ParseError("dataset: missing integer 'joints' header");
    const Index J = doc["joints"].get<Index>();
    if (J < 1) throw ParseError("dataset: 'joints' must be positive");
    if (!doc.contains("samples") || !doc["samples"].is_array()) throw ParseError("dataset: missing 'samples' array");
    std::optional<int> declared;
    if (doc.contains("num_classes")) declared = doc["num_classes"].get<int>();

    std::vector<SkeletonSequence> samples;
    std::vector<std::optional<int>> labels;
    const auto& arr = doc["samples"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& rec = arr[i];
        if (!rec.is_object()) detail::parse_fail(i, "record", "not an object");
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_number_integer()) detail::parse_fail(i, "label", "not an integer");
            labels.emplace_back(rec["label"].get<int>());
        } else {
            labels.emplace_back(std::nullopt);
        }
        if (!rec.contains("frames") || !rec["frames"].is_array() || rec["frames"].empty())
            detail::parse_fail(i, "frames", "missing or empty");
        const auto& frames = rec["frames"];
        Matrix m(static_cast<Index>(frames.size()), 3 * J);
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const auto& f = frames[t];
            if (!f.is_array() || static_cast<Index>(f.size()) != 3 * J)
                detail::parse_fail(i, "frames", "frame " + std::to_string(t) + " has " +
                                                    std::to_string(f.is_array() ? f.size() : 0) +
                                                    " entries, expected " + std::to_string(3 * J));
            for (std::size_t c = 0; c < f.size(); ++c) {
                if (!f[c].is_number()) detail::parse_fail(i, "frames", "non-numeric value in frame " + std::to_string(t));
                const double v = f[c].get<double>();
                if (!std::isfinite(v)) detail::parse_fail(i, "frames", "non-finite value in frame " + std::to_string(t));
                m(static_cast<Index>(t), static_cast<Index>(c)) = v;
            }
        }
        samples.emplace_back(J, std::move(m));
    }
    return detail::finalize_labels(std::move(samples), std::move(labels), declared);
}

inline nlohmann::json dataset_to_json(const Dataset& data) {
    data.validate();
    if (data.samples.empty()) throw ParameterError("dataset_to_json: empty dataset");
    nlohmann::json doc;
    doc["joints"] = data.samples.front().joints();
    doc["num_classes"] = data.num_classes;
    auto& arr = doc["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        if (s.joints() != data.samples.front().joints())
            throw ParameterError("dataset_to_json: samples disagree on joint count");
        nlohmann::json rec;
        rec["label"] = data.labels ? nlohmann::json((*data.labels)[i]) : nlohmann::json(nullptr);
        auto& frames = rec["frames"] = nlohmann::json::array();
        for (Index t = 0; t < s.timestamps(); ++t) {
            auto row = nlohmann::json::array();
            for (Index c = 0; c < s.frame_dim(); ++c) row.push_back(s.frames()(t, c));
            frames.push_back(std::move(row));
        }
        arr.push_back(std::move(rec));
    }
    return doc;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s, std::size_t sample, std::string_view field) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) parse_fail(sample, field, "bad value '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        parse_fail(sample, field, "bad value '" + s + "'");
    }
}

}  // namespace detail

/// CSV layout: header row, then one row per frame with columns
/// sample_id,label,t,x1,y1,z1,... Frames of a sample are contiguous with
/// strictly increasing t; an empty label cell means unlabeled.
inline Dataset dataset_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset");
    auto header = detail::split_csv(line);
    if (header.size() < 6 || header[0] != "sample_id" || header[1] != "label" || header[2] != "t" ||
        (header.size() - 3) % 3 != 0)
        throw ParseError("csv: bad header, expected sample_id,label,t,x1,y1,z1,...");
    const Index J = static_cast<Index>((header.size() - 3) / 3);

    std::vector<SkeletonSequence> samples;
    std::vector<std::optional<int>> labels;
    std::vector<std::string> seen_ids;
    std::string current_id;
    std::vector<std::vector<double>> rows;
    double last_t = 0;

    auto flush = [&] {
        if (rows.empty()) return;
        Matrix m(static_cast<Index>(rows.size()), 3 * J);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (Index c = 0; c < 3 * J; ++c) m(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
        samples.emplace_back(J, std::move(m));
        rows.clear();
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv(line);
        const bool starts_new = rows.empty() || cells.empty() || cells[0] != current_id;
        const std::size_t idx = samples.size() + ((starts_new && !rows.empty()) ? 1 : 0);
        if (cells.size() != header.size())
            detail::parse_fail(idx, "frames", "row has " + std::to_string(cells.size()) + " columns, expected " +
                                                  std::to_string(header.size()));
        std::optional<int> label;
        if (!cells[1].empty()) label = static_cast<int>(detail::parse_real(cells[1], idx, "label"));
        const double t = detail::parse_real(cells[2], idx, "t");
        if (rows.empty() || cells[0] != current_id) {
            flush();
            if (std::find(seen_ids.begin(), seen_ids.end(), cells[0]) != seen_ids.end())
                detail::parse_fail(samples.size(), "sample_id", "frames of '" + cells[0] + "' are not contiguous");
            seen_ids.push_back(cells[0]);
            current_id = cells[0];
            labels.push_back(label);
        } else {
            if (t <= last_t) detail::parse_fail(samples.size(), "t", "timestamps not strictly increasing");
            if (label != labels.back()) detail::parse_fail(samples.size(), "label", "label changes within a sample");
        }
        last_t = t;
        std::vector<double> vals;
        for (std::size_t c = 3; c < cells.size(); ++c) vals.push_back(detail::parse_real(cells[c], samples.size(), "frames"));
        rows.push_back(std::move(vals));
    }
    flush();
    return detail::finalize_labels(std::move(samples), std::move(labels), std::nullopt);
}

inline void dataset_to_csv(const Dataset& data, std::ostream& out) {
    data.validate();
    if (data.samples.empty()) throw ParameterError("dataset_to_csv: empty dataset");
    const Index J = data.samples.front().joints();
    out << "sample_id,label,t";
    for (Index j = 1; j <= J; ++j) out << ",x" << j << ",y" << j << ",z" << j;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        for (Index t = 0; t < s.timestamps(); ++t) {
            out << i << ',';
            if (data.labels) out << (*data.labels)[i];
            out << ',' << t;
            for (Index c = 0; c < s.frame_dim(); ++c) out << ',' << s.frames()(t, c);
            out << '\n';
        }
    }
}

inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file " + path.string());
    if (format == DatasetFormat::csv) return dataset_from_csv(in);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dataset: invalid JSON: ") + e.what());
    }
    return dataset_from_json(doc);
}

/// Writes the JSON form. Doubles are emitted in shortest round-trip form so
/// reloading reproduces every value bit for bit.
inline void save_dataset(const Dataset& data, const std::filesystem::path& path,
                         DatasetFormat format = DatasetFormat::json) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file " + path.string());
    if (format == DatasetFormat::csv)
        dataset_to_csv(data, out);
    else
        out << dataset_to_json(data).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s) {
    return {{"num_classes", s.num_classes}, {"samples_per_class", s.samples_per_class},
            {"joints", s.joints},           {"mean_duration", s.mean_duration},
            {"duration_jitter", s.duration_jitter}, {"noise_std", s.noise_std},
            {"time_warp", s.time_warp},     {"rng_seed", s.rng_seed}};
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    try {
        s.num_classes = j.value("num_classes", s.num_classes);
        s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
        s.joints = j.value("joints", s.joints);
        s.mean_duration = j.value("mean_duration", s.mean_duration);
        s.duration_jitter = j.value("duration_jitter", s.duration_jitter);
        s.noise_std = j.value("noise_std", s.noise_std);
        s.time_warp = j.value("time_warp", s.time_warp);
        s.rng_seed = j.value("rng_seed", s.rng_seed);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace skelsc
