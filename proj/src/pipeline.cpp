#include "mixmeter/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mixmeter/level_meters.hpp"
#include "mixmeter/parallel.hpp"
#include "mixmeter/preprocess.hpp"

namespace mixmeter {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string fmt_feature(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
        throw std::runtime_error(context + ": bad number '" + text + "'");
    }
    return v;
}

constexpr const char* kDatasetMagic = "# mixmeter dataset v1 agg=";

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    const auto base = path.parent_path();

    std::string line;
    if (!std::getline(in, line) || line != "song_id,path,label") {
        throw std::runtime_error(path.string() +
                                 ": manifest must start with header song_id,path,label");
    }
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 3 fields, got " +
                                     std::to_string(fields.size()));
        }
        if (fields[0].empty()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": empty song_id");
        }
        if (!seen.insert(fields[0]).second) {
            throw std::runtime_error(path.string() + ": duplicate song_id " + fields[0]);
        }
        std::filesystem::path p = fields[1];
        if (p.is_relative()) p = base / p;
        entries.push_back({fields[0], std::move(p), fields[2]});
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "song_id,path,label\n";
    for (const auto& e : entries) {
        out << e.song_id << ',' << e.path.generic_string() << ',' << e.label << '\n';
    }
    if (!out) throw std::runtime_error(path.string() + ": write error");
}

std::vector<FeatureVector> extract_windows(const AudioClip& clip,
                                           const PreprocessConfig& config) {
    const AudioClip pre = preprocess(clip, config);
    const auto views = segment(pre, config);
    const std::size_t n_windows = views.size();

    std::vector<FeatureVector> features(n_windows);
    const double vu_ref = vu_reference_sum(config.window_len, pre.sample_rate);
    for (std::size_t w = 0; w < n_windows; ++w) {
        features[w].fill(0.0);
        fill_broadband_slots(features[w], views[w], pre.sample_rate, vu_ref);
    }

    // Band features stream window by window with persistent filter state:
    // identical to filtering the whole clip first, without 27 clip copies.
    const auto bank = design_bank(pre.sample_rate);
    std::vector<double> band_left(config.window_len);
    std::vector<double> band_right(config.window_len);
    for (std::size_t b = 0; b < bank.size(); ++b) {
        StereoSosFilter filter(bank[b].sections);
        for (std::size_t w = 0; w < n_windows; ++w) {
            filter.process(views[w].left, views[w].right, band_left, band_right);
            fill_band_slots(features[w], b, {band_left, band_right});
        }
    }
    return features;
}

std::vector<SongRecord> extract_clip(const AudioClip& clip, const std::string& song_id,
                                     const std::string& label,
                                     const ExtractOptions& options) {
    const auto windows = extract_windows(clip, options.pre);
    std::vector<SongRecord> records;
    if (options.aggregation == Aggregation::kMeanStd) {
        records.push_back(
            {song_id, label, windows.size(), aggregate_mean_std(windows)});
    } else {
        records.reserve(windows.size());
        for (const auto& w : windows) {
            records.push_back({song_id, label, 1, {w.begin(), w.end()}});
        }
    }
    return records;
}

std::vector<SongRecord> extract_song(const std::filesystem::path& path,
                                     const std::string& song_id, const std::string& label,
                                     const ExtractOptions& options,
                                     std::vector<std::string>* warnings) {
    WavReadOptions wav = options.wav;
    wav.expected_sample_rate = options.pre.expected_sample_rate;
    const AudioClip clip = read_wav(path, wav, warnings);
    if (warnings != nullptr &&
        clip.duration_s() < options.pre.center_duration_s) {
        warnings->push_back(path.string() + ": shorter than the " +
                            std::to_string(static_cast<int>(options.pre.center_duration_s)) +
                            " s analysis section, using the whole clip");
    }
    try {
        return extract_clip(clip, song_id, label, options);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<SongRecord> extract_manifest(const std::vector<ManifestEntry>& entries,
                                         const ExtractOptions& options,
                                         std::vector<std::string>* warnings) {
    std::vector<std::vector<SongRecord>> per_song(entries.size());
    std::vector<std::vector<std::string>> per_song_warnings(entries.size());
    parallel_for(entries.size(), options.jobs, [&](std::size_t i) {
        const auto& e = entries[i];
        per_song[i] = extract_song(e.path, e.song_id, e.label, options,
                                   warnings != nullptr ? &per_song_warnings[i] : nullptr);
    });
    std::vector<SongRecord> records;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (auto& r : per_song[i]) records.push_back(std::move(r));
        if (warnings != nullptr) {
            for (auto& w : per_song_warnings[i]) warnings->push_back(std::move(w));
        }
    }
    return records;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    const auto expected = columns_for(dataset.aggregation);
    if (dataset.columns != expected) {
        throw std::runtime_error("dataset columns do not match the " +
                                 std::string(aggregation_name(dataset.aggregation)) +
                                 " layout");
    }
    std::ostringstream os;
    os << kDatasetMagic << aggregation_name(dataset.aggregation) << '\n';
    os << "song_id,label,window_count";
    for (const auto& c : dataset.columns) os << ',' << c;
    os << '\n';
    for (const auto& r : dataset.records) {
        if (r.features.size() != dataset.columns.size()) {
            throw std::runtime_error("record " + r.song_id + " has " +
                                     std::to_string(r.features.size()) +
                                     " features, schema has " +
                                     std::to_string(dataset.columns.size()));
        }
        os << r.song_id << ',' << r.label << ',' << r.window_count;
        for (double v : r.features) os << ',' << fmt_feature(v);
        os << '\n';
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    const std::string text = os.str();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error(path.string() + ": write error");
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");

    std::string line;
    if (!std::getline(in, line) || line.rfind(kDatasetMagic, 0) != 0) {
        throw std::runtime_error(path.string() +
                                 ": not a mixmeter dataset (or unknown version tag)");
    }
    Dataset dataset;
    dataset.aggregation = parse_aggregation(line.substr(std::strlen(kDatasetMagic)));
    dataset.columns = columns_for(dataset.aggregation);

    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    const auto header = split_csv_line(line);
    const std::size_t meta = 3;
    if (header.size() != meta + dataset.columns.size() || header[0] != "song_id" ||
        header[1] != "label" || header[2] != "window_count") {
        throw std::runtime_error(
            path.string() + ": header has " + std::to_string(header.size()) +
            " columns, expected " + std::to_string(meta + dataset.columns.size()) +
            " for the " + aggregation_name(dataset.aggregation) + " layout");
    }
    for (std::size_t j = 0; j < dataset.columns.size(); ++j) {
        if (header[meta + j] != dataset.columns[j]) {
            throw std::runtime_error(path.string() + ": column " + std::to_string(meta + j) +
                                     " is '" + header[meta + j] + "', expected '" +
                                     dataset.columns[j] + "'");
        }
    }

    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string context = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != meta + dataset.columns.size()) {
            throw std::runtime_error(context + ": row has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(meta + dataset.columns.size()));
        }
        SongRecord r;
        r.song_id = fields[0];
        r.label = fields[1];
        const double wc = parse_double(fields[2], context);
        if (wc < 1 || wc != std::floor(wc)) {
            throw std::runtime_error(context + ": bad window_count '" + fields[2] + "'");
        }
        r.window_count = static_cast<std::size_t>(wc);
        r.features.reserve(dataset.columns.size());
        for (std::size_t j = 0; j < dataset.columns.size(); ++j) {
            r.features.push_back(parse_double(fields[meta + j], context));
        }
        dataset.records.push_back(std::move(r));
    }
    return dataset;
}

EvalData to_eval_data(const Dataset& dataset) {
    EvalData data;
    data.X.reserve(dataset.records.size());
    data.row_ids.reserve(dataset.records.size());
    data.row_labels.reserve(dataset.records.size());
    for (const auto& r : dataset.records) {
        data.X.push_back(r.features);
        data.row_ids.push_back(r.song_id);
        data.row_labels.push_back(r.label);
    }
    return data;
}

}  // namespace mixmeter
