#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mixmeter/audio.hpp"
#include "mixmeter/evaluate.hpp"
#include "mixmeter/features.hpp"
#include "mixmeter/wav.hpp"

namespace mixmeter {

/// One dataset row: a whole song (mean_std) or one window (per_window_vote,
/// several rows share a song_id and window_count is 1 for each).
struct SongRecord {
    std::string song_id;
    std::string label;
    std::size_t window_count = 0;
    std::vector<double> features;
};

struct ManifestEntry {
    std::string song_id;
    std::filesystem::path path;  // resolved against the manifest directory
    std::string label;
};

/// CSV with header song_id,path,label. Relative paths are taken relative
/// to the manifest's directory. No quoting; fields must not contain commas.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

struct ExtractOptions {
    PreprocessConfig pre;
    WavReadOptions wav;
    Aggregation aggregation = Aggregation::kMeanStd;
    int jobs = 1;  // songs processed in parallel
};

/// Per-window feature matrix of a decoded clip: preprocess, segment, meter
/// every window against the broadband signal and all 27 band signals (the
/// bands are filtered in streaming chunks, so memory stays at clip size).
std::vector<FeatureVector> extract_windows(const AudioClip& clip,
                                           const PreprocessConfig& config);

/// Dataset rows for one clip under the chosen aggregation.
std::vector<SongRecord> extract_clip(const AudioClip& clip, const std::string& song_id,
                                     const std::string& label,
                                     const ExtractOptions& options);

/// Decode + extract_clip. Decoder warnings are appended to *warnings.
std::vector<SongRecord> extract_song(const std::filesystem::path& path,
                                     const std::string& song_id, const std::string& label,
                                     const ExtractOptions& options,
                                     std::vector<std::string>* warnings = nullptr);

/// Whole manifest; row order follows the manifest regardless of jobs.
std::vector<SongRecord> extract_manifest(const std::vector<ManifestEntry>& entries,
                                         const ExtractOptions& options,
                                         std::vector<std::string>* warnings = nullptr);

struct Dataset {
    Aggregation aggregation = Aggregation::kMeanStd;
    std::vector<std::string> columns;  // feature columns only
    std::vector<SongRecord> records;
};

/// CSV with a leading "# mixmeter dataset v1 agg=..." line, then a header
/// row song_id,label,window_count,<columns>. Feature values are written at
/// 9 significant digits; write(read(file)) reproduces the file exactly.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

/// The rows as evaluation input (features X, ids, labels).
EvalData to_eval_data(const Dataset& dataset);

}  // namespace mixmeter
