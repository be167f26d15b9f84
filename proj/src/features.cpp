#include "mixmeter/features.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>

#include "mixmeter/level_meters.hpp"
#include "mixmeter/stereo_meters.hpp"

namespace mixmeter {
namespace {

std::array<std::string, kFeatureCount> make_names() {
    std::array<std::string, kFeatureCount> names;
    names[kSlotVuL] = "vu_l";
    names[kSlotVuR] = "vu_r";
    names[kSlotPpmL] = "ppm_l";
    names[kSlotPpmR] = "ppm_r";
    names[kSlotDrL] = "dr_l";
    names[kSlotDrR] = "dr_r";
    names[kSlotRmsL] = "rms_l";
    names[kSlotRmsR] = "rms_r";
    names[kSlotBoxCount] = "box_count";
    names[kSlotPan] = "pan_deg";
    names[kSlotCorr] = "corr";
    static const char* fields[5] = {"rms_l", "rms_r", "box_count", "pan_deg", "corr"};
    const auto& bands = third_octave_bands();
    for (std::size_t b = 0; b < kBandCount; ++b) {
        const auto suffix =
            "_b" + std::to_string(static_cast<long>(bands[b].nominal_hz));
        for (std::size_t f = 0; f < 5; ++f) {
            names[band_slot(b, f)] = fields[f] + suffix;
        }
    }
    return names;
}

std::uint64_t fnv1a64(std::uint64_t hash, std::string_view text) {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = make_names();
    return names;
}

void fill_broadband_slots(FeatureVector& out, const StereoView& window, int sample_rate,
                          double vu_reference) {
    out[kSlotVuL] = vu_db_with_reference(window.left, vu_reference);
    out[kSlotVuR] = vu_db_with_reference(window.right, vu_reference);
    out[kSlotPpmL] = ppm_db(window.left);
    out[kSlotPpmR] = ppm_db(window.right);
    out[kSlotDrL] = dr_db(window.left, sample_rate);
    out[kSlotDrR] = dr_db(window.right, sample_rate);
    out[kSlotRmsL] = rms(window.left);
    out[kSlotRmsR] = rms(window.right);
    out[kSlotBoxCount] = box_count(window.left, window.right);
    out[kSlotPan] = panning_deg(window.left, window.right);
    out[kSlotCorr] = correlation(window.left, window.right);
}

void fill_band_slots(FeatureVector& out, std::size_t band, const StereoView& window) {
    out[band_slot(band, 0)] = rms(window.left);
    out[band_slot(band, 1)] = rms(window.right);
    out[band_slot(band, 2)] = box_count(window.left, window.right);
    out[band_slot(band, 3)] = panning_deg(window.left, window.right);
    out[band_slot(band, 4)] = correlation(window.left, window.right);
}

FeatureVector extract_window_features(const StereoView& window,
                                      std::span<const StereoView> band_windows,
                                      int sample_rate) {
    if (band_windows.size() != kBandCount) {
        throw std::invalid_argument("expected 27 band windows");
    }
    FeatureVector out{};
    fill_broadband_slots(out, window, sample_rate,
                         vu_reference_sum(window.size(), sample_rate));
    for (std::size_t b = 0; b < kBandCount; ++b) {
        fill_band_slots(out, b, band_windows[b]);
    }
    return out;
}

std::vector<std::string> aggregated_column_names() {
    std::vector<std::string> cols;
    cols.reserve(2 * kFeatureCount);
    for (const auto& n : feature_names()) cols.push_back(n + "_mean");
    for (const auto& n : feature_names()) cols.push_back(n + "_std");
    return cols;
}

std::vector<double> aggregate_mean_std(std::span<const FeatureVector> windows) {
    if (windows.empty()) throw std::invalid_argument("no windows to aggregate");
    const auto n = static_cast<double>(windows.size());
    std::vector<double> out(2 * kFeatureCount, 0.0);
    for (const auto& w : windows) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] += w[j];
    }
    for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] /= n;
    for (const auto& w : windows) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const double d = w[j] - out[j];
            out[kFeatureCount + j] += d * d;
        }
    }
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        out[kFeatureCount + j] = std::sqrt(out[kFeatureCount + j] / n);
    }
    return out;
}

const char* aggregation_name(Aggregation agg) {
    return agg == Aggregation::kMeanStd ? "mean_std" : "per_window_vote";
}

Aggregation parse_aggregation(const std::string& name) {
    if (name == "mean_std") return Aggregation::kMeanStd;
    if (name == "per_window_vote") return Aggregation::kPerWindowVote;
    throw std::runtime_error("unknown aggregation mode: " + name);
}

std::vector<std::string> columns_for(Aggregation agg) {
    if (agg == Aggregation::kMeanStd) return aggregated_column_names();
    const auto& names = feature_names();
    return {names.begin(), names.end()};
}

std::uint64_t schema_hash(Aggregation agg) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV offset basis
    hash = fnv1a64(hash, "mixmeter-features-v1");
    hash = fnv1a64(hash, "|");
    hash = fnv1a64(hash, aggregation_name(agg));
    for (const auto& col : columns_for(agg)) {
        hash = fnv1a64(hash, "|");
        hash = fnv1a64(hash, col);
    }
    return hash;
}

}  // namespace mixmeter
