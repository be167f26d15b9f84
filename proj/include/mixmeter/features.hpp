#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixmeter/audio.hpp"
#include "mixmeter/filterbank.hpp"

namespace mixmeter {

/// Per-window feature vector layout, 146 slots:
///   0..7   broadband meters: vu_l, vu_r, ppm_l, ppm_r, dr_l, dr_r, rms_l, rms_r
///   8..10  broadband stereo: box_count, pan_deg, corr
///   11 + 5b + j, b in 0..26: per-band rms_l, rms_r, box_count, pan_deg, corr
inline constexpr std::size_t kFeatureCount = 146;

using FeatureVector = std::array<double, kFeatureCount>;

inline constexpr std::size_t kSlotVuL = 0, kSlotVuR = 1;
inline constexpr std::size_t kSlotPpmL = 2, kSlotPpmR = 3;
inline constexpr std::size_t kSlotDrL = 4, kSlotDrR = 5;
inline constexpr std::size_t kSlotRmsL = 6, kSlotRmsR = 7;
inline constexpr std::size_t kSlotBoxCount = 8, kSlotPan = 9, kSlotCorr = 10;

constexpr std::size_t band_slot(std::size_t band, std::size_t field) {
    return 11 + 5 * band + field;  // field: 0 rms_l, 1 rms_r, 2 box, 3 pan, 4 corr
}

/// Column names for the per-window layout, band columns suffixed with the
/// nominal center ("rms_l_b40" ... "corr_b16000").
const std::array<std::string, kFeatureCount>& feature_names();

/// Fills slots 0..10 from the broadband window.
void fill_broadband_slots(FeatureVector& out, const StereoView& window, int sample_rate,
                          double vu_reference);

/// Fills the five slots of one band from that band's window.
void fill_band_slots(FeatureVector& out, std::size_t band, const StereoView& window);

/// Full per-window vector from the broadband window plus the 27 aligned
/// band windows (same grid position in each band signal).
FeatureVector extract_window_features(const StereoView& window,
                                      std::span<const StereoView> band_windows,
                                      int sample_rate);

/// Aggregated song layout: the 146 per-window means then the 146
/// population standard deviations, names suffixed _mean / _std.
std::vector<std::string> aggregated_column_names();

/// Means then population stds over a set of window vectors. Throws on
/// empty input.
std::vector<double> aggregate_mean_std(std::span<const FeatureVector> windows);

/// How per-window vectors become dataset rows: one mean+std row per song,
/// or one row per window with a majority vote at predict time.
enum class Aggregation { kMeanStd, kPerWindowVote };

const char* aggregation_name(Aggregation agg);           // "mean_std" / "per_window_vote"
Aggregation parse_aggregation(const std::string& name);  // throws on unknown names

/// Dataset feature columns for the mode: 292 aggregated names or the 146
/// per-window names.
std::vector<std::string> columns_for(Aggregation agg);

/// FNV-1a 64 over the layout version, mode name and column names. Guards
/// models against datasets with a different layout.
std::uint64_t schema_hash(Aggregation agg);

}  // namespace mixmeter
