#pragma once

#include <cstddef>
#include <span>

namespace mixmeter {

/// Floor for the dB meters; silent input reads this instead of -inf.
inline constexpr double kMeterFloorDb = -120.0;

/// Sum of |sin(2 pi 1000 n / sample_rate)| over n = 0..n_samples-1: the
/// full-scale 1 kHz reference the VU meter is normalized against.
double vu_reference_sum(std::size_t n_samples, int sample_rate);

/// VU level: 20 log10(sum|x| / reference), reference being a full-scale
/// 1 kHz sine of the same length. Clamped to kMeterFloorDb.
double vu_db(std::span<const double> x, int sample_rate);

/// Same, with the reference sum precomputed (saves the sine resynthesis
/// when metering many windows of one length).
double vu_db_with_reference(std::span<const double> x, double reference_sum);

/// Peak programme level: 20 log10(max|x|), clamped to kMeterFloorDb.
double ppm_db(std::span<const double> x);

/// Dynamic range: the window is cut into 10 ms sub-segments (441 samples
/// at 44.1 kHz, trailing partial discarded) and DR = 20 log10(peak_max /
/// max(peak_min, 1e-6)) over the sub-segment peaks. All-silent input
/// yields 0 dB.
double dr_db(std::span<const double> x, int sample_rate);

/// Root mean square, linear (not dB).
double rms(std::span<const double> x);

}  // namespace mixmeter
