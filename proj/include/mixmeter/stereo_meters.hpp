#pragma once

#include <cstddef>
#include <span>

namespace mixmeter {

/// Number of occupied cells when (L[n], R[n]) points are binned onto a
/// 20 x 20 grid over [-1, 1]^2. Cell index floor((v + 1) * 10), clamped
/// to 19; out-of-range samples clip into the border cells. Range 1..400
/// for non-empty input.
int box_count(std::span<const double> left, std::span<const double> right);

/// Mean of atan2(|R|, |L|) in degrees over samples with |L| + |R| > 0.
/// 0 = hard left, 45 = centered, 90 = hard right. All-silent input
/// returns 45.
double panning_deg(std::span<const double> left, std::span<const double> right);

/// Population Pearson correlation of the two channels; 0 when either
/// standard deviation is below 1e-12.
double correlation(std::span<const double> left, std::span<const double> right);

/// Diagnostic: max over lags of |sum_n L[n] R[n + lag]| with zero padding
/// outside the window, normalized by the window length. Not part of the
/// feature layout.
double cross_correlation_peak(std::span<const double> left,
                              std::span<const double> right);

}  // namespace mixmeter
