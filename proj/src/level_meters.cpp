#include "mixmeter/level_meters.hpp"

#include <algorithm>
#include <cmath>

namespace mixmeter {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDrFloor = 1e-6;  // quietest sub-segment peak that still counts

double clamp_db(double ratio) {
    if (ratio <= 0.0) return kMeterFloorDb;
    return std::max(20.0 * std::log10(ratio), kMeterFloorDb);
}

}  // namespace

double vu_reference_sum(std::size_t n_samples, int sample_rate) {
    double sum = 0.0;
    const double step = 2.0 * kPi * 1000.0 / sample_rate;
    for (std::size_t n = 0; n < n_samples; ++n) {
        sum += std::abs(std::sin(step * static_cast<double>(n)));
    }
    return sum;
}

double vu_db_with_reference(std::span<const double> x, double reference_sum) {
    double sum = 0.0;
    for (double v : x) sum += std::abs(v);
    return clamp_db(sum / reference_sum);
}

double vu_db(std::span<const double> x, int sample_rate) {
    return vu_db_with_reference(x, vu_reference_sum(x.size(), sample_rate));
}

double ppm_db(std::span<const double> x) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    return clamp_db(peak);
}

double dr_db(std::span<const double> x, int sample_rate) {
    const auto sub_len = static_cast<std::size_t>(std::lround(0.010 * sample_rate));
    if (sub_len == 0 || x.size() < sub_len) return 0.0;
    const std::size_t count = x.size() / sub_len;

    double peak_max = 0.0;
    double peak_min = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
        double peak = 0.0;
        for (std::size_t i = s * sub_len; i < (s + 1) * sub_len; ++i) {
            peak = std::max(peak, std::abs(x[i]));
        }
        peak_max = std::max(peak_max, peak);
        peak_min = s == 0 ? peak : std::min(peak_min, peak);
    }
    if (peak_max <= 0.0) return 0.0;
    return 20.0 * std::log10(peak_max / std::max(peak_min, kDrFloor));
}

double rms(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double sum = 0.0;
    for (double v : x) sum += v * v;
    return std::sqrt(sum / static_cast<double>(x.size()));
}

}  // namespace mixmeter
