#include "mixmeter/stereo_meters.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace mixmeter {
namespace {

constexpr int kGrid = 20;
constexpr double kSigmaFloor = 1e-12;

int cell_index(double v) {
    int c = static_cast<int>(std::floor((v + 1.0) * (kGrid / 2.0)));
    if (c < 0) c = 0;
    if (c >= kGrid) c = kGrid - 1;  // +1.0 and out-of-range clip inward
    return c;
}

void check_sizes(std::span<const double> left, std::span<const double> right) {
    if (left.size() != right.size()) {
        throw std::invalid_argument("channel lengths differ");
    }
}

}  // namespace

int box_count(std::span<const double> left, std::span<const double> right) {
    check_sizes(left, right);
    std::array<bool, kGrid * kGrid> occupied{};
    for (std::size_t n = 0; n < left.size(); ++n) {
        occupied[cell_index(left[n]) * kGrid + cell_index(right[n])] = true;
    }
    int count = 0;
    for (bool o : occupied) count += o ? 1 : 0;
    return count;
}

double panning_deg(std::span<const double> left, std::span<const double> right) {
    check_sizes(left, right);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t n = 0; n < left.size(); ++n) {
        const double al = std::abs(left[n]);
        const double ar = std::abs(right[n]);
        if (al + ar > 0.0) {
            sum += std::atan2(ar, al);
            ++used;
        }
    }
    if (used == 0) return 45.0;
    return sum / static_cast<double>(used) * (180.0 / 3.141592653589793238462643383279502884);
}

double correlation(std::span<const double> left, std::span<const double> right) {
    check_sizes(left, right);
    const std::size_t n = left.size();
    if (n == 0) return 0.0;
    double mean_l = 0.0, mean_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_l += left[i];
        mean_r += right[i];
    }
    mean_l /= static_cast<double>(n);
    mean_r /= static_cast<double>(n);
    double cov = 0.0, var_l = 0.0, var_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dl = left[i] - mean_l;
        const double dr = right[i] - mean_r;
        cov += dl * dr;
        var_l += dl * dl;
        var_r += dr * dr;
    }
    const double sigma_l = std::sqrt(var_l / static_cast<double>(n));
    const double sigma_r = std::sqrt(var_r / static_cast<double>(n));
    if (sigma_l < kSigmaFloor || sigma_r < kSigmaFloor) return 0.0;
    return (cov / static_cast<double>(n)) / (sigma_l * sigma_r);
}

double cross_correlation_peak(std::span<const double> left,
                              std::span<const double> right) {
    check_sizes(left, right);
    const std::size_t n = left.size();
    if (n == 0) return 0.0;
    double peak = 0.0;
    const auto sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t lag = -(sn - 1); lag < sn; ++lag) {
        double acc = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(sn, sn - lag);
        for (std::ptrdiff_t m = lo; m < hi; ++m) {
            acc += left[static_cast<std::size_t>(m)] *
                   right[static_cast<std::size_t>(m + lag)];
        }
        peak = std::max(peak, std::abs(acc));
    }
    return peak / static_cast<double>(n);
}

}  // namespace mixmeter
