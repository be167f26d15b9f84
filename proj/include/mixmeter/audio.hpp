#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mixmeter {

/// Stereo audio in float samples, nominally in [-1, 1].
struct AudioClip {
    std::vector<double> left;
    std::vector<double> right;
    int sample_rate = 44100;

    std::size_t frames() const { return left.size(); }
    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
    }
};

/// Non-owning view of one stereo window. Both spans have equal length.
struct StereoView {
    std::span<const double> left;
    std::span<const double> right;

    std::size_t size() const { return left.size(); }
};

struct PreprocessConfig {
    double silence_threshold_db = -60.0;  // crop threshold, dBFS
    double center_duration_s = 180.0;     // central section length
    std::size_t window_len = 4096;        // analysis window, samples
    int expected_sample_rate = 44100;
};

}  // namespace mixmeter
