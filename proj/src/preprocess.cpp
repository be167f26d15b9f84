#include "mixmeter/preprocess.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace mixmeter {

AudioClip crop_silence(const AudioClip& clip, const PreprocessConfig& config) {
    const double threshold = std::pow(10.0, config.silence_threshold_db / 20.0);
    const std::size_t n = clip.frames();
    auto level = [&](std::size_t i) {
        return std::max(std::abs(clip.left[i]), std::abs(clip.right[i]));
    };

    std::size_t first = 0;
    while (first < n && level(first) < threshold) ++first;
    if (first == n) throw std::runtime_error("clip is entirely below the silence threshold");
    std::size_t last = n;  // one past the last kept frame
    while (last > first && level(last - 1) < threshold) --last;

    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.left.assign(clip.left.begin() + first, clip.left.begin() + last);
    out.right.assign(clip.right.begin() + first, clip.right.begin() + last);
    return out;
}

AudioClip normalize(const AudioClip& clip) {
    double peak = 0.0;
    for (double v : clip.left) peak = std::max(peak, std::abs(v));
    for (double v : clip.right) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw std::runtime_error("cannot normalize an all-zero clip");

    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.left.resize(clip.frames());
    out.right.resize(clip.frames());
    for (std::size_t i = 0; i < clip.frames(); ++i) {
        out.left[i] = clip.left[i] / peak;
        out.right[i] = clip.right[i] / peak;
    }
    return out;
}

AudioClip central_section(const AudioClip& clip, const PreprocessConfig& config,
                          bool* short_clip) {
    const auto target = static_cast<std::size_t>(
        config.center_duration_s * static_cast<double>(clip.sample_rate));
    const std::size_t n = clip.frames();
    if (n <= target) {
        if (short_clip != nullptr) *short_clip = true;
        return clip;
    }
    if (short_clip != nullptr) *short_clip = false;
    const std::size_t start = (n - target) / 2;

    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.left.assign(clip.left.begin() + start, clip.left.begin() + start + target);
    out.right.assign(clip.right.begin() + start, clip.right.begin() + start + target);
    return out;
}

std::vector<StereoView> segment(const AudioClip& clip, const PreprocessConfig& config) {
    const std::size_t window = config.window_len;
    if (window == 0) throw std::runtime_error("window length must be positive");
    const std::size_t count = clip.frames() / window;
    if (count == 0) {
        throw std::runtime_error("clip shorter than one analysis window (" +
                                 std::to_string(window) + " samples)");
    }
    std::vector<StereoView> views;
    views.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        views.push_back({std::span(clip.left).subspan(w * window, window),
                         std::span(clip.right).subspan(w * window, window)});
    }
    return views;
}

AudioClip preprocess(const AudioClip& clip, const PreprocessConfig& config,
                     bool* short_clip) {
    return central_section(normalize(crop_silence(clip, config)), config, short_clip);
}

}  // namespace mixmeter
