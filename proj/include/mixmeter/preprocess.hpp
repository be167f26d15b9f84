#pragma once

#include <vector>

#include "mixmeter/audio.hpp"

namespace mixmeter {

/// Removes leading and trailing frames whose per-frame level
/// max(|L|, |R|) stays below 10^(threshold_db/20). Throws if the whole
/// clip is below the threshold.
AudioClip crop_silence(const AudioClip& clip, const PreprocessConfig& config);

/// Scales both channels by the global peak so max(|x|) becomes exactly 1.
/// Sample-exact idempotent. Throws on all-zero input.
AudioClip normalize(const AudioClip& clip);

/// Returns the centered section of center_duration_s. Clips shorter than
/// that pass through whole; *short_clip (if given) reports which case hit.
AudioClip central_section(const AudioClip& clip, const PreprocessConfig& config,
                          bool* short_clip = nullptr);

/// Splits into floor(frames / window_len) non-overlapping windows viewing
/// the clip's buffers; the trailing partial window is discarded. Throws if
/// the clip is shorter than one window. Views stay valid only while the
/// clip does.
std::vector<StereoView> segment(const AudioClip& clip, const PreprocessConfig& config);

/// crop_silence -> normalize -> central_section.
AudioClip preprocess(const AudioClip& clip, const PreprocessConfig& config,
                     bool* short_clip = nullptr);

}  // namespace mixmeter
