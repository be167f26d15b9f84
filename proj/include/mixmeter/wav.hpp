#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mixmeter/audio.hpp"

namespace mixmeter {

struct WavReadOptions {
    /// Duplicate a mono file into both channels instead of rejecting it.
    bool allow_mono_upmix = false;
    /// Sample rates other than this produce a warning, not an error.
    int expected_sample_rate = 44100;
};

/// Reads a RIFF/WAVE file holding 16-bit integer PCM. Samples are scaled
/// by 1/32768 into [-1, 1). Throws std::runtime_error on malformed files,
/// unsupported codecs or (without allow_mono_upmix) non-stereo layouts.
AudioClip read_wav(const std::filesystem::path& path,
                   const WavReadOptions& options = {},
                   std::vector<std::string>* warnings = nullptr);

/// Writes a 16-bit PCM stereo WAV. Samples are clamped to [-1, 1] and
/// quantized with round-to-nearest.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace mixmeter
