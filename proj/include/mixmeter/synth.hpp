#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mixmeter/audio.hpp"

namespace mixmeter {

/// Sound recipe for one synthetic class. A song is three noise beds
/// (low/mid/high shaped by wide bandpass filters) mixed at the given
/// gains, with a stereo width knob (0 = both channels identical, 1 =
/// independent noise) and a smooth amplitude gate that sets the dynamic
/// range (depth 0 = steady level).
struct ClassArchetype {
    std::string name;
    double low_gain = 1.0;    // 30..200 Hz bed
    double mid_gain = 1.0;    // 300..3000 Hz bed
    double high_gain = 1.0;   // 4000..16000 Hz bed
    double width = 0.5;       // 0..1
    double gate_depth = 0.0;  // 0..1, level swings between (1-depth) and 1
    double gate_rate_hz = 25.0;
};

struct SynthSpec {
    std::vector<ClassArchetype> classes;
    int songs_per_class = 20;
    double duration_s = 60.0;
    int sample_rate = 44100;
    std::uint64_t seed = 2024;
};

/// Three well-separated archetypes: a near-mono bass-heavy class, a wide
/// bright class, and a heavily gated mid-range class.
SynthSpec demo_spec();

/// JSON file with the SynthSpec fields; classes is an array of objects
/// with the ClassArchetype fields. Missing per-class fields keep their
/// defaults. Throws on malformed input.
SynthSpec read_synth_spec(const std::filesystem::path& path);

/// One song, deterministic in song_seed. Per-song gain/width jitter comes
/// from the same seed. The result is quantized to 16-bit grid values so an
/// in-memory clip equals its WAV round trip exactly.
AudioClip synth_song(const ClassArchetype& archetype, double duration_s,
                     int sample_rate, std::uint64_t song_seed);

/// Song seed for (spec.seed, class index, song index); exposed so tests
/// and in-memory corpora can reproduce single songs.
std::uint64_t song_seed(const SynthSpec& spec, std::size_t class_index,
                        std::size_t song_index);

/// Writes WAVs plus a manifest.csv (paths relative to out_dir) and returns
/// the manifest path. Song ids are "<class>_<index>".
std::filesystem::path write_corpus(const SynthSpec& spec,
                                   const std::filesystem::path& out_dir);

}  // namespace mixmeter
