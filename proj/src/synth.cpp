#include "mixmeter/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mixmeter/filterbank.hpp"
#include "mixmeter/pipeline.hpp"
#include "mixmeter/rng.hpp"
#include "mixmeter/wav.hpp"

namespace mixmeter {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_archetype(const ClassArchetype& a) {
    if (a.name.empty()) throw std::runtime_error("synth class without a name");
    if (a.low_gain < 0.0 || a.mid_gain < 0.0 || a.high_gain < 0.0) {
        throw std::runtime_error(a.name + ": negative bed gain");
    }
    if (a.low_gain + a.mid_gain + a.high_gain <= 0.0) {
        throw std::runtime_error(a.name + ": all bed gains are zero");
    }
    if (a.width < 0.0 || a.width > 1.0) {
        throw std::runtime_error(a.name + ": width must be in [0, 1]");
    }
    if (a.gate_depth < 0.0 || a.gate_depth >= 1.0) {
        throw std::runtime_error(a.name + ": gate_depth must be in [0, 1)");
    }
    if (a.gate_rate_hz <= 0.0) {
        throw std::runtime_error(a.name + ": gate_rate_hz must be positive");
    }
}

std::vector<double> shaped_noise(const std::vector<double>& source, double lower_hz,
                                 double upper_hz, int sample_rate) {
    SosFilter filter(design_bandpass(lower_hz, upper_hz, 3, sample_rate));
    return filter.process(source);
}

}  // namespace

SynthSpec demo_spec() {
    SynthSpec spec;
    spec.classes = {
        {"deep_mono", 1.0, 0.15, 0.03, 0.05, 0.10, 25.0},
        {"bright_wide", 0.05, 0.30, 1.0, 0.95, 0.20, 25.0},
        {"punchy_mid", 0.30, 1.0, 0.20, 0.50, 0.85, 30.0},
    };
    spec.songs_per_class = 20;
    spec.duration_s = 60.0;
    spec.sample_rate = 44100;
    spec.seed = 2024;
    return spec;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }

    const SynthSpec defaults;
    SynthSpec spec;
    try {
        spec.seed = doc.value("seed", defaults.seed);
        spec.songs_per_class = doc.value("songs_per_class", defaults.songs_per_class);
        spec.duration_s = doc.value("duration_s", defaults.duration_s);
        spec.sample_rate = doc.value("sample_rate", defaults.sample_rate);
        if (!doc.contains("classes") || !doc["classes"].is_array() ||
            doc["classes"].empty()) {
            throw std::runtime_error("needs a non-empty 'classes' array");
        }
        for (const auto& c : doc["classes"]) {
            ClassArchetype a;
            if (!c.contains("name")) throw std::runtime_error("class without 'name'");
            a.name = c["name"].get<std::string>();
            a.low_gain = c.value("low_gain", a.low_gain);
            a.mid_gain = c.value("mid_gain", a.mid_gain);
            a.high_gain = c.value("high_gain", a.high_gain);
            a.width = c.value("width", a.width);
            a.gate_depth = c.value("gate_depth", a.gate_depth);
            a.gate_rate_hz = c.value("gate_rate_hz", a.gate_rate_hz);
            check_archetype(a);
            spec.classes.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (spec.songs_per_class < 1) {
        throw std::runtime_error(path.string() + ": songs_per_class must be at least 1");
    }
    if (spec.duration_s <= 0.0) {
        throw std::runtime_error(path.string() + ": duration_s must be positive");
    }
    if (spec.sample_rate < 8000) {
        throw std::runtime_error(path.string() + ": sample_rate too low");
    }
    return spec;
}

std::uint64_t song_seed(const SynthSpec& spec, std::size_t class_index,
                        std::size_t song_index) {
    return Rng::mix(spec.seed, class_index * 1000003 + song_index);
}

AudioClip synth_song(const ClassArchetype& archetype, double duration_s,
                     int sample_rate, std::uint64_t seed) {
    check_archetype(archetype);
    if (duration_s <= 0.0) throw std::runtime_error("duration must be positive");
    const auto n = static_cast<std::size_t>(
        std::llround(duration_s * static_cast<double>(sample_rate)));

    Rng rng(seed);
    // Small per-song drift so songs of one class are siblings, not clones.
    const double low = archetype.low_gain * rng.uniform(0.8, 1.2);
    const double mid = archetype.mid_gain * rng.uniform(0.8, 1.2);
    const double high = archetype.high_gain * rng.uniform(0.8, 1.2);
    const double width =
        std::clamp(archetype.width + rng.uniform(-0.05, 0.05), 0.0, 1.0);
    const double gate_rate = archetype.gate_rate_hz * rng.uniform(0.9, 1.1);
    const double gate_phase = rng.uniform(0.0, kTwoPi);
    const double target_peak = rng.uniform(0.6, 0.9);

    // Two noise streams: shared and side. The right channel mixes them by
    // width (power-preserving), so correlation slides from 1 to about 0.
    std::vector<double> shared(n), side(n);
    for (std::size_t i = 0; i < n; ++i) shared[i] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) side[i] = rng.uniform(-1.0, 1.0);

    const double mix_norm = std::sqrt((1.0 - width) * (1.0 - width) + width * width);
    std::vector<double> right_src(n);
    for (std::size_t i = 0; i < n; ++i) {
        right_src[i] = ((1.0 - width) * shared[i] + width * side[i]) / mix_norm;
    }

    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.left.assign(n, 0.0);
    clip.right.assign(n, 0.0);
    struct Bed {
        double gain, lower, upper;
    };
    const Bed beds[3] = {{low, 30.0, 200.0}, {mid, 300.0, 3000.0}, {high, 4000.0, 16000.0}};
    for (const auto& bed : beds) {
        if (bed.gain <= 0.0) continue;
        const auto l = shaped_noise(shared, bed.lower, bed.upper, sample_rate);
        const auto r = shaped_noise(right_src, bed.lower, bed.upper, sample_rate);
        for (std::size_t i = 0; i < n; ++i) {
            clip.left[i] += bed.gain * l[i];
            clip.right[i] += bed.gain * r[i];
        }
    }

    // Smooth periodic gate; sinusoidal so it adds no broadband splatter.
    if (archetype.gate_depth > 0.0) {
        const double step = kTwoPi * gate_rate / sample_rate;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = 1.0 - archetype.gate_depth *
                                       (0.5 + 0.5 * std::sin(gate_phase + step * i));
            clip.left[i] *= g;
            clip.right[i] *= g;
        }
    }

    double peak = 0.0;
    for (double v : clip.left) peak = std::max(peak, std::abs(v));
    for (double v : clip.right) peak = std::max(peak, std::abs(v));
    if (peak <= 0.0) throw std::runtime_error("synthesized silence");
    const double scale = target_peak / peak;

    // Snap to the 16-bit grid so the clip equals its WAV round trip.
    auto quantize = [](double v) {
        double s = std::lrint(v * 32768.0);
        if (s > 32767.0) s = 32767.0;
        if (s < -32768.0) s = -32768.0;
        return s / 32768.0;
    };
    for (auto& v : clip.left) v = quantize(v * scale);
    for (auto& v : clip.right) v = quantize(v * scale);
    return clip;
}

std::filesystem::path write_corpus(const SynthSpec& spec,
                                   const std::filesystem::path& out_dir) {
    if (spec.classes.empty()) throw std::runtime_error("synth spec has no classes");
    std::filesystem::create_directories(out_dir);

    std::vector<ManifestEntry> entries;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& archetype = spec.classes[c];
        check_archetype(archetype);
        for (std::size_t s = 0; s < static_cast<std::size_t>(spec.songs_per_class); ++s) {
            char name[256];
            std::snprintf(name, sizeof name, "%s_%02zu.wav", archetype.name.c_str(), s);
            const auto clip = synth_song(archetype, spec.duration_s, spec.sample_rate,
                                         song_seed(spec, c, s));
            write_wav(out_dir / name, clip);
            char id[256];
            std::snprintf(id, sizeof id, "%s_%02zu", archetype.name.c_str(), s);
            entries.push_back({id, name, archetype.name});
        }
    }
    const auto manifest = out_dir / "manifest.csv";
    write_manifest(manifest, entries);
    return manifest;
}

}  // namespace mixmeter
