#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mixmeter/filterbank.hpp"
#include "mixmeter/level_meters.hpp"
#include "mixmeter/pipeline.hpp"
#include "mixmeter/stereo_meters.hpp"
#include "mixmeter/synth.hpp"
#include "mixmeter/wav.hpp"
#include "test_util.hpp"

using namespace mixmeter;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    REQUIRE(out.good());
}

double band_rms(const AudioClip& clip, double lower_hz, double upper_hz) {
    SosFilter filter(design_bandpass(lower_hz, upper_hz, 3, clip.sample_rate));
    const auto shaped = filter.process(clip.left);
    return rms(shaped);
}

}  // namespace

TEST_CASE("synth_song is deterministic in its seed") {
    const ClassArchetype arch = {"probe", 0.8, 0.5, 0.4, 0.4, 0.3, 20.0};
    const auto a = synth_song(arch, 1.0, 44100, 555);
    const auto b = synth_song(arch, 1.0, 44100, 555);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
    CHECK(a.sample_rate == 44100);
    CHECK(a.frames() == 44100);

    const auto c = synth_song(arch, 1.0, 44100, 556);
    CHECK(a.left != c.left);
}

TEST_CASE("synth_song output sits on the 16 bit grid") {
    const ClassArchetype arch = {"grid", 1.0, 0.4, 0.2, 0.3, 0.5, 25.0};
    const auto clip = synth_song(arch, 0.5, 44100, 99);

    for (double v : clip.left) {
        const double steps = v * 32768.0;
        CHECK(steps == std::floor(steps));
        CHECK(std::abs(v) <= 1.0);
    }

    auto dir = testutil::temp_dir("synth_grid");
    write_wav(dir / "grid.wav", clip);
    const auto back = read_wav(dir / "grid.wav", {});
    CHECK(back.sample_rate == clip.sample_rate);
    CHECK(back.left == clip.left);
    CHECK(back.right == clip.right);
}

TEST_CASE("synth_song rejects bad requests") {
    ClassArchetype arch = {"ok", 1.0, 1.0, 1.0, 0.5, 0.0, 25.0};
    CHECK_THROWS_AS(synth_song(arch, 0.0, 44100, 1), std::runtime_error);
    CHECK_THROWS_AS(synth_song(arch, -2.0, 44100, 1), std::runtime_error);

    ClassArchetype nameless = arch;
    nameless.name.clear();
    CHECK_THROWS_AS(synth_song(nameless, 1.0, 44100, 1), std::runtime_error);

    ClassArchetype closed = arch;
    closed.gate_depth = 1.0;
    CHECK_THROWS_WITH_AS(synth_song(closed, 1.0, 44100, 1),
                         doctest::Contains("gate_depth"), std::runtime_error);

    ClassArchetype negative = arch;
    negative.mid_gain = -0.1;
    CHECK_THROWS_WITH_AS(synth_song(negative, 1.0, 44100, 1),
                         doctest::Contains("negative"), std::runtime_error);

    ClassArchetype silent = arch;
    silent.low_gain = silent.mid_gain = silent.high_gain = 0.0;
    CHECK_THROWS_AS(synth_song(silent, 1.0, 44100, 1), std::runtime_error);

    ClassArchetype wide = arch;
    wide.width = 1.2;
    CHECK_THROWS_WITH_AS(synth_song(wide, 1.0, 44100, 1), doctest::Contains("width"),
                         std::runtime_error);
}

TEST_CASE("demo archetypes measure apart from each other") {
    const SynthSpec spec = demo_spec();
    REQUIRE(spec.classes.size() == 3);
    CHECK(spec.classes[0].name == "deep_mono");
    CHECK(spec.classes[1].name == "bright_wide");
    CHECK(spec.classes[2].name == "punchy_mid");
    CHECK(spec.songs_per_class == 20);
    CHECK(spec.duration_s == 60.0);
    CHECK(spec.sample_rate == 44100);

    const auto deep = synth_song(spec.classes[0], 2.0, 44100, 7001);
    const auto wide = synth_song(spec.classes[1], 2.0, 44100, 7002);
    const auto punchy = synth_song(spec.classes[2], 2.0, 44100, 7003);

    // Stereo width shows up as interchannel correlation.
    CHECK(correlation(deep.left, deep.right) > 0.8);
    CHECK(correlation(wide.left, wide.right) < 0.3);

    // The gate drives the crest of the level distribution.
    const double dr_deep = dr_db(deep.left, deep.sample_rate);
    const double dr_punchy = dr_db(punchy.left, punchy.sample_rate);
    CHECK(dr_punchy > dr_deep + 5.0);

    // Spectral tilt, in power: the bass class keeps its energy low, the
    // bright one high. The wide high bed dilutes its power over 12 kHz, so
    // the bass class margin is the smaller of the two.
    const auto power = [&](const AudioClip& clip, double lo, double hi) {
        const double r = band_rms(clip, lo, hi);
        return r * r;
    };
    CHECK(power(deep, 30.0, 200.0) > 5.0 * power(deep, 4000.0, 16000.0));
    CHECK(power(wide, 4000.0, 16000.0) > 50.0 * power(wide, 30.0, 200.0));
}

TEST_CASE("song_seed separates classes, songs and corpus seeds") {
    const SynthSpec spec = demo_spec();
    CHECK(song_seed(spec, 0, 0) == song_seed(spec, 0, 0));
    CHECK(song_seed(spec, 0, 0) != song_seed(spec, 0, 1));
    CHECK(song_seed(spec, 0, 0) != song_seed(spec, 1, 0));
    CHECK(song_seed(spec, 1, 0) != song_seed(spec, 0, 1));

    SynthSpec other = spec;
    other.seed = spec.seed + 1;
    CHECK(song_seed(spec, 0, 0) != song_seed(other, 0, 0));
}

TEST_CASE("read_synth_spec parses fields and applies defaults") {
    auto dir = testutil::temp_dir("synth_spec");

    SUBCASE("full document") {
        write_text(dir / "full.json", R"({
            "seed": 7,
            "songs_per_class": 4,
            "duration_s": 12.5,
            "sample_rate": 48000,
            "classes": [
                {"name": "one", "low_gain": 0.5, "mid_gain": 0.25,
                 "high_gain": 0.75, "width": 0.9, "gate_depth": 0.4,
                 "gate_rate_hz": 12.0},
                {"name": "two"}
            ]
        })");
        const auto spec = read_synth_spec(dir / "full.json");
        CHECK(spec.seed == 7);
        CHECK(spec.songs_per_class == 4);
        CHECK(spec.duration_s == 12.5);
        CHECK(spec.sample_rate == 48000);
        REQUIRE(spec.classes.size() == 2);
        CHECK(spec.classes[0].name == "one");
        CHECK(spec.classes[0].low_gain == 0.5);
        CHECK(spec.classes[0].mid_gain == 0.25);
        CHECK(spec.classes[0].high_gain == 0.75);
        CHECK(spec.classes[0].width == 0.9);
        CHECK(spec.classes[0].gate_depth == 0.4);
        CHECK(spec.classes[0].gate_rate_hz == 12.0);
        // Omitted fields fall back to the archetype defaults.
        CHECK(spec.classes[1].low_gain == 1.0);
        CHECK(spec.classes[1].width == 0.5);
        CHECK(spec.classes[1].gate_depth == 0.0);
    }
    SUBCASE("top level defaults") {
        write_text(dir / "minimal.json", R"({"classes": [{"name": "x"}]})");
        const auto spec = read_synth_spec(dir / "minimal.json");
        CHECK(spec.seed == 2024);
        CHECK(spec.songs_per_class == 20);
        CHECK(spec.duration_s == 60.0);
        CHECK(spec.sample_rate == 44100);
    }
    SUBCASE("rejects broken documents") {
        write_text(dir / "broken.json", "{ not json");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "broken.json"),
                             doctest::Contains("broken.json"), std::runtime_error);

        write_text(dir / "no_classes.json", R"({"seed": 1})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "no_classes.json"),
                             doctest::Contains("classes"), std::runtime_error);

        write_text(dir / "empty_classes.json", R"({"classes": []})");
        CHECK_THROWS_AS(read_synth_spec(dir / "empty_classes.json"),
                        std::runtime_error);

        write_text(dir / "nameless.json", R"({"classes": [{"width": 0.5}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "nameless.json"),
                             doctest::Contains("name"), std::runtime_error);

        write_text(dir / "bad_width.json",
                   R"({"classes": [{"name": "x", "width": 1.5}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "bad_width.json"),
                             doctest::Contains("width"), std::runtime_error);

        write_text(dir / "bad_songs.json",
                   R"({"songs_per_class": 0, "classes": [{"name": "x"}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "bad_songs.json"),
                             doctest::Contains("songs_per_class"), std::runtime_error);

        write_text(dir / "bad_duration.json",
                   R"({"duration_s": -3, "classes": [{"name": "x"}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "bad_duration.json"),
                             doctest::Contains("duration_s"), std::runtime_error);

        write_text(dir / "bad_rate.json",
                   R"({"sample_rate": 4000, "classes": [{"name": "x"}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "bad_rate.json"),
                             doctest::Contains("sample_rate"), std::runtime_error);

        write_text(dir / "bad_gate.json",
                   R"({"classes": [{"name": "x", "gate_rate_hz": 0}]})");
        CHECK_THROWS_WITH_AS(read_synth_spec(dir / "bad_gate.json"),
                             doctest::Contains("gate_rate_hz"), std::runtime_error);

        CHECK_THROWS_AS(read_synth_spec(dir / "absent.json"), std::runtime_error);
    }
}

TEST_CASE("write_corpus lays out WAVs plus a readable manifest") {
    auto dir = testutil::temp_dir("synth_corpus");
    SynthSpec spec;
    spec.classes = {
        {"ca", 1.0, 0.2, 0.1, 0.1, 0.2, 25.0},
        {"cb", 0.1, 0.3, 1.0, 0.9, 0.1, 25.0},
    };
    spec.songs_per_class = 2;
    spec.duration_s = 0.3;
    spec.sample_rate = 44100;
    spec.seed = 31;

    const auto manifest_path = write_corpus(spec, dir / "corpus");
    CHECK(manifest_path == dir / "corpus" / "manifest.csv");

    const auto entries = read_manifest(manifest_path);
    REQUIRE(entries.size() == 4);
    CHECK(entries[0].song_id == "ca_00");
    CHECK(entries[1].song_id == "ca_01");
    CHECK(entries[2].song_id == "cb_00");
    CHECK(entries[3].song_id == "cb_01");
    CHECK(entries[0].label == "ca");
    CHECK(entries[3].label == "cb");

    for (const auto& e : entries) CHECK(std::filesystem::exists(e.path));

    // Every file is the deterministic synthesis for its (class, song) seed.
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& entry = entries[c * 2 + s];
            const auto decoded = read_wav(entry.path, {});
            const auto expected = synth_song(spec.classes[c], spec.duration_s,
                                             spec.sample_rate, song_seed(spec, c, s));
            CHECK(decoded.left == expected.left);
            CHECK(decoded.right == expected.right);
        }
    }

    SUBCASE("an empty class list is rejected") {
        SynthSpec none;
        none.classes.clear();
        CHECK_THROWS_AS(write_corpus(none, dir / "empty"), std::runtime_error);
    }
}
