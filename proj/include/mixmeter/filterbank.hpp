#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "mixmeter/audio.hpp"

namespace mixmeter {

inline constexpr int kBandCount = 27;

/// One third-octave band. nominal_hz is the conventional label (40, 50,
/// 63, ... 16000); center/edges are the exact base-two values the filter
/// is designed for: center = 1000 * 2^((k - 14) / 3), edges at
/// center * 2^(-1/6) and center * 2^(1/6).
struct BandSpec {
    int index = 0;
    double nominal_hz = 0.0;
    double center_hz = 0.0;
    double lower_edge_hz = 0.0;
    double upper_edge_hz = 0.0;
};

/// Second-order section y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2]
///                             - a1 y[n-1] - a2 y[n-2].
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

/// Cascade of biquads with persistent state (transposed direct form II),
/// so a signal can be fed in chunks and the result matches one-shot
/// filtering exactly.
class SosFilter {
public:
    explicit SosFilter(std::vector<Biquad> sections);

    void reset();
    /// Filters input into output (same length); carries state across calls.
    void process(std::span<const double> input, std::span<double> output);
    std::vector<double> process(std::span<const double> input);

    const std::vector<Biquad>& sections() const { return sections_; }

private:
    std::vector<Biquad> sections_;
    std::vector<double> s1_, s2_;
};

/// Two SosFilter instances fused into one loop; both channels share the
/// coefficients but keep independent state. Sample-exact equal to running
/// two SosFilters, just faster (the channels' dependency chains overlap).
class StereoSosFilter {
public:
    explicit StereoSosFilter(const std::vector<Biquad>& sections);

    void reset();
    void process(std::span<const double> in_left, std::span<const double> in_right,
                 std::span<double> out_left, std::span<double> out_right);

private:
    std::vector<Biquad> sections_;
    std::vector<double> state_;  // s1l, s2l, s1r, s2r per section
};

/// The 27 band definitions, index 0 (40 Hz nominal) .. 26 (16 kHz nominal).
const std::array<BandSpec, kBandCount>& third_octave_bands();

/// Butterworth bandpass design: analytic lowpass prototype of the given
/// order, lowpass-to-bandpass transform, bilinear mapping with the band
/// edges prewarped, unity gain pinned at the geometric center frequency.
/// Returns order biquad sections. Throws if the edges are not inside
/// (0, sample_rate / 2).
std::vector<Biquad> design_bandpass(double lower_hz, double upper_hz, int order,
                                    int sample_rate);

struct BandFilterDesign {
    BandSpec spec;
    std::vector<Biquad> sections;
};

/// Designs all 27 band filters for the given rate. Throws if the rate
/// cannot represent the top band (needs sample_rate >= 2 * 16000 * 2^(1/6),
/// so 8 kHz material is rejected).
std::vector<BandFilterDesign> design_bank(int sample_rate);

/// Complex frequency response of a cascade at freq_hz.
std::complex<double> sos_response(const std::vector<Biquad>& sections, double freq_hz,
                                  int sample_rate);

/// All 27 band signals of a clip, materialized. Index order matches
/// third_octave_bands(). Mind the memory: 27 full copies of the clip.
std::vector<AudioClip> apply_bank(const AudioClip& clip);

}  // namespace mixmeter
