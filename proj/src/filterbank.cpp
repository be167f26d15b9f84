#include "mixmeter/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixmeter {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

constexpr double nominal_centers[kBandCount] = {
    40,   50,   63,   80,   100,  125,  160,   200,   250,
    315,  400,  500,  630,  800,  1000, 1250,  1600,  2000,
    2500, 3150, 4000, 5000, 6300, 8000, 10000, 12500, 16000};

std::array<BandSpec, kBandCount> make_bands() {
    std::array<BandSpec, kBandCount> bands;
    const double half_step = std::pow(2.0, 1.0 / 6.0);
    for (int k = 0; k < kBandCount; ++k) {
        const double center = 1000.0 * std::pow(2.0, (k - 14) / 3.0);
        bands[k] = {k, nominal_centers[k], center, center / half_step, center * half_step};
    }
    return bands;
}

}  // namespace

const std::array<BandSpec, kBandCount>& third_octave_bands() {
    static const std::array<BandSpec, kBandCount> bands = make_bands();
    return bands;
}

SosFilter::SosFilter(std::vector<Biquad> sections)
    : sections_(std::move(sections)),
      s1_(sections_.size(), 0.0),
      s2_(sections_.size(), 0.0) {}

void SosFilter::reset() {
    std::fill(s1_.begin(), s1_.end(), 0.0);
    std::fill(s2_.begin(), s2_.end(), 0.0);
}

void SosFilter::process(std::span<const double> input, std::span<double> output) {
    if (input.size() != output.size()) {
        throw std::invalid_argument("input/output size mismatch");
    }
    if (output.data() != input.data()) {
        std::copy(input.begin(), input.end(), output.begin());
    }
    // Transposed direct form II, one section at a time over the chunk.
    for (std::size_t s = 0; s < sections_.size(); ++s) {
        const Biquad& q = sections_[s];
        double s1 = s1_[s], s2 = s2_[s];
        for (double& v : output) {
            const double x = v;
            const double y = q.b0 * x + s1;
            s1 = q.b1 * x - q.a1 * y + s2;
            s2 = q.b2 * x - q.a2 * y;
            v = y;
        }
        s1_[s] = s1;
        s2_[s] = s2;
    }
}

std::vector<double> SosFilter::process(std::span<const double> input) {
    std::vector<double> out(input.size());
    process(input, out);
    return out;
}

StereoSosFilter::StereoSosFilter(const std::vector<Biquad>& sections)
    : sections_(sections), state_(4 * sections.size(), 0.0) {}

void StereoSosFilter::reset() {
    std::fill(state_.begin(), state_.end(), 0.0);
}

void StereoSosFilter::process(std::span<const double> in_left,
                              std::span<const double> in_right,
                              std::span<double> out_left, std::span<double> out_right) {
    if (in_left.size() != in_right.size() || in_left.size() != out_left.size() ||
        in_left.size() != out_right.size()) {
        throw std::invalid_argument("channel size mismatch");
    }
    if (out_left.data() != in_left.data()) {
        std::copy(in_left.begin(), in_left.end(), out_left.begin());
    }
    if (out_right.data() != in_right.data()) {
        std::copy(in_right.begin(), in_right.end(), out_right.begin());
    }
    for (std::size_t s = 0; s < sections_.size(); ++s) {
        const Biquad q = sections_[s];
        double* st = &state_[4 * s];
        double s1l = st[0], s2l = st[1], s1r = st[2], s2r = st[3];
        for (std::size_t n = 0; n < out_left.size(); ++n) {
            const double xl = out_left[n];
            const double xr = out_right[n];
            const double yl = q.b0 * xl + s1l;
            const double yr = q.b0 * xr + s1r;
            s1l = q.b1 * xl - q.a1 * yl + s2l;
            s1r = q.b1 * xr - q.a1 * yr + s2r;
            s2l = q.b2 * xl - q.a2 * yl;
            s2r = q.b2 * xr - q.a2 * yr;
            out_left[n] = yl;
            out_right[n] = yr;
        }
        st[0] = s1l;
        st[1] = s2l;
        st[2] = s1r;
        st[3] = s2r;
    }
}

std::complex<double> sos_response(const std::vector<Biquad>& sections, double freq_hz,
                                  int sample_rate) {
    const std::complex<double> z =
        std::exp(std::complex<double>(0.0, -2.0 * kPi * freq_hz / sample_rate));
    std::complex<double> h = 1.0;
    for (const Biquad& q : sections) {
        h *= (q.b0 + q.b1 * z + q.b2 * z * z) / (1.0 + q.a1 * z + q.a2 * z * z);
    }
    return h;
}

std::vector<Biquad> design_bandpass(double lower_hz, double upper_hz, int order,
                                    int sample_rate) {
    const double fs = sample_rate;
    if (!(0.0 < lower_hz && lower_hz < upper_hz && upper_hz < fs / 2.0)) {
        throw std::runtime_error("bandpass edges must satisfy 0 < lower < upper < rate/2");
    }
    if (order < 1) throw std::runtime_error("filter order must be at least 1");

    // Prewarp the edges so the bilinear transform lands them exactly.
    const double w1 = 2.0 * fs * std::tan(kPi * lower_hz / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * upper_hz / fs);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    // Butterworth lowpass prototype poles on the unit circle's left half,
    // then the lowpass-to-bandpass substitution s -> (s^2 + w0^2)/(bw s):
    // each prototype pole p yields the two roots of s^2 - p bw s + w0^2.
    std::vector<std::complex<double>> zpoles;
    zpoles.reserve(2 * static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        const std::complex<double> p =
            std::exp(std::complex<double>(0.0, kPi * (2 * i + order + 1) / (2 * order)));
        const std::complex<double> pb = p * bw;
        const std::complex<double> disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
        for (const auto& s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
            // Bilinear transform to the z plane.
            zpoles.push_back((2.0 * fs + s) / (2.0 * fs - s));
        }
    }

    // The 2N poles come in conjugate pairs; keep the upper-half-plane one
    // of each pair and give it a biquad with zeros at DC and Nyquist.
    std::vector<std::complex<double>> upper;
    for (const auto& z : zpoles) {
        if (z.imag() > 0.0) upper.push_back(z);
    }
    if (upper.size() != static_cast<std::size_t>(order)) {
        throw std::runtime_error("bandpass design produced degenerate poles");
    }
    std::sort(upper.begin(), upper.end(),
              [](const auto& a, const auto& b) { return std::arg(a) < std::arg(b); });

    std::vector<Biquad> sections;
    sections.reserve(upper.size());
    for (const auto& z : upper) {
        Biquad q;
        q.b0 = 1.0;
        q.b1 = 0.0;
        q.b2 = -1.0;
        q.a1 = -2.0 * z.real();
        q.a2 = std::norm(z);
        sections.push_back(q);
    }

    // Pin unity gain at the geometric center of the digital band.
    const double fc = std::sqrt(lower_hz * upper_hz);
    const double gain = 1.0 / std::abs(sos_response(sections, fc, sample_rate));
    sections.front().b0 *= gain;
    sections.front().b2 *= gain;
    return sections;
}

std::vector<BandFilterDesign> design_bank(int sample_rate) {
    const auto& bands = third_octave_bands();
    const double top_edge = bands.back().upper_edge_hz;
    if (sample_rate < 2.0 * top_edge) {
        throw std::runtime_error(
            "sample rate " + std::to_string(sample_rate) +
            " cannot represent the top band (needs at least " +
            std::to_string(static_cast<int>(std::ceil(2.0 * top_edge))) + " Hz)");
    }
    std::vector<BandFilterDesign> bank;
    bank.reserve(kBandCount);
    for (const auto& spec : bands) {
        bank.push_back(
            {spec, design_bandpass(spec.lower_edge_hz, spec.upper_edge_hz, 4, sample_rate)});
    }
    return bank;
}

std::vector<AudioClip> apply_bank(const AudioClip& clip) {
    const auto bank = design_bank(clip.sample_rate);
    std::vector<AudioClip> out;
    out.reserve(bank.size());
    for (const auto& band : bank) {
        AudioClip filtered;
        filtered.sample_rate = clip.sample_rate;
        SosFilter fl(band.sections);
        filtered.left = fl.process(clip.left);
        SosFilter fr(band.sections);
        filtered.right = fr.process(clip.right);
        out.push_back(std::move(filtered));
    }
    return out;
}

}  // namespace mixmeter
