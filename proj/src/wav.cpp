#include "mixmeter/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mixmeter {
namespace {

constexpr double kScale = 32768.0;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path, const WavReadOptions& options,
                   std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad()) fail(path, "read error");
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
        std::memcmp(data + 8, "WAVE", 4) != 0) {
        fail(path, "not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_bytes = 0;

    std::size_t pos = 12;
    while (pos + 8 <= size) {
        const unsigned char* chunk = data + pos;
        const std::uint32_t chunk_size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > size) fail(path, "truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (chunk_size < 16) fail(path, "fmt chunk too small");
            format_tag = read_u16(data + body);
            channels = read_u16(data + body + 2);
            rate = read_u32(data + body + 4);
            bits = read_u16(data + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            pcm = data + body;
            pcm_bytes = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) fail(path, "missing fmt chunk");
    if (pcm == nullptr) fail(path, "missing data chunk");
    if (format_tag != 1) fail(path, "unsupported codec (only integer PCM)");
    if (bits != 16) fail(path, "unsupported sample width (only 16-bit)");
    if (channels == 0) fail(path, "zero channels");
    if (channels == 1 && !options.allow_mono_upmix) {
        fail(path, "mono input (pass the mono up-mix option to accept it)");
    }
    if (channels > 2) fail(path, "unsupported channel count");

    if (static_cast<int>(rate) != options.expected_sample_rate && warnings != nullptr) {
        warnings->push_back(path.string() + ": sample rate " + std::to_string(rate) +
                            " differs from expected " +
                            std::to_string(options.expected_sample_rate));
    }

    const std::size_t bytes_per_frame = 2u * channels;
    const std::size_t frames = pcm_bytes / bytes_per_frame;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.left.resize(frames);
    clip.right.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* frame = pcm + i * bytes_per_frame;
        const auto l = static_cast<std::int16_t>(read_u16(frame));
        clip.left[i] = l / kScale;
        if (channels == 2) {
            const auto r = static_cast<std::int16_t>(read_u16(frame + 2));
            clip.right[i] = r / kScale;
        } else {
            clip.right[i] = clip.left[i];
        }
    }
    return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    if (clip.left.size() != clip.right.size()) {
        throw std::runtime_error("channel lengths differ");
    }
    const std::size_t frames = clip.frames();
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * 4);
    const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate);

    std::string out;
    out.reserve(44 + data_bytes);
    out.append("RIFF");
    put_u32(out, 36 + data_bytes);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, 1);   // integer PCM
    put_u16(out, 2);   // stereo
    put_u32(out, rate);
    put_u32(out, rate * 4);  // byte rate
    put_u16(out, 4);   // block align
    put_u16(out, 16);  // bits per sample
    out.append("data");
    put_u32(out, data_bytes);

    auto quantize = [](double v) -> std::int16_t {
        double s = std::lrint(v * kScale);
        if (s > 32767.0) s = 32767.0;
        if (s < -32768.0) s = -32768.0;
        return static_cast<std::int16_t>(s);
    };
    for (std::size_t i = 0; i < frames; ++i) {
        put_u16(out, static_cast<std::uint16_t>(quantize(clip.left[i])));
        put_u16(out, static_cast<std::uint16_t>(quantize(clip.right[i])));
    }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(path, "cannot open file for writing");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) fail(path, "write error");
}

}  // namespace mixmeter
