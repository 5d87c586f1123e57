#include "artic/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "artic/binary_io.hpp"
#include "artic/error.hpp"

namespace artic::dsp {

namespace {

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kExtensible = 0xFFFE;

std::uint32_t read_u32(std::istream& is, const std::filesystem::path& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw FormatError("truncated WAV header: " + path.string());
    return v;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());

    char tag[4];
    if (!is.read(tag, 4) || std::string(tag, 4) != "RIFF")
        throw FormatError("not a RIFF file: " + path.string());
    read_u32(is, path);  // riff size
    if (!is.read(tag, 4) || std::string(tag, 4) != "WAVE")
        throw FormatError("not a WAVE file: " + path.string());

    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;

    while (is.read(tag, 4)) {
        const std::string id(tag, 4);
        const std::uint32_t size = read_u32(is, path);
        if (id == "fmt ") {
            if (size < 16) throw FormatError("short fmt chunk: " + path.string());
            std::vector<char> buf(size);
            if (!is.read(buf.data(), size)) throw FormatError("truncated fmt chunk: " + path.string());
            std::uint16_t format = 0;
            std::memcpy(&format, buf.data(), 2);
            std::memcpy(&channels, buf.data() + 2, 2);
            std::memcpy(&sample_rate, buf.data() + 4, 4);
            std::memcpy(&bits, buf.data() + 14, 2);
            if (format != kPcm && format != kExtensible)
                throw FormatError("not PCM audio: " + path.string());
            if (bits != 16)
                throw FormatError("expected 16-bit samples, got " + std::to_string(bits) + ": " +
                                  path.string());
            if (channels != 1)
                throw UnsupportedError("only mono audio is supported (" + std::to_string(channels) +
                                       " channels): " + path.string());
            if (sample_rate == 0) throw FormatError("zero sample rate: " + path.string());
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw FormatError("data chunk before fmt chunk: " + path.string());
            if (size % 2 != 0) throw FormatError("odd data size for 16-bit PCM: " + path.string());
            std::vector<std::int16_t> pcm(size / 2);
            if (!is.read(reinterpret_cast<char*>(pcm.data()), size))
                throw FormatError("truncated data chunk: " + path.string());
            Waveform w;
            w.sample_rate = static_cast<int>(sample_rate);
            w.samples.resize(pcm.size());
            std::transform(pcm.begin(), pcm.end(), w.samples.begin(),
                           [](std::int16_t s) { return static_cast<float>(s) / 32768.0f; });
            return w;
        } else {
            is.seekg(size + (size & 1u), std::ios::cur);
        }
    }
    throw FormatError("no data chunk: " + path.string());
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());

    const auto n = static_cast<std::uint32_t>(wave.samples.size());
    const std::uint32_t data_bytes = n * 2;
    binio::put_magic(os, "RIFF");
    binio::put<std::uint32_t>(os, 36 + data_bytes);
    binio::put_magic(os, "WAVE");
    binio::put_magic(os, "fmt ");
    binio::put<std::uint32_t>(os, 16);
    binio::put<std::uint16_t>(os, kPcm);
    binio::put<std::uint16_t>(os, 1);
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(wave.sample_rate));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(wave.sample_rate) * 2);
    binio::put<std::uint16_t>(os, 2);
    binio::put<std::uint16_t>(os, 16);
    binio::put_magic(os, "data");
    binio::put<std::uint32_t>(os, data_bytes);

    std::vector<std::int16_t> pcm(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::clamp(static_cast<double>(wave.samples[i]), -1.0, 1.0);
        pcm[i] = static_cast<std::int16_t>(std::clamp(std::lround(s * 32768.0), -32768L, 32767L));
    }
    binio::put_span<std::int16_t>(os, pcm);
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace artic::dsp
