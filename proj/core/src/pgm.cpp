#include "defreg/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "defreg/errors.hpp"

namespace defreg {

namespace {

class PgmReader {
public:
    explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }

    [[noreturn]] static void fail_at(const std::string& what, std::size_t offset) {
        throw FormatError("PGM: " + what + " at byte offset " + std::to_string(offset));
    }

    void skip_whitespace_and_comments() {
        while (!at_end()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (!at_end() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') {
                    ++pos_;
                }
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_integer(const char* what) {
        skip_whitespace_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (!at_end() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) {
                fail_at(std::string("oversized ") + what, start);
            }
            ++pos_;
        }
        if (pos_ == start) {
            if (at_end()) {
                fail_at(std::string("truncated data, expected ") + what, start);
            }
            fail_at(std::string("expected ") + what, start);
        }
        return value;
    }

    std::uint8_t byte() { return bytes_[pos_++]; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RawPgm {
    int width = 0;
    int height = 0;
    long maxval = 0;
    std::vector<long> samples;
};

RawPgm parse_raw(std::span<const std::uint8_t> bytes) {
    PgmReader r(bytes);
    if (bytes.size() < 2) {
        r.fail("truncated header");
    }
    if (bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        r.fail("unsupported magic");
    }
    const bool binary = bytes[1] == '5';
    r.advance(2);
    if (!r.at_end() && !std::isspace(bytes[2]) && bytes[2] != '#') {
        r.fail("unsupported magic");
    }

    RawPgm raw;
    const std::size_t width_offset = r.offset();
    raw.width = static_cast<int>(r.read_integer("width"));
    const std::size_t height_offset = r.offset();
    raw.height = static_cast<int>(r.read_integer("height"));
    const std::size_t maxval_offset = r.offset();
    raw.maxval = r.read_integer("maxval");
    if (raw.width < 1) {
        PgmReader::fail_at("width must be positive", width_offset);
    }
    if (raw.height < 1) {
        PgmReader::fail_at("height must be positive", height_offset);
    }
    if (raw.maxval < 1 || raw.maxval > 65535) {
        PgmReader::fail_at("maxval " + std::to_string(raw.maxval) + " outside 1..65535",
                           maxval_offset);
    }

    const auto count = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height);
    raw.samples.resize(count);
    if (binary) {
        if (r.at_end() || !std::isspace(bytes[r.offset()])) {
            r.fail("missing whitespace after maxval");
        }
        r.advance(1);
        const std::size_t bytes_per = raw.maxval > 255 ? 2 : 1;
        if (r.remaining() < count * bytes_per) {
            PgmReader::fail_at("truncated payload: need " + std::to_string(count * bytes_per) +
                                   " bytes, have " + std::to_string(r.remaining()),
                               r.offset());
        }
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t at = r.offset();
            long v = r.byte();
            if (bytes_per == 2) {
                v = (v << 8) | r.byte();
            }
            if (v > raw.maxval) {
                PgmReader::fail_at("sample exceeds maxval", at);
            }
            raw.samples[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            r.skip_whitespace_and_comments();
            const std::size_t at = r.offset();
            const long v = r.read_integer("sample");
            if (v > raw.maxval) {
                PgmReader::fail_at("sample exceeds maxval", at);
            }
            raw.samples[i] = v;
        }
    }
    return raw;
}

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
    const RawPgm raw = parse_raw(bytes);
    std::vector<double> data(raw.samples.size());
    const auto maxval = static_cast<double>(raw.maxval);
    std::transform(raw.samples.begin(), raw.samples.end(), data.begin(),
                   [maxval](long v) { return static_cast<double>(v) / maxval; });
    return GrayImage(raw.width, raw.height, std::move(data));
}

GrayImage load_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_pgm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int expected_width,
                                    int expected_height) {
    const auto bytes = read_file(path);
    const RawPgm raw = parse_raw(bytes);
    if (raw.width != expected_width || raw.height != expected_height) {
        throw ParameterError("mask " + path.string() + " is " + std::to_string(raw.width) + "x" +
                             std::to_string(raw.height) + ", expected " +
                             std::to_string(expected_width) + "x" +
                             std::to_string(expected_height));
    }
    std::vector<std::uint8_t> mask(raw.samples.size());
    std::transform(raw.samples.begin(), raw.samples.end(), mask.begin(),
                   [](long v) { return static_cast<std::uint8_t>(v != 0 ? 1 : 0); });
    return mask;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image, int maxval) {
    if (maxval < 1 || maxval > 65535) {
        throw ParameterError("maxval must be in 1..65535");
    }
    const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                               std::to_string(image.height()) + "\n" + std::to_string(maxval) +
                               "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const bool wide = maxval > 255;
    out.reserve(out.size() + image.size() * (wide ? 2 : 1));
    for (double v : image.intensities()) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
        if (wide) {
            out.push_back(static_cast<std::uint8_t>(q >> 8));
        }
        out.push_back(static_cast<std::uint8_t>(q & 0xff));
    }
    return out;
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval) {
    const auto bytes = encode_pgm(image, maxval);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace defreg
