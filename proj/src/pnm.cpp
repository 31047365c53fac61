#include "dbrn/pnm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace dbrn {

namespace {

// Next header token, skipping whitespace and '#' comment lines.
long next_int(std::istream& in, const std::string& path, const char* what) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch)) {
        throw FormatError("'" + path + "': expected " + what + " in PNM header");
    }
    long v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + (ch - '0');
        if (v > 1'000'000'000L) throw FormatError("'" + path + "': PNM header value too large");
        ch = in.get();
    }
    if (ch != EOF) in.unget();
    return v;
}

} // namespace

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pnm: cannot open '" + path + "'");

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    int channels;
    if (m0 == 'P' && m1 == '5') {
        channels = 1;
    } else if (m0 == 'P' && m1 == '6') {
        channels = 3;
    } else {
        throw FormatError("'" + path + "': not a binary PGM/PPM (magic must be P5 or P6)");
    }

    const long w = next_int(in, path, "width");
    const long h = next_int(in, path, "height");
    const long maxval = next_int(in, path, "maxval");
    if (w < 1 || h < 1) throw FormatError("'" + path + "': bad PNM dimensions");
    if (maxval < 1 || maxval > 255) {
        throw FormatError("'" + path + "': unsupported maxval " + std::to_string(maxval) +
                          " (must be 1..255)");
    }
    in.get(); // single whitespace byte before the payload

    const std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::string raw(n, '\0');
    in.read(raw.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError("'" + path + "': truncated PNM payload");
    }

    std::vector<double> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        px[i] = static_cast<double>(static_cast<unsigned char>(raw[i])) /
                static_cast<double>(maxval);
    }
    return Image(static_cast<int>(h), static_cast<int>(w), channels, std::move(px));
}

void write_pgm(const Image& image, const std::string& path) {
    if (image.channels != 1) {
        throw ParameterError("write_pgm: image must have one channel");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_pgm: cannot open '" + path + "' for writing");
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::string raw;
    raw.reserve(image.pixels.size());
    for (double v : image.pixels) {
        int q = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
        raw.push_back(static_cast<char>(q));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write_pgm: write to '" + path + "' failed");
}

} // namespace dbrn
