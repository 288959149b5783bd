#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/raw_signature.hpp"

namespace sigverify {

// Column roles of one data line. Defaults follow the SVC2004 Task-2 layout:
// X Y timestamp button azimuth altitude pressure. Remapping the indices is
// the hook for tablets that log the same channels in a different order.
struct ColumnMap {
    int x = 0;
    int y = 1;
    int t = 2;
    int button = 3;
    int azimuth = 4;
    int altitude = 5;
    int pressure = 6;

    static constexpr int column_count = 7;
};

namespace detail {

inline long long parse_int_token(std::string_view tok, const std::string& source,
                                 std::size_t line_no, const char* what) {
    long long value = 0;
    const auto* begin = tok.data();
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(source + ":" + std::to_string(line_no) + ": malformed " +
                         what + " value '" + std::string(tok) + "'");
    return value;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace detail

// Parses one SVC2004-style recording: a point count on the first line, then
// one whitespace-separated integer row per sample. pen_up comes from the
// button column; a pressure==0 mismatch is resolved in favor of the button
// and reported through `warnings`. Throws ParseError with "<source>:<line>:"
// context on malformed input.
inline RawSignature parse_svc2004(std::istream& in, const std::string& source = "<stream>",
                                  std::vector<std::string>* warnings = nullptr,
                                  const ColumnMap& cols = {}) {
    std::string line;
    std::size_t line_no = 0;

    auto next_content_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!detail::split_ws(line).empty()) return true;
        }
        return false;
    };

    if (!next_content_line())
        throw ParseError(source + ":1: missing point-count line");
    const auto header = detail::split_ws(line);
    if (header.size() != 1)
        throw ParseError(source + ":" + std::to_string(line_no) +
                         ": point-count line must hold a single integer");
    const long long declared = detail::parse_int_token(header[0], source, line_no, "point-count");
    if (declared == 0)
        throw ParseError(source + ":" + std::to_string(line_no) + ": declared zero points");
    if (declared < 0)
        throw ParseError(source + ":" + std::to_string(line_no) + ": negative point count");

    RawSignature sig;
    sig.samples.reserve(static_cast<std::size_t>(declared));

    while (next_content_line()) {
        const auto tokens = detail::split_ws(line);
        if (static_cast<int>(tokens.size()) != ColumnMap::column_count)
            throw ParseError(source + ":" + std::to_string(line_no) + ": malformed line, expected " +
                             std::to_string(ColumnMap::column_count) + " columns, got " +
                             std::to_string(tokens.size()));
        if (static_cast<long long>(sig.samples.size()) == declared)
            throw ParseError(source + ":" + std::to_string(line_no) +
                             ": point-count mismatch, more samples than the declared " +
                             std::to_string(declared));

        RawSample s;
        s.x = detail::parse_int_token(tokens[static_cast<std::size_t>(cols.x)], source, line_no, "x");
        s.y = detail::parse_int_token(tokens[static_cast<std::size_t>(cols.y)], source, line_no, "y");
        s.t = detail::parse_int_token(tokens[static_cast<std::size_t>(cols.t)], source, line_no, "timestamp");
        const long long button =
            detail::parse_int_token(tokens[static_cast<std::size_t>(cols.button)], source, line_no, "button");
        s.azimuth = static_cast<int>(
            detail::parse_int_token(tokens[static_cast<std::size_t>(cols.azimuth)], source, line_no, "azimuth"));
        s.altitude = static_cast<int>(
            detail::parse_int_token(tokens[static_cast<std::size_t>(cols.altitude)], source, line_no, "altitude"));
        const long long pressure =
            detail::parse_int_token(tokens[static_cast<std::size_t>(cols.pressure)], source, line_no, "pressure");
        if (pressure < 0)
            throw ParseError(source + ":" + std::to_string(line_no) + ": negative pressure");

        s.pen_up = (button == 0);
        s.pressure = static_cast<double>(pressure);
        // Button status wins over the pressure cross-check.
        if (warnings && s.pen_up != (pressure == 0))
            warnings->push_back(source + ":" + std::to_string(line_no) +
                                ": button status and pressure disagree (button wins)");

        if (!sig.samples.empty() && s.t < sig.samples.back().t)
            throw ParseError(source + ":" + std::to_string(line_no) + ": timestamp decreases");
        sig.samples.push_back(s);
    }

    if (static_cast<long long>(sig.samples.size()) != declared)
        throw ParseError(source + ": point-count mismatch, declared " + std::to_string(declared) +
                         " but found " + std::to_string(sig.samples.size()));
    return sig;
}

inline RawSignature parse_svc2004(const std::string& text, const std::string& source = "<string>",
                                  std::vector<std::string>* warnings = nullptr,
                                  const ColumnMap& cols = {}) {
    std::istringstream in(text);
    return parse_svc2004(in, source, warnings, cols);
}

// Writes the 7-column layout back out. parse(write(sig)) reproduces the
// samples exactly; pressure is emitted with enough digits to round-trip.
inline std::string write_svc2004(const RawSignature& sig) {
    std::ostringstream out;
    out << sig.samples.size() << '\n';
    for (const auto& s : sig.samples) {
        out << s.x << ' ' << s.y << ' ' << s.t << ' ' << (s.pen_up ? 0 : 1) << ' ' << s.azimuth
            << ' ' << s.altitude << ' ';
        if (s.pressure == std::floor(s.pressure) && std::abs(s.pressure) < 1e15) {
            out << static_cast<long long>(s.pressure);
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", s.pressure);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace sigverify
