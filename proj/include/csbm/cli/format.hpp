#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace csbm::cli {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

/// RFC 4180 quoting for fields that need it.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream &out) : out_(out) {}

    void comment(std::string_view text) { out_ << "# " << text << "\r\n"; }

    void header(const std::vector<std::string> &cols) {
        width_ = cols.size();
        row(cols);
    }

    void row(const std::vector<std::string> &fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out_ << ',';
            out_ << csv_field(fields[i]);
        }
        out_ << "\r\n";
    }

    std::size_t width() const noexcept { return width_; }

private:
    std::ostream &out_;
    std::size_t width_ = 0;
};

} // namespace csbm::cli
