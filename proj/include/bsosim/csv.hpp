#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bsosim/errors.hpp"

namespace bsosim {

// 17 significant digits, '.' decimal, round-trippable
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Comma-separated values with a '#'-prefixed header of resolved parameters
// and LF line endings.
class CsvWriter {
public:
    void comment(const std::string& key, const std::string& value) {
        head_ += "# " + key + " = " + value + "\n";
    }

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns[i];
        }
        body_ += '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    std::string str() const { return head_ + body_; }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open output file: " + path);
        const std::string s = str();
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    std::string head_;
    std::string body_;
};

} // namespace bsosim
