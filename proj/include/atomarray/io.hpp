// io.hpp — CSV tables with '#' manifest lines and line-oriented JSON trajectory logs

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "atomarray/dynamics.hpp"

namespace atomarray {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    /// '# key: value' line; must precede the header.
    void manifest(const std::string& key, const std::string& value);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& fields);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

/// RFC-4180 quoting for a single field.
std::string csv_field(const std::string& s);
/// Round-trip formatting of a double.
std::string format_double(double v);

/// One JSON object per trajectory: seed, jump log and the scalar-width channels.
void write_trajectory_jsonl(const std::string& path, const Ensemble& ens, const SamplerSet& samplers);

/// 16-hex-digit FNV-1a digest.
std::string digest(const std::string& text);

} // namespace atomarray
