// io.cpp — Output writers

#include "atomarray/io.hpp"

#include <cstdint>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace atomarray {

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path)
{
    if (!out_) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
}

void CsvWriter::manifest(const std::string& key, const std::string& value)
{
    if (columns_) throw std::logic_error("manifest lines must precede the header");
    out_ << "# " << key << ": " << value << '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns)
{
    if (columns.empty()) throw std::invalid_argument("CSV header must not be empty");
    columns_ = columns.size();
    row(columns);
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> f;
    f.reserve(values.size());
    for (double v : values) f.push_back(format_double(v));
    row(f);
}

void CsvWriter::row(const std::vector<std::string>& fields)
{
    if (fields.size() != columns_) throw std::invalid_argument("CSV row width differs from header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string format_double(double v)
{
    return fmt::format("{}", v);
}

void write_trajectory_jsonl(const std::string& path, const Ensemble& ens, const SamplerSet& samplers)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    for (const auto& r : ens.records) {
        nlohmann::json j;
        j["index"] = r.index;
        j["seed"] = r.seed;
        auto& jumps = j["jumps"] = nlohmann::json::array();
        for (const auto& e : r.jumps) jumps.push_back({e.t, e.channel});
        j["t_ground"] = r.t_ground;
        j["leakage"] = r.leakage;
        auto& obs = j["integral"] = nlohmann::json::object();
        for (const auto& o : samplers.observables()) {
            if (o.width > 4) continue;
            const int off = samplers.offset(o.name);
            auto& arr = obs[o.name] = nlohmann::json::array();
            for (int k = 0; k < o.width; ++k) arr.push_back(r.integral(off + k).real());
        }
        out << j.dump() << '\n';
    }
}

std::string digest(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

} // namespace atomarray
