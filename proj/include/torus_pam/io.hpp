/*
 * io.hpp - CSV tables and the binary field format.
 *
 * Binary field file, little-endian throughout:
 *   u32 d, u32 N, f64 dt, u64 seed, then N^d f64 values (axis 0 fastest);
 * a file may hold several records back to back.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace tpam {

struct FieldRecord {
    std::uint32_t d = 1;
    std::uint32_t n = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> values;
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v)
{
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
bool get_le(std::istream& is, T& v)
{
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) return false;
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return true;
}

}  // namespace detail

inline void write_field_record(std::ostream& os, const FieldRecord& r)
{
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < r.d; ++i) total *= r.n;
    require(r.values.size() == total, "write_field_record: value count does not match N^d");
    detail::put_le(os, r.d);
    detail::put_le(os, r.n);
    detail::put_le(os, r.dt);
    detail::put_le(os, r.seed);
    for (double v : r.values) detail::put_le(os, v);
}

inline std::vector<FieldRecord> read_field_records(std::istream& is)
{
    std::vector<FieldRecord> out;
    FieldRecord r;
    while (detail::get_le(is, r.d)) {
        bool ok = detail::get_le(is, r.n) && detail::get_le(is, r.dt) && detail::get_le(is, r.seed);
        require(ok && r.d >= 1 && r.d <= 3, "read_field_records: truncated or invalid header");
        std::size_t total = 1;
        for (std::uint32_t i = 0; i < r.d; ++i) total *= r.n;
        r.values.resize(total);
        for (double& v : r.values) require(detail::get_le(is, v), "read_field_records: truncated payload");
        out.push_back(r);
    }
    return out;
}

inline void write_field_file(const std::string& path, const std::vector<FieldRecord>& records)
{
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "write_field_file: cannot open " + path);
    for (const auto& r : records) write_field_record(os, r);
}

inline std::vector<FieldRecord> read_field_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "read_field_file: cannot open " + path);
    return read_field_records(is);
}

// Round-trip formatting for doubles.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path)
    {
        require(static_cast<bool>(os_), "CsvWriter: cannot open " + path);
        columns_ = header.size();
        write_row_strings(header);
    }

    void row(const std::vector<double>& values)
    {
        std::vector<std::string> s;
        for (double v : values) s.push_back(format_double(v));
        write_row_strings(s);
    }

    void row_strings(const std::vector<std::string>& values) { write_row_strings(values); }

private:
    void write_row_strings(const std::vector<std::string>& values)
    {
        require(values.size() == columns_, "CsvWriter: row width differs from header");
        for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
        os_ << '\n';
    }

    std::ofstream os_;
    std::size_t columns_ = 0;
};

}  // namespace tpam
