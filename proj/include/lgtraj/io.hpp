#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"
#include "fock2d.hpp"

namespace lgtraj
{
//---------------------------------------------------------------------------//
//! Locale-independent rendering with 17 significant digits.
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (res.ec != std::errc{})
        throw NumericRangeError("cli", "failed to format number");
    return std::string(buf, res.ptr);
}

/*!
 * CSV file with '#'-prefixed metadata lines.
 *
 * Comments go before the header; every line ends with '\n'.
 */
class CsvWriter
{
  public:
    explicit CsvWriter(const std::filesystem::path& path) : path_(path)
    {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw ValidationError("cli", "cannot open " + path.string() + " for writing");
    }

    void comment(std::string_view line)
    {
        std::istringstream is{std::string(line)};
        std::string part;
        while (std::getline(is, part))
            out_ << "# " << part << '\n';
    }

    void header(const std::vector<std::string>& columns) { write_fields(columns); }

    void row(const std::vector<double>& values)
    {
        std::vector<std::string> fields;
        fields.reserve(values.size());
        for (double v : values)
            fields.push_back(format_double(v));
        write_fields(fields);
    }

    void write_fields(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            if (i)
                out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close()
    {
        out_.close();
        if (!out_)
            throw ValidationError("cli", "error writing " + path_.string());
    }

    ~CsvWriter()
    {
        if (out_.is_open())
            out_.close();
    }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

//! Write a real matrix as CSV rows (one row per x sample).
inline void write_matrix_rows(CsvWriter& w, const RealMatrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row[static_cast<std::size_t>(j)] = m(i, j);
        w.row(row);
    }
}

} // namespace lgtraj
