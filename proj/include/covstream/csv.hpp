#pragma once

#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace covstream {

struct CsvTable {
    /// Column names when the first row was a header, otherwise empty.
    std::vector<std::string> header;
    /// One column per CSV row (time point), one row per CSV column (variable).
    Eigen::MatrixXd observations;
};

/// Reads a comma-separated table of reals, rows = time points. A first row
/// containing any non-numeric cell is taken as a header. Throws InputError
/// naming the offending row and column on ragged rows or bad cells.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Writes observations (p x n) as n CSV rows.
void write_csv(std::ostream& out, const Eigen::MatrixXd& observations);

}  // namespace covstream
