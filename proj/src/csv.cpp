#include "covstream/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <string_view>

#include "covstream/error.hpp"

namespace covstream {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return cells;
}

std::optional<double> parse_real(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line);
        std::vector<double> row;
        row.reserve(cells.size());
        std::optional<std::size_t> bad;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = parse_real(cells[c]);
            if (!v) {
                bad = c;
                break;
            }
            row.push_back(*v);
        }
        if (bad) {
            if (rows.empty() && table.header.empty()) {
                for (auto c : cells) {
                    table.header.emplace_back(c);
                }
                width = cells.size();
                continue;
            }
            throw InputError("CSV row " + std::to_string(line_no) + ", column " +
                             std::to_string(*bad + 1) + ": '" + std::string(cells[*bad]) +
                             "' is not a finite number");
        }
        if (width == 0) {
            width = row.size();
        }
        if (row.size() != width) {
            throw InputError("CSV row " + std::to_string(line_no) + " has " +
                             std::to_string(row.size()) + " columns, expected " +
                             std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    table.observations.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t k = 0; k < width; ++k) {
            table.observations(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = rows[t][k];
        }
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open CSV file '" + path + "'");
    }
    return read_csv(in);
}

void write_csv(std::ostream& out, const Eigen::MatrixXd& observations) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index t = 0; t < observations.cols(); ++t) {
        for (Eigen::Index k = 0; k < observations.rows(); ++k) {
            if (k > 0) {
                out << ',';
            }
            out << observations(k, t);
        }
        out << '\n';
    }
}

}  // namespace covstream
