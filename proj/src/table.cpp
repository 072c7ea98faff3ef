#include "ftraj/table.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ftraj/errors.hpp"

namespace ftraj {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& cell) {
    if (cell.empty()) return ResultRow::nan_value();
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw MissingData("result table: malformed numeric cell '" + cell +
                          "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

double ResultRow::nan_value() {
    return std::numeric_limits<double>::quiet_NaN();
}

const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols = {
        "model",     "L",     "J",      "t",
        "W",         "V",     "h",      "alpha",
        "gamma",     "t1",    "t2",     "t12",
        "p1",        "p2",    "tau_u",  "coupling_seed",
        "observable", "steady_value", "stderr", "t0",
        "tf",        "n_traj", "master_seed", "config_hash"};
    return cols;
}

std::string table_header_line() {
    std::string line;
    for (const auto& c : result_columns()) {
        if (!line.empty()) line += ',';
        line += c;
    }
    return line;
}

std::string table_row_line(const ResultRow& row) {
    std::ostringstream out;
    out << row.model << ',' << row.L << ',' << fmt(row.J) << ',' << fmt(row.t)
        << ',' << fmt(row.W) << ',' << fmt(row.V) << ',' << fmt(row.h) << ','
        << fmt(row.alpha) << ',' << fmt(row.gamma) << ',' << fmt(row.t1)
        << ',' << fmt(row.t2) << ',' << fmt(row.t12) << ',' << fmt(row.p1)
        << ',' << fmt(row.p2) << ',' << fmt(row.tau_u) << ',';
    if (row.coupling_seed >= 0) out << row.coupling_seed;
    out << ',' << row.observable << ',' << fmt(row.steady_value) << ','
        << fmt(row.stderr_value) << ',' << fmt(row.t0) << ',' << fmt(row.tf)
        << ',' << row.n_traj << ',' << row.master_seed << ','
        << row.config_hash;
    return out.str();
}

void write_table(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << table_header_line() << '\n';
    for (const auto& r : rows) out << table_row_line(r) << '\n';
}

std::vector<ResultRow> read_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw MissingData("result table: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != table_header_line())
        throw MissingData("result table: unrecognized header");
    std::vector<ResultRow> rows;
    const std::size_t n_cols = result_columns().size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv(line);
        if (cells.size() != n_cols)
            throw MissingData("result table: row with " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(n_cols));
        ResultRow r;
        int i = 0;
        r.model = cells[i++];
        r.L = static_cast<int>(parse_double(cells[i++]));
        r.J = parse_double(cells[i++]);
        r.t = parse_double(cells[i++]);
        r.W = parse_double(cells[i++]);
        r.V = parse_double(cells[i++]);
        r.h = parse_double(cells[i++]);
        r.alpha = parse_double(cells[i++]);
        r.gamma = parse_double(cells[i++]);
        r.t1 = parse_double(cells[i++]);
        r.t2 = parse_double(cells[i++]);
        r.t12 = parse_double(cells[i++]);
        r.p1 = parse_double(cells[i++]);
        r.p2 = parse_double(cells[i++]);
        r.tau_u = parse_double(cells[i++]);
        const std::string& seed_cell = cells[i++];
        r.coupling_seed =
            seed_cell.empty() ? -1 : std::atoll(seed_cell.c_str());
        r.observable = cells[i++];
        r.steady_value = parse_double(cells[i++]);
        r.stderr_value = parse_double(cells[i++]);
        r.t0 = parse_double(cells[i++]);
        r.tf = parse_double(cells[i++]);
        r.n_traj = static_cast<int>(parse_double(cells[i++]));
        r.master_seed = std::strtoull(cells[i++].c_str(), nullptr, 10);
        r.config_hash = cells[i++];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingData("result table: cannot open " + path);
    return read_table(in);
}

}  // namespace ftraj
