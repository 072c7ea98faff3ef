#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ftraj {

// One steady-state record: a single (parameter point, observable) pair.
// The parameter columns are the superset over all engines; a column that
// does not apply to a row's model is NaN in memory and empty in the CSV.
// Rows are append-only and never mutated.
struct ResultRow {
    std::string model;
    int L = 0;
    double J = nan_value();
    double t = nan_value();
    double W = nan_value();
    double V = nan_value();
    double h = nan_value();
    double alpha = nan_value();
    double gamma = nan_value();
    double t1 = nan_value();
    double t2 = nan_value();
    double t12 = nan_value();
    double p1 = nan_value();
    double p2 = nan_value();
    double tau_u = nan_value();
    long long coupling_seed = -1;  // -1 = not applicable
    std::string observable;
    double steady_value = 0.0;
    double stderr_value = 0.0;
    double t0 = 0.0;
    double tf = 0.0;
    int n_traj = 0;
    std::uint64_t master_seed = 0;
    std::string config_hash;

    static double nan_value();
};

// The documented, stable column order of results.csv.
const std::vector<std::string>& result_columns();

std::string table_header_line();
// One CSV line; doubles are rendered with 17 significant digits so reruns
// of the same configuration are byte-identical.
std::string table_row_line(const ResultRow& row);

void write_table(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_table(std::istream& in);
std::vector<ResultRow> read_table_file(const std::string& path);

}  // namespace ftraj
