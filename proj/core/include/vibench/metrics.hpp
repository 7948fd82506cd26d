#pragma once

#include "vibench/solvers.hpp"

#include <string>
#include <vector>

namespace vibench::bench {

// One CSV row; the column order is fixed.
struct CsvRow {
    std::uint64_t k = 0;
    double gamma = kNaN;
    double omega = kNaN;
    double sq_dist = kNaN;
    double r_metric = kNaN;
    double op_norm_sq = kNaN;
    double rel_err = kNaN;
    double rel_opnorm = kNaN;
    std::uint64_t oracle_calls = 0;
};

inline constexpr const char* kTraceColumns =
    "k,gamma,omega,sq_dist,r_metric,op_norm_sq,rel_err,rel_opnorm,oracle_calls";

// rel_err = ||x_k - x*||^2 / ||x_0 - x*||^2, rel_opnorm = ||F(x_hat_k)||^2 / ||F(x_0)||^2
std::vector<double> relative_error(const Trace& trace);
std::vector<double> relative_opnorm(const Trace& trace);
std::vector<CsvRow> to_rows(const Trace& trace);

std::string format_double(double v);  // %.17g, "nan" / "inf" spelled out
double parse_double(const std::string& s);

std::string trace_csv(const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);
std::vector<CsvRow> parse_trace_csv(const std::string& text);
std::vector<CsvRow> read_trace_csv(const std::string& path);

struct Stats {
    double mean = kNaN;
    double median = kNaN;
    double min = kNaN;
    double max = kNaN;
    std::size_t count = 0;
};

// Order-independent: values are sorted before pairwise summation. NaNs are skipped.
Stats summarize(std::vector<double> values);

struct AggregateRow {
    std::uint64_t k = 0;
    Stats rel_err;
    Stats rel_opnorm;
    Stats r_metric;
    Stats op_norm_sq;
};

std::vector<AggregateRow> aggregate(const std::vector<std::vector<CsvRow>>& per_seed);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Line chart with linear x and log10 y; non-positive or non-finite points are skipped.
std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace vibench::bench
