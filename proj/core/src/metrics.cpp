#include "vibench/metrics.hpp"
#include "vibench/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace vibench::bench {

namespace {

double ratio(double num, double den) {
    if (std::isnan(num) || !(den > 0.0)) return kNaN;
    return num / den;
}

}  // namespace

std::vector<double> relative_error(const Trace& trace) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) out.push_back(ratio(r.sq_dist, trace.summary.initial_sq_dist));
    return out;
}

std::vector<double> relative_opnorm(const Trace& trace) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) out.push_back(ratio(r.op_norm_sq, trace.summary.initial_op_norm_sq));
    return out;
}

std::vector<CsvRow> to_rows(const Trace& trace) {
    std::vector<CsvRow> rows;
    rows.reserve(trace.records.size());
    for (const auto& r : trace.records) {
        CsvRow row;
        row.k = r.k;
        row.gamma = r.gamma;
        row.omega = r.omega;
        row.sq_dist = r.sq_dist;
        row.r_metric = r.r_metric;
        row.op_norm_sq = r.op_norm_sq;
        row.rel_err = ratio(r.sq_dist, trace.summary.initial_sq_dist);
        row.rel_opnorm = ratio(r.op_norm_sq, trace.summary.initial_op_norm_sq);
        row.oracle_calls = r.oracle_calls;
        rows.push_back(row);
    }
    return rows;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "nan") return kNaN;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw Error("csv: cannot parse number '" + s + "'");
    }
    return v;
}

std::string trace_csv(const Trace& trace) {
    std::string out = kTraceColumns;
    out += '\n';
    for (const auto& r : to_rows(trace)) {
        out += std::to_string(r.k);
        for (double v : {r.gamma, r.omega, r.sq_dist, r.r_metric, r.op_norm_sq, r.rel_err, r.rel_opnorm}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += std::to_string(r.oracle_calls);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("failed writing '" + path + "'");
}

void write_trace_csv(const std::string& path, const Trace& trace) {
    write_text_file(path, trace_csv(trace));
}

std::vector<CsvRow> parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kTraceColumns) {
        throw Error("csv: unexpected header");
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 9) throw Error("csv: expected 9 columns, got " + std::to_string(cells.size()));
        CsvRow r;
        r.k = std::stoull(cells[0]);
        r.gamma = parse_double(cells[1]);
        r.omega = parse_double(cells[2]);
        r.sq_dist = parse_double(cells[3]);
        r.r_metric = parse_double(cells[4]);
        r.op_norm_sq = parse_double(cells[5]);
        r.rel_err = parse_double(cells[6]);
        r.rel_opnorm = parse_double(cells[7]);
        r.oracle_calls = std::stoull(cells[8]);
        rows.push_back(r);
    }
    return rows;
}

std::vector<CsvRow> read_trace_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_trace_csv(ss.str());
}

Stats summarize(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
                 values.end());
    Stats s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    const std::size_t m = values.size();
    s.median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    s.mean = pairwise_sum(values) / static_cast<double>(m);
    return s;
}

std::vector<AggregateRow> aggregate(const std::vector<std::vector<CsvRow>>& per_seed) {
    std::map<std::uint64_t, std::vector<const CsvRow*>> by_k;
    for (const auto& rows : per_seed)
        for (const auto& r : rows) by_k[r.k].push_back(&r);
    std::vector<AggregateRow> out;
    out.reserve(by_k.size());
    for (const auto& [k, rows] : by_k) {
        std::vector<double> re, ro, rm, on;
        for (const CsvRow* r : rows) {
            re.push_back(r->rel_err);
            ro.push_back(r->rel_opnorm);
            rm.push_back(r->r_metric);
            on.push_back(r->op_norm_sq);
        }
        AggregateRow a;
        a.k = k;
        a.rel_err = summarize(std::move(re));
        a.rel_opnorm = summarize(std::move(ro));
        a.r_metric = summarize(std::move(rm));
        a.op_norm_sq = summarize(std::move(on));
        out.push_back(a);
    }
    return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "k";
    for (const char* m : {"rel_err", "rel_opnorm", "r_metric", "op_norm_sq"}) {
        for (const char* s : {"mean", "median", "min", "max"}) {
            out += ',';
            out += m;
            out += '_';
            out += s;
        }
    }
    out += ",seeds\n";
    for (const auto& r : rows) {
        out += std::to_string(r.k);
        for (const Stats* s : {&r.rel_err, &r.rel_opnorm, &r.r_metric, &r.op_norm_sq}) {
            for (double v : {s->mean, s->median, s->min, s->max}) {
                out += ',';
                out += format_double(v);
            }
        }
        out += ',';
        out += std::to_string(std::max({r.rel_err.count, r.op_norm_sq.count}));
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series) {
    const double W = 720, H = 440, left = 80, right = 170, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
            const double ly = std::log10(s.y[i]);
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ly);
            ymax = std::max(ymax, ly);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0; xmax = 1; ymin = -1; ymax = 0;
    }
    if (xmax == xmin) xmax = xmin + 1;
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax == ymin) ymax = ymin + 1;

    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const int ystep = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / 10.0)));
    for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += ystep) {
        const double y = py(e);
        os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
           << static_cast<long long>(std::llround(xv)) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">iteration k</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i])) continue;
            os << px(s.x[i]) << ',' << py(std::log10(s.y[i])) << ' ';
        }
        os << "\"/>\n";
        const double ly = top + 16 + 18.0 * static_cast<double>(si);
        os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace vibench::bench
