#include "core/svgplot.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace compindex {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

class SvgDoc {
  public:
    SvgDoc(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
              << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
              << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << num(width) << "\"/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
              << "\" fill=\"" << fill << "\"/>\n";
    }
    void text(double x, double y, const std::string& content, double size = 10.0,
              const std::string& anchor = "start", double rotate = 0.0) {
        body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
        if (rotate != 0.0) {
            body_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " " << num(y)
                  << ")\"";
        }
        body_ << ">" << escape_xml(content) << "</text>\n";
    }

    std::string str() const {
        std::ostringstream out;
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_)
            << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 " << num(width_) << " "
            << num(height_) << "\">\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

  private:
    double width_;
    double height_;
    std::ostringstream body_;
};

/// Diverging blue-white-red map for correlations in [-1, 1].
std::string heat_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (v > 0) {
        g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
        b = g;
    } else {
        r = static_cast<int>(std::lround(255.0 * (1.0 + v)));
        g = r;
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

double field(const csv::Table& t, std::size_t row, int col, const char* what) {
    if (col < 0) {
        throw DataError(std::string("plot input missing column: ") + what);
    }
    return csv::parse_double(t.rows[row][static_cast<std::size_t>(col)], what);
}

std::string heatmap(const csv::Table& corr) {
    if (corr.header.size() < 3) {
        throw DataError("correlation CSV needs id,group and at least one value column");
    }
    const std::size_t n_cols = corr.header.size() - 2;
    const std::size_t n_rows = corr.rows.size();
    const double cell = 14.0;
    const double margin = 110.0;
    SvgDoc svg(margin + cell * n_cols + 20.0, margin + cell * n_rows + 20.0);

    for (std::size_t c = 0; c < n_cols; ++c) {
        svg.text(margin + cell * (c + 0.5), margin - 6.0, corr.header[c + 2], 8.0, "start",
                 -60.0);
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        svg.text(margin - 6.0, margin + cell * (r + 0.72), corr.rows[r][0], 8.0, "end");
        for (std::size_t c = 0; c < n_cols; ++c) {
            const double v = csv::parse_double(corr.rows[r][c + 2], "correlation");
            svg.rect(margin + cell * c, margin + cell * r, cell - 1.0, cell - 1.0,
                     heat_color(v));
        }
    }
    return svg.str();
}

std::string rank_bands(const csv::Table& ua) {
    const int cu = ua.column("unit");
    const int cr = ua.column("reference");
    const int cm = ua.column("median");
    const int c5 = ua.column("p5");
    const int c95 = ua.column("p95");
    const std::size_t n = ua.rows.size();
    if (n == 0) {
        throw DataError("rank-band CSV has no rows");
    }

    // Units ordered by median rank.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return field(ua, a, cm, "median") < field(ua, b, cm, "median");
    });

    const double margin = 45.0;
    const double step = std::max(4.0, 900.0 / static_cast<double>(n));
    const double width = margin * 2 + step * n;
    const double height = 420.0;
    const double max_rank = static_cast<double>(n);
    const auto y_of = [&](double rank) {
        return margin + (height - 2 * margin) * (1.0 - (rank - 1.0) / std::max(1.0, max_rank - 1.0));
    };

    SvgDoc svg(width, height);
    svg.line(margin, y_of(1.0), margin, y_of(max_rank), "#333333");
    svg.text(10.0, y_of(max_rank) + 4.0, num(max_rank), 9.0);
    svg.text(10.0, y_of(1.0) + 4.0, "1", 9.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = order[i];
        const double x = margin + step * (i + 0.5);
        svg.line(x, y_of(field(ua, r, c5, "p5")), x, y_of(field(ua, r, c95, "p95")), "#9ecae1",
                 std::max(1.0, step * 0.5));
        svg.circle(x, y_of(field(ua, r, cm, "median")), 1.6, "#2ca25f");
        svg.circle(x, y_of(field(ua, r, cr, "reference")), 1.3, "#333333");
        if (cu >= 0 && n <= 40) {
            svg.text(x, height - margin + 12.0, ua.rows[r][static_cast<std::size_t>(cu)], 7.0,
                     "end", -60.0);
        }
    }
    return svg.str();
}

std::string sobol_bars(const csv::Table& sa) {
    const int cf = sa.column("factor");
    const int c1 = sa.column("s_first");
    const int ct = sa.column("s_total");
    const int clo = sa.column("ci_lo");
    const int chi = sa.column("ci_hi");
    const int clot = sa.column("ci_lo_total");
    const int chit = sa.column("ci_hi_total");
    const std::size_t n = sa.rows.size();
    if (n == 0) {
        throw DataError("sensitivity CSV has no rows");
    }

    const double margin = 50.0;
    const double group = 90.0;
    const double bar = 28.0;
    const double width = margin * 2 + group * n;
    const double height = 300.0;
    const auto y_of = [&](double s) {
        return height - margin - (height - 2 * margin) * std::clamp(s, 0.0, 1.05) / 1.05;
    };

    SvgDoc svg(width, height);
    svg.line(margin - 8.0, y_of(0.0), width - margin + 8.0, y_of(0.0), "#333333");
    svg.line(margin - 8.0, y_of(1.0), width - margin + 8.0, y_of(1.0), "#cccccc");
    svg.text(8.0, y_of(1.0) + 4.0, "1.0", 9.0);
    svg.text(8.0, y_of(0.0) + 4.0, "0.0", 9.0);

    for (std::size_t r = 0; r < n; ++r) {
        const std::string empty = sa.rows[r][static_cast<std::size_t>(c1)];
        const double x0 = margin + group * r;
        if (!empty.empty()) {
            const double s1 = field(sa, r, c1, "s_first");
            const double st = field(sa, r, ct, "s_total");
            svg.rect(x0, y_of(s1), bar, y_of(0.0) - y_of(s1), "#4477aa");
            svg.rect(x0 + bar + 6.0, y_of(st), bar, y_of(0.0) - y_of(st), "#ee6677");
            if (clo >= 0 && chi >= 0 && !sa.rows[r][static_cast<std::size_t>(clo)].empty()) {
                const double xm = x0 + bar / 2.0;
                svg.line(xm, y_of(field(sa, r, clo, "ci_lo")), xm,
                         y_of(field(sa, r, chi, "ci_hi")), "#222222");
                const double xt = x0 + bar + 6.0 + bar / 2.0;
                svg.line(xt, y_of(field(sa, r, clot, "ci_lo_total")), xt,
                         y_of(field(sa, r, chit, "ci_hi_total")), "#222222");
            }
        }
        if (cf >= 0) {
            svg.text(x0 + bar, height - margin + 14.0, sa.rows[r][static_cast<std::size_t>(cf)],
                     9.0, "middle");
        }
    }
    return svg.str();
}

std::string rank_shift_bars(const csv::Table& shifts) {
    const int cn = shifts.column("node");
    const int cs = shifts.column("mean_abs_rank_shift");
    const std::size_t n = shifts.rows.size();
    if (n == 0) {
        throw DataError("rank-shift CSV has no rows");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return field(shifts, a, cs, "shift") > field(shifts, b, cs, "shift");
    });
    double max_shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_shift = std::max(max_shift, field(shifts, i, cs, "shift"));
    }
    max_shift = std::max(max_shift, 1e-9);

    const double row_h = 16.0;
    const double margin = 130.0;
    const double plot_w = 420.0;
    SvgDoc svg(margin + plot_w + 60.0, 30.0 + row_h * n + 20.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = order[i];
        const double y = 30.0 + row_h * i;
        const double v = field(shifts, r, cs, "shift");
        svg.text(margin - 6.0, y + row_h * 0.7, shifts.rows[r][static_cast<std::size_t>(cn)],
                 9.0, "end");
        svg.rect(margin, y + 2.0, plot_w * v / max_shift, row_h - 5.0, "#4477aa");
        svg.text(margin + plot_w * v / max_shift + 4.0, y + row_h * 0.7, num(v), 8.0);
    }
    return svg.str();
}

} // namespace

std::string render_plot_string(const std::string& kind, const std::filesystem::path& in_csv) {
    const csv::Table table = csv::read_file(in_csv);
    if (kind == "corr-heatmap") {
        return heatmap(table);
    }
    if (kind == "rank-bands") {
        return rank_bands(table);
    }
    if (kind == "sobol-bars") {
        return sobol_bars(table);
    }
    if (kind == "rank-shift-bars") {
        return rank_shift_bars(table);
    }
    throw ConfigError("unknown plot kind: " + kind +
                      " (expected corr-heatmap, rank-bands, sobol-bars, rank-shift-bars)");
}

void render_plot(const std::string& kind, const std::filesystem::path& in_csv,
                 const std::filesystem::path& out_svg) {
    const std::string svg = render_plot_string(kind, in_csv);
    std::ofstream out(out_svg, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + out_svg.string());
    }
    out << svg;
}

} // namespace compindex
