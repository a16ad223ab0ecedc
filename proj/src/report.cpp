#include "esw/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "esw/errors.hpp"

namespace esw {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("cannot open for writing: " + path);
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw format_error("write failed: " + path);
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

} // namespace

void write_results_csv(const std::vector<RunResult>& results, const std::string& param_name,
                       const std::string& path) {
    if (results.empty()) throw std::invalid_argument("write_results_csv: no results");
    std::string out = "method,trial," + param_name + ",oa,wall_ms\n";
    for (const RunResult& r : results) {
        out += r.method;
        out += ',';
        out += std::to_string(r.trial);
        out += ',';
        out += std::to_string(r.param);
        out += ',';
        out += fmt("%.10g", r.oa);
        out += ',';
        out += fmt("%.3f", r.wall_ms);
        out += '\n';
    }
    write_text(path, out);
}

void write_curve_svg(const std::vector<Curve>& curves, const std::string& x_label,
                     const std::string& y_label, const std::string& path) {
    if (curves.empty()) throw std::invalid_argument("write_curve_svg: no curves");
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const Curve& c : curves) {
        if (c.xs.empty() || c.xs.size() != c.ys.size())
            throw std::invalid_argument("write_curve_svg: curve '" + c.name +
                                        "' is empty or has mismatched lengths");
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            if (!std::isfinite(c.xs[i]) || !std::isfinite(c.ys[i]))
                throw std::invalid_argument("write_curve_svg: non-finite point in '" + c.name +
                                            "'");
            if (first) {
                xmin = xmax = c.xs[i];
                ymin = ymax = c.ys[i];
                first = false;
            } else {
                xmin = std::min(xmin, c.xs[i]);
                xmax = std::max(xmax, c.xs[i]);
                ymin = std::min(ymin, c.ys[i]);
                ymax = std::max(ymax, c.ys[i]);
            }
        }
    }
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double left = 70, right = 770, top = 30, bottom = 450;
    const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    const auto py = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#8c564b"};
    constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
    s += "<rect width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
    s += "<line x1=\"70\" y1=\"450\" x2=\"770\" y2=\"450\" stroke=\"#000000\"/>\n";
    s += "<line x1=\"70\" y1=\"30\" x2=\"70\" y2=\"450\" stroke=\"#000000\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        const double fx = xmin + (xmax - xmin) * t / 4.0;
        const double fy = ymin + (ymax - ymin) * t / 4.0;
        const std::string gx = fmt("%.2f", px(fx));
        const std::string gy = fmt("%.2f", py(fy));
        s += "<line x1=\"" + gx + "\" y1=\"450\" x2=\"" + gx +
             "\" y2=\"455\" stroke=\"#000000\"/>\n";
        s += "<text x=\"" + gx + "\" y=\"468\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"middle\">" + fmt("%.4g", fx) + "</text>\n";
        s += "<line x1=\"65\" y1=\"" + gy + "\" x2=\"70\" y2=\"" + gy +
             "\" stroke=\"#000000\"/>\n";
        s += "<text x=\"60\" y=\"" + gy + "\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"end\" dominant-baseline=\"middle\">" + fmt("%.4g", fy) + "</text>\n";
    }
    s += "<text x=\"420\" y=\"492\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\">" + escape_xml(x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"240\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 18 240)\">" + escape_xml(y_label) +
         "</text>\n";

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        s += "<polyline fill=\"none\" stroke=\"";
        s += color;
        s += "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t p = 0; p < curves[i].xs.size(); ++p) {
            if (p > 0) s += ' ';
            s += fmt("%.2f", px(curves[i].xs[p])) + "," + fmt("%.2f", py(curves[i].ys[p]));
        }
        s += "\"/>\n";
        const double ly = 42.0 + 18.0 * static_cast<double>(i);
        s += "<line x1=\"640\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"668\" y2=\"" +
             fmt("%.2f", ly) + "\" stroke=\"";
        s += color;
        s += "\" stroke-width=\"1.5\"/>\n";
        s += "<text x=\"674\" y=\"" + fmt("%.2f", ly + 4.0) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(curves[i].name) +
             "</text>\n";
    }
    s += "</svg>\n";
    write_text(path, s);
}

void write_histogram_csv(const HistogramSamples& samples, int n_bins, const std::string& path) {
    if (n_bins < 1) throw std::invalid_argument("write_histogram_csv: n_bins must be >= 1");
    if (samples.same_class.empty() && samples.different_class.empty())
        throw std::invalid_argument("write_histogram_csv: no samples");

    double maxv = 0.0;
    for (const double v : samples.same_class) maxv = std::max(maxv, v);
    for (const double v : samples.different_class) maxv = std::max(maxv, v);
    if (maxv <= 0.0) maxv = 1.0;
    const double width = maxv / n_bins;

    const auto nb = static_cast<std::size_t>(n_bins);
    std::vector<std::int64_t> same(nb, 0), diff(nb, 0);
    const auto bin_of = [&](double v) {
        const auto b = static_cast<std::int64_t>(v / width);
        return static_cast<std::size_t>(std::clamp<std::int64_t>(b, 0, n_bins - 1));
    };
    for (const double v : samples.same_class) ++same[bin_of(v)];
    for (const double v : samples.different_class) ++diff[bin_of(v)];

    std::string out = "bin_lo,bin_hi,same_class,different_class\n";
    for (std::size_t b = 0; b < nb; ++b) {
        out += fmt("%.6g", width * static_cast<double>(b));
        out += ',';
        out += fmt("%.6g", width * static_cast<double>(b + 1));
        out += ',';
        out += std::to_string(same[b]);
        out += ',';
        out += std::to_string(diff[b]);
        out += '\n';
    }
    write_text(path, out);
}

} // namespace esw
