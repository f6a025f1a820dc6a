#include "flipsim/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "flipsim/csv.hpp"
#include "flipsim/metrics.hpp"

namespace flipsim {

namespace {

constexpr std::array<const char*, 12> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double nice_step(double span, int target_ticks) {
    const double raw = span / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
    return nice * mag;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range padded(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 1.0;
        return {lo - pad, hi + pad};
    }
    return {lo, hi};
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    const double left = 70, right = 190, top = 40, bottom = 55;
    const double w = spec.width, h = spec.height;
    const double pw = w - left - right, ph = h - top - bottom;

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : spec.series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    ymin = std::min(ymin, 0.0);
    const Range xr = padded(xmin, xmax);
    const Range yr = padded(ymin, ymax);
    auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(spec.title) << "</text>\n";

    const double xstep = nice_step(xr.hi - xr.lo, 6);
    for (double t = std::ceil(xr.lo / xstep) * xstep; t <= xr.hi + 1e-9 * xstep; t += xstep) {
        o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(t))
          << "\" y2=\"" << num(top + ph) << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + ph + 16)
          << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    const double ystep = nice_step(yr.hi - yr.lo, 5);
    for (double t = std::ceil(yr.lo / ystep) * ystep; t <= yr.hi + 1e-9 * ystep; t += ystep) {
        o << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(left + pw)
          << "\" y2=\"" << num(sy(t)) << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4)
          << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 12)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        const auto& s = spec.series[i];
        const char* color = kPalette[i % kPalette.size()];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.points.size(); ++k) {
            if (k) o << ' ';
            o << num(sx(s.points[k].first)) << ',' << num(sy(s.points[k].second));
        }
        o << "\"/>\n";
        const double ly = top + 10 + 18 * static_cast<double>(i);
        o << "<line x1=\"" << num(left + pw + 15) << "\" y1=\"" << num(ly) << "\" x2=\""
          << num(left + pw + 40) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(left + pw + 46) << "\" y=\"" << num(ly + 4) << "\">"
          << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

namespace {

using nlohmann::json;

struct IndexedCurve {
    std::string kind;
    double value;
    double p;
    Curve curve;
};

Curve load_curve(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PlotError("missing curve file " + path.string());
    try {
        return read_curve_csv(in);
    } catch (const std::invalid_argument& e) {
        throw PlotError(path.filename().string() + ": " + e.what());
    }
}

PlotSeries to_series(std::string label, const Curve& c) {
    PlotSeries s{std::move(label), {}};
    s.points.reserve(c.points.size());
    for (const auto& p : c.points) s.points.emplace_back(p.x, p.mean);
    return s;
}

void write(const std::filesystem::path& path, const std::string& text,
           std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PlotError("cannot write " + path.string());
    out << text;
    written.push_back(path);
}

}  // namespace

std::vector<std::filesystem::path> render_figures(const std::filesystem::path& curves_dir,
                                                  const std::filesystem::path& out_dir) {
    std::ifstream in(curves_dir / "index.json");
    if (!in) throw PlotError("no index.json in " + curves_dir.string());
    json index;
    try {
        index = json::parse(in);
    } catch (const json::parse_error& e) {
        throw PlotError(std::string("index.json is not valid JSON: ") + e.what());
    }
    const std::string set = index.value("experiment_set", "fixed");
    const std::string strategy = index.value("strategy", "epsilon-greedy");
    const std::string symbol = strategy == "softmax"           ? "tau"
                               : strategy == "dynamic-epsilon" ? "L"
                                                               : "eps";

    std::vector<IndexedCurve> curves;
    for (const auto& entry : index.at("curves")) {
        curves.push_back({entry.at("kind").get<std::string>(), entry.at("value").get<double>(),
                          entry.at("p").get<double>(),
                          load_curve(curves_dir / entry.at("file").get<std::string>())});
    }

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    // Group by p for the per-probability families.
    std::map<double, std::vector<const IndexedCurve*>> learning_by_p, cost_by_p;
    for (const auto& c : curves) {
        if (c.kind == "learning") learning_by_p[c.p].push_back(&c);
        if (c.kind == "cost") cost_by_p[c.p].push_back(&c);
    }

    if (set == "dynamic") {
        std::map<double, std::vector<const IndexedCurve*>> by_value;
        for (const auto& c : curves) {
            if (c.kind == "learning") by_value[c.value].push_back(&c);
        }
        for (const auto& [value, group] : by_value) {
            PlotSpec spec{"Dynamic epsilon-greedy, L=" + csv::format_double(value), "episode",
                          "smoothed discounted return", {}};
            for (const auto* c : group) {
                spec.series.push_back(to_series("p=" + csv::format_double(c->p), c->curve));
            }
            write(out_dir / ("dynamic_L" + csv::format_double(value) + ".svg"), render_svg(spec),
                  written);
        }
    } else {
        for (const auto& [p, group] : learning_by_p) {
            PlotSpec spec{strategy + " learning curves, p=" + csv::format_double(p), "episode",
                          "smoothed discounted return", {}};
            for (const auto* c : group) {
                spec.series.push_back(
                    to_series(symbol + "=" + csv::format_double(c->value), c->curve));
            }
            write(out_dir / ("learning_p" + csv::format_double(p) + ".svg"), render_svg(spec),
                  written);
        }
    }
    for (const auto& [p, group] : cost_by_p) {
        if (p == 0.0) continue;
        PlotSpec spec{"Performance against cost, p=" + csv::format_double(p), "attacks performed",
                      "smoothed discounted return", {}};
        for (const auto* c : group) {
            spec.series.push_back(
                to_series(symbol + "=" + csv::format_double(c->value), c->curve));
        }
        write(out_dir / ("cost_p" + csv::format_double(p) + ".svg"), render_svg(spec), written);
    }
    return written;
}

}  // namespace flipsim
